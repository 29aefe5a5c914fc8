"""Exact Shapley attribution over small coalitions.

A coalition's collective output is described by a characteristic
function v mapping every subset of members to a real value (v of the
empty set is 0). Each member's attribution is the weighted sum, over
all subsets S not containing them, of the marginal value they add to S,
with weight |S|! (n - |S| - 1)! / n!. Attributions satisfy efficiency
(they sum to the full-coalition value), symmetry, nullity and
additivity, and are the unique allocation that does.

Enumeration is exact: subsets are visited in ascending-bitmask order
and coalitions larger than a configurable maximum (default 16) are
rejected rather than approximated.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import permutations
from math import factorial
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

PlayerId = int

MAX_EXACT_PLAYERS = 16
ORACLE_MAX_PLAYERS = 8
REL_TOL = 1e-9


class CoalitionTooLargeError(ValueError):
    """Exact subset enumeration refused for oversized coalitions."""


class PlayerNotInCoalitionError(ValueError):
    pass


def _close(a: float, b: float, rel: float = REL_TOL) -> bool:
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


@dataclass(frozen=True)
class Coalition:
    """The full player set; members are the contiguous indices 0..n-1."""

    members: tuple[PlayerId, ...]

    def __post_init__(self):
        if self.members != tuple(range(len(self.members))):
            raise ValueError(
                f"coalition members must be the contiguous indices 0..n-1, got {self.members}"
            )

    @classmethod
    def of_size(cls, n: int) -> "Coalition":
        return cls(tuple(range(n)))

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, player: PlayerId) -> bool:
        return 0 <= player < len(self.members)

    def __iter__(self):
        return iter(self.members)


class CharacteristicFunction:
    """Maps sub-coalitions to their collective value; v(empty) = 0."""

    def value(self, subset: frozenset[PlayerId]) -> float:
        raise NotImplementedError

    def __call__(self, subset: Iterable[PlayerId]) -> float:
        s = frozenset(subset)
        if not s:
            return 0.0
        return self.value(s)

    def __add__(self, other: "CharacteristicFunction") -> "CharacteristicFunction":
        return _SumCharacteristic(self, other)


class _SumCharacteristic(CharacteristicFunction):
    def __init__(self, a: CharacteristicFunction, b: CharacteristicFunction):
        self.a = a
        self.b = b

    def value(self, subset: frozenset[PlayerId]) -> float:
        return self.a(subset) + self.b(subset)


class CallableCharacteristic(CharacteristicFunction):
    """Adapter for a caller-supplied evaluator function."""

    def __init__(self, fn: Callable[[frozenset[PlayerId]], float]):
        self._fn = fn

    def value(self, subset: frozenset[PlayerId]) -> float:
        return float(self._fn(subset))


class AdditiveSteps(CharacteristicFunction):
    """v(S) = sum of the members' individual step counts.

    This is the deployed approximation for unobservable sub-coalitions:
    a subset's output is the sum of its members' own contributions, so
    each member's attribution collapses to exactly their own steps.
    """

    def __init__(self, steps: Sequence[float]):
        self.steps = tuple(float(s) for s in steps)

    def value(self, subset: frozenset[PlayerId]) -> float:
        return sum(self.steps[i] for i in subset)


class TableBacked(CharacteristicFunction):
    """Explicit subset -> value map; every non-empty subset must be present."""

    def __init__(self, n_players: int, values: Mapping[frozenset, float]):
        self.n_players = n_players
        table: dict[frozenset, float] = {frozenset(): 0.0}
        for subset, v in values.items():
            key = frozenset(subset)
            if any(not (0 <= i < n_players) for i in key):
                raise ValueError(f"subset {sorted(key)} has members outside 0..{n_players - 1}")
            table[key] = float(v)
        for mask in range(1, 1 << n_players):
            subset = frozenset(i for i in range(n_players) if mask >> i & 1)
            if subset not in table:
                raise ValueError(f"missing value for subset {sorted(subset)}")
        self._table = table

    def value(self, subset: frozenset[PlayerId]) -> float:
        try:
            return self._table[subset]
        except KeyError:
            raise ValueError(f"subset {sorted(subset)} not in table") from None


def load_characteristic(source) -> TableBacked:
    """Load a TableBacked function from a JSON document.

    Accepts a dict, a JSON string, or a path. Format::

        {"players": 2, "values": {"0": 10000.0, "1": 12000.0, "0,1": 23000.0}}

    Keys are comma-separated member indices; the empty-set entry ("")
    may be omitted and defaults to 0. Any other missing subset is an
    error.
    """
    if isinstance(source, (str, Path)) and Path(str(source)).exists():
        doc = json.loads(Path(source).read_text())
    elif isinstance(source, str):
        doc = json.loads(source)
    else:
        doc = source
    if not isinstance(doc, dict) or "players" not in doc or "values" not in doc:
        raise ValueError('characteristic JSON must have "players" and "values" keys')
    n = int(doc["players"])
    values = {}
    for key, v in doc["values"].items():
        members = frozenset(int(tok) for tok in key.split(",") if tok.strip() != "")
        values[members] = float(v)
    empty = values.pop(frozenset(), 0.0)
    if empty != 0.0:
        raise ValueError("empty-coalition value must be 0")
    return TableBacked(n, values)


def subset_weight(subset_size: int, n: int) -> float:
    """Marginal-contribution weight |S|! (n - |S| - 1)! / n!."""
    return factorial(subset_size) * factorial(n - subset_size - 1) / factorial(n)


def _check_size(n: int, limit: int) -> None:
    if n > limit:
        raise CoalitionTooLargeError(
            f"coalition of {n} players exceeds exact-enumeration limit {limit}"
        )


def _subsets_excluding(coalition: Coalition, excluded: tuple[PlayerId, ...]):
    """All subsets of the coalition minus `excluded`, ascending bitmask order."""
    others = [p for p in coalition if p not in excluded]
    for mask in range(1 << len(others)):
        yield frozenset(others[b] for b in range(len(others)) if mask >> b & 1)


def shapley_value(
    v: CharacteristicFunction,
    coalition: Coalition,
    player: PlayerId,
    max_players: int = MAX_EXACT_PLAYERS,
) -> float:
    """Exact attribution for one player: the weighted average, over all
    subsets S excluding them, of the marginal value v(S + player) - v(S)."""
    n = len(coalition)
    _check_size(n, max_players)
    if player not in coalition:
        raise PlayerNotInCoalitionError(f"player {player} not in coalition of {n}")
    weights = [subset_weight(s, n) for s in range(n)]
    total = 0.0
    for subset in _subsets_excluding(coalition, (player,)):
        total += weights[len(subset)] * (v(subset | {player}) - v(subset))
    return total


def shapley_all(
    v: CharacteristicFunction,
    coalition: Coalition,
    max_players: int = MAX_EXACT_PLAYERS,
) -> list[float]:
    """Attribution vector for every member; sums to v(full coalition)."""
    return [shapley_value(v, coalition, i, max_players) for i in coalition]


def shapley_oracle_permutations(
    v: CharacteristicFunction, coalition: Coalition
) -> list[float]:
    """Independent oracle: average marginal contribution over all n!
    arrival orders. Mathematically identical to `shapley_all`; kept as a
    separate code path for cross-checking, so it is limited to n <= 8.
    """
    n = len(coalition)
    _check_size(n, ORACLE_MAX_PLAYERS)
    totals = [0.0] * n
    for order in permutations(coalition):
        prefix: frozenset = frozenset()
        prev = 0.0
        for player in order:
            cur = v(prefix | {player})
            totals[player] += cur - prev
            prefix = prefix | {player}
            prev = cur
    count = factorial(n)
    return [t / count for t in totals]


@dataclass
class AxiomReport:
    """Outcome of checking the four fairness axioms on one game."""

    efficiency: bool
    symmetry: bool
    nullity: bool
    additivity: bool
    witnesses: dict = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return self.efficiency and self.symmetry and self.nullity and self.additivity


def _interchangeable(v, coalition, i, j, rel) -> bool:
    for subset in _subsets_excluding(coalition, (i, j)):
        if not _close(v(subset | {i}), v(subset | {j}), rel):
            return False
    return True


def _is_null(v, coalition, i, rel) -> bool:
    for subset in _subsets_excluding(coalition, (i,)):
        if not _close(v(subset | {i}), v(subset), rel):
            return False
    return True


def check_axioms(
    v: CharacteristicFunction,
    coalition: Coalition,
    additivity_partner: CharacteristicFunction | None = None,
    rel_tol: float = REL_TOL,
) -> AxiomReport:
    """Verify efficiency, symmetry, nullity and additivity on one game.

    Symmetry and nullity are checked for every interchangeable pair /
    null player actually present in v (vacuously true when none exist).
    Additivity compares the attribution of (v + partner) against the
    sum of the separate attributions; when no partner is supplied, an
    additive game built from v's singleton values is used.
    """
    phi = shapley_all(v, coalition)
    witnesses: dict = {"interchangeable_pairs": [], "null_players": []}

    efficiency = _close(sum(phi), v(coalition.members), rel_tol)
    witnesses["efficiency"] = {"sum_phi": sum(phi), "grand_value": v(coalition.members)}

    symmetry = True
    for i in coalition:
        for j in coalition:
            if j <= i:
                continue
            if _interchangeable(v, coalition, i, j, rel_tol):
                witnesses["interchangeable_pairs"].append((i, j))
                if not _close(phi[i], phi[j], rel_tol):
                    symmetry = False

    nullity = True
    for i in coalition:
        if _is_null(v, coalition, i, rel_tol):
            witnesses["null_players"].append(i)
            if abs(phi[i]) > rel_tol * max(1.0, abs(v(coalition.members))):
                nullity = False

    if additivity_partner is None:
        additivity_partner = AdditiveSteps(
            [v(frozenset([i])) for i in coalition]
        )
    phi_sum = shapley_all(v + additivity_partner, coalition)
    phi_partner = shapley_all(additivity_partner, coalition)
    additivity = all(
        _close(phi_sum[i], phi[i] + phi_partner[i], rel_tol) for i in coalition
    )
    witnesses["additivity"] = {"phi_sum": phi_sum}

    return AxiomReport(efficiency, symmetry, nullity, additivity, witnesses)
