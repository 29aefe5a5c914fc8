"""Self-checks: the documented worked example and the axiom suite.

The worked example replays the strategy's reference calculation: after
nine rounds player 1 holds CSV 27,500 steps with 5 treatments and
player 2 holds CSV 32,800 with 4, so contribution shares are
0.456/0.544 against treatment shares 0.556/0.444, a disparity of 0.1
each. Catering to player 1 would push the team disparity sum to 0.288
while catering to player 2 drops it to 0.088, so an exploit round
caters to player 2 and pulls that player's best arm (C).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from .bandit import (
    Arm,
    Mode,
    RewardModel,
    ShapleyBanditState,
    disparity_sum_if_catered,
    shapley_disparity,
    shapley_select,
)
from .rng import SplitMix64
from .shapley import (
    AxiomReport,
    Coalition,
    TableBacked,
    check_axioms,
    shapley_all,
    shapley_oracle_permutations,
)

WORKED_EXAMPLE_CSV = (27500.0, 32800.0)
WORKED_EXAMPLE_TC = (5, 4)
WORKED_EXAMPLE_EXPECTED = {
    "csvr_1": 0.456,
    "tcr_1": 0.556,
    "sd_1": 0.1,
    "sd_2": 0.1,
    "sum_if_cater_1": 0.288,
    "sum_if_cater_2": 0.088,
    "catered_player": 1,  # zero-based: player 2
    "arm": Arm.BELOW_LOWER,
}


@dataclass
class Check:
    name: str
    expected: float | str
    actual: float | str
    ok: bool

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"[{status}] {self.name}: expected {self.expected}, got {self.actual}"


@dataclass
class WorkedExampleResult:
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks)

    def lines(self) -> list[str]:
        return [c.line() for c in self.checks]


def _example_model() -> RewardModel:
    """Arm estimates matching the example: A best for player 1, C best
    for player 2."""
    model = RewardModel()
    for arm, value in [(Arm.ABOVE_HIGHER, 1.0), (Arm.BETWEEN, 0.1), (Arm.BELOW_LOWER, -0.5)]:
        model.observe_scalar(0, arm, value)
    for arm, value in [(Arm.ABOVE_HIGHER, -0.5), (Arm.BETWEEN, 0.2), (Arm.BELOW_LOWER, 1.0)]:
        model.observe_scalar(1, arm, value)
    return model


def verify_worked_example(
    csv: Sequence[float] = WORKED_EXAMPLE_CSV,
    tc: Sequence[int] = WORKED_EXAMPLE_TC,
    tolerance: float = 1e-3,
) -> WorkedExampleResult:
    """Recompute every number in the reference example and compare."""
    state = ShapleyBanditState(csv=list(csv), tc=list(tc), epsilon=0.0)
    expected = WORKED_EXAMPLE_EXPECTED
    checks: list[Check] = []

    def num(name: str, actual: float) -> None:
        want = expected[name]
        checks.append(Check(name, want, round(actual, 6), abs(actual - want) <= tolerance))

    csvr_1 = state.csv[0] / sum(state.csv)
    tcr_1 = state.tc[0] / sum(state.tc)
    num("csvr_1", csvr_1)
    num("tcr_1", tcr_1)
    num("sd_1", shapley_disparity(state, 0))
    num("sd_2", shapley_disparity(state, 1))
    num("sum_if_cater_1", disparity_sum_if_catered(state, 0))
    num("sum_if_cater_2", disparity_sum_if_catered(state, 1))

    decision = shapley_select(state, _example_model(), [0, 1], SplitMix64(0))
    checks.append(
        Check(
            "catered_player",
            f"player {expected['catered_player'] + 1}",
            f"player {(decision.catered_player or 0) + 1}",
            decision.catered_player == expected["catered_player"]
            and decision.mode is Mode.EXPLOIT,
        )
    )
    checks.append(
        Check("arm", expected["arm"].letter, decision.arm.letter, decision.arm is expected["arm"])
    )
    return WorkedExampleResult(checks)


@dataclass
class AxiomSuiteResult:
    trials: int
    failures: list[str] = field(default_factory=list)
    warning: str | None = None

    @property
    def passed(self) -> bool:
        return not self.failures


def random_table_game(n: int, rng: SplitMix64, low: float = -100.0, high: float = 100.0) -> TableBacked:
    """Random characteristic function with uniform subset values."""
    values = {}
    for mask in range(1, 1 << n):
        subset = frozenset(i for i in range(n) if mask >> i & 1)
        values[subset] = rng.uniform(low, high)
    return TableBacked(n, values)


def run_axiom_suite(
    trials: int = 100,
    max_n: int = 6,
    seed: int = 0,
    shapley_fn: Callable[..., list[float]] | None = None,
    rel_tol: float = 1e-9,
) -> AxiomSuiteResult:
    """Check the four axioms and oracle equivalence on random games.

    `shapley_fn` exists as a test hook: an implementation that violates
    the axioms or diverges from the permutation oracle must make the
    suite fail.
    """
    if max_n > 8:
        raise ValueError("max_n above 8 makes the permutation oracle infeasible")
    if max_n < 2:
        raise ValueError("max_n must be at least 2")
    fn = shapley_fn if shapley_fn is not None else shapley_all
    result = AxiomSuiteResult(trials=trials)
    if trials == 0:
        result.warning = "0 trials requested: vacuous pass"
        return result
    rng = SplitMix64(seed)
    for t in range(trials):
        n = 2 + rng.randrange(max_n - 1)
        coalition = Coalition.of_size(n)
        v = random_table_game(n, rng)
        partner = random_table_game(n, rng)
        report: AxiomReport = check_axioms(v, coalition, additivity_partner=partner)
        if not report.all_pass:
            failed = [
                name
                for name in ("efficiency", "symmetry", "nullity", "additivity")
                if not getattr(report, name)
            ]
            result.failures.append(f"trial {t}: axioms failed: {', '.join(failed)} (n={n})")
        phi = fn(v, coalition)
        oracle = shapley_oracle_permutations(v, coalition)
        for i, (a, b) in enumerate(zip(phi, oracle)):
            if abs(a - b) > rel_tol * max(1.0, abs(a), abs(b)):
                result.failures.append(
                    f"trial {t}: player {i} diverges from the permutation oracle: {a} vs {b}"
                )
                break
    return result
