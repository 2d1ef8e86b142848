"""
Baseline Policies
=================

Comparison policies behind the same stepping interface as CofPolicy:

- EtcCsPolicy: fixed round-robin exploration budget, then commit
- UcbCsPolicy: cheapest arm of the empirically feasible set under UCB indices
- TsCsPolicy: cheapest arm of the empirically feasible set under Beta samples
- PeCsStylePolicy: successive elimination to find the best arm, then
  cost-ordered pairwise feasibility checks against it

None of them read arm costs; they rely only on arms being indexed by cost.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Deque, List, Optional

import numpy as np

from core.cof import CofConfig, CofPolicy, DecisionObserver
from core.errors import HorizonExceededError, UnknownAlgorithmError, ValidationError
from core.policy import Algorithm, Policy
from core.sampler import ArmTable

logger = logging.getLogger(__name__)

# UCB-CS/TS-CS never use the table's confidence bounds; any delta will do
_UNUSED_DELTA = 0.5


class BaselineKind(str, Enum):
    ETC_CS = "etc_cs"
    UCB_CS = "ucb_cs"
    TS_CS = "ts_cs"
    PE_CS = "pe_cs"


@dataclass(frozen=True)
class BaselineConfig:
    kind: BaselineKind
    etc_budget_fraction: float = 0.2
    delta: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.etc_budget_fraction < 1.0:
            raise ValidationError(
                f"etc_budget_fraction {self.etc_budget_fraction} outside (0, 1)",
                field="etc_budget_fraction"
            )
        if self.kind == BaselineKind.PE_CS and self.delta is None:
            raise ValidationError("pe_cs needs a delta", field="delta")


def cheapest_feasible(values: np.ndarray, alpha: float) -> int:
    """Lowest index k with values[k] >= (1 - alpha) * max(values)."""
    values = np.asarray(values, dtype=np.float64)
    threshold = (1.0 - alpha) * values.max()
    # argmax of a boolean mask is its first True; the max itself always qualifies
    return int(np.argmax(values >= threshold))


def eliminate(active: List[int], ucb: np.ndarray, lcb: np.ndarray) -> List[int]:
    """Successive elimination: keep arms whose UCB reaches the best LCB among `active`."""
    best_lcb = max(lcb[i] for i in active)
    return [i for i in active if ucb[i] >= best_lcb]


class _BaselinePolicy:
    """Shared bookkeeping: a sample table and a horizon guard."""

    def __init__(self, num_arms: int, alpha: float, name: str, delta: float = _UNUSED_DELTA):
        self.name = name
        self.alpha = alpha
        self.num_arms = num_arms
        self.table = ArmTable(num_arms, delta)
        self._committed: Optional[int] = None

    @property
    def committed(self) -> Optional[int]:
        return self._committed

    def observe(self, arm: int, reward: int) -> None:
        self.table.record(arm, reward)

    def select_arm(self, t: int, horizon: int) -> int:
        if t >= horizon:
            raise HorizonExceededError(t, horizon)
        if self._committed is not None:
            return self._committed
        return self._choose(t, horizon)

    def _choose(self, t: int, horizon: int) -> int:
        raise NotImplementedError


class EtcCsPolicy(_BaselinePolicy):
    """Explore-then-commit with a fixed share of the horizon spent round-robin."""

    def __init__(self, num_arms: int, alpha: float, budget_fraction: float = 0.2, name: str = "etc_cs"):
        super().__init__(num_arms, alpha, name)
        self.budget_fraction = budget_fraction

    def _choose(self, t: int, horizon: int) -> int:
        budget = math.floor(self.budget_fraction * horizon)
        if t < budget:
            return t % self.num_arms
        self._committed = cheapest_feasible(self.table.mu_hat, self.alpha)
        logger.debug("ETC-CS committed", extra={"arm": self._committed + 1, "t": t})
        return self._committed


class UcbCsPolicy(_BaselinePolicy):
    """Cheapest empirically feasible arm under the index mu_hat + sqrt(2 ln t / n)."""

    def __init__(self, num_arms: int, alpha: float, name: str = "ucb_cs"):
        super().__init__(num_arms, alpha, name)

    def indices(self, t: int) -> np.ndarray:
        return self.table.mu_hat + np.sqrt(2.0 * math.log(t) / self.table.n)

    def _choose(self, t: int, horizon: int) -> int:
        if t < self.num_arms:
            return t
        return cheapest_feasible(self.indices(t), self.alpha)


class TsCsPolicy(_BaselinePolicy):
    """Cheapest empirically feasible arm under one Beta(1+s, 1+f) draw per arm."""

    def __init__(self, num_arms: int, alpha: float, rng: np.random.Generator, name: str = "ts_cs"):
        super().__init__(num_arms, alpha, name)
        self.rng = rng

    def _choose(self, t: int, horizon: int) -> int:
        successes = self.table.sums
        failures = self.table.n - successes
        theta = self.rng.beta(1 + successes, 1 + failures)
        return cheapest_feasible(theta, self.alpha)


class PeCsStylePolicy(_BaselinePolicy):
    """
    Two-phase reconstruction of a pairwise-elimination policy.

    Phase 1 samples the surviving arms round-robin and drops every arm whose
    UCB falls below the best LCB until one arm (the empirical best) is left.
    Phase 2 walks the arms in cost order and compares each candidate with the
    empirical best:
    - UCB_l < (1 - alpha) LCB_best: infeasible, next candidate
    - LCB_l >= (1 - alpha) UCB_best: commit to the candidate
    - otherwise sample whichever of the two has fewer samples
    Reaching the empirical best as candidate commits to it.
    """

    def __init__(self, num_arms: int, alpha: float, delta: float, name: str = "pe_cs_style"):
        super().__init__(num_arms, alpha, name, delta=delta)
        self.active: List[int] = list(range(num_arms))
        self.best: Optional[int] = None
        self.candidate = 0
        self._round: Deque[int] = deque(self.active)

    def _choose(self, t: int, horizon: int) -> int:
        if self.best is None:
            if not self._round:
                self.active = eliminate(self.active, self.table.ucb, self.table.lcb)
                if len(self.active) == 1:
                    self.best = self.active[0]
                    logger.debug("Best arm identified", extra={"arm": self.best + 1, "t": t})
                else:
                    self._round.extend(self.active)
            if self.best is None:
                return self._round.popleft()
        return self._pairwise(t)

    def _pairwise(self, t: int) -> int:
        table = self.table
        best = self.best
        scale = 1.0 - self.alpha
        while self.candidate != best:
            ell = self.candidate
            if table.ucb[ell] < scale * table.lcb[best]:
                self.candidate += 1
                continue
            if table.lcb[ell] >= scale * table.ucb[best]:
                break
            return ell if table.n[ell] <= table.n[best] else best
        self._committed = self.candidate
        logger.debug("PE-CS-style committed", extra={"arm": self._committed + 1, "t": t})
        return self._committed


def make_policy(
    algorithm: Algorithm,
    num_arms: int,
    alpha: float,
    delta: float,
    etc_budget_fraction: float = 0.2,
    rng: Optional[np.random.Generator] = None,
    observer: Optional[DecisionObserver] = None,
) -> Policy:
    """
    Build a fresh policy for one run.

    `delta` feeds the COF variants and pe_cs_style; `rng` feeds ts_cs;
    `observer` is attached to COF variants only.
    """
    try:
        algorithm = Algorithm(algorithm)
    except ValueError:
        raise UnknownAlgorithmError(str(algorithm))

    if algorithm == Algorithm.COF:
        return CofPolicy(num_arms, alpha, CofConfig(delta), name=algorithm.value, observer=observer)
    if algorithm == Algorithm.COF_NO_EXCLUSIVE:
        return CofPolicy(
            num_arms, alpha, CofConfig(delta, exclusive_sampling=False),
            name=algorithm.value, observer=observer
        )
    if algorithm == Algorithm.COF_NO_COMBINE:
        return CofPolicy(
            num_arms, alpha, CofConfig(delta, combine_samples=False),
            name=algorithm.value, observer=observer
        )

    if algorithm == Algorithm.ETC_CS:
        config = BaselineConfig(BaselineKind.ETC_CS, etc_budget_fraction=etc_budget_fraction)
        return EtcCsPolicy(num_arms, alpha, budget_fraction=config.etc_budget_fraction)
    if algorithm == Algorithm.UCB_CS:
        return UcbCsPolicy(num_arms, alpha)
    if algorithm == Algorithm.TS_CS:
        return TsCsPolicy(num_arms, alpha, rng if rng is not None else np.random.default_rng())
    if algorithm == Algorithm.PE_CS_STYLE:
        config = BaselineConfig(BaselineKind.PE_CS, delta=delta)
        return PeCsStylePolicy(num_arms, alpha, config.delta)

    raise UnknownAlgorithmError(algorithm.value)
