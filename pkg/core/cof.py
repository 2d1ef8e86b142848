"""
Cost-Ordered Feasibility (COF)
==============================

Evaluates arms cheapest-first. Each candidate l is pitted against its gating
set G_l, the more expensive arms whose subsidized UCB still reaches LCB_l:

- G_l empty: l is feasible, committed for the rest of the horizon.
- product of per-arm elimination errors eps_{k,l} <= delta: l is infeasible,
  the next arm becomes the candidate ("combining samples").
- otherwise l is sampled alone while it trails the most-sampled gating arm
  ("exclusive sampling"), else l plus every gating arm whose UCB beats the
  best gating LCB ("BAI-filter") are sampled once each.

Samples are served one per timestep; a round of several arms is queued and
drained before the next decision pass. Two ablation flags switch off
combining samples (any single eps_{k,l} <= delta must fire instead) and
exclusive sampling.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Deque, List, Optional, Tuple

import numpy as np

from core.errors import HorizonExceededError, ValidationError
from core.sampler import ArmTable

logger = logging.getLogger(__name__)

# Called on every decision pass that reaches the infeasibility test with
# (t, candidate, log_eps, log_delta)
DecisionObserver = Callable[[int, int, np.ndarray, float], None]

EVENT_COLUMNS = ["run_id", "t", "arm", "kind"]


def default_delta(num_arms: int, horizon: int) -> float:
    """Error tolerance K^2 / T^2; below 1 only when T > K."""
    if horizon <= num_arms:
        raise ValidationError(f"horizon {horizon} must exceed the number of arms {num_arms}", field="horizon")
    return (num_arms / horizon) ** 2


@dataclass(frozen=True)
class CofConfig:
    delta: float
    combine_samples: bool = True
    exclusive_sampling: bool = True

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValidationError(f"delta {self.delta} outside (0, 1)", field="delta")


class EventKind(str, Enum):
    DEEMED_INFEASIBLE = "deemed_infeasible"
    DEEMED_FEASIBLE = "deemed_feasible"


@dataclass(frozen=True)
class EpisodeEvent:
    """A verdict on a candidate; `time` counts samples drawn before it."""
    time: int
    arm: int
    kind: EventKind


def gating_set(table: ArmTable, ell: int, alpha: float) -> np.ndarray:
    """Indices i > ell with (1 - alpha) UCB_i >= LCB_ell, ascending."""
    above = np.arange(ell + 1, table.num_arms)
    keep = (1.0 - alpha) * table.ucb[ell + 1:] >= table.lcb[ell]
    return above[keep]


def epsilon(n_k: int, mu_hat_k: float, ucb_ell: float, alpha: float) -> float:
    """
    Upper bound on the probability that arm k fails to eliminate the candidate.

    exp(-2 n_k (mu_hat_k - UCB_l/(1-alpha))^2) when mu_hat_k > UCB_l/(1-alpha),
    else 1.
    """
    threshold = ucb_ell / (1.0 - alpha)
    if mu_hat_k > threshold:
        return math.exp(-2.0 * n_k * (mu_hat_k - threshold) ** 2)
    return 1.0


def log_epsilon(n: np.ndarray, mu_hat: np.ndarray, ucb_ell: float, alpha: float) -> np.ndarray:
    """Natural log of epsilon for every arm at once (0 where epsilon is 1)."""
    excess = mu_hat - ucb_ell / (1.0 - alpha)
    return np.where(excess > 0.0, -2.0 * n * excess * excess, 0.0)


def infeasibility_verdict(
    table: ArmTable,
    ell: int,
    alpha: float,
    log_delta: float,
    combine_samples: bool = True,
) -> Tuple[bool, np.ndarray]:
    """
    (deemed infeasible, per-arm log epsilon) for candidate `ell`.

    Combined: prod_k eps_{k,l} <= delta over all K arms, evaluated as a sum of
    logs. Without combining: some single eps_{k,l} <= delta.
    """
    log_eps = log_epsilon(table.n, table.mu_hat, float(table.ucb[ell]), alpha)
    evidence = log_eps.sum() if combine_samples else log_eps.min()
    return float(evidence) <= log_delta, log_eps


def infeasibility_test(
    table: ArmTable,
    ell: int,
    alpha: float,
    delta: float,
    combine_samples: bool = True,
) -> bool:
    """Whether the candidate is deemed infeasible at tolerance `delta`."""
    fired, _ = infeasibility_verdict(table, ell, alpha, math.log(delta), combine_samples)
    return fired


@dataclass
class CofState:
    arm_states: ArmTable
    candidate: int = 0
    gating_set: List[int] = field(default_factory=list)
    committed: Optional[int] = None
    infeasible: List[int] = field(default_factory=list)
    pending_queue: Deque[int] = field(default_factory=deque)
    event_log: List[EpisodeEvent] = field(default_factory=list)
    decision_passes: int = 0


class CofPolicy:
    """COF with both features on by default; see CofConfig for the ablations."""

    def __init__(
        self,
        num_arms: int,
        alpha: float,
        config: CofConfig,
        name: str = "cof",
        observer: Optional[DecisionObserver] = None,
    ):
        self.name = name
        self.alpha = alpha
        self.config = config
        self.num_arms = num_arms
        self.observer = observer
        self._log_delta = math.log(config.delta)
        self.state = CofState(arm_states=ArmTable(num_arms, config.delta))
        # every arm once before the first decision
        self.state.pending_queue.extend(range(num_arms))

    @property
    def committed(self) -> Optional[int]:
        return self.state.committed

    @property
    def events(self) -> List[EpisodeEvent]:
        return self.state.event_log

    @property
    def table(self) -> ArmTable:
        return self.state.arm_states

    def observe(self, arm: int, reward: int) -> None:
        self.state.arm_states.record(arm, reward)

    def select_arm(self, t: int, horizon: int) -> int:
        if t >= horizon:
            raise HorizonExceededError(t, horizon)
        state = self.state
        if state.committed is not None:
            return state.committed
        if state.pending_queue:
            return state.pending_queue.popleft()
        return self._decide(t)

    def _commit(self, t: int, arm: int) -> int:
        state = self.state
        state.committed = arm
        state.gating_set = []
        state.event_log.append(EpisodeEvent(t, arm, EventKind.DEEMED_FEASIBLE))
        logger.debug("Candidate deemed feasible", extra={"arm": arm + 1, "t": t})
        return arm

    def _decide(self, t: int) -> int:
        state = self.state
        table = state.arm_states
        alpha = self.alpha

        # Each pass either returns an arm or advances the candidate
        for _ in range(self.num_arms + 1):
            ell = state.candidate
            state.decision_passes += 1
            gating = gating_set(table, ell, alpha)
            state.gating_set = gating.tolist()

            if gating.size == 0:
                return self._commit(t, ell)

            fired, log_eps = infeasibility_verdict(
                table, ell, alpha, self._log_delta, self.config.combine_samples
            )
            if self.observer is not None:
                self.observer(t, ell, log_eps, self._log_delta)

            if fired:
                state.infeasible.append(ell)
                state.event_log.append(EpisodeEvent(t, ell, EventKind.DEEMED_INFEASIBLE))
                logger.debug("Candidate deemed infeasible", extra={"arm": ell + 1, "t": t})
                state.candidate = ell + 1
                if state.candidate >= self.num_arms:
                    logger.warning(
                        "Candidate advanced past the last arm; committing to it",
                        extra={"t": t}
                    )
                    return self._commit(t, self.num_arms - 1)
                continue

            if self.config.exclusive_sampling and table.n[ell] < table.n[gating].max():
                return ell

            best_lcb = table.lcb[gating].max()
            unfiltered = gating[table.ucb[gating] > best_lcb]
            state.pending_queue.extend(unfiltered.tolist())
            return ell

        # Unreachable: G of the last arm is always empty
        return self._commit(t, self.num_arms - 1)
