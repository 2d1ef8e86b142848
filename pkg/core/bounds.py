"""
Theoretical Bounds
==================

Closed-form calculators for an analysed instance:

- Gaussian-form lower-bound coefficients of log T for cheap arms, expensive
  arms, and the joint constraint over the arms able to eliminate a_dagger
- the sampling-round bound tau for disqualifying a cheap arm, from its
  closed-form candidates, plus a brute-force integer oracle for it
- per-arm gamma quantities and the resulting COF regret upper bounds

All logarithms are natural. Arm indices are 0-based.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from core.errors import ArmClassError, ScanLimitExceededError, ValidationError
from core.instance import InstanceAnalysis

logger = logging.getLogger(__name__)

TAU_FEASIBILITY_RTOL = 1e-9
_SCAN_CHUNK = 65536


def _check_delta(delta: float) -> float:
    if not 0.0 < delta <= 1.0:
        raise ValidationError(f"delta {delta} outside (0, 1]", field="delta")
    return math.log(1.0 / delta)


def log_horizon(horizon: int) -> float:
    """ln T, for horizons where every log-T bound is positive."""
    if horizon < 2:
        raise ValidationError(f"horizon {horizon} must be at least 2", field="horizon")
    return math.log(horizon)


def _require(analysis: InstanceAnalysis, k: int, expected: str) -> None:
    arms = analysis.cheap_arms if expected == "cheap" else analysis.expensive_arms
    if k not in arms:
        raise ArmClassError(k, expected)


def lb_cheap(analysis: InstanceAnalysis, k: int) -> float:
    """2 / Delta_{Q,k}^2 for a cheap arm."""
    _require(analysis, k, "cheap")
    return 2.0 / analysis.quality_gaps[k] ** 2


def lb_expensive(analysis: InstanceAnalysis, k: int) -> float:
    """2 (1 - alpha)^2 / (mu_{a*} - (1 - alpha) mu_k)^2 for an expensive arm; inf on a zero gap."""
    _require(analysis, k, "expensive")
    scale = 1.0 - analysis.alpha
    gap = analysis.means[analysis.a_star] - scale * analysis.means[k]
    if gap == 0.0:
        logger.warning("Expensive-arm lower bound is infinite", extra={"arm": k + 1})
        return math.inf
    return 2.0 * scale ** 2 / gap ** 2


@dataclass(frozen=True)
class JointBound:
    """sum_{k in A_dagger} weights[k] * E[n_k] >= rhs * log T, asymptotically."""
    weights: Dict[int, float]
    rhs: float


def lb_joint(analysis: InstanceAnalysis) -> Optional[JointBound]:
    """Joint constraint over A_dagger; None when there are no cheap arms."""
    if analysis.a_dagger is None:
        return None
    gaps = analysis.dagger_gaps
    weights = {k: gaps[k] ** 2 for k in sorted(analysis.A_dagger_set)}
    return JointBound(weights=weights, rhs=2.0 * (1.0 - analysis.alpha) ** 2)


@dataclass(frozen=True)
class TauResult:
    """Smallest feasible closed-form candidate; `feasible` is False on fallback."""
    tau: float
    A_used: int
    feasible: bool = True


def _reward_order(analysis: InstanceAnalysis, arms) -> List[int]:
    """Arms by descending mean, lowest index first on ties."""
    return sorted(arms, key=lambda k: (-analysis.means[k], k))


def _indicator_limits(analysis: InstanceAnalysis, log_inv_delta: float) -> np.ndarray:
    """8 ln(1/delta) / Delta_k^2 per arm, inf where Delta_k = 0."""
    reward_gaps = np.asarray(analysis.reward_gaps, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        limits = 8.0 * log_inv_delta / reward_gaps ** 2
    return np.where(reward_gaps == 0.0, np.inf, limits)


def tau_search(analysis: InstanceAnalysis, ell: int, delta: float) -> TauResult:
    """
    Rounds needed to deem cheap arm `ell` infeasible.

    For p = 1..|A^l|, the candidate (3 sqrt(p) + 1)^2 / 2 * ln(1/delta) /
    sum of the p largest Delta_{k,l}^2 is feasible when, at n = tau_p, the
    truncated sum over the top p arms equals the indicator-weighted sum over
    all of A^l. Returns the smallest feasible tau (smaller p on ties), or
    p = |A^l| with a warning if no candidate is feasible.
    """
    _require(analysis, ell, "cheap")
    log_inv_delta = _check_delta(delta)
    gaps = analysis.elimination_gaps(ell)
    order = _reward_order(analysis, analysis.elimination_set(ell))
    limits = _indicator_limits(analysis, log_inv_delta)

    ordered_gaps = np.array([gaps[k] for k in order], dtype=np.float64)
    ordered_limits = limits[order]
    partial_sums = np.cumsum(ordered_gaps ** 2)

    candidates: List[Tuple[float, int]] = []
    for p in range(1, len(order) + 1):
        tau = (3.0 * math.sqrt(p) + 1.0) ** 2 / 2.0 * log_inv_delta / partial_sums[p - 1]
        radius = 3.0 * math.sqrt(log_inv_delta / (2.0 * tau)) if tau > 0 else 0.0
        lhs = float(np.sum((ordered_gaps[:p] - radius) ** 2))
        active = tau <= ordered_limits
        rhs = float(np.sum(np.where(active, np.clip(ordered_gaps - radius, 0.0, None) ** 2, 0.0)))
        if math.isclose(lhs, rhs, rel_tol=TAU_FEASIBILITY_RTOL):
            candidates.append((tau, p))

    if candidates:
        tau, p = min(candidates)
        return TauResult(tau=tau, A_used=p)

    p = len(order)
    tau = (3.0 * math.sqrt(p) + 1.0) ** 2 / 2.0 * log_inv_delta / partial_sums[-1]
    logger.warning(
        "No feasible tau candidate; using every arm able to eliminate the candidate",
        extra={"arm": ell + 1, "A_used": p}
    )
    return TauResult(tau=tau, A_used=p, feasible=False)


def exact_tau(analysis: InstanceAnalysis, ell: int, delta: float) -> int:
    """
    Smallest integer n >= 1 with
    sum_{k in A^l} 1{n <= 8 ln(1/delta) / Delta_k^2} ((Delta_{k,l} - 3 beta(n))^+)^2 >= beta(n)^2,
    found by an ascending scan up to ceil(10 * tau_search).

    Raises:
        ScanLimitExceededError: no n up to the limit satisfies the constraint
    """
    log_inv_delta = _check_delta(delta)
    limit = max(1, math.ceil(10.0 * tau_search(analysis, ell, delta).tau))
    arms = sorted(analysis.elimination_set(ell))
    gaps = np.array([analysis.elimination_gaps(ell)[k] for k in arms], dtype=np.float64)
    limits = _indicator_limits(analysis, log_inv_delta)[arms]

    start = 1
    while start <= limit:
        n = np.arange(start, min(start + _SCAN_CHUNK, limit + 1), dtype=np.float64)
        beta = np.sqrt(log_inv_delta / (2.0 * n))
        terms = np.clip(gaps[None, :] - 3.0 * beta[:, None], 0.0, None) ** 2
        terms = np.where(n[:, None] <= limits[None, :], terms, 0.0)
        hits = np.nonzero(terms.sum(axis=1) >= beta ** 2)[0]
        if hits.size:
            return int(n[hits[0]])
        start += _SCAN_CHUNK
    raise ScanLimitExceededError(ell, limit)


@dataclass(frozen=True)
class GammaValues:
    """gamma_dagger is None when no arm is cheaper than a_star."""
    dagger: Optional[float]
    astar: float

    @property
    def worst(self) -> float:
        if self.dagger is None:
            return self.astar
        return max(self.dagger, self.astar)


def _dagger_episode_term(analysis: InstanceAnalysis, horizon: int, delta: float) -> Tuple[float, int]:
    """(3 sqrt(A) + 1)^2 ln T / sum of the A largest Delta_{k,dagger}^2, and A."""
    A = tau_search(analysis, analysis.a_dagger, delta).A_used
    order = _reward_order(analysis, analysis.A_dagger_set)[:A]
    total = sum(analysis.dagger_gaps[k] ** 2 for k in order)
    return (3.0 * math.sqrt(A) + 1.0) ** 2 * log_horizon(horizon) / total, A


def gamma(analysis: InstanceAnalysis, k: int, horizon: int, delta: float) -> GammaValues:
    """
    gamma_dagger_k = min(dagger-episode term, 16 ln T / Delta_k^2) and
    gamma_astar_k = 16 ln T / (mu_{a*} - (1 - alpha) mu_k)^2, for an expensive arm.
    """
    _require(analysis, k, "expensive")
    log_t = log_horizon(horizon)

    gap_astar = analysis.means[analysis.a_star] - (1.0 - analysis.alpha) * analysis.means[k]
    astar = math.inf if gap_astar == 0.0 else 16.0 * log_t / gap_astar ** 2

    if analysis.a_dagger is None:
        return GammaValues(dagger=None, astar=astar)
    episode, _ = _dagger_episode_term(analysis, horizon, delta)
    reward_gap = analysis.reward_gaps[k]
    bai = math.inf if reward_gap == 0.0 else 16.0 * log_t / reward_gap ** 2
    return GammaValues(dagger=min(episode, bai), astar=astar)


def _weighted(coefficient: float, gap: float) -> float:
    # A zero gap contributes nothing even when its coefficient is infinite
    return coefficient * gap if gap > 0.0 else 0.0


def regret_upper_bounds(analysis: InstanceAnalysis, horizon: int, delta: float) -> Tuple[float, float]:
    """COF expected cost and quality regret upper bounds at horizon T."""
    K = analysis.num_arms
    log_t = log_horizon(horizon)
    cost_gaps = analysis.clipped_cost_gaps
    quality_gaps = analysis.clipped_quality_gaps
    expensive = sorted(analysis.expensive_arms)

    worst = {k: gamma(analysis, k, horizon, delta).worst for k in expensive}

    cost_ub = sum(_weighted(worst[k], cost_gaps[k]) for k in expensive)
    cost_ub += K * sum(cost_gaps[k] for k in expensive)

    quality_ub = sum(16.0 * log_t / quality_gaps[k] for k in sorted(analysis.cheap_arms))
    quality_ub += sum(_weighted(worst[k], quality_gaps[k]) for k in expensive)
    quality_ub += K * sum(quality_gaps)
    return cost_ub, quality_ub


def cheap_arm_sample_bound(analysis: InstanceAnalysis, k: int, horizon: int) -> float:
    """16 ln T / Delta_{Q,k}^2 + 2: expected samples of a cheap arm under COF."""
    _require(analysis, k, "cheap")
    return 16.0 * log_horizon(horizon) / analysis.quality_gaps[k] ** 2 + 2.0


@dataclass
class BoundReport:
    """Every bound for one instance, horizon and delta; dict keys are 0-based arms."""
    horizon: int
    delta: float
    lb_cheap: Dict[int, float] = field(default_factory=dict)
    lb_expensive: Dict[int, float] = field(default_factory=dict)
    lb_joint: Optional[JointBound] = None
    gamma_dagger: Dict[int, Optional[float]] = field(default_factory=dict)
    gamma_astar: Dict[int, float] = field(default_factory=dict)
    tau_dagger: Optional[float] = None
    A_used: Optional[int] = None
    cost_regret_ub: float = 0.0
    quality_regret_ub: float = 0.0
    num_arms: int = 0

    SUMMARY_COLUMNS = ("tau_dagger", "A_used", "cost_ub", "quality_ub")
    ARM_COLUMNS = ("arm", "lb_cheap", "lb_expensive", "joint_weight", "gamma_dagger", "gamma_astar")

    def rows(self) -> List[Dict[str, object]]:
        """One row per arm (1-based, None where undefined) then a summary row."""
        weights = self.lb_joint.weights if self.lb_joint is not None else {}
        rows: List[Dict[str, object]] = []
        for k in range(self.num_arms):
            row: Dict[str, object] = {
                "arm": k + 1,
                "lb_cheap": self.lb_cheap.get(k),
                "lb_expensive": self.lb_expensive.get(k),
                "joint_weight": weights.get(k),
                "gamma_dagger": self.gamma_dagger.get(k),
                "gamma_astar": self.gamma_astar.get(k),
            }
            row.update({column: None for column in self.SUMMARY_COLUMNS})
            rows.append(row)
        summary: Dict[str, object] = {column: None for column in self.ARM_COLUMNS}
        summary.update({
            "arm": "summary",
            "joint_weight": self.lb_joint.rhs if self.lb_joint is not None else None,
            "tau_dagger": self.tau_dagger,
            "A_used": self.A_used,
            "cost_ub": self.cost_regret_ub,
            "quality_ub": self.quality_regret_ub,
        })
        rows.append(summary)
        return rows


def bound_report(analysis: InstanceAnalysis, horizon: int, delta: float) -> BoundReport:
    """Evaluate every calculator for one instance."""
    log_horizon(horizon)
    report = BoundReport(horizon=horizon, delta=delta, num_arms=analysis.num_arms)
    for k in sorted(analysis.cheap_arms):
        report.lb_cheap[k] = lb_cheap(analysis, k)
    for k in sorted(analysis.expensive_arms):
        report.lb_expensive[k] = lb_expensive(analysis, k)
        values = gamma(analysis, k, horizon, delta)
        report.gamma_dagger[k] = values.dagger
        report.gamma_astar[k] = values.astar
    report.lb_joint = lb_joint(analysis)
    if analysis.a_dagger is not None:
        result = tau_search(analysis, analysis.a_dagger, delta)
        report.tau_dagger = result.tau
        report.A_used = result.A_used
    report.cost_regret_ub, report.quality_regret_ub = regret_upper_bounds(analysis, horizon, delta)
    return report
