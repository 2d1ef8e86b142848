"""
Regret Accounting
=================

Cost regret and quality regret of a run, accumulated one sample at a time
and recomputable from final sample counts.

Both paths are exact. Every zero-clipped gap is a binary float, so all of
them can be written as integers over one shared power-of-two denominator.
The accumulator adds those integers, and `regret_from_counts` sums exact
fractions; each path rounds to float once, from the same rational, so the
two agree bit-for-bit at every checkpoint.
"""

from fractions import Fraction
from typing import List, Sequence, Tuple

import numpy as np

from core.instance import InstanceAnalysis

Checkpoint = Tuple[int, float, float]

CURVE_COLUMNS = ["run_id", "algorithm", "alpha", "t", "cost_regret", "quality_regret"]


def _integer_gaps(gaps: Sequence[float]) -> Tuple[List[int], int]:
    """Numerators over the smallest power-of-two denominator shared by all gaps."""
    fractions = [Fraction(g) for g in gaps]
    denominator = max(f.denominator for f in fractions)
    return [int(f * denominator) for f in fractions], denominator


class RegretAccumulator:
    """
    Running cost and quality regret plus sample counts for one run.

    Checkpoints are (t, cost_regret, quality_regret) with t the number of
    samples drawn so far; `count_history` holds the sample counts at each.
    """

    def __init__(self, analysis: InstanceAnalysis):
        self.analysis = analysis
        self._cost_num, self._cost_den = _integer_gaps(analysis.clipped_cost_gaps)
        self._quality_num, self._quality_den = _integer_gaps(analysis.clipped_quality_gaps)
        self._cost_sum = 0
        self._quality_sum = 0
        self._counts = [0] * analysis.num_arms
        self.checkpoints: List[Checkpoint] = []
        self.count_history: List[List[int]] = []

    @property
    def steps(self) -> int:
        return sum(self._counts)

    @property
    def counts(self) -> List[int]:
        return list(self._counts)

    @property
    def cost_regret(self) -> float:
        return self._cost_sum / self._cost_den

    @property
    def quality_regret(self) -> float:
        return self._quality_sum / self._quality_den

    def record(self, arm: int) -> None:
        self._counts[arm] += 1
        self._cost_sum += self._cost_num[arm]
        self._quality_sum += self._quality_num[arm]

    def record_many(self, arm: int, m: int) -> None:
        """Account m consecutive samples of one arm."""
        if m <= 0:
            return
        self._counts[arm] += m
        self._cost_sum += self._cost_num[arm] * m
        self._quality_sum += self._quality_num[arm] * m

    def checkpoint(self, t: int) -> Checkpoint:
        point = (t, self.cost_regret, self.quality_regret)
        self.checkpoints.append(point)
        self.count_history.append(list(self._counts))
        return point


def regret_from_counts(counts: Sequence[int], analysis: InstanceAnalysis) -> Tuple[float, float]:
    """Cost and quality regret as sum_k clipped_gap_k * n_k, arms ascending."""
    cost = sum(
        (Fraction(g) * int(n) for g, n in zip(analysis.clipped_cost_gaps, counts)),
        Fraction(0)
    )
    quality = sum(
        (Fraction(g) * int(n) for g, n in zip(analysis.clipped_quality_gaps, counts)),
        Fraction(0)
    )
    return float(cost), float(quality)


def log_spaced_grid(horizon: int, count: int) -> List[int]:
    """
    Up to `count` distinct checkpoint times, log-spaced over [1, horizon].

    Rounding can merge points at small t, so the grid may be shorter than
    `count`; it always ends at `horizon`.
    """
    if horizon < 1:
        return []
    points = np.unique(np.rint(np.geomspace(1, horizon, num=max(count, 2))).astype(np.int64))
    grid = [int(p) for p in points if 1 <= p <= horizon]
    if grid[-1] != horizon:
        grid.append(horizon)
    return grid
