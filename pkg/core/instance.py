"""
Bandit Instances
================

Static ground truth of a cost-subsidy bandit problem and every symbol
derived from it.

Arms are held cost-ascending and indexed from 0; files and terminal output
number them from 1.

Instance file grammar (UTF-8):

    alpha <real>
    K <integer>
    <mean> <cost>        # optional label
    ...                  (K data lines)

`#` starts a comment anywhere; a comment trailing a data line becomes that
arm's label.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from core.errors import (
    AlphaOutOfRangeError,
    InstanceValidationError,
    MalformedLineError,
    MeanOutOfRangeError,
    NegativeCostError,
    TooFewArmsError,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BanditInstance:
    """Arm means, known arm costs and the subsidy factor."""
    means: Tuple[float, ...]
    costs: Tuple[float, ...]
    alpha: float
    labels: Optional[Tuple[str, ...]] = field(default=None, compare=False)
    resorted: bool = field(default=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "means", tuple(float(m) for m in self.means))
        object.__setattr__(self, "costs", tuple(float(c) for c in self.costs))
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))

        if len(self.means) != len(self.costs):
            raise InstanceValidationError(
                f"{len(self.means)} means but {len(self.costs)} costs", field="costs"
            )
        if len(self.means) < 2:
            raise InstanceValidationError("An instance needs at least two arms", field="means")
        if self.labels is not None and len(self.labels) != len(self.means):
            raise InstanceValidationError("One label per arm required", field="labels")
        for k, mean in enumerate(self.means):
            if not 0.0 <= mean <= 1.0:
                raise InstanceValidationError(f"Mean of arm {k + 1} is {mean}, outside [0, 1]", field="means")
        for k, cost in enumerate(self.costs):
            if not cost >= 0.0:
                raise InstanceValidationError(f"Cost of arm {k + 1} is {cost}, below 0", field="costs")
        if not 0.0 < self.alpha < 1.0:
            raise InstanceValidationError(f"alpha {self.alpha} outside (0, 1)", field="alpha")
        if any(b < a for a, b in zip(self.costs, self.costs[1:])):
            raise InstanceValidationError("Costs must be non-decreasing; use sort_by_cost", field="costs")

    @property
    def num_arms(self) -> int:
        return len(self.means)

    def with_alpha(self, alpha: float) -> 'BanditInstance':
        """Same arms under a different subsidy factor."""
        return replace(self, alpha=alpha)

    def scaled_costs(self, lam: float) -> 'BanditInstance':
        """Same arms with every cost multiplied by lam > 0."""
        if not lam > 0:
            raise InstanceValidationError(f"Cost scale {lam} must be positive", field="costs")
        return replace(self, costs=tuple(c * lam for c in self.costs))

    def label(self, k: int) -> str:
        if self.labels is not None and self.labels[k]:
            return self.labels[k]
        return f"a{k + 1}"


def sort_by_cost(
    means: Sequence[float],
    costs: Sequence[float],
    alpha: float,
    labels: Optional[Sequence[str]] = None,
) -> BanditInstance:
    """
    Build an instance, stable-sorting arms by cost.

    The returned instance has `resorted=True` when the input order changed.
    Sorting an already cost-sorted input is the identity.
    """
    order = sorted(range(len(costs)), key=lambda k: costs[k])
    resorted = order != list(range(len(costs)))
    if resorted:
        logger.warning(
            "Arms re-sorted by cost",
            extra={"original_order": [k + 1 for k in order]}
        )
    return BanditInstance(
        means=tuple(means[k] for k in order),
        costs=tuple(costs[k] for k in order),
        alpha=alpha,
        labels=tuple(labels[k] for k in order) if labels is not None else None,
        resorted=resorted,
    )


def _split_comment(raw: str) -> Tuple[str, Optional[str]]:
    body, sep, comment = raw.partition("#")
    return body.strip(), (comment.strip() or None) if sep else None


def _parse_real(token: str, line_number: int, raw: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise MalformedLineError(f"'{token}' is not a number", line_number, raw)
    if math.isnan(value) or math.isinf(value):
        raise MalformedLineError(f"'{token}' is not finite", line_number, raw)
    return value


def parse_instance(text: str) -> BanditInstance:
    """
    Parse the instance file grammar into a validated BanditInstance.

    Arms given out of cost order are stable-sorted (warning logged,
    `resorted` flag set).

    Raises:
        MalformedLineError, TooFewArmsError, MeanOutOfRangeError,
        NegativeCostError, AlphaOutOfRangeError: each naming the offending line
    """
    alpha: Optional[float] = None
    declared_k: Optional[int] = None
    k_line = 0
    means: List[float] = []
    costs: List[float] = []
    labels: List[str] = []

    for line_number, raw in enumerate(text.splitlines(), start=1):
        body, comment = _split_comment(raw)
        if not body:
            continue
        tokens = body.split()

        if alpha is None:
            if len(tokens) != 2 or tokens[0] != "alpha":
                raise MalformedLineError("expected 'alpha <real>'", line_number, raw)
            alpha = _parse_real(tokens[1], line_number, raw)
            if not 0.0 < alpha < 1.0:
                raise AlphaOutOfRangeError(f"alpha {alpha} outside (0, 1)", line_number, raw)
            continue

        if declared_k is None:
            if len(tokens) != 2 or tokens[0] != "K":
                raise MalformedLineError("expected 'K <integer>'", line_number, raw)
            try:
                declared_k = int(tokens[1])
            except ValueError:
                raise MalformedLineError(f"'{tokens[1]}' is not an integer", line_number, raw)
            if declared_k < 2:
                raise TooFewArmsError(f"K = {declared_k}, at least 2 arms required", line_number, raw)
            k_line = line_number
            continue

        if len(tokens) != 2:
            raise MalformedLineError("expected '<mean> <cost>'", line_number, raw)
        if len(means) == declared_k:
            raise MalformedLineError(f"more than K = {declared_k} arm lines", line_number, raw)
        mean = _parse_real(tokens[0], line_number, raw)
        cost = _parse_real(tokens[1], line_number, raw)
        if not 0.0 <= mean <= 1.0:
            raise MeanOutOfRangeError(f"mean {mean} outside [0, 1]", line_number, raw)
        if cost < 0.0:
            raise NegativeCostError(f"cost {cost} is negative", line_number, raw)
        means.append(mean)
        costs.append(cost)
        labels.append(comment or "")

    if alpha is None:
        raise MalformedLineError("missing 'alpha' line", 1)
    if declared_k is None:
        raise MalformedLineError("missing 'K' line")
    if len(means) != declared_k:
        raise TooFewArmsError(
            f"K = {declared_k} declared but {len(means)} arm lines given", k_line
        )

    return sort_by_cost(means, costs, alpha, labels if any(labels) else None)


def format_instance(inst: BanditInstance) -> str:
    """Write an instance in the file grammar; labels become trailing comments."""
    lines = [f"alpha {inst.alpha!r}", f"K {inst.num_arms}"]
    for k in range(inst.num_arms):
        line = f"{inst.means[k]!r} {inst.costs[k]!r}"
        if inst.labels is not None and inst.labels[k]:
            line += f"  # {inst.labels[k]}"
        lines.append(line)
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class InstanceAnalysis:
    """
    Every static symbol of an instance.

    Index sets are frozensets of 0-based arm indices. Gap vectors are tuples
    indexed by arm. Symbols tied to the best-reward cheap arm are None when
    no arm is cheaper than a_star.
    """
    instance: BanditInstance
    mu_star: float
    i_star: int
    mu_cs: float
    feasible_set: FrozenSet[int]
    a_star: int
    cheap_arms: FrozenSet[int]
    expensive_arms: FrozenSet[int]
    a_dagger: Optional[int]
    mu_dagger: Optional[float]
    A_dagger_set: FrozenSet[int]
    quality_gaps: Tuple[float, ...]
    cost_gaps: Tuple[float, ...]
    reward_gaps: Tuple[float, ...]
    dagger_gaps: Optional[Tuple[float, ...]]

    @property
    def alpha(self) -> float:
        return self.instance.alpha

    @property
    def num_arms(self) -> int:
        return self.instance.num_arms

    @property
    def means(self) -> Tuple[float, ...]:
        return self.instance.means

    @cached_property
    def clipped_cost_gaps(self) -> Tuple[float, ...]:
        """Delta+_{C,k}."""
        return tuple(max(g, 0.0) for g in self.cost_gaps)

    @cached_property
    def clipped_quality_gaps(self) -> Tuple[float, ...]:
        """Delta+_{Q,k}."""
        return tuple(max(g, 0.0) for g in self.quality_gaps)

    def elimination_gaps(self, ell: int) -> Tuple[float, ...]:
        """Delta_{k,l} = (1 - alpha) mu_k - mu_l for every arm k."""
        scale = 1.0 - self.alpha
        mu_ell = self.means[ell]
        return tuple(scale * mu - mu_ell for mu in self.means)

    def elimination_set(self, ell: int) -> FrozenSet[int]:
        """A^l: arms whose subsidized reward exceeds mu_l."""
        return frozenset(k for k, gap in enumerate(self.elimination_gaps(ell)) if gap > 0)

    def arm_class(self, k: int) -> str:
        if k in self.cheap_arms:
            return "cheap"
        if k in self.expensive_arms:
            return "expensive"
        return "optimal"

    def to_dict(self) -> Dict[str, object]:
        """1-based summary for CLI output."""
        def one_based(indices):
            return sorted(k + 1 for k in indices)

        return {
            "K": self.num_arms,
            "alpha": self.alpha,
            "mu_star": self.mu_star,
            "i_star": self.i_star + 1,
            "mu_cs": self.mu_cs,
            "a_star": self.a_star + 1,
            "feasible_set": one_based(self.feasible_set),
            "cheap_arms": one_based(self.cheap_arms),
            "expensive_arms": one_based(self.expensive_arms),
            "a_dagger": self.a_dagger + 1 if self.a_dagger is not None else None,
            "mu_dagger": self.mu_dagger,
            "A_dagger_set": one_based(self.A_dagger_set),
            "quality_gaps": list(self.quality_gaps),
            "cost_gaps": list(self.cost_gaps),
            "reward_gaps": list(self.reward_gaps),
            "dagger_gaps": list(self.dagger_gaps) if self.dagger_gaps is not None else None,
        }


def analyze(inst: BanditInstance) -> InstanceAnalysis:
    """
    Derive every static symbol of an instance.

    Ties in arg max and arg min resolve to the lowest index. Every valid
    instance has a_star because i_star is always feasible.
    """
    means = inst.means
    costs = inst.costs
    scale = 1.0 - inst.alpha

    mu_star = max(means)
    i_star = means.index(mu_star)
    mu_cs = scale * mu_star

    feasible = frozenset(k for k, mu in enumerate(means) if mu >= mu_cs)
    a_star = min(feasible)
    cheap = frozenset(range(a_star))
    expensive = frozenset(range(a_star + 1, inst.num_arms))

    if cheap:
        mu_dagger = max(means[k] for k in range(a_star))
        a_dagger: Optional[int] = means.index(mu_dagger)
        dagger_gaps: Optional[Tuple[float, ...]] = tuple(scale * mu - mu_dagger for mu in means)
        a_dagger_set = frozenset(k for k, gap in enumerate(dagger_gaps) if gap > 0)
    else:
        mu_dagger = None
        a_dagger = None
        dagger_gaps = None
        a_dagger_set = frozenset()

    return InstanceAnalysis(
        instance=inst,
        mu_star=mu_star,
        i_star=i_star,
        mu_cs=mu_cs,
        feasible_set=feasible,
        a_star=a_star,
        cheap_arms=cheap,
        expensive_arms=expensive,
        a_dagger=a_dagger,
        mu_dagger=mu_dagger,
        A_dagger_set=a_dagger_set,
        quality_gaps=tuple(mu_cs - mu for mu in means),
        cost_gaps=tuple(c - costs[a_star] for c in costs),
        reward_gaps=tuple(mu_star - mu for mu in means),
        dagger_gaps=dagger_gaps,
    )
