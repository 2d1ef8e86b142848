"""
Reward Sampling and Arm Statistics
==================================

- `RewardEnvironment`: Bernoulli rewards, one Philox stream per arm
- `ArmState`: immutable per-arm running statistics
- `ArmTable`: the same statistics for all arms of a run, as arrays

Confidence radius: beta(n, delta) = sqrt(ln(1/delta) / (2 n)).
"""

import math
from dataclasses import dataclass
from typing import List

import numpy as np

from core.errors import RewardValueError, UninitializedArmError, ValidationError
from core.instance import BanditInstance


def _check_delta(delta: float) -> None:
    if not 0.0 < delta <= 1.0:
        raise ValidationError(f"delta {delta} outside (0, 1]", field="delta")


def beta(n: int, delta: float) -> float:
    """
    Hoeffding confidence radius for n samples at tolerance delta.

    Raises:
        UninitializedArmError: n < 1
    """
    if n < 1:
        raise UninitializedArmError()
    _check_delta(delta)
    return math.sqrt(math.log(1.0 / delta) / (2.0 * n))


@dataclass(frozen=True)
class ArmState:
    """Running statistics of one arm. An unsampled arm has every statistic at 0."""
    n: int = 0
    sum_rewards: int = 0
    mu_hat: float = 0.0
    ucb: float = 0.0
    lcb: float = 0.0


def update(state: ArmState, reward: int, delta: float) -> ArmState:
    """Fold one Bernoulli reward into an arm's statistics."""
    if reward not in (0, 1):
        raise RewardValueError(reward)
    n = state.n + 1
    total = state.sum_rewards + int(reward)
    mu_hat = total / n
    radius = beta(n, delta)
    return ArmState(n=n, sum_rewards=total, mu_hat=mu_hat, ucb=mu_hat + radius, lcb=mu_hat - radius)


class ArmTable:
    """
    Statistics of every arm in one run, kept as numpy arrays so policies can
    evaluate their rules over all arms at once.
    """

    def __init__(self, num_arms: int, delta: float):
        _check_delta(delta)
        self.delta = delta
        self.log_inv_delta = math.log(1.0 / delta)
        self.n = np.zeros(num_arms, dtype=np.int64)
        self.sums = np.zeros(num_arms, dtype=np.int64)
        self.mu_hat = np.zeros(num_arms, dtype=np.float64)
        self.ucb = np.zeros(num_arms, dtype=np.float64)
        self.lcb = np.zeros(num_arms, dtype=np.float64)

    @property
    def num_arms(self) -> int:
        return len(self.n)

    def record(self, arm: int, reward: int) -> None:
        n = int(self.n[arm]) + 1
        total = int(self.sums[arm]) + reward
        mu_hat = total / n
        radius = math.sqrt(self.log_inv_delta / (2.0 * n))
        self.n[arm] = n
        self.sums[arm] = total
        self.mu_hat[arm] = mu_hat
        self.ucb[arm] = mu_hat + radius
        self.lcb[arm] = mu_hat - radius

    def set_counts(self, arm: int, n: int, sum_rewards: int) -> None:
        """Overwrite one arm's statistics (used to stage scenarios)."""
        self.n[arm] = n
        self.sums[arm] = sum_rewards
        if n == 0:
            self.mu_hat[arm] = self.ucb[arm] = self.lcb[arm] = 0.0
            return
        mu_hat = sum_rewards / n
        radius = math.sqrt(self.log_inv_delta / (2.0 * n))
        self.mu_hat[arm] = mu_hat
        self.ucb[arm] = mu_hat + radius
        self.lcb[arm] = mu_hat - radius

    def state(self, arm: int) -> ArmState:
        return ArmState(
            n=int(self.n[arm]),
            sum_rewards=int(self.sums[arm]),
            mu_hat=float(self.mu_hat[arm]),
            ucb=float(self.ucb[arm]),
            lcb=float(self.lcb[arm]),
        )

    def states(self) -> List[ArmState]:
        return [self.state(k) for k in range(self.num_arms)]

    @property
    def all_initialized(self) -> bool:
        return bool((self.n >= 1).all())


class RewardEnvironment:
    """
    Stochastic Bernoulli rewards for one run.

    Each arm draws from its own Philox generator spawned from the run seed,
    so the rewards an arm yields depend only on how often that arm has been
    sampled, never on the order arms are played in.
    """

    def __init__(self, instance: BanditInstance, seed: int, block_size: int = 4096):
        self.instance = instance
        self.block_size = block_size
        children = np.random.SeedSequence(seed).spawn(instance.num_arms)
        self._generators = [np.random.Generator(np.random.Philox(child)) for child in children]
        self._means = instance.means
        self._buffers: List[List[int]] = [[] for _ in range(instance.num_arms)]
        self._cursor = [0] * instance.num_arms

    def _refill(self, arm: int) -> None:
        draws = self._generators[arm].random(self.block_size)
        self._buffers[arm] = (draws < self._means[arm]).astype(np.int8).tolist()
        self._cursor[arm] = 0

    def sample(self, arm: int) -> int:
        """1 with probability means[arm], else 0."""
        cursor = self._cursor[arm]
        if cursor >= len(self._buffers[arm]):
            self._refill(arm)
            cursor = 0
        self._cursor[arm] = cursor + 1
        return self._buffers[arm][cursor]
