"""
Tests for the COF policy, its building blocks and its two ablations.
"""

import math

import numpy as np
import pytest

from core.cof import (
    CofConfig,
    CofPolicy,
    EventKind,
    default_delta,
    epsilon,
    gating_set,
    infeasibility_test,
    log_epsilon,
)
from core.errors import HorizonExceededError, ValidationError
from core.instance import BanditInstance
from core.sampler import ArmTable, RewardEnvironment


def drive(policy, reward, horizon):
    """Step a policy until it commits or the horizon runs out; returns samples drawn."""
    for t in range(horizon):
        arm = policy.select_arm(t, horizon)
        policy.observe(arm, reward(arm))
        if policy.committed is not None:
            return t + 1
    return horizon


def staged_policy(exclusive_sampling=True):
    """Three arms sampled once each, then restaged so arm 0 trails both gating arms."""
    policy = CofPolicy(3, 0.2, CofConfig(delta=0.1, exclusive_sampling=exclusive_sampling))
    for t in range(3):
        policy.observe(policy.select_arm(t, 100), 0)
    policy.table.set_counts(0, 1, 0)
    policy.table.set_counts(1, 5, 3)
    policy.table.set_counts(2, 5, 3)
    return policy


@pytest.fixture
def three_arm():
    """Two cheap infeasible arms below a clearly feasible expensive one."""
    return BanditInstance(means=(0.1, 0.5, 0.9), costs=(1.0, 2.0, 3.0), alpha=0.2)


class TestBuildingBlocks:
    """Test gating, epsilon and the infeasibility test"""

    def test_default_delta(self):
        """Test K^2 / T^2"""
        assert default_delta(12, 1_000_000) == pytest.approx(1.44e-10)

    @pytest.mark.parametrize("horizon", [1, 2])
    def test_default_delta_needs_horizon_above_arm_count(self, horizon):
        """T = K would give delta = 1"""
        with pytest.raises(ValidationError):
            default_delta(2, horizon)
        assert default_delta(2, 3) < 1.0

    @pytest.mark.parametrize("delta", [0.0, 1.0, 2.0])
    def test_config_delta_range(self, delta):
        with pytest.raises(ValidationError):
            CofConfig(delta=delta)

    def test_gating_set(self):
        """Only more expensive arms whose subsidized UCB reaches LCB_l"""
        table = ArmTable(4, 0.5)
        table.lcb[:] = [0.5, 0.0, 0.0, 0.0]
        table.ucb[:] = [0.9, 0.6, 0.7, 0.65]
        # 0.8 * ucb = 0.48, 0.56, 0.52
        assert gating_set(table, 0, 0.2).tolist() == [2, 3]
        assert gating_set(table, 3, 0.2).tolist() == []

    def test_epsilon_value(self):
        """exp(-2 n (mu_hat - UCB_l / (1 - alpha))^2)"""
        assert epsilon(8, 0.9, 0.4, 0.5) == pytest.approx(math.exp(-0.16))

    def test_epsilon_at_threshold_is_one(self):
        """No evidence when mu_hat does not exceed the subsidized threshold"""
        assert epsilon(1000, 0.8, 0.4, 0.5) == 1.0
        assert epsilon(1000, 0.1, 0.4, 0.5) == 1.0

    def test_log_epsilon_matches_scalar(self):
        """Test the vectorized form"""
        n = np.array([8, 3, 20])
        mu_hat = np.array([0.9, 0.5, 0.95])
        expected = [math.log(epsilon(int(k), float(m), 0.4, 0.5)) for k, m in zip(n, mu_hat)]
        assert log_epsilon(n, mu_hat, 0.4, 0.5) == pytest.approx(expected)

    def _table(self, n_arm_1, n_arm_2):
        table = ArmTable(3, 0.1)
        table.n[:] = [10, n_arm_1, n_arm_2]
        table.mu_hat[:] = [0.3, 0.9, 0.9]
        table.ucb[0] = 0.4
        return table

    def test_combining_fires_on_the_product(self):
        """Two arms each too weak alone but jointly below delta"""
        # log eps = -1.5 for each arm, log(0.1) = -2.30
        table = self._table(75, 75)
        assert infeasibility_test(table, 0, 0.5, 0.1, combine_samples=True)
        assert not infeasibility_test(table, 0, 0.5, 0.1, combine_samples=False)

    def test_single_arm_fires_either_way(self):
        """Test one arm with enough evidence on its own"""
        table = self._table(1, 200)
        assert infeasibility_test(table, 0, 0.5, 0.1, combine_samples=True)
        assert infeasibility_test(table, 0, 0.5, 0.1, combine_samples=False)

    def test_no_evidence(self):
        """Test no arm above the threshold"""
        table = self._table(75, 75)
        table.mu_hat[1:] = 0.7
        assert not infeasibility_test(table, 0, 0.5, 0.1)


class TestCofStepping:
    """Test the one-arm-per-timestep contract"""

    def test_initial_round_robin(self, nu1):
        """Every arm is sampled once, in cost order, before any decision"""
        policy = CofPolicy(nu1.num_arms, nu1.alpha, CofConfig(delta=0.01))
        arms = []
        for t in range(nu1.num_arms):
            arms.append(policy.select_arm(t, 1000))
            policy.observe(arms[-1], 1)
        assert arms == list(range(7))
        assert policy.state.decision_passes == 0

    def test_horizon_guard(self):
        """Selecting at or past the horizon is an error"""
        policy = CofPolicy(2, 0.1, CofConfig(delta=0.01))
        with pytest.raises(HorizonExceededError):
            policy.select_arm(10, 10)

    def test_exclusive_sampling_returns_candidate_alone(self):
        """A candidate that trails its gating arms is sampled alone"""
        policy = staged_policy(exclusive_sampling=True)
        assert policy.select_arm(3, 100) == 0
        assert list(policy.state.pending_queue) == []
        assert policy.state.gating_set == [1, 2]

    def test_without_exclusive_sampling_queues_gating_arms(self):
        """The ablation samples the candidate and every unfiltered gating arm"""
        policy = staged_policy(exclusive_sampling=False)
        assert policy.select_arm(3, 100) == 0
        assert list(policy.state.pending_queue) == [1, 2]
        assert policy.select_arm(4, 100) == 1
        assert policy.select_arm(5, 100) == 2

    def test_filter_drops_dominated_gating_arms(self):
        """Gating arms whose UCB is below the best gating LCB are not sampled"""
        policy = staged_policy(exclusive_sampling=False)
        policy.table.set_counts(2, 5000, 4000)
        # LCB_2 ~ 0.78 now dominates arm 1
        policy.table.ucb[1] = 0.5
        policy.select_arm(3, 100)
        assert list(policy.state.pending_queue) == [2]

    def test_two_arm_commits_after_infeasible_verdict(self, two_arm):
        """A cheap arm that never pays is ruled out; the last arm is then feasible"""
        policy = CofPolicy(2, two_arm.alpha, CofConfig(delta=1e-3))
        drawn = drive(policy, lambda arm: arm, 10_000)

        assert policy.committed == 1
        assert drawn < 10_000
        kinds = [(e.arm, e.kind) for e in policy.events]
        assert kinds == [(0, EventKind.DEEMED_INFEASIBLE), (1, EventKind.DEEMED_FEASIBLE)]
        assert policy.events[0].time == policy.events[1].time
        assert policy.state.infeasible == [0]

    def test_committed_arm_is_played_forever(self, two_arm):
        """Test the committed shortcut"""
        policy = CofPolicy(2, two_arm.alpha, CofConfig(delta=1e-3))
        drawn = drive(policy, lambda arm: arm, 10_000)
        assert all(policy.select_arm(t, 10_000) == 1 for t in range(drawn, drawn + 50))
        assert len(policy.events) == 2

    def test_cheap_feasible_arm_is_committed(self):
        """A cheap arm that beats every subsidized UCB has an empty gating set"""
        policy = CofPolicy(2, 0.5, CofConfig(delta=0.01))
        drive(policy, lambda arm: 1 - arm, 10_000)
        assert policy.committed == 0
        assert [e.kind for e in policy.events] == [EventKind.DEEMED_FEASIBLE]

    def test_observer_sees_every_test(self, two_arm):
        """Verdicts happen exactly on the passes where the summed log error is below log delta"""
        calls = []
        policy = CofPolicy(
            2, two_arm.alpha, CofConfig(delta=1e-3),
            observer=lambda t, ell, log_eps, log_delta: calls.append((t, ell, log_eps.sum(), log_delta)),
        )
        drive(policy, lambda arm: arm, 10_000)

        fired = [c for c in calls if c[2] <= c[3]]
        infeasible = [e for e in policy.events if e.kind == EventKind.DEEMED_INFEASIBLE]
        assert len(fired) == len(infeasible) == 1
        assert (fired[0][0], fired[0][1]) == (infeasible[0].time, infeasible[0].arm)
        assert all(c[3] == pytest.approx(math.log(1e-3)) for c in calls)

    @pytest.mark.parametrize("combine_samples", [True, False])
    def test_policy_verdicts_match_infeasibility_test(self, three_arm, combine_samples):
        """Every decision pass agrees with the standalone test on the same arm table"""
        config = CofConfig(delta=1e-4, combine_samples=combine_samples)
        expected = []

        def observer(t, ell, log_eps, log_delta):
            if infeasibility_test(policy.table, ell, three_arm.alpha, config.delta, combine_samples):
                expected.append((t, ell))

        policy = CofPolicy(3, three_arm.alpha, config, observer=observer)
        drive(policy, RewardEnvironment(three_arm, seed=3).sample, 100_000)

        verdicts = [(e.time, e.arm) for e in policy.events if e.kind == EventKind.DEEMED_INFEASIBLE]
        assert verdicts == expected
        assert verdicts


class TestCofOnSampledRewards:
    """Test full episodes with Bernoulli rewards"""

    @pytest.mark.parametrize("seed", range(5))
    def test_finds_cheapest_feasible_arm(self, three_arm, seed):
        """Both cheap arms are ruled out in cost order before the last is committed"""
        env = RewardEnvironment(three_arm, seed=seed)
        policy = CofPolicy(3, three_arm.alpha, CofConfig(delta=1e-4))
        drive(policy, env.sample, 100_000)

        assert policy.committed == 2
        assert [(e.arm, e.kind) for e in policy.events] == [
            (0, EventKind.DEEMED_INFEASIBLE),
            (1, EventKind.DEEMED_INFEASIBLE),
            (2, EventKind.DEEMED_FEASIBLE),
        ]
        times = [e.time for e in policy.events]
        assert times == sorted(times)

    @pytest.mark.parametrize("config", [
        CofConfig(delta=1e-4, combine_samples=False),
        CofConfig(delta=1e-4, exclusive_sampling=False),
    ])
    def test_ablations_reach_the_same_arm(self, three_arm, config):
        """Switching off either feature changes timing, not the answer"""
        env = RewardEnvironment(three_arm, seed=11)
        policy = CofPolicy(3, three_arm.alpha, config)
        drive(policy, env.sample, 200_000)
        assert policy.committed == 2

    def test_same_seed_same_episode(self, three_arm):
        """Test determinism"""
        runs = []
        for _ in range(2):
            env = RewardEnvironment(three_arm, seed=5)
            policy = CofPolicy(3, three_arm.alpha, CofConfig(delta=1e-4))
            drive(policy, env.sample, 100_000)
            runs.append(policy.events)
        assert runs[0] == runs[1]
