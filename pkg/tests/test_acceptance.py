"""
End-to-end behaviour checks on the ablation instances.

Long episodes are marked slow; checks that average over several seeded
runs are also marked statistical.
"""

import numpy as np
import pytest

from core.bounds import cheap_arm_sample_bound
from core.cof import CofConfig, CofPolicy, EventKind, default_delta
from core.instance import BanditInstance, analyze
from core.runner import simulate_run
from core.sampler import RewardEnvironment

INFEASIBLE = EventKind.DEEMED_INFEASIBLE
FEASIBLE = EventKind.DEEMED_FEASIBLE


@pytest.fixture
def one_cheap_arm():
    """A single cheap arm far below four equal expensive arms."""
    return BanditInstance(means=(0.3, 0.7, 0.7, 0.7, 0.7), costs=(1.0, 2.0, 3.0, 4.0, 5.0), alpha=0.3)


def event_pairs(trace):
    return [(e.arm, e.kind) for e in trace.events]


def feasible_time(trace):
    return next(e.time for e in trace.events if e.kind == FEASIBLE)


def total_regret(trace):
    return trace.cost_regret + trace.quality_regret


class TestInstanceFidelity:
    """Test the published symbols of the ablation instances"""

    def test_nu1(self, nu1_analysis):
        assert nu1_analysis.mu_cs == pytest.approx(0.198, abs=1e-12)
        assert nu1_analysis.a_star == 1

    def test_nu2(self, nu2_analysis):
        assert nu2_analysis.mu_cs == pytest.approx(0.5012, abs=1e-12)
        assert nu2_analysis.a_star == 3


@pytest.mark.slow
class TestEpisodeTrajectories:
    """Test full COF episodes at long horizons"""

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_nu1_rules_out_arm_one_then_commits(self, nu1, seed):
        """Arm 1 is deemed infeasible, then arm 2 feasible, and arm 2 takes most samples"""
        horizon = 500_000
        trace = simulate_run(nu1, "cof", horizon, seed)
        assert event_pairs(trace) == [(0, INFEASIBLE), (1, FEASIBLE)]
        assert trace.final_counts[1] > horizon // 2

    @pytest.mark.parametrize("seed", [0, 1])
    def test_nu2_rules_out_three_cheap_arms(self, nu2, seed):
        """Arms 1, 2 and 3 are deemed infeasible in order, then arm 4 is committed"""
        trace = simulate_run(nu2, "cof", 2_000_000, seed)
        assert event_pairs(trace) == [
            (0, INFEASIBLE), (1, INFEASIBLE), (2, INFEASIBLE), (3, FEASIBLE),
        ]

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_cheap_arm_sample_law(self, one_cheap_arm, seed):
        """The cheap arm is sampled well within twice 16 ln T / gap^2 + 2"""
        horizon = 100_000
        analysis = analyze(one_cheap_arm)
        trace = simulate_run(one_cheap_arm, "cof", horizon, seed)
        gap = analysis.quality_gaps[0]
        assert trace.final_counts[0] <= 2 * (16 * np.log(horizon) / gap ** 2 + 2)
        assert trace.events[-1].arm == 1


@pytest.mark.slow
class TestCombinedTestImplication:
    """Test a single-arm verdict always implies the combined one"""

    @pytest.mark.parametrize("instance_name", ["nu1", "one_cheap_arm"])
    def test_every_decision_pass(self, request, instance_name):
        """Whenever some arm's error alone is below delta, so is the product"""
        instance = request.getfixturevalue(instance_name)
        horizon = 200_000
        passes = []

        def check(t, ell, log_eps, log_delta):
            passes.append(t)
            assert np.all(log_eps <= 0.0)
            if log_eps.min() <= log_delta:
                assert log_eps.sum() <= log_delta

        for seed in range(3):
            policy = CofPolicy(
                instance.num_arms, instance.alpha,
                CofConfig(delta=default_delta(instance.num_arms, horizon), combine_samples=False),
                observer=check,
            )
            env = RewardEnvironment(instance, seed)
            for t in range(horizon):
                arm = policy.select_arm(t, horizon)
                policy.observe(arm, env.sample(arm))
                if policy.committed is not None:
                    break
        assert passes


@pytest.mark.slow
@pytest.mark.statistical
class TestAblations:
    """Test each COF feature lowers regret on the instance built to show it"""

    def test_exclusive_sampling_on_nu1(self, nu1):
        """Sampling the trailing candidate alone reaches the arm 2 verdict sooner and cheaper"""
        horizon, seeds = 200_000, range(5)
        full = [simulate_run(nu1, "cof", horizon, s) for s in seeds]
        ablated = [simulate_run(nu1, "cof_no_exclusive", horizon, s) for s in seeds]

        assert all(event_pairs(t) == [(0, INFEASIBLE), (1, FEASIBLE)] for t in full + ablated)
        assert np.mean([feasible_time(t) for t in full]) < np.mean([feasible_time(t) for t in ablated])
        assert np.mean([total_regret(t) for t in full]) < np.mean([total_regret(t) for t in ablated])

    def test_combining_samples(self, one_cheap_arm):
        """Pooling evidence across arms rules the cheap arm out with fewer samples"""
        horizon, seeds = 100_000, range(10)
        full = [simulate_run(one_cheap_arm, "cof", horizon, s) for s in seeds]
        ablated = [simulate_run(one_cheap_arm, "cof_no_combine", horizon, s) for s in seeds]

        def infeasible_time(trace):
            return next(e.time for e in trace.events if e.kind == INFEASIBLE)

        assert np.mean([infeasible_time(t) for t in full]) < np.mean([infeasible_time(t) for t in ablated])
        assert np.mean([total_regret(t) for t in full]) < np.mean([total_regret(t) for t in ablated])


@pytest.mark.slow
@pytest.mark.statistical
class TestNu2Reproduction:
    """Test the combining-samples instance at T = 10^6 over a few seeds"""

    horizon = 1_000_000
    seeds = range(4)

    def test_combining_samples_lowers_regret(self, nu2):
        """Pooled evidence gives lower mean summed regret than single-arm evidence"""
        full = [simulate_run(nu2, "cof", self.horizon, s) for s in self.seeds]
        ablated = [simulate_run(nu2, "cof_no_combine", self.horizon, s) for s in self.seeds]
        assert np.mean([total_regret(t) for t in full]) < np.mean([total_regret(t) for t in ablated])

    def test_cheap_arm_sample_bound(self, nu2, nu2_analysis):
        """Each cheap arm's mean count stays within twice 16 ln T / gap^2 + 2"""
        mean_counts = np.mean([simulate_run(nu2, "cof", self.horizon, s).final_counts for s in self.seeds], axis=0)
        for k in (0, 1, 2):
            assert mean_counts[k] <= 2 * cheap_arm_sample_bound(nu2_analysis, k, self.horizon)

    def test_cheap_arm_counts_grow_logarithmically(self, nu2):
        """Each extra decade of horizon adds about the same number of cheap-arm samples"""
        # Decades past the last commit time, so no cheap-arm decision is cut short by T
        horizons = (10_000_000, 100_000_000, 1_000_000_000)
        seeds = range(8)
        at_1e7, at_1e8, at_1e9 = (
            np.mean([simulate_run(nu2, "cof", horizon, s).final_counts for s in seeds], axis=0)
            for horizon in horizons
        )
        for k in (0, 1, 2):
            assert at_1e8[k] > at_1e7[k]
            assert at_1e9[k] - at_1e8[k] <= 1.5 * (at_1e8[k] - at_1e7[k])
