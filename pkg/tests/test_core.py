import numpy as np
import pytest
from hypothesis import given, strategies as st

from opeval.core import (
    AbsoluteContinuityError,
    BanditLog,
    FiniteInstance,
    InvalidProbabilityError,
    LogRecord,
    TablePolicy,
    UniformPolicy,
    importance_weight,
    importance_weights,
    policy_value_exact,
    read_log,
    validate_log,
    write_log,
)

from conftest import random_instance


class TestImportanceWeight:
    def test_hand_value(self):
        assert importance_weight(0.5, 0.25) == 2.0

    def test_zero_over_zero(self):
        assert importance_weight(0.0, 0.0) == 0.0

    def test_absolute_continuity_violation(self):
        with pytest.raises(AbsoluteContinuityError):
            importance_weight(0.3, 0.0)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            importance_weight(1.5, 0.5)

    @given(
        p=st.floats(0.0, 1.0, allow_nan=False),
        q=st.floats(1e-9, 1.0, allow_nan=False),
    )
    def test_round_trip(self, p, q):
        assert importance_weight(p, q) * q == pytest.approx(p, rel=1e-12, abs=1e-300)

    def test_vectorized_matches_scalar(self, rng):
        t = rng.uniform(0, 1, 50)
        m = rng.uniform(0.01, 1, 50)
        vec = importance_weights(t, m)
        for i in range(50):
            assert vec[i] == importance_weight(t[i], m[i])


class TestPolicyValueExact:
    def test_on_policy_is_logging_mean(self, rng):
        inst = random_instance(rng)
        same = FiniteInstance(
            context_probs=inst.context_probs,
            logging=inst.logging,
            target=inst.logging,
            mean_reward=inst.mean_reward,
            noise_sd=inst.noise_sd,
            reward_cap=inst.reward_cap,
        )
        expected = float(
            np.sum(inst.context_probs[:, None] * inst.logging * inst.mean_reward)
        )
        assert policy_value_exact(same) == pytest.approx(expected)
        assert policy_value_exact(same, "logging") == pytest.approx(expected)

    def test_single_context_deterministic_target(self):
        inst = FiniteInstance(
            context_probs=np.array([1.0]),
            logging=np.array([[0.5, 0.5]]),
            target=np.array([[1.0, 0.0]]),
            mean_reward=np.array([[0.7, 0.2]]),
            noise_sd=np.zeros((1, 2)),
            reward_cap=np.ones((1, 2)),
        )
        assert policy_value_exact(inst) == pytest.approx(0.7)

    def test_zero_reward(self, rng):
        inst = random_instance(rng)
        zeroed = inst.with_mean_reward(np.zeros_like(inst.mean_reward))
        assert policy_value_exact(zeroed) == 0.0

    def test_permutation_invariance(self, rng):
        inst = random_instance(rng)
        perm = rng.permutation(inst.num_contexts)
        shuffled = FiniteInstance(
            context_probs=inst.context_probs[perm],
            logging=inst.logging[perm],
            target=inst.target[perm],
            mean_reward=inst.mean_reward[perm],
            noise_sd=inst.noise_sd[perm],
            reward_cap=inst.reward_cap[perm],
        )
        assert policy_value_exact(shuffled) == pytest.approx(policy_value_exact(inst))

    def test_value_within_cap(self, rng):
        for _ in range(20):
            inst = random_instance(rng)
            v = policy_value_exact(inst)
            assert 0.0 <= v <= float(inst.reward_cap.max())


class TestRecordAndLog:
    def test_record_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            LogRecord(features=[np.nan], action=0, reward=1.0, logging_prob=0.5)
        with pytest.raises(ValueError):
            LogRecord(features=[1.0], action=0, reward=np.inf, logging_prob=0.5)
        with pytest.raises(ValueError):
            LogRecord(features=[1.0], action=0, reward=0.0, logging_prob=1.5)

    def test_log_rejects_bad_actions_and_empty(self):
        with pytest.raises(ValueError):
            BanditLog(
                features=np.zeros((2, 1)),
                actions=np.array([0, 3]),
                rewards=np.zeros(2),
                logging_probs=np.full(2, 0.5),
                num_actions=2,
            )
        with pytest.raises(ValueError):
            BanditLog(
                features=np.zeros((0, 1)),
                actions=np.array([], dtype=int),
                rewards=np.array([]),
                logging_probs=np.array([]),
                num_actions=2,
            )

    def test_log_arrays_immutable(self, rng):
        inst, log = random_instance(rng), None
        log = inst.sample_log(5, seed=1)
        with pytest.raises(ValueError):
            log.rewards[0] = 9.0

    def test_subset_keeps_alignment(self, rng):
        inst = random_instance(rng)
        log = inst.sample_log(10, seed=3)
        sub = log.subset(np.array([1, 3, 5]))
        assert len(sub) == 3
        assert sub.rewards[1] == log.rewards[3]
        assert sub.logging_policy is log.logging_policy

    def test_round_trip_file(self, rng, tmp_path):
        inst = random_instance(rng)
        log = inst.sample_log(12, seed=44)
        path = tmp_path / "log.jsonl"
        write_log(log, path)
        loaded = read_log(path)
        np.testing.assert_array_equal(loaded.features, log.features)
        np.testing.assert_array_equal(loaded.actions, log.actions)
        np.testing.assert_array_equal(loaded.rewards, log.rewards)
        np.testing.assert_array_equal(loaded.logging_probs, log.logging_probs)
        assert loaded.num_actions == log.num_actions


class TestPolicies:
    def test_prob_matrix_validates_rows(self):
        with pytest.raises(InvalidProbabilityError):
            TablePolicy(np.array([[0.5, 0.6]]))

    def test_uniform_policy(self):
        pol = UniformPolicy(4)
        probs = pol.prob_matrix(np.zeros((3, 2)), 4)
        np.testing.assert_allclose(probs, 0.25)

    def test_prob_sum_tolerance_not_renormalized(self):
        # within 1e-9 passes, outside is rejected rather than rescaled
        TablePolicy(np.array([[0.5, 0.5 + 5e-10]]))
        with pytest.raises(InvalidProbabilityError):
            TablePolicy(np.array([[0.5, 0.5 + 5e-9]]))


class TestFiniteInstance:
    def test_absolute_continuity_required(self):
        with pytest.raises(AbsoluteContinuityError):
            FiniteInstance(
                context_probs=np.array([1.0]),
                logging=np.array([[1.0, 0.0]]),
                target=np.array([[0.5, 0.5]]),
                mean_reward=np.zeros((1, 2)),
                noise_sd=np.zeros((1, 2)),
                reward_cap=np.ones((1, 2)),
            )

    def test_mean_reward_capped(self):
        with pytest.raises(ValueError):
            FiniteInstance(
                context_probs=np.array([1.0]),
                logging=np.array([[0.5, 0.5]]),
                target=np.array([[0.5, 0.5]]),
                mean_reward=np.array([[1.2, 0.0]]),
                noise_sd=np.zeros((1, 2)),
                reward_cap=np.ones((1, 2)),
            )

    def test_sample_log_propensities_exact(self, rng):
        inst = random_instance(rng)
        log = inst.sample_log(200, seed=17)
        probs = inst.logging_policy().prob_matrix(log.features, inst.num_actions)
        np.testing.assert_array_equal(
            log.logging_probs, probs[np.arange(len(log)), log.actions]
        )

    def test_sample_log_deterministic(self, rng):
        inst = random_instance(rng)
        a = inst.sample_log(64, seed=123)
        b = inst.sample_log(64, seed=123)
        np.testing.assert_array_equal(a.rewards, b.rewards)
        np.testing.assert_array_equal(a.actions, b.actions)


class TestValidateLog:
    def test_clean_log(self, rng):
        inst = random_instance(rng)
        log = inst.sample_log(30, seed=2)
        report = validate_log(log, inst.target_policy())
        assert report.ok
        assert report.num_records == 30
        assert report.min_rho_all is not None and report.min_rho_all >= 0.0
        assert report.max_rho_all >= report.max_rho_observed

    def test_zero_propensity_flagged(self):
        log = BanditLog(
            features=np.zeros((2, 1)),
            actions=np.array([0, 1]),
            rewards=np.array([1.0, 0.0]),
            logging_probs=np.array([0.0, 0.5]),
            num_actions=2,
        )
        report = validate_log(log, UniformPolicy(2))
        kinds = {v.kind for v in report.violations}
        assert "propensity_bound" in kinds
        assert "absolute_continuity" in kinds
        assert not report.ok

    def test_max_rho_observed(self):
        log = BanditLog(
            features=np.zeros((2, 1)),
            actions=np.array([0, 1]),
            rewards=np.array([1.0, 0.0]),
            logging_probs=np.array([0.25, 0.5]),
            num_actions=2,
        )
        report = validate_log(log, TablePolicy(np.array([[0.5, 0.5]])))
        assert report.max_rho_observed == pytest.approx(2.0)
