import numpy as np
import pytest

from opeval.core import BanditLog, TablePolicy
from opeval.estimators import (
    TabularRewardModel,
    ZeroModel,
    prepare,
    switch_estimate,
    threshold_grid,
)
from opeval.tuning import (
    bias_bound_sq,
    magic_combine,
    magic_details,
    per_record_value,
    per_record_values,
    select_tau,
    var_hat,
)

from conftest import random_instance


def single_context_log(rewards, num_actions=1):
    n = len(rewards)
    table = np.ones((1, num_actions)) / num_actions
    return BanditLog(
        features=np.zeros((n, 1)),
        actions=np.zeros(n, dtype=int),
        rewards=np.asarray(rewards, dtype=float),
        logging_probs=np.full(n, 1.0 / num_actions),
        num_actions=num_actions,
        logging_policy=TablePolicy(table),
    )


class TestPerRecordValue:
    def test_tau_above_all_weights(self, rng):
        inst = random_instance(rng)
        log = inst.sample_log(15, seed=1)
        target = inst.target_policy()
        prep = prepare(log, target, need_all_actions=True)
        tau = float(prep.rho_all.max())
        y = per_record_values(log, target, ZeroModel(), tau)
        np.testing.assert_array_equal(y, log.rewards * prep.rho_taken)

    def test_tau_zero_is_pure_imputation(self, rng):
        inst = random_instance(rng)
        log = inst.sample_log(15, seed=2)
        target = inst.target_policy()
        model = TabularRewardModel(rng.uniform(0, 1, inst.mean_reward.shape), inst.reward_cap)
        y = per_record_values(log, target, model, 0.0)
        prep = prepare(log, target, need_all_actions=True)
        rhat = model.clipped_matrix(log.features, log.num_actions)
        expected = np.sum(prep.target_probs * rhat * (prep.rho_all > 0), axis=1)
        np.testing.assert_array_equal(y, expected)

    def test_single_record_hand_value(self):
        from opeval.core import LogRecord

        record = LogRecord(features=np.zeros(1), action=0, reward=1.0, logging_prob=0.5)
        target = TablePolicy(np.array([[1.0, 0.0]]))
        logging = TablePolicy(np.array([[0.5, 0.5]]))
        model = TabularRewardModel(np.array([[0.3, 0.9]]))
        assert per_record_value(record, target, model, 1.0, logging) == pytest.approx(0.3)

    def test_mean_matches_switch_exactly(self, rng):
        for _ in range(10):
            inst = random_instance(rng)
            log = inst.sample_log(int(rng.integers(5, 30)), seed=int(rng.integers(2**31)))
            target = inst.target_policy()
            model = TabularRewardModel(rng.uniform(0, 1, inst.mean_reward.shape), inst.reward_cap)
            tau = float(rng.uniform(0, 4))
            y = per_record_values(log, target, model, tau)
            assert abs(float(np.mean(y)) - switch_estimate(log, target, model, tau).value) <= 1e-12


class TestVarHat:
    def test_single_record(self):
        log = single_context_log([0.7])
        assert var_hat(log, TablePolicy(np.ones((1, 1))), ZeroModel(), 1.0) == 0.0

    def test_two_point_hand_value(self):
        # rho = 1 everywhere so Y = rewards; Y = (0, 2) gives (1/4)(1 + 1)
        log = single_context_log([0.0, 2.0])
        target = TablePolicy(np.ones((1, 1)))
        assert var_hat(log, target, ZeroModel(), 1.0) == pytest.approx(0.5)

    def test_constant_values(self):
        log = single_context_log([0.3, 0.3, 0.3, 0.3])
        target = TablePolicy(np.ones((1, 1)))
        assert var_hat(log, target, ZeroModel(), 1.0) == pytest.approx(0.0)


class TestBiasBoundSq:
    def test_empty_imputation_region(self, rng):
        inst = random_instance(rng)
        log = inst.sample_log(10, seed=4)
        target = inst.target_policy()
        tau = float(prepare(log, target, need_all_actions=True).rho_all.max())
        assert bias_bound_sq(log, target, 1.0, tau) == 0.0

    def test_single_record_mass(self):
        # pi = (0.6, 0.4), mu = (0.5, 0.5): only action 0 has rho > 1
        log = BanditLog(
            features=np.zeros((1, 1)),
            actions=np.array([0]),
            rewards=np.array([1.0]),
            logging_probs=np.array([0.5]),
            num_actions=2,
            logging_policy=TablePolicy(np.array([[0.5, 0.5]])),
        )
        target = TablePolicy(np.array([[0.6, 0.4]]))
        assert bias_bound_sq(log, target, 1.0, 1.0) == pytest.approx(0.36)

    def test_zero_cap(self, rng):
        inst = random_instance(rng)
        log = inst.sample_log(10, seed=5)
        assert bias_bound_sq(log, inst.target_policy(), 0.0, 0.5) == 0.0

    def test_callable_cap_matches_array(self, rng):
        inst = random_instance(rng)
        log = inst.sample_log(6, seed=6)
        target = inst.target_policy()
        cap_arr = np.full((len(log), log.num_actions), 0.8)
        by_callable = bias_bound_sq(log, target, lambda x, a: 0.8, 0.7)
        by_array = bias_bound_sq(log, target, cap_arr, 0.7)
        assert by_callable == by_array

    def test_nonincreasing_in_tau(self, rng):
        inst = random_instance(rng)
        log = inst.sample_log(25, seed=7)
        target = inst.target_policy()
        taus = np.linspace(0.0, 5.0, 12)
        values = [bias_bound_sq(log, target, 1.0, t) for t in taus]
        assert np.all(np.diff(values) <= 1e-15)


class TestSelectTau:
    def test_single_candidate(self, rng):
        inst = random_instance(rng)
        log = inst.sample_log(10, seed=8)
        trace = select_tau(log, inst.target_policy(), ZeroModel(), 1.0, [1.5])
        assert trace.chosen_tau == 1.5

    def test_matches_exhaustive_scan(self, rng):
        inst = random_instance(rng)
        log = inst.sample_log(30, seed=9)
        target = inst.target_policy()
        model = TabularRewardModel(rng.uniform(0, 1, inst.mean_reward.shape), inst.reward_cap)
        taus = threshold_grid(log, target, 21)
        trace = select_tau(log, target, model, 1.0, taus)
        objective = np.array(
            [
                var_hat(log, target, model, t) + bias_bound_sq(log, target, 1.0, t)
                for t in taus
            ]
        )
        assert trace.chosen_index == int(np.argmin(objective))
        np.testing.assert_allclose(trace.objective, objective, rtol=1e-12)

    def test_tie_breaks_to_smallest(self):
        log = single_context_log([0.5, 0.5])
        target = TablePolicy(np.ones((1, 1)))
        # rho is identically 1: every tau >= 1 gives the same objective
        trace = select_tau(log, target, ZeroModel(), 1.0, [1.0, 2.0, 3.0])
        assert trace.chosen_tau == 1.0

    def test_interior_choice_on_engineered_log(self):
        # One huge-weight record makes the variance blow up at large tau,
        # while tau = smallest weight leaves full imputation-mass bias.
        m = 30
        target_rows = np.tile(np.array([[0.9, 0.1]]), (m, 1))
        logging_rows = np.tile(np.array([[0.9, 0.1]]), (m, 1))
        target_rows[0] = [0.995, 0.005]
        logging_rows[0] = [0.005, 0.995]
        rewards = np.zeros(m)
        rewards[0] = 1.0
        log = BanditLog(
            features=np.arange(m, dtype=float)[:, None],
            actions=np.zeros(m, dtype=int),
            rewards=rewards,
            logging_probs=logging_rows[:, 0],
            num_actions=2,
            logging_policy=TablePolicy(logging_rows),
        )
        target = TablePolicy(target_rows)
        taus = threshold_grid(log, target, 21)
        trace = select_tau(log, target, ZeroModel(), 1.0, taus)
        assert 0 < trace.chosen_index < len(taus) - 1

    def test_piecewise_constant_between_breakpoints(self, rng):
        inst = random_instance(rng)
        log = inst.sample_log(20, seed=10)
        target = inst.target_policy()
        model = TabularRewardModel(rng.uniform(0, 1, inst.mean_reward.shape), inst.reward_cap)
        rho_all = prepare(log, target, need_all_actions=True).rho_all
        level = np.unique(rho_all)
        for left, right in zip(level[:-2], level[1:-1]):
            mid = 0.5 * (left + right)
            assert var_hat(log, target, model, left) == var_hat(log, target, model, mid)
            assert bias_bound_sq(log, target, 1.0, left) == bias_bound_sq(log, target, 1.0, mid)

    def test_chosen_no_worse_than_endpoints(self, rng):
        for _ in range(10):
            inst = random_instance(rng)
            log = inst.sample_log(25, seed=int(rng.integers(2**31)))
            target = inst.target_policy()
            model = TabularRewardModel(rng.uniform(0, 1, inst.mean_reward.shape), inst.reward_cap)
            taus = threshold_grid(log, target, 21)
            trace = select_tau(log, target, model, 1.0, taus)
            chosen = trace.objective[trace.chosen_index]
            assert chosen <= trace.objective[0] + 1e-15
            assert chosen <= trace.objective[-1] + 1e-15

    def test_chosen_no_worse_than_dm_and_ips_extremes(self):
        # the objective at the selected threshold also beats the values at
        # tau = 0 (all imputation) and tau = max weight (no imputation)
        from opeval.instances import instance_4x3, instance_5x3
        from opeval.seeding import mix64

        for i, inst in enumerate((instance_5x3(), instance_4x3())):
            target = inst.target_policy()
            model = TabularRewardModel(
                np.clip(inst.mean_reward + 0.2, 0.0, 1.0), inst.reward_cap
            )
            for j in range(5):
                log = inst.sample_log(60, seed=mix64(123, i, j))
                taus = threshold_grid(log, target, 21)
                trace = select_tau(log, target, model, 1.0, taus)
                chosen = trace.objective[trace.chosen_index]
                rho_max = float(prepare(log, target, need_all_actions=True).rho_all.max())
                for extreme in (0.0, rho_max):
                    objective = var_hat(log, target, model, extreme) + bias_bound_sq(
                        log, target, 1.0, extreme
                    )
                    assert chosen <= objective + 1e-15

    def test_rejects_unsorted(self, rng):
        inst = random_instance(rng)
        log = inst.sample_log(5, seed=11)
        with pytest.raises(ValueError):
            select_tau(log, inst.target_policy(), ZeroModel(), 1.0, [2.0, 1.0])


class TestMagic:
    def test_single_candidate_is_switch(self, rng):
        inst = random_instance(rng)
        log = inst.sample_log(20, seed=12)
        target = inst.target_policy()
        model = TabularRewardModel(rng.uniform(0, 1, inst.mean_reward.shape), inst.reward_cap)
        report = magic_combine(log, target, model, [1.3])
        assert report.value == pytest.approx(
            switch_estimate(log, target, model, 1.3).value, abs=1e-12
        )

    def test_identical_columns_degenerate(self, rng):
        inst = random_instance(rng)
        log = inst.sample_log(20, seed=13)
        target = inst.target_policy()
        model = TabularRewardModel(rng.uniform(0, 1, inst.mean_reward.shape), inst.reward_cap)
        report = magic_combine(log, target, model, [2.0, 2.0])
        assert report.value == pytest.approx(
            switch_estimate(log, target, model, 2.0).value, abs=1e-12
        )

    def test_no_worse_than_any_vertex(self, rng):
        for _ in range(5):
            inst = random_instance(rng)
            log = inst.sample_log(25, seed=int(rng.integers(2**31)))
            target = inst.target_policy()
            model = TabularRewardModel(rng.uniform(0, 1, inst.mean_reward.shape), inst.reward_cap)
            taus = threshold_grid(log, target, 11)
            res = magic_details(log, target, model, taus)
            quad = res.covariance + np.outer(res.bias_proxy, res.bias_proxy)
            vertex_best = min(float(quad[j, j]) for j in range(len(taus)))
            assert res.objective <= vertex_best + 1e-8
            assert res.weights.min() >= -1e-12
            assert res.weights.sum() == pytest.approx(1.0, abs=1e-9)
