import numpy as np
import pytest

from opeval.core import BanditLog, TablePolicy
from opeval.estimators import dr
from opeval.reward_model import (
    CrossFitRewardModel,
    LogisticModel,
    LogisticRewardModel,
    NonBinaryRewardError,
    TrainerConfig,
    binary_logistic_loss_grad,
    cross_fit,
    cross_fitted_dr,
    predict_reward,
    softmax_loss_grad,
    train_policy_model,
    train_reward_model,
)

from conftest import random_instance


def binary_log(rng, n=80, num_actions=3, dim=4):
    X = rng.standard_normal((n, dim))
    actions = rng.integers(0, num_actions, n)
    logit = X[:, 0] + 0.5 * actions
    rewards = (rng.random(n) < 1.0 / (1.0 + np.exp(-logit))).astype(float)
    return BanditLog(
        features=X,
        actions=actions,
        rewards=rewards,
        logging_probs=np.full(n, 1.0 / num_actions),
        num_actions=num_actions,
    )


class TestRewardTrainer:
    def test_constant_zero_labels_predict_low(self, rng):
        X = rng.standard_normal((60, 3))
        log = BanditLog(
            features=X,
            actions=np.zeros(60, dtype=int),
            rewards=np.zeros(60),
            logging_probs=np.full(60, 0.5),
            num_actions=2,
        )
        model = train_reward_model(log)
        preds = model.predict_reward_matrix(X)[:, 0]
        assert np.all(preds <= 0.1)

    def test_loss_nonincreasing_on_separable_data(self, rng):
        X = np.vstack([rng.standard_normal((40, 2)) + 4.0, rng.standard_normal((40, 2)) - 4.0])
        rewards = np.concatenate([np.ones(40), np.zeros(40)])
        log = BanditLog(
            features=X,
            actions=np.zeros(80, dtype=int),
            rewards=rewards,
            logging_probs=np.full(80, 1.0),
            num_actions=1,
        )
        model = train_reward_model(log)
        diffs = np.diff(model.loss_history[:, 0])
        assert np.all(diffs <= 1e-12)
        assert model.loss_history[-1, 0] < model.loss_history[0, 0]

    def test_unobserved_action_predicts_half(self, rng):
        log = binary_log(rng, num_actions=3)
        observed = set(log.actions.tolist())
        log = BanditLog(
            features=log.features,
            actions=log.actions,
            rewards=log.rewards,
            logging_probs=log.logging_probs,
            num_actions=5,  # actions 3, 4 never occur
        )
        model = train_reward_model(log)
        preds = model.predict_reward_matrix(log.features)
        for a in (3, 4):
            assert a not in observed
            np.testing.assert_array_equal(preds[:, a], 0.5)

    def test_non_binary_rewards_rejected(self, rng):
        inst = random_instance(rng)
        log = inst.sample_log(20, seed=1)  # gaussian rewards
        with pytest.raises(NonBinaryRewardError):
            train_reward_model(log)

    def test_deterministic(self, rng):
        log = binary_log(rng)
        a = train_reward_model(log)
        b = train_reward_model(log)
        np.testing.assert_array_equal(a.weights, b.weights)


class TestPolicyTrainer:
    def test_single_class_saturates(self, rng):
        X = 5.0 + 0.1 * rng.standard_normal((50, 4))
        labels = np.zeros(50, dtype=int)
        model = train_policy_model(X, labels, num_classes=2)
        probs = model.class_probs(X)
        assert np.all(probs[:, 0] > 1.0 - 1e-3)

    def test_duplicated_dataset_matches(self, rng):
        # the ridge term keeps the softmax shift direction contracting fast
        # enough that per-iteration float noise cannot pile up past 1e-9
        X = rng.standard_normal((40, 3))
        labels = rng.integers(0, 3, 40)
        config = TrainerConfig(l2=0.02)
        base = train_policy_model(X, labels, config)
        doubled = train_policy_model(
            np.vstack([X, X]), np.concatenate([labels, labels]), config
        )
        np.testing.assert_allclose(base.weights, doubled.weights, atol=1e-9)

    def test_mirrored_data_zero_intercepts(self, rng):
        X = rng.standard_normal((30, 4))
        features = np.vstack([X, -X])
        labels = np.concatenate([np.zeros(30, dtype=int), np.ones(30, dtype=int)])
        model = train_policy_model(features, labels)
        assert np.all(np.abs(model.weights[:, -1]) <= 1e-6)

    def test_empty_input_rejected(self):
        from opeval.reward_model import EmptyTrainingDataError

        with pytest.raises(EmptyTrainingDataError):
            train_policy_model(np.zeros((0, 2)), np.array([], dtype=int))


class TestGradients:
    def test_binary_gradient_matches_finite_differences(self, rng):
        X1 = np.hstack([rng.standard_normal((30, 4)), np.ones((30, 1))])
        y = (rng.random(30) < 0.5).astype(float)
        for _ in range(10):
            w = rng.standard_normal(5)
            _, grad = binary_logistic_loss_grad(w, X1, y, l2=1e-3)
            fd = np.zeros_like(w)
            h = 1e-6
            for j in range(len(w)):
                up, down = w.copy(), w.copy()
                up[j] += h
                down[j] -= h
                fd[j] = (
                    binary_logistic_loss_grad(up, X1, y, 1e-3)[0]
                    - binary_logistic_loss_grad(down, X1, y, 1e-3)[0]
                ) / (2 * h)
            assert np.linalg.norm(grad - fd) <= 1e-5 * max(np.linalg.norm(fd), 1.0)

    def test_softmax_gradient_matches_finite_differences(self, rng):
        X1 = np.hstack([rng.standard_normal((25, 3)), np.ones((25, 1))])
        labels = rng.integers(0, 3, 25)
        for _ in range(10):
            W = rng.standard_normal((3, 4))
            _, grad = softmax_loss_grad(W, X1, labels, l2=1e-3)
            fd = np.zeros_like(W)
            h = 1e-6
            for i in range(W.shape[0]):
                for j in range(W.shape[1]):
                    up, down = W.copy(), W.copy()
                    up[i, j] += h
                    down[i, j] -= h
                    fd[i, j] = (
                        softmax_loss_grad(up, X1, labels, 1e-3)[0]
                        - softmax_loss_grad(down, X1, labels, 1e-3)[0]
                    ) / (2 * h)
            assert np.linalg.norm(grad - fd) <= 1e-5 * max(np.linalg.norm(fd), 1.0)


class TestPredictReward:
    def test_zero_weights_give_half(self):
        model = LogisticModel(mode="reward", weights=np.zeros((2, 4)), config=TrainerConfig())
        assert predict_reward(model, np.ones(3), 0, cap=1.0) == 0.5

    def test_cap_clips(self):
        weights = np.zeros((1, 2))
        weights[0, 0] = 10.0
        model = LogisticModel(mode="reward", weights=weights, config=TrainerConfig())
        assert predict_reward(model, np.array([1.0]), 0, cap=0.3) == 0.3

    def test_log_three_quarters(self):
        weights = np.zeros((1, 2))
        weights[0, 1] = np.log(3.0)   # intercept only
        model = LogisticModel(mode="reward", weights=weights, config=TrainerConfig())
        assert predict_reward(model, np.zeros(1), 0, cap=1.0) == pytest.approx(0.75)


class TestModelFile:
    def test_round_trip_exact(self, rng, tmp_path):
        log = binary_log(rng)
        model = train_reward_model(log)
        path = tmp_path / "model.txt"
        model.save(path)
        loaded = LogisticModel.load(path)
        np.testing.assert_array_equal(loaded.weights, model.weights)
        assert loaded.mode == model.mode
        assert loaded.config == model.config

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "junk.txt"
        path.write_text("not a model\n")
        with pytest.raises(ValueError):
            LogisticModel.load(path)


class TestCrossFit:
    def test_two_records_split_evenly(self, rng):
        log = binary_log(rng, n=2, num_actions=2)
        pair = cross_fit(log, seed=5)
        assert sorted(pair.fold_assignment.tolist()) == [0, 1]

    def test_same_seed_same_folds(self, rng):
        log = binary_log(rng, n=31)
        a = cross_fit(log, seed=9)
        b = cross_fit(log, seed=9)
        np.testing.assert_array_equal(a.fold_assignment, b.fold_assignment)

    def test_fold_sizes_differ_by_at_most_one(self, rng):
        for n in (2, 5, 10, 31):
            log = binary_log(rng, n=n)
            pair = cross_fit(log, seed=3)
            sizes = np.bincount(pair.fold_assignment, minlength=2)
            assert abs(int(sizes[0]) - int(sizes[1])) <= 1

    def test_average_of_fold_restricted_estimates(self, rng):
        inst = random_instance(rng, num_actions=3)
        # binary rewards so the trainer applies: use a bernoulli variant
        bern = inst.with_mean_reward(
            np.clip(inst.mean_reward, 0.05, 0.95),
            noise_sd=np.zeros_like(inst.noise_sd),
            reward_dist="bernoulli",
        )
        log = bern.sample_log(60, seed=21)
        target = bern.target_policy()
        pair = cross_fit(log, seed=7)
        combined = cross_fitted_dr(log, target, pair)
        parts = []
        for f, model in ((0, pair.model_0), (1, pair.model_1)):
            sub = log.subset(pair.fold_assignment == f)
            parts.append(dr(sub, target, LogisticRewardModel(model)).value)
        assert combined.value == pytest.approx(np.mean(parts), abs=1e-12)

    def test_evaluation_model_routes_by_fold(self, rng):
        log = binary_log(rng, n=20)
        pair = cross_fit(log, seed=11)
        routed = pair.evaluation_model()
        preds = routed.predict_matrix(log.features, log.num_actions)
        p0 = pair.model_0.predict_reward_matrix(log.features)
        p1 = pair.model_1.predict_reward_matrix(log.features)
        for i, f in enumerate(pair.fold_assignment):
            np.testing.assert_array_equal(preds[i], (p0 if f == 0 else p1)[i])

    def test_routed_model_is_index_aligned(self, rng):
        log = binary_log(rng, n=20)
        pair = cross_fit(log, seed=11)
        with pytest.raises(ValueError, match="index-aligned"):
            CrossFitRewardModel(pair).predict_matrix(log.features[:5], log.num_actions)
