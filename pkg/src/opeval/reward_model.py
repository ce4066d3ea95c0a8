"""Trainable reward and policy models: regularized logistic regression.

Two modes share one weight layout (one row [w, b] per action, intercept
last):

* reward mode: an independent binary logistic regressor per action, each
  fit only on the records where that action was taken.  Actions never
  observed keep the zero row, i.e. the constant prediction 0.5.
* policy mode: one multinomial softmax regressor over all classes.

Training is full-batch gradient descent on the mean loss plus an L2 penalty
on the non-intercept weights.  The step halves whenever a step would
increase the loss (the step is rejected), so the recorded loss trace is
nonincreasing and the whole procedure is deterministic: identical data,
config and seed give bit-identical weights.  Features are used raw by
default so ingestion stays bit-reproducible; standardization is opt-in.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import BanditLog, OpevalError, Policy
from .estimators import EstimateReport, RewardModel, dr


class NonBinaryRewardError(OpevalError, ValueError):
    """Reward-model training requires rewards in {0, 1}."""


class EmptyTrainingDataError(OpevalError, ValueError):
    """No examples to fit."""


@dataclass(frozen=True)
class TrainerConfig:
    l2: float = 1e-4
    step_size: float = 0.5
    iterations: int = 500
    standardize: bool = False


def _with_intercept(X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.hstack([X, np.ones((X.shape[0], 1))])


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def binary_logistic_loss_grad(w: np.ndarray, X1: np.ndarray, y: np.ndarray, l2: float):
    """Mean log loss of sigmoid(X1 @ w) plus (l2/2)|w[:-1]|^2, and its gradient.

    ``X1`` already carries the intercept column; the intercept (last entry
    of ``w``) is not penalized.
    """
    n = X1.shape[0]
    s = X1 @ w
    loss = float(np.mean(np.logaddexp(0.0, s) - y * s))
    reg = w.copy()
    reg[-1] = 0.0
    loss += 0.5 * l2 * float(reg @ reg)
    grad = X1.T @ (_sigmoid(s) - y) / n + l2 * reg
    return loss, grad


def softmax_probs(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_loss_grad(W: np.ndarray, X1: np.ndarray, labels: np.ndarray, l2: float):
    """Mean cross-entropy of softmax(X1 @ W.T) plus (l2/2)|W[:, :-1]|^2."""
    n = X1.shape[0]
    P = softmax_probs(X1 @ W.T)
    picked = P[np.arange(n), labels]
    loss = float(-np.mean(np.log(np.maximum(picked, 1e-300))))
    reg = W.copy()
    reg[:, -1] = 0.0
    loss += 0.5 * l2 * float(np.sum(reg * reg))
    Y = np.zeros_like(P)
    Y[np.arange(n), labels] = 1.0
    grad = (P - Y).T @ X1 / n + l2 * reg
    return loss, grad


@dataclass(frozen=True)
class LogisticModel:
    """Trained weights plus enough context to reproduce predictions exactly."""

    mode: str                    # "reward" or "policy"
    weights: np.ndarray          # (K, d + 1), intercept last
    config: TrainerConfig
    feature_mean: Optional[np.ndarray] = None
    feature_scale: Optional[np.ndarray] = None
    loss_history: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        W = np.asarray(self.weights, dtype=float)
        if W.ndim != 2 or not np.all(np.isfinite(W)):
            raise ValueError("weights must be a finite (K, d+1) matrix")
        W = W.copy()
        W.setflags(write=False)
        object.__setattr__(self, "weights", W)
        if self.mode not in ("reward", "policy"):
            raise ValueError(f"unknown mode {self.mode!r}")

    @property
    def num_actions(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1] - 1

    def _design(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.feature_mean is not None:
            X = (X - self.feature_mean) / self.feature_scale
        return _with_intercept(X)

    def scores(self, X: np.ndarray) -> np.ndarray:
        return self._design(X) @ self.weights.T

    def predict_reward_matrix(self, X: np.ndarray) -> np.ndarray:
        if self.mode != "reward":
            raise ValueError("not a reward model")
        return _sigmoid(self.scores(X))

    def class_probs(self, X: np.ndarray) -> np.ndarray:
        if self.mode != "policy":
            raise ValueError("not a policy model")
        return softmax_probs(self.scores(X))

    def as_softmax_policy(self) -> "SoftmaxPolicy":
        return SoftmaxPolicy(self)

    def as_argmax_policy(self) -> "ArgmaxPolicy":
        return ArgmaxPolicy(self)

    def save(self, path) -> None:
        """Plain text, weights at 17 significant digits (round-trip exact)."""
        lines = [
            "opeval-model v1",
            f"mode: {self.mode}",
            f"num_actions: {self.num_actions}",
            f"dim: {self.dim}",
            f"l2: {self.config.l2!r}",
            f"step_size: {self.config.step_size!r}",
            f"iterations: {self.config.iterations}",
            f"standardize: {self.config.standardize}",
        ]
        for name, arr in (("feature_mean", self.feature_mean), ("feature_scale", self.feature_scale)):
            if arr is None:
                lines.append(f"{name}: none")
            else:
                lines.append(f"{name}: " + " ".join(f"{v:.17g}" for v in arr))
        lines.append("weights:")
        for row in self.weights:
            lines.append(" ".join(f"{v:.17g}" for v in row))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    @staticmethod
    def load(path) -> "LogisticModel":
        with open(path) as fh:
            lines = [ln.rstrip("\n") for ln in fh]
        if not lines or lines[0] != "opeval-model v1":
            raise ValueError(f"{path} is not an opeval model file")
        header = {}
        row_start = None
        for i, ln in enumerate(lines[1:], start=1):
            if ln == "weights:":
                row_start = i + 1
                break
            key, _, val = ln.partition(": ")
            header[key] = val
        if row_start is None:
            raise ValueError("model file has no weights section")
        weights = np.array([[float(v) for v in ln.split()] for ln in lines[row_start:] if ln.strip()])

        def _vec(key):
            val = header[key]
            return None if val == "none" else np.array([float(v) for v in val.split()])

        config = TrainerConfig(
            l2=float(header["l2"]),
            step_size=float(header["step_size"]),
            iterations=int(header["iterations"]),
            standardize=header["standardize"] == "True",
        )
        return LogisticModel(
            mode=header["mode"],
            weights=weights,
            config=config,
            feature_mean=_vec("feature_mean"),
            feature_scale=_vec("feature_scale"),
        )


class SoftmaxPolicy(Policy):
    """Sample according to a policy model's class probabilities."""

    def __init__(self, model: LogisticModel):
        if model.mode != "policy":
            raise ValueError("SoftmaxPolicy needs a policy-mode model")
        self.model = model

    def action_probs(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        probs = self.model.class_probs(np.atleast_2d(features))
        return probs[0] if features.ndim == 1 else probs


class ArgmaxPolicy(Policy):
    """Point mass on the model's highest-scoring class (ties to the smallest)."""

    def __init__(self, model: LogisticModel):
        if model.mode != "policy":
            raise ValueError("ArgmaxPolicy needs a policy-mode model")
        self.model = model

    def action_probs(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        scores = self.model.scores(np.atleast_2d(features))
        out = np.zeros_like(scores)
        out[np.arange(scores.shape[0]), np.argmax(scores, axis=1)] = 1.0
        return out[0] if features.ndim == 1 else out


class LogisticRewardModel(RewardModel):
    """RewardModel adapter around a reward-mode LogisticModel."""

    def __init__(self, model: LogisticModel, cap: float = 1.0):
        if model.mode != "reward":
            raise ValueError("LogisticRewardModel needs a reward-mode model")
        self.model = model
        self.cap = float(cap)

    def predict_matrix(self, features, num_actions):
        pred = self.model.predict_reward_matrix(features)
        if pred.shape[1] != num_actions:
            raise ValueError(
                f"model covers {pred.shape[1]} actions, log has {num_actions}"
            )
        return pred

    def cap_matrix(self, features, num_actions):
        return np.full((np.atleast_2d(features).shape[0], num_actions), self.cap)


def predict_reward(model: LogisticModel, x, a: int, cap: float) -> float:
    """Clipped sigmoid prediction for one (features, action) pair."""
    p = float(model.predict_reward_matrix(np.atleast_2d(x))[0, a])
    return float(np.clip(p, 0.0, cap))


def _standardization(X: np.ndarray):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0.0] = 1.0
    return mean, scale


def train_reward_model(log: BanditLog, config: TrainerConfig = TrainerConfig()) -> LogisticModel:
    """Per-action binary logistic regression on the logged rewards.

    Each action's regressor sees only the records where that action was
    taken; actions with no records keep the zero row (prediction 0.5).
    """
    r = log.rewards
    if not np.all((r == 0.0) | (r == 1.0)):
        raise NonBinaryRewardError("logistic reward training needs rewards in {0, 1}")
    X = log.features
    mean = scale = None
    if config.standardize:
        mean, scale = _standardization(X)
        X = (X - mean) / scale
    X1 = _with_intercept(X)
    n, d1 = X1.shape
    K = log.num_actions

    member = np.zeros((n, K))
    member[np.arange(n), log.actions] = 1.0
    counts = member.sum(axis=0)
    denom = np.maximum(counts, 1.0)
    y = r[:, None]

    W = np.zeros((K, d1))
    steps = np.full(K, config.step_size)
    reg_mask = np.ones(d1)
    reg_mask[-1] = 0.0

    def losses_of(Wc):
        S = X1 @ Wc.T
        ll = np.logaddexp(0.0, S) - y * S
        data = (member * ll).sum(axis=0) / denom
        return data + 0.5 * config.l2 * np.sum((Wc * reg_mask) ** 2, axis=1)

    cur = losses_of(W)
    history = [cur.copy()]
    for _ in range(config.iterations):
        S = X1 @ W.T
        G = X1.T @ (member * (_sigmoid(S) - y)) / denom
        G = G.T + config.l2 * (W * reg_mask)
        cand = W - steps[:, None] * G
        cand_loss = losses_of(cand)
        accept = cand_loss <= cur
        W = np.where(accept[:, None], cand, W)
        cur = np.where(accept, cand_loss, cur)
        steps = np.where(accept, steps, steps * 0.5)
        history.append(cur.copy())

    return LogisticModel(
        mode="reward",
        weights=W,
        config=config,
        feature_mean=mean,
        feature_scale=scale,
        loss_history=np.asarray(history),
    )


def train_policy_model(features, labels, config: TrainerConfig = TrainerConfig(),
                       num_classes: int | None = None) -> LogisticModel:
    """Multinomial softmax regression on (features, class label) pairs."""
    X = np.atleast_2d(np.asarray(features, dtype=float))
    labels = np.asarray(labels, dtype=np.int64)
    if X.shape[0] == 0:
        raise EmptyTrainingDataError("no training examples")
    if labels.shape != (X.shape[0],):
        raise ValueError("labels misaligned with features")
    K = int(labels.max()) + 1 if num_classes is None else int(num_classes)
    if np.any((labels < 0) | (labels >= K)):
        raise ValueError("labels outside [0, num_classes)")
    mean = scale = None
    if config.standardize:
        mean, scale = _standardization(X)
        X = (X - mean) / scale
    X1 = _with_intercept(X)

    W = np.zeros((K, X1.shape[1]))
    step = config.step_size
    cur, _ = softmax_loss_grad(W, X1, labels, config.l2)
    history = [cur]
    for _ in range(config.iterations):
        _, G = softmax_loss_grad(W, X1, labels, config.l2)
        cand = W - step * G
        cand_loss, _ = softmax_loss_grad(cand, X1, labels, config.l2)
        if cand_loss <= cur:
            W = cand
            cur = cand_loss
        else:
            step *= 0.5
        history.append(cur)

    return LogisticModel(
        mode="policy",
        weights=W,
        config=config,
        feature_mean=mean,
        feature_scale=scale,
        loss_history=np.asarray(history),
    )


@dataclass(frozen=True)
class CrossFitPair:
    """Two-fold split with each model trained on the opposite fold.

    A record in fold f is evaluated by ``model_f``, which never saw it.
    """

    fold_assignment: np.ndarray
    model_0: LogisticModel
    model_1: LogisticModel

    def evaluation_model(self, cap: float = 1.0) -> "CrossFitRewardModel":
        return CrossFitRewardModel(self, cap=cap)


class CrossFitRewardModel(RewardModel):
    """Routes each row of the training log to the model not trained on it.

    Index-aligned: predictions are only defined for feature matrices with
    exactly one row per record of the log the pair was built from, in the
    original record order.
    """

    def __init__(self, pair: CrossFitPair, cap: float = 1.0):
        self.pair = pair
        self.cap = float(cap)

    def predict_matrix(self, features, num_actions):
        X = np.atleast_2d(np.asarray(features, dtype=float))
        fold = self.pair.fold_assignment
        if X.shape[0] != fold.shape[0]:
            raise ValueError(
                "cross-fit model is index-aligned to its training log "
                f"({fold.shape[0]} records), got {X.shape[0]} rows"
            )
        p0 = self.pair.model_0.predict_reward_matrix(X)
        p1 = self.pair.model_1.predict_reward_matrix(X)
        return np.where(fold[:, None] == 0, p0, p1)

    def cap_matrix(self, features, num_actions):
        return np.full((np.atleast_2d(features).shape[0], num_actions), self.cap)


def cross_fit(log: BanditLog, config: TrainerConfig = TrainerConfig(), seed: int = 0) -> CrossFitPair:
    """Seeded two-fold split (sizes differ by at most one) plus two fits."""
    n = len(log)
    if n < 2:
        raise ValueError("cross-fitting needs at least two records")
    perm = np.random.default_rng(seed).permutation(n)
    fold = np.zeros(n, dtype=np.int64)
    fold[perm[n // 2 :]] = 1
    model_0 = train_reward_model(log.subset(fold == 1), config)
    model_1 = train_reward_model(log.subset(fold == 0), config)
    return CrossFitPair(fold_assignment=fold, model_0=model_0, model_1=model_1)


def cross_fitted_dr(log: BanditLog, target: Policy, pair: CrossFitPair, cap: float = 1.0) -> EstimateReport:
    """Average of the two fold-restricted doubly robust estimates."""
    values = []
    for f, model in ((0, pair.model_0), (1, pair.model_1)):
        sub = log.subset(pair.fold_assignment == f)
        values.append(dr(sub, target, LogisticRewardModel(model, cap=cap)).value)
    return EstimateReport(value=float((values[0] + values[1]) / 2.0))
