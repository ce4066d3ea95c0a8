"""Multiclass-to-bandit simulation substrate.

A labeled multiclass dataset becomes a contextual bandit problem by treating
labels as actions: choosing the correct label pays 1, anything else pays 0.
The uniform distribution over the dataset rows stands in for the population,
so the target policy's true value is an exact finite sum, never an estimate.

The logging policy is built to disagree with the target on purpose: the
target is the hard argmax of a classifier fit on the full data, while the
logger samples from the softmax of a classifier fit on a covariate-shifted
subsample.  Softmax probabilities are strictly positive, so every logged
dataset satisfies absolute continuity by construction.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .core import BanditLog, Policy, _sample_rows
from .reward_model import TrainerConfig, train_policy_model


@dataclass(frozen=True)
class MulticlassDataset:
    """Feature matrix plus contiguous integer class labels."""

    features: np.ndarray
    labels: np.ndarray
    name: str

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.features, dtype=float))
        y = np.asarray(self.labels, dtype=np.int64)
        if not np.all(np.isfinite(X)):
            raise ValueError("features contain NaN or Inf")
        if y.shape != (X.shape[0],):
            raise ValueError("labels misaligned with features")
        if y.min(initial=0) < 0:
            raise ValueError("negative class label")
        k = int(y.max()) + 1 if y.size else 0
        present = np.unique(y)
        if len(present) != k:
            missing = sorted(set(range(k)) - set(present.tolist()))
            raise ValueError(
                f"class indices must be contiguous from 0; missing {missing}"
            )
        if X.shape[0] < k:
            raise ValueError("need at least one row per class")
        for name, arr in (("features", X), ("labels", y)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def num_rows(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1


def load_csv(path, name: str | None = None) -> MulticlassDataset:
    """Read a dataset from CSV with columns f0..f{d-1} and label."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if "label" not in header:
            raise ValueError(f"{path}: no 'label' column in header {header}")
        d = len(header) - 1
        expected = [f"f{j}" for j in range(d)]
        feature_cols = [h for h in header if h != "label"]
        if feature_cols != expected:
            raise ValueError(f"{path}: feature columns must be f0..f{d-1}, got {feature_cols}")
        col_index = {h: i for i, h in enumerate(header)}
        feats, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                feats.append([float(row[col_index[c]]) for c in expected])
                labels.append(int(row[col_index["label"]]))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
        if not feats:
            raise ValueError(f"{path}: no data rows")
    X = np.asarray(feats)
    if not np.all(np.isfinite(X)):
        bad = int(np.nonzero(~np.isfinite(X).all(axis=1))[0][0])
        raise ValueError(f"{path}:{bad + 2}: non-finite feature value")
    return MulticlassDataset(
        features=X,
        labels=np.asarray(labels),
        name=name if name is not None else str(path),
    )


def save_csv(data: MulticlassDataset, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{j}" for j in range(data.dim)] + ["label"])
        for x, y in zip(data.features, data.labels):
            writer.writerow([repr(float(v)) for v in x] + [int(y)])


def synth_dataset(
    num_classes: int,
    dim: int,
    per_class: int,
    separation: float,
    seed: int,
    name: str | None = None,
) -> MulticlassDataset:
    """Gaussian class clusters with unit covariance and mean norm = separation."""
    if num_classes < 2 or dim < 1 or per_class < 1:
        raise ValueError("need num_classes >= 2, dim >= 1, per_class >= 1")
    rng = np.random.default_rng(seed)
    means = rng.standard_normal((num_classes, dim))
    norms = np.linalg.norm(means, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    means = means / norms * float(separation)
    labels = np.repeat(np.arange(num_classes), per_class)
    features = means[labels] + rng.standard_normal((labels.shape[0], dim))
    return MulticlassDataset(
        features=features,
        labels=labels,
        name=name if name is not None else f"synth-k{num_classes}-d{dim}-s{seed}",
    )


def covariate_shift_subsample(data: MulticlassDataset, seed: int) -> MulticlassDataset:
    """Thin the dataset along a random direction to shift its feature law.

    Row x is kept with probability sigmoid(2 * w.(x - mean) / sd), where w is
    a seeded random unit direction and sd normalizes the projection.  One
    uniformly chosen row per otherwise-lost class is forced back in so every
    class stays represented.
    """
    if data.num_rows < 10:
        raise ValueError("need at least 10 rows to subsample")
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(data.dim)
    norm = np.linalg.norm(w)
    if norm == 0.0:
        w = np.ones(data.dim)
        norm = np.linalg.norm(w)
    w = w / norm
    proj = (data.features - data.features.mean(axis=0)) @ w
    sd = proj.std()
    if sd == 0.0:
        sd = 1.0
    keep_prob = 1.0 / (1.0 + np.exp(-2.0 * proj / sd))
    keep = rng.random(data.num_rows) < keep_prob
    for cls in range(data.num_classes):
        rows = np.nonzero(data.labels == cls)[0]
        if not keep[rows].any():
            keep[rows[rng.integers(len(rows))]] = True
    return MulticlassDataset(
        features=data.features[keep],
        labels=data.labels[keep],
        name=f"{data.name}-shift{seed}",
    )


def make_policies(
    data: MulticlassDataset,
    config: TrainerConfig = TrainerConfig(),
    seed: int = 0,
):
    """Target and logging policies for a dataset.

    Target: point mass on the argmax class of a softmax model trained on the
    full data (ties to the smallest class index).  Logging: the softmax
    probabilities of a model trained on a covariate-shifted subsample.
    """
    target_model = train_policy_model(
        data.features, data.labels, config, num_classes=data.num_classes
    )
    shifted = covariate_shift_subsample(data, seed)
    logging_model = train_policy_model(
        shifted.features, shifted.labels, config, num_classes=data.num_classes
    )
    return target_model.as_argmax_policy(), logging_model.as_softmax_policy()


@dataclass(frozen=True)
class RewardChannel:
    """Deterministic: reward is 1 iff the action matches the label.
    Noisy: the deterministic reward with probability 0.5, else a fair coin."""

    kind: str

    def __post_init__(self):
        if self.kind not in ("deterministic", "noisy"):
            raise ValueError(f"unknown reward channel {self.kind!r}")

    def value_from_deterministic(self, v_det: float) -> float:
        return v_det if self.kind == "deterministic" else 0.5 * v_det + 0.25


DETERMINISTIC = RewardChannel("deterministic")
NOISY = RewardChannel("noisy")


def simulate_log(
    data: MulticlassDataset,
    logging: Policy,
    channel: RewardChannel,
    n: int,
    seed: int,
) -> BanditLog:
    """Draw n interactions: rows uniformly with replacement, actions from the
    logging policy, rewards from the channel.  The recorded propensity is the
    logging policy's probability of the logged action, exactly."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    rows = rng.integers(0, data.num_rows, size=n)
    X = data.features[rows]
    k = data.num_classes
    M = logging.prob_matrix(X, k)
    actions = _sample_rows(M, np.arange(n), rng.random(n))
    correct = (actions == data.labels[rows]).astype(float)
    if channel.kind == "deterministic":
        rewards = correct
    else:
        reveal = rng.random(n) < 0.5
        coin = (rng.random(n) < 0.5).astype(float)
        rewards = np.where(reveal, correct, coin)
    return BanditLog(
        features=X,
        actions=actions,
        rewards=rewards,
        logging_probs=M[np.arange(n), actions],
        num_actions=k,
        logging_policy=logging,
    )


def ground_truth_value(data: MulticlassDataset, target: Policy, channel: RewardChannel) -> float:
    """Exact target value under the uniform population over dataset rows."""
    P = target.prob_matrix(data.features, data.num_classes)
    v_det = float(np.mean(P[np.arange(data.num_rows), data.labels]))
    return channel.value_from_deterministic(v_det)
