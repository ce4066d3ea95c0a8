"""Core domain types for logged contextual-bandit data.

A logged interaction is (features, action, reward, propensity of the taken
action under the logging policy).  Estimation always involves two policies:
the logging policy ``mu`` that generated the data and the target policy
``pi`` being evaluated.  Importance weights ``rho = pi/mu`` are computed on
demand from policy probabilities and never stored on records, so a stale
weight can never survive a policy change.

Everything here is immutable after construction and safe to share across
threads.  Probability vectors must sum to one within ``PROB_TOL``; inputs
outside tolerance are rejected rather than silently renormalized.
"""

from __future__ import annotations

import json
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .seeding import CounterStream

PROB_TOL = 1e-9


class OpevalError(Exception):
    """Base class for all package-specific errors."""


class AbsoluteContinuityError(OpevalError, ValueError):
    """Target policy puts mass on an action the logging policy never takes."""


class InvalidProbabilityError(OpevalError, ValueError):
    """A probability vector is negative or does not sum to one."""


class MissingLoggingPolicyError(OpevalError, ValueError):
    """An operation needs per-action propensities but the log carries none."""


class DegenerateNormalizerError(OpevalError, ValueError):
    """A self-normalized estimator's weight total is zero."""


class DegenerateWeightsError(OpevalError, ValueError):
    """No strictly positive importance weight exists to anchor a grid."""


def as_features(values) -> np.ndarray:
    """Validate and return a finite 1-D float feature vector."""
    x = np.asarray(values, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"feature vector must be 1-D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("feature vector contains NaN or Inf")
    return x


def _check_prob_matrix(probs: np.ndarray, context: str) -> np.ndarray:
    probs = np.asarray(probs, dtype=float)
    if probs.ndim != 2:
        raise InvalidProbabilityError(f"{context}: expected 2-D array, got shape {probs.shape}")
    if not np.all(np.isfinite(probs)):
        raise InvalidProbabilityError(f"{context}: non-finite probabilities")
    if np.any(probs < 0):
        raise InvalidProbabilityError(f"{context}: negative probabilities")
    sums = probs.sum(axis=1)
    bad = np.abs(sums - 1.0) > PROB_TOL
    if np.any(bad):
        i = int(np.argmax(bad))
        raise InvalidProbabilityError(
            f"{context}: row {i} sums to {sums[i]!r}, outside 1 +/- {PROB_TOL}"
        )
    return probs


class Policy(ABC):
    """A stochastic policy: features -> probability vector over K actions."""

    @abstractmethod
    def action_probs(self, features: np.ndarray) -> np.ndarray:
        """Map features of shape (d,) to (K,) probabilities, or (n, d) to (n, K)."""

    def prob_matrix(self, features: np.ndarray, num_actions: int) -> np.ndarray:
        """Batched, validated probabilities of shape (n, K)."""
        features = np.asarray(features, dtype=float)
        if features.ndim == 1:
            features = features[None, :]
        probs = np.asarray(self.action_probs(features), dtype=float)
        if probs.ndim == 1:
            probs = probs[None, :]
        if probs.shape != (features.shape[0], num_actions):
            raise InvalidProbabilityError(
                f"policy returned shape {probs.shape}, expected ({features.shape[0]}, {num_actions})"
            )
        return _check_prob_matrix(probs, type(self).__name__)


class TablePolicy(Policy):
    """Policy over a finite context set; features are a single context index."""

    def __init__(self, table):
        self.table = _check_prob_matrix(np.asarray(table, dtype=float), "TablePolicy")
        self.table.setflags(write=False)

    def action_probs(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        idx = features[..., 0].astype(int)
        return self.table[idx]


class UniformPolicy(Policy):
    def __init__(self, num_actions: int):
        self.num_actions = int(num_actions)

    def action_probs(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        n = 1 if features.ndim == 1 else features.shape[0]
        shape = (self.num_actions,) if features.ndim == 1 else (n, self.num_actions)
        return np.full(shape, 1.0 / self.num_actions)


class FunctionPolicy(Policy):
    """Wrap a plain callable ``features -> probability vector``."""

    def __init__(self, fn):
        self.fn = fn

    def action_probs(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=float)
        if features.ndim == 1:
            return np.asarray(self.fn(features), dtype=float)
        return np.stack([np.asarray(self.fn(x), dtype=float) for x in features])


@dataclass(frozen=True)
class LogRecord:
    """One logged interaction.

    ``logging_prob`` is mu(a|x) for the action actually taken.  A value of 0
    is representable so that broken logs can be loaded and inspected, but it
    is a structural violation that :func:`validate_log` reports and that
    estimators refuse to weight against.
    """

    features: np.ndarray
    action: int
    reward: float
    logging_prob: float

    def __post_init__(self):
        object.__setattr__(self, "features", as_features(self.features))
        self.features.setflags(write=False)
        if not np.isfinite(self.reward):
            raise ValueError("reward must be finite")
        if not (0.0 <= self.logging_prob <= 1.0):
            raise ValueError(f"logging_prob {self.logging_prob!r} outside [0, 1]")


@dataclass(frozen=True)
class BanditLog:
    """A columnar collection of logged interactions.

    Arrays are copied, validated and frozen at construction.  The optional
    ``logging_policy`` gives per-action propensities mu(.|x); it is required
    by operations that inspect importance weights of actions other than the
    logged one (threshold grids, switch-style estimators, full validation).
    """

    features: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    logging_probs: np.ndarray
    num_actions: int
    logging_policy: Policy | None = None

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.features, dtype=float))
        a = np.asarray(self.actions, dtype=np.int64)
        r = np.asarray(self.rewards, dtype=float)
        p = np.asarray(self.logging_probs, dtype=float)
        n = X.shape[0]
        if n == 0:
            raise ValueError("bandit log must contain at least one record")
        if not (a.shape == r.shape == p.shape == (n,)):
            raise ValueError("misaligned log columns")
        if self.num_actions < 1:
            raise ValueError("num_actions must be positive")
        if not np.all(np.isfinite(X)):
            raise ValueError("features contain NaN or Inf")
        if not np.all(np.isfinite(r)):
            raise ValueError("rewards contain NaN or Inf")
        if np.any((a < 0) | (a >= self.num_actions)):
            raise ValueError("action index outside [0, num_actions)")
        if np.any(~np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
            raise ValueError("logging_probs outside [0, 1]")
        for name, arr in (("features", X), ("actions", a), ("rewards", r), ("logging_probs", p)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def record(self, i: int) -> LogRecord:
        return LogRecord(
            features=self.features[i],
            action=int(self.actions[i]),
            reward=float(self.rewards[i]),
            logging_prob=float(self.logging_probs[i]),
        )

    @property
    def records(self) -> Iterator[LogRecord]:
        return (self.record(i) for i in range(len(self)))

    @staticmethod
    def from_records(
        records: Sequence[LogRecord], num_actions: int, logging_policy: Policy | None = None
    ) -> "BanditLog":
        return BanditLog(
            features=np.stack([rec.features for rec in records]),
            actions=np.array([rec.action for rec in records]),
            rewards=np.array([rec.reward for rec in records]),
            logging_probs=np.array([rec.logging_prob for rec in records]),
            num_actions=num_actions,
            logging_policy=logging_policy,
        )

    def subset(self, indices) -> "BanditLog":
        """New log holding the selected records (same action space and policy)."""
        idx = np.asarray(indices)
        return BanditLog(
            features=self.features[idx],
            actions=self.actions[idx],
            rewards=self.rewards[idx],
            logging_probs=self.logging_probs[idx],
            num_actions=self.num_actions,
            logging_policy=self.logging_policy,
        )

    def with_logging_policy(self, policy: Policy) -> "BanditLog":
        return BanditLog(
            features=self.features,
            actions=self.actions,
            rewards=self.rewards,
            logging_probs=self.logging_probs,
            num_actions=self.num_actions,
            logging_policy=policy,
        )


def importance_weight(target_prob: float, logging_prob: float) -> float:
    """Importance weight for one (target, logging) probability pair.

    Uses the convention 0/0 = 0.  Raises if the target puts mass on an
    action with zero logging probability, which signals an invalid
    policy pair rather than a recoverable numerical issue.
    """
    if not (0.0 <= target_prob <= 1.0) or not (0.0 <= logging_prob <= 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    if logging_prob == 0.0:
        if target_prob == 0.0:
            return 0.0
        raise AbsoluteContinuityError(
            f"target prob {target_prob!r} > 0 where logging prob is 0"
        )
    return target_prob / logging_prob


def importance_weights(target_probs: np.ndarray, logging_probs: np.ndarray) -> np.ndarray:
    """Vectorized importance weights with the same conventions as above."""
    t = np.asarray(target_probs, dtype=float)
    m = np.asarray(logging_probs, dtype=float)
    zero = m == 0.0
    if np.any(zero & (t > 0.0)):
        raise AbsoluteContinuityError("target prob > 0 where logging prob is 0")
    out = np.zeros(np.broadcast_shapes(t.shape, m.shape))
    np.divide(t, m, out=out, where=~zero)
    return out


@dataclass(frozen=True)
class FiniteInstance:
    """A fully specified finite contextual-bandit problem.

    Tables are indexed [context, action].  ``reward_dist`` names the
    conditional reward law used when sampling: "normal" draws
    Normal(mean_reward, noise_sd**2), "bernoulli" draws Bernoulli(mean_reward)
    (requiring mean_reward in [0, 1]).  Exact quantities (policy values,
    moments) never sample; they sum over the tables.
    """

    context_probs: np.ndarray
    logging: np.ndarray
    target: np.ndarray
    mean_reward: np.ndarray
    noise_sd: np.ndarray
    reward_cap: np.ndarray
    reward_dist: str = "normal"

    def __post_init__(self):
        lam = np.asarray(self.context_probs, dtype=float)
        if lam.ndim != 1 or not np.all(np.isfinite(lam)) or np.any(lam < 0):
            raise InvalidProbabilityError("context_probs must be a finite nonnegative vector")
        if abs(lam.sum() - 1.0) > PROB_TOL:
            raise InvalidProbabilityError(f"context_probs sum to {lam.sum()!r}")
        mu = _check_prob_matrix(self.logging, "logging")
        pi = _check_prob_matrix(self.target, "target")
        shape = mu.shape
        if pi.shape != shape or lam.shape[0] != shape[0]:
            raise ValueError("table shapes disagree")
        r = np.asarray(self.mean_reward, dtype=float)
        sd = np.asarray(self.noise_sd, dtype=float)
        cap = np.asarray(self.reward_cap, dtype=float)
        for name, tab in (("mean_reward", r), ("noise_sd", sd), ("reward_cap", cap)):
            if tab.shape != shape or not np.all(np.isfinite(tab)):
                raise ValueError(f"{name} must be a finite {shape} table")
        if np.any(sd < 0) or np.any(cap < 0):
            raise ValueError("noise_sd and reward_cap must be nonnegative")
        if np.any(r < 0) or np.any(r > cap):
            raise ValueError("mean_reward must lie in [0, reward_cap] elementwise")
        if np.any((pi > 0) & (mu == 0)):
            raise AbsoluteContinuityError("target puts mass where logging has none")
        if self.reward_dist not in ("normal", "bernoulli"):
            raise ValueError(f"unknown reward_dist {self.reward_dist!r}")
        if self.reward_dist == "bernoulli" and np.any(r > 1.0):
            raise ValueError("bernoulli rewards need mean_reward in [0, 1]")
        for name, arr in (
            ("context_probs", lam),
            ("logging", mu),
            ("target", pi),
            ("mean_reward", r),
            ("noise_sd", sd),
            ("reward_cap", cap),
        ):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def num_contexts(self) -> int:
        return self.logging.shape[0]

    @property
    def num_actions(self) -> int:
        return self.logging.shape[1]

    @property
    def rho_table(self) -> np.ndarray:
        """Importance weights pi/mu per (context, action), 0/0 = 0."""
        return importance_weights(self.target, self.logging)

    @property
    def joint_probs(self) -> np.ndarray:
        """Joint point masses lambda(x) * mu(a|x)."""
        return self.context_probs[:, None] * self.logging

    def target_policy(self) -> TablePolicy:
        return TablePolicy(self.target)

    def logging_policy(self) -> TablePolicy:
        return TablePolicy(self.logging)

    def with_mean_reward(self, mean_reward, noise_sd=None, reward_dist=None) -> "FiniteInstance":
        return FiniteInstance(
            context_probs=self.context_probs,
            logging=self.logging,
            target=self.target,
            mean_reward=mean_reward,
            noise_sd=self.noise_sd if noise_sd is None else noise_sd,
            reward_cap=self.reward_cap,
            reward_dist=self.reward_dist if reward_dist is None else reward_dist,
        )

    def sample_log(self, n: int, seed: int) -> BanditLog:
        """Draw a log of n records: contexts from lambda, actions from mu,
        rewards from the declared conditional law.  Features hold the context
        index so table policies and tabular reward models apply directly."""
        if n < 1:
            raise ValueError("n must be positive")
        stream = CounterStream(seed)
        m = _sample_indices(self.context_probs, stream.uniform(n))
        a = _sample_rows(self.logging, m, stream.uniform(n))
        mean = self.mean_reward[m, a]
        if self.reward_dist == "bernoulli":
            r = (stream.uniform(n) < mean).astype(float)
        else:
            r = mean + self.noise_sd[m, a] * stream.normal(n)
        return BanditLog(
            features=m[:, None].astype(float),
            actions=a,
            rewards=r,
            logging_probs=self.logging[m, a],
            num_actions=self.num_actions,
            logging_policy=self.logging_policy(),
        )


def _sample_indices(probs: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Inverse-CDF sampling of indices from one probability vector."""
    cum = np.cumsum(probs)
    idx = np.searchsorted(cum, uniforms, side="right")
    return np.minimum(idx, len(probs) - 1).astype(np.int64)


def _sample_rows(prob_matrix: np.ndarray, rows: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Inverse-CDF sampling of one column index per selected row."""
    cum = np.cumsum(prob_matrix[rows], axis=1)
    idx = (uniforms[:, None] > cum).sum(axis=1)
    return np.minimum(idx, prob_matrix.shape[1] - 1).astype(np.int64)


def policy_value_exact(instance: FiniteInstance, which: str = "target") -> float:
    """Exact value sum_x lambda(x) sum_a policy(a|x) mean_reward(x, a)."""
    if which == "target":
        pol = instance.target
    elif which == "logging":
        pol = instance.logging
    else:
        raise ValueError("which must be 'target' or 'logging'")
    return float(instance.context_probs @ (pol * instance.mean_reward).sum(axis=1))


@dataclass(frozen=True)
class Violation:
    index: int
    kind: str
    message: str


@dataclass(frozen=True)
class LogValidationReport:
    num_records: int
    num_actions: int
    violations: tuple[Violation, ...]
    min_rho_observed: float
    max_rho_observed: float
    min_rho_all: float | None
    max_rho_all: float | None

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_log(log: BanditLog, target: Policy) -> LogValidationReport:
    """Scan a log for structural problems instead of raising on the first one.

    Flags propensities outside (0, 1] and absolute-continuity violations
    (target mass on an action with zero logging probability).  Also reports
    the observed importance-weight range and, when the log carries a logging
    policy, the range over all actions of every observed context.
    """
    n = len(log)
    P = target.prob_matrix(log.features, log.num_actions)
    pi_taken = P[np.arange(n), log.actions]
    mu_taken = log.logging_probs

    violations: list[Violation] = []
    for i in np.nonzero(mu_taken <= 0.0)[0]:
        violations.append(
            Violation(int(i), "propensity_bound", f"logging_prob is {mu_taken[i]!r}, must be > 0")
        )
        if pi_taken[i] > 0.0:
            violations.append(
                Violation(
                    int(i),
                    "absolute_continuity",
                    f"target prob {pi_taken[i]!r} > 0 but logging prob is 0 on logged action",
                )
            )

    ok_mask = mu_taken > 0.0
    rho_obs = np.zeros(n)
    np.divide(pi_taken, mu_taken, out=rho_obs, where=ok_mask)
    if np.any(ok_mask):
        min_obs = float(rho_obs[ok_mask].min())
        max_obs = float(rho_obs[ok_mask].max())
    else:
        min_obs = max_obs = float("nan")

    min_all = max_all = None
    if log.logging_policy is not None:
        M = log.logging_policy.prob_matrix(log.features, log.num_actions)
        holes = (M == 0.0) & (P > 0.0)
        for i in sorted(set(np.nonzero(holes.any(axis=1))[0].tolist())):
            acts = np.nonzero(holes[i])[0].tolist()
            violations.append(
                Violation(
                    int(i),
                    "absolute_continuity",
                    f"target mass on actions {acts} with zero logging probability",
                )
            )
        rho_all = np.zeros_like(M)
        np.divide(P, M, out=rho_all, where=M > 0.0)
        min_all = float(rho_all.min())
        max_all = float(rho_all.max())

    return LogValidationReport(
        num_records=n,
        num_actions=log.num_actions,
        violations=tuple(violations),
        min_rho_observed=min_obs,
        max_rho_observed=max_obs,
        min_rho_all=min_all,
        max_rho_all=max_all,
    )


def write_log(log: BanditLog, path) -> None:
    """Serialize to line-delimited records under a one-line header object."""
    with open(path, "w") as fh:
        fh.write(json.dumps({"num_actions": log.num_actions, "dim": log.dim}) + "\n")
        for i in range(len(log)):
            fh.write(
                json.dumps(
                    {
                        "features": log.features[i].tolist(),
                        "action": int(log.actions[i]),
                        "reward": float(log.rewards[i]),
                        "logging_prob": float(log.logging_probs[i]),
                    }
                )
                + "\n"
            )


def read_log(path, logging_policy: Policy | None = None) -> BanditLog:
    """Load a log written by :func:`write_log`."""
    with open(path) as fh:
        header = json.loads(fh.readline())
        feats, acts, rews, probs = [], [], [], []
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            feats.append(obj["features"])
            acts.append(obj["action"])
            rews.append(obj["reward"])
            probs.append(obj["logging_prob"])
    if not feats:
        raise ValueError(f"log file {path} has no records")
    return BanditLog(
        features=np.asarray(feats, dtype=float),
        actions=np.asarray(acts),
        rewards=np.asarray(rews),
        logging_probs=np.asarray(probs),
        num_actions=int(header["num_actions"]),
        logging_policy=logging_policy,
    )
