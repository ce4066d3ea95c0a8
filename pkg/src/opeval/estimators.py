"""Point estimators of a target policy's value from logged bandit data.

The catalog:

``ips``
    Importance-weighted average of logged rewards.  Unbiased, heavy-tailed
    when the policies disagree.
``dm``
    Direct method: score the target policy with a reward model.  Low
    variance, biased whenever the model is.
``dr``
    Doubly robust: direct-method baseline plus an importance-weighted
    residual correction.  Unbiased with known propensities.
``switch_estimate``
    Importance weighting where the weight is at most ``tau``, model
    imputation where it exceeds ``tau``.  ``tau = 0`` recovers ``dm``;
    ``tau`` above every weight recovers ``ips``.
``switch_dr_estimate``
    Same region split, with the doubly robust estimator on the small-weight
    region.  The DR residual model and the imputation model may be the same
    object or different ones.
``trim_ips``
    ``switch_estimate`` with the zero model: large-weight records are
    simply dropped.
``trun_ips``
    Weights capped at ``tau`` and renormalized to sum to one.  Note the
    renormalization: as ``tau`` grows this tends to self-normalized IPS,
    not plain IPS.

Boundary convention: a weight exactly equal to ``tau`` belongs to the
importance-weighted region (comparisons are ``<= tau`` / ``> tau``).

Reward-model predictions are clipped into [0, cap] inside every estimator
call rather than trusted.  Estimators are pure functions of immutable
inputs; none mutate the log or keep state.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    BanditLog,
    DegenerateNormalizerError,
    DegenerateWeightsError,
    MissingLoggingPolicyError,
    Policy,
    importance_weights,
)

ESTIMATOR_NAMES = (
    "ips",
    "dm",
    "dr",
    "switch",
    "switch-dr",
    "trim-ips",
    "trun-ips",
    "magic",
)


class RewardModel(ABC):
    """Mean-reward predictor rhat(x, a), constrained to [0, cap(x, a)]."""

    @abstractmethod
    def predict_matrix(self, features: np.ndarray, num_actions: int) -> np.ndarray:
        """Raw predictions of shape (n, K) for all actions at each row."""

    def cap_matrix(self, features: np.ndarray, num_actions: int) -> np.ndarray:
        """Upper bound on the mean reward per (row, action); defaults to 1."""
        return np.ones((np.atleast_2d(features).shape[0], num_actions))

    def clipped_matrix(self, features: np.ndarray, num_actions: int) -> np.ndarray:
        pred = np.asarray(self.predict_matrix(features, num_actions), dtype=float)
        cap = np.asarray(self.cap_matrix(features, num_actions), dtype=float)
        return np.clip(pred, 0.0, cap)


class ZeroModel(RewardModel):
    def predict_matrix(self, features, num_actions):
        return np.zeros((np.atleast_2d(features).shape[0], num_actions))


class ConstantModel(RewardModel):
    def __init__(self, value: float, cap: float = 1.0):
        self.value = float(value)
        self.cap = float(cap)

    def predict_matrix(self, features, num_actions):
        return np.full((np.atleast_2d(features).shape[0], num_actions), self.value)

    def cap_matrix(self, features, num_actions):
        return np.full((np.atleast_2d(features).shape[0], num_actions), self.cap)


class TabularRewardModel(RewardModel):
    """Lookup model for finite instances; features carry the context index."""

    def __init__(self, table, cap_table=None):
        self.table = np.asarray(table, dtype=float)
        self.cap_table = None if cap_table is None else np.asarray(cap_table, dtype=float)

    def _rows(self, features) -> np.ndarray:
        return np.atleast_2d(np.asarray(features, dtype=float))[:, 0].astype(int)

    def predict_matrix(self, features, num_actions):
        return self.table[self._rows(features)]

    def cap_matrix(self, features, num_actions):
        if self.cap_table is None:
            return super().cap_matrix(features, num_actions)
        return self.cap_table[self._rows(features)]


@dataclass(frozen=True)
class EstimateReport:
    """An estimator's output plus the diagnostics that produced it."""

    value: float
    tau: Optional[float] = None
    var_hat: Optional[float] = None
    bias_bound_sq: Optional[float] = None

    def __post_init__(self):
        if self.var_hat is not None and self.var_hat < 0:
            raise ValueError("var_hat must be nonnegative")
        if self.bias_bound_sq is not None and self.bias_bound_sq < 0:
            raise ValueError("bias_bound_sq must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "tau": self.tau,
            "var_hat": self.var_hat,
            "bias_bound_sq": self.bias_bound_sq,
        }


@dataclass
class _Prep:
    """Arrays shared by every estimator for one (log, target) pair."""

    rewards: np.ndarray
    target_probs: np.ndarray      # (n, K)
    pi_taken: np.ndarray
    rho_taken: np.ndarray
    rho_all: Optional[np.ndarray]  # (n, K) or None when no logging policy

    @property
    def n(self) -> int:
        return self.rewards.shape[0]


def prepare(log: BanditLog, target: Policy, need_all_actions: bool = False) -> _Prep:
    """Compute target probabilities and importance weights for a log.

    With ``need_all_actions`` the log must carry a logging policy; its
    probability at each logged action is cross-checked against the recorded
    propensity so a policy swapped in after logging cannot silently skew
    the weights.
    """
    n = len(log)
    P = target.prob_matrix(log.features, log.num_actions)
    pi_taken = P[np.arange(n), log.actions]
    rho_taken = importance_weights(pi_taken, log.logging_probs)

    rho_all = None
    if need_all_actions:
        if log.logging_policy is None:
            raise MissingLoggingPolicyError(
                "per-action importance weights need log.logging_policy; "
                "attach one with BanditLog.with_logging_policy"
            )
        M = log.logging_policy.prob_matrix(log.features, log.num_actions)
        recorded = log.logging_probs
        recomputed = M[np.arange(n), log.actions]
        if np.any(np.abs(recomputed - recorded) > 1e-9):
            i = int(np.argmax(np.abs(recomputed - recorded)))
            raise ValueError(
                f"logging policy disagrees with recorded propensity at record {i}: "
                f"{recomputed[i]!r} vs {recorded[i]!r}"
            )
        rho_all = importance_weights(P, M)
    return _Prep(
        rewards=log.rewards,
        target_probs=P,
        pi_taken=pi_taken,
        rho_taken=rho_taken,
        rho_all=rho_all,
    )


def ips(log: BanditLog, target: Policy) -> EstimateReport:
    """Average of reward times importance weight over the log."""
    prep = prepare(log, target)
    return EstimateReport(value=float(np.mean(prep.rewards * prep.rho_taken)))


def dm(log: BanditLog, target: Policy, model: RewardModel) -> EstimateReport:
    """Average over records of the model's target-weighted predicted reward."""
    prep = prepare(log, target)
    rhat = model.clipped_matrix(log.features, log.num_actions)
    return EstimateReport(value=float(np.mean(np.sum(prep.target_probs * rhat, axis=1))))


def dr(log: BanditLog, target: Policy, model: RewardModel) -> EstimateReport:
    """Direct method plus importance-weighted residual correction."""
    prep = prepare(log, target)
    rhat = model.clipped_matrix(log.features, log.num_actions)
    rhat_taken = rhat[np.arange(prep.n), log.actions]
    per = prep.rho_taken * (prep.rewards - rhat_taken) + np.sum(
        prep.target_probs * rhat, axis=1
    )
    return EstimateReport(value=float(np.mean(per)))


def _switch_values(prep: _Prep, rhat_imp: np.ndarray, tau: float) -> np.ndarray:
    """Per-record switch values: weighted reward where rho <= tau, imputation
    where the (context, action) weight exceeds tau."""
    keep = prep.rho_taken <= tau
    impute = prep.rho_all > tau
    return prep.rewards * prep.rho_taken * keep + np.sum(
        prep.target_probs * rhat_imp * impute, axis=1
    )


def switch_per_record_values(
    log: BanditLog, target: Policy, impute_model: RewardModel, tau: float
) -> np.ndarray:
    """Per-record contributions whose mean is exactly the switch estimate."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    prep = prepare(log, target, need_all_actions=True)
    rhat_imp = impute_model.clipped_matrix(log.features, log.num_actions)
    return _switch_values(prep, rhat_imp, tau)


def switch_estimate(
    log: BanditLog, target: Policy, impute_model: RewardModel, tau: float
) -> EstimateReport:
    """Importance weighting below the threshold, model imputation above it.

    The imputation indicator is evaluated per action for every observed
    context, not just at the logged action.
    """
    values = switch_per_record_values(log, target, impute_model, tau)
    return EstimateReport(value=float(np.mean(values)), tau=float(tau))


def switch_dr_estimate(
    log: BanditLog,
    target: Policy,
    dr_model: RewardModel,
    impute_model: RewardModel,
    tau: float,
) -> EstimateReport:
    """Doubly robust estimation restricted to the small-weight region plus
    direct-method imputation on the large-weight region."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    prep = prepare(log, target, need_all_actions=True)
    rhat_dr = dr_model.clipped_matrix(log.features, log.num_actions)
    rhat_imp = impute_model.clipped_matrix(log.features, log.num_actions)
    rhat_dr_taken = rhat_dr[np.arange(prep.n), log.actions]
    keep = prep.rho_taken <= tau
    small = prep.rho_all <= tau
    per = (
        prep.rho_taken * (prep.rewards - rhat_dr_taken) * keep
        + np.sum(prep.target_probs * rhat_dr * small, axis=1)
        + np.sum(prep.target_probs * rhat_imp * ~small, axis=1)
    )
    return EstimateReport(value=float(np.mean(per)), tau=float(tau))


def trim_ips(log: BanditLog, target: Policy, tau: float) -> EstimateReport:
    """Drop records whose importance weight exceeds the threshold.

    Identical to ``switch_estimate`` with the zero model; the imputation term
    is then identically zero, so per-action weights are not needed here.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    prep = prepare(log, target)
    keep = prep.rho_taken <= tau
    per = prep.rewards * prep.rho_taken * keep + 0.0
    return EstimateReport(value=float(np.mean(per)), tau=float(tau))


def trun_ips(log: BanditLog, target: Policy, tau: float) -> EstimateReport:
    """Cap importance weights at the threshold, then renormalize to sum one."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    prep = prepare(log, target)
    w = np.minimum(prep.rho_taken, tau)
    total = w.sum()
    if total <= 0.0:
        raise DegenerateNormalizerError("all capped importance weights are zero")
    return EstimateReport(value=float(np.sum(w * prep.rewards) / total), tau=float(tau))


def geometric_grid(lo: float, hi: float, count: int) -> np.ndarray:
    """``count`` geometrically spaced points from lo to hi inclusive."""
    if count < 1:
        raise ValueError("count must be positive")
    if lo <= 0 or hi < lo:
        raise ValueError("need 0 < lo <= hi")
    if count == 1 or hi == lo:
        return np.full(count, lo)
    j = np.arange(count)
    return lo * (hi / lo) ** (j / (count - 1))


def threshold_grid(log: BanditLog, target: Policy, count: int = 21) -> np.ndarray:
    """Candidate thresholds: a geometric grid between the smallest strictly
    positive and the largest importance weight over all actions of every
    observed context.

    The lower anchor skips exact zeros because deterministic target policies
    zero out most (context, action) weights, which would break a geometric
    grid.
    """
    prep = prepare(log, target, need_all_actions=True)
    positive = prep.rho_all[prep.rho_all > 0]
    if positive.size == 0:
        raise DegenerateWeightsError("no strictly positive importance weight in the log")
    lo = float(positive.min())
    hi = float(prep.rho_all.max())
    return geometric_grid(lo, hi, count)
