"""Automatic threshold selection for the switch-family estimators.

The threshold trades the variance of importance weighting against the bias
of model imputation.  Both sides are estimated from the log alone:

* variance: the empirical variance of per-record switch values Y_i(tau),
  with an n**2 divisor, so it estimates the variance of the mean;
* bias: the square of the average imputed-region mass, with every imputed
  reward bounded by its cap.  This deliberately overstates the bias, which
  favors the unbiased region unless its variance would dominate anyway.

The selected threshold minimizes their sum over a candidate grid, breaking
ties toward the smallest candidate (the more-imputed, lower-variance side).

``magic_combine`` is a simplified multi-threshold combiner kept as a
baseline: instead of picking one threshold it weights the whole grid of
switch estimates by minimizing a quadratic risk proxy over the simplex.
It differs from the published multi-estimator combiner it is modeled on
(different bias and variance estimates); see the docstring.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import BanditLog, LogRecord, Policy
from .estimators import (
    EstimateReport,
    RewardModel,
    ZeroModel,
    prepare,
    switch_dr_estimate,
    switch_estimate,
    switch_per_record_values,
    threshold_grid,
    trim_ips,
    trun_ips,
)


def per_record_values(
    log: BanditLog, target: Policy, impute_model: RewardModel, tau: float
) -> np.ndarray:
    """Per-record switch values Y_i(tau); their mean is the switch estimate."""
    return switch_per_record_values(log, target, impute_model, tau)


def per_record_value(
    record: LogRecord,
    target: Policy,
    impute_model: RewardModel,
    tau: float,
    logging_policy: Policy,
) -> float:
    """Y_i(tau) for a single record; needs the logging policy for the
    per-action weights of the imputation indicator."""
    probs = np.asarray(logging_policy.action_probs(record.features), dtype=float)
    log = BanditLog.from_records([record], num_actions=probs.shape[-1], logging_policy=logging_policy)
    return float(per_record_values(log, target, impute_model, tau)[0])


def var_hat(
    log: BanditLog, target: Policy, impute_model: RewardModel, tau: float
) -> float:
    """Estimated variance of the switch estimate: sum of squared deviations
    of Y_i(tau) from their mean, divided by n**2."""
    y = per_record_values(log, target, impute_model, tau)
    n = y.shape[0]
    return float(np.sum((y - y.mean()) ** 2) / n**2)


def _cap_matrix(reward_cap, log: BanditLog) -> np.ndarray:
    """Accept a scalar, an (n, K) array, or a callable (x, a) -> cap."""
    n, k = len(log), log.num_actions
    if np.isscalar(reward_cap):
        cap = np.full((n, k), float(reward_cap))
    elif callable(reward_cap):
        cap = np.array(
            [[float(reward_cap(log.features[i], a)) for a in range(k)] for i in range(n)]
        )
    else:
        cap = np.asarray(reward_cap, dtype=float)
        if cap.shape != (n, k):
            raise ValueError(f"reward cap array must have shape ({n}, {k})")
    if not np.all(np.isfinite(cap)) or np.any(cap < 0):
        raise ValueError("reward caps must be finite and nonnegative")
    return cap


def bias_bound_sq(
    log: BanditLog,
    target: Policy,
    reward_cap,
    tau: float,
) -> float:
    """Conservative squared-bias bound for the imputed region.

    Averages, over records, the target-policy mass of actions whose weight
    exceeds ``tau`` with each action's reward replaced by its cap, then
    squares the average.
    """
    prep = prepare(log, target, need_all_actions=True)
    cap = _cap_matrix(reward_cap, log)
    per_record = np.sum(cap * prep.target_probs * (prep.rho_all > tau), axis=1)
    return float(np.mean(per_record) ** 2)


@dataclass(frozen=True)
class TuningTrace:
    """Objective values across the candidate grid, plus the winner."""

    taus: np.ndarray
    var_hats: np.ndarray
    bias_bounds_sq: np.ndarray
    objective: np.ndarray
    chosen_index: int

    def __post_init__(self):
        m = self.taus.shape[0]
        if not (self.var_hats.shape[0] == self.bias_bounds_sq.shape[0] == self.objective.shape[0] == m):
            raise ValueError("trace arrays must share one length")
        if int(np.argmin(self.objective)) != self.chosen_index:
            raise ValueError("chosen_index does not minimize the objective")

    @property
    def chosen_tau(self) -> float:
        return float(self.taus[self.chosen_index])

    def to_dict(self) -> dict:
        return {
            "taus": self.taus.tolist(),
            "var_hats": self.var_hats.tolist(),
            "bias_bounds_sq": self.bias_bounds_sq.tolist(),
            "objective": self.objective.tolist(),
            "chosen_index": self.chosen_index,
            "chosen_tau": self.chosen_tau,
        }


def _grid_components(
    log: BanditLog,
    target: Policy,
    impute_model: RewardModel,
    reward_cap,
    taus: np.ndarray,
):
    """Vectorized Y matrix (n, J), variance and bias-bound vectors (J,)."""
    prep = prepare(log, target, need_all_actions=True)
    rhat = impute_model.clipped_matrix(log.features, log.num_actions)
    cap = _cap_matrix(reward_cap, log)
    n = prep.n

    keep = prep.rho_taken[:, None] <= taus[None, :]                 # (n, J)
    over = prep.rho_all[:, :, None] > taus[None, None, :]           # (n, K, J)
    y = (prep.rewards * prep.rho_taken)[:, None] * keep + np.sum(
        (prep.target_probs * rhat)[:, :, None] * over, axis=1
    )
    var = np.sum((y - y.mean(axis=0)) ** 2, axis=0) / n**2
    bias_sq = np.mean(np.sum((cap * prep.target_probs)[:, :, None] * over, axis=1), axis=0) ** 2
    return y, var, bias_sq


def select_tau(
    log: BanditLog,
    target: Policy,
    impute_model: RewardModel,
    reward_cap,
    taus: Sequence[float],
) -> TuningTrace:
    """Pick the candidate minimizing estimated variance plus bias bound.

    Candidates must be sorted ascending; ties resolve to the smallest.
    """
    taus = np.asarray(taus, dtype=float)
    if taus.size == 0:
        raise ValueError("need at least one candidate threshold")
    if np.any(np.diff(taus) < 0):
        raise ValueError("candidate thresholds must be sorted ascending")
    _, var, bias_sq = _grid_components(log, target, impute_model, reward_cap, taus)
    objective = var + bias_sq
    chosen = int(np.argmin(objective))
    return TuningTrace(
        taus=taus,
        var_hats=var,
        bias_bounds_sq=bias_sq,
        objective=objective,
        chosen_index=chosen,
    )


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    j = np.arange(1, v.shape[0] + 1)
    cond = u - (css - 1.0) / j > 0
    k = int(np.nonzero(cond)[0][-1])
    theta = (css[k] - 1.0) / (k + 1)
    return np.maximum(v - theta, 0.0)


@dataclass(frozen=True)
class MagicResult:
    weights: np.ndarray
    objective: float
    values: np.ndarray
    covariance: np.ndarray
    bias_proxy: np.ndarray


def magic_details(
    log: BanditLog,
    target: Policy,
    impute_model: RewardModel,
    taus: Sequence[float],
    iterations: int = 500,
    power_steps: int = 50,
) -> MagicResult:
    """Solve the simplex-weighted combination of per-threshold estimates.

    The risk proxy is w' (C + b b') w where C is the sample covariance of the
    per-record value vectors scaled by 1/n and b is each estimate's distance
    to the largest-threshold estimate.  Minimized by projected gradient
    descent with a fixed iteration budget; the step is 1/L with L a Lipschitz
    bound on the gradient obtained from a power-iteration eigenvalue estimate
    (with headroom for the estimate being one-sided).
    """
    taus = np.asarray(taus, dtype=float)
    if taus.size == 0:
        raise ValueError("need at least one candidate threshold")
    if np.any(np.diff(taus) < 0):
        raise ValueError("candidate thresholds must be sorted ascending")
    y, _, _ = _grid_components(log, target, impute_model, reward_cap=0.0, taus=taus)
    n, J = y.shape
    vhats = y.mean(axis=0)
    centered = y - vhats
    cov = centered.T @ centered / n**2
    bias = vhats - vhats[-1]
    quad = cov + np.outer(bias, bias)

    w = np.full(J, 1.0 / J)
    v = np.full(J, 1.0 / np.sqrt(J))
    lam = 0.0
    for _ in range(power_steps):
        v_next = quad @ v
        norm = np.linalg.norm(v_next)
        if norm == 0.0:
            lam = 0.0
            break
        v = v_next / norm
        lam = float(v @ quad @ v)
    if lam > 0.0:
        step = 1.0 / (2.1 * lam)
        for _ in range(iterations):
            w = _project_simplex(w - step * 2.0 * (quad @ w))
    return MagicResult(
        weights=w,
        objective=float(w @ quad @ w),
        values=vhats,
        covariance=cov,
        bias_proxy=bias,
    )


def magic_combine(
    log: BanditLog,
    target: Policy,
    impute_model: RewardModel,
    taus: Sequence[float],
) -> EstimateReport:
    """Weighted combination of switch estimates across the threshold grid.

    A simplified variant of the multi-threshold combiner of Thomas and
    Brunskill (2016): the reference point for the bias proxy is the
    largest-threshold estimate, and the covariance is the sample covariance
    of per-record values.  Kept as a baseline, not a recommendation.
    """
    res = magic_details(log, target, impute_model, taus)
    return EstimateReport(
        value=float(res.weights @ res.values),
        var_hat=float(res.weights @ res.covariance @ res.weights),
        bias_bound_sq=float((res.weights @ res.bias_proxy) ** 2),
    )


def tuned_switch(
    log: BanditLog,
    target: Policy,
    impute_model: RewardModel,
    reward_cap=1.0,
    grid_size: int = 21,
) -> tuple[EstimateReport, TuningTrace]:
    """Switch estimate at the automatically selected threshold."""
    taus = threshold_grid(log, target, grid_size)
    trace = select_tau(log, target, impute_model, reward_cap, taus)
    base = switch_estimate(log, target, impute_model, trace.chosen_tau)
    report = EstimateReport(
        value=base.value,
        tau=trace.chosen_tau,
        var_hat=float(trace.var_hats[trace.chosen_index]),
        bias_bound_sq=float(trace.bias_bounds_sq[trace.chosen_index]),
    )
    return report, trace


def tuned_switch_dr(
    log: BanditLog,
    target: Policy,
    dr_model: RewardModel,
    impute_model: RewardModel,
    reward_cap=1.0,
    grid_size: int = 21,
) -> tuple[EstimateReport, TuningTrace]:
    """Switch-DR estimate at a threshold tuned with the imputation model."""
    taus = threshold_grid(log, target, grid_size)
    trace = select_tau(log, target, impute_model, reward_cap, taus)
    base = switch_dr_estimate(log, target, dr_model, impute_model, trace.chosen_tau)
    report = EstimateReport(
        value=base.value,
        tau=trace.chosen_tau,
        var_hat=float(trace.var_hats[trace.chosen_index]),
        bias_bound_sq=float(trace.bias_bounds_sq[trace.chosen_index]),
    )
    return report, trace


def tuned_trim_ips(
    log: BanditLog,
    target: Policy,
    reward_cap=1.0,
    grid_size: int = 21,
) -> tuple[EstimateReport, TuningTrace]:
    """Trimmed IPS at a threshold tuned with the zero imputation model."""
    taus = threshold_grid(log, target, grid_size)
    trace = select_tau(log, target, ZeroModel(), reward_cap, taus)
    base = trim_ips(log, target, trace.chosen_tau)
    report = EstimateReport(
        value=base.value,
        tau=trace.chosen_tau,
        var_hat=float(trace.var_hats[trace.chosen_index]),
        bias_bound_sq=float(trace.bias_bounds_sq[trace.chosen_index]),
    )
    return report, trace


def tuned_trun_ips(
    log: BanditLog,
    target: Policy,
    reward_cap=1.0,
    grid_size: int = 21,
) -> tuple[EstimateReport, TuningTrace]:
    """Capped-and-renormalized IPS at a threshold tuned with the zero model."""
    taus = threshold_grid(log, target, grid_size)
    trace = select_tau(log, target, ZeroModel(), reward_cap, taus)
    base = trun_ips(log, target, trace.chosen_tau)
    report = EstimateReport(
        value=base.value,
        tau=trace.chosen_tau,
        var_hat=float(trace.var_hats[trace.chosen_index]),
        bias_bound_sq=float(trace.bias_bounds_sq[trace.chosen_index]),
    )
    return report, trace
