"""Exact risk expressions, minimax floors, adversarial reward constructions,
and the Monte-Carlo machinery that verifies them on finite instances.

Every expression here is a deterministic function of the instance tables,
computed by exact summation (two calls are bit-identical).  The Monte-Carlo
side (`simulate_estimates`, `empirical_mse`) is the independent oracle: it
draws logs from the instance with counter-based per-replicate randomness and
evaluates estimators on them, so closed forms and simulation can be compared
at known statistical precision.

Conventions used throughout, matching the finite setting: 0/0 = 0 in every
moment ratio, and g * log(5/g) is 0 at g = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .core import (
    DegenerateNormalizerError,
    FiniteInstance,
    OpevalError,
    policy_value_exact,
)
from .estimators import geometric_grid
from .seeding import CounterStream, mix64, mix64_array, normal_block, uniform_block

E_CONST = math.e


class DegenerateInstanceError(OpevalError, ValueError):
    """The construction needs a strictly positive moment the instance lacks."""


def expect_mu(instance: FiniteInstance, table: np.ndarray) -> float:
    """E under (context ~ lambda, action ~ logging) of a per-cell table."""
    return float(np.sum(instance.joint_probs * table))


def expect_pi(instance: FiniteInstance, table: np.ndarray) -> float:
    """E under (context ~ lambda, action ~ target) of a per-cell table."""
    return float(np.sum(instance.context_probs[:, None] * instance.target * table))


def _clip_model(instance: FiniteInstance, model_table) -> np.ndarray:
    model = np.asarray(model_table, dtype=float)
    if model.shape != instance.mean_reward.shape:
        raise ValueError("model table shape does not match the instance")
    return np.clip(model, 0.0, instance.reward_cap)


@dataclass(frozen=True)
class InstanceBias:
    """Model bias table eps = rhat - mean_reward for a clipped tabular model."""

    epsilon_table: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.epsilon_table)):
            raise ValueError("bias table must be finite")


def instance_bias(instance: FiniteInstance, model_table) -> InstanceBias:
    model = _clip_model(instance, model_table)
    return InstanceBias(epsilon_table=model - instance.mean_reward)


def dr_closed_form_mse(instance: FiniteInstance, model_table, n: int) -> float:
    """Exact MSE of the doubly robust estimator with a fixed tabular model.

    (1/n) * ( E_mu[rho^2 sigma^2]
              + Var_x E_{a~mu}[rho * mean_reward | x]
              + E_x Var_{a~mu}[rho * (model - mean_reward) | x] ).

    The zero model gives the exact MSE of plain importance weighting.
    """
    if n < 1:
        raise ValueError("n must be positive")
    model = _clip_model(instance, model_table)
    rho = instance.rho_table
    lam = instance.context_probs
    mu = instance.logging

    noise_term = expect_mu(instance, rho**2 * instance.noise_sd**2)

    g = np.sum(mu * rho * instance.mean_reward, axis=1)
    context_var = float(lam @ g**2 - (lam @ g) ** 2)

    h = rho * (model - instance.mean_reward)
    mean_h = np.sum(mu * h, axis=1)
    var_h = np.sum(mu * h**2, axis=1) - mean_h**2
    model_term = float(lam @ var_h)

    return (noise_term + context_var + model_term) / n


def switch_mse_bound(instance: FiniteInstance, model_table, tau: float, n: int) -> float:
    """Upper bound on the switch estimator's MSE at threshold tau.

    (2/n) { E_mu[(sigma^2 + cap^2) rho^2 1(rho <= tau)]
            + E_pi[cap^2 1(rho > tau)] }
    + ( E_pi[eps 1(rho > tau)] )^2,     eps = model - mean_reward.
    """
    if n < 1:
        raise ValueError("n must be positive")
    model = _clip_model(instance, model_table)
    rho = instance.rho_table
    cap = instance.reward_cap
    small = rho <= tau
    var_part = expect_mu(instance, (instance.noise_sd**2 + cap**2) * rho**2 * small)
    dm_part = expect_pi(instance, cap**2 * ~small)
    bias = expect_pi(instance, (model - instance.mean_reward) * ~small)
    return (2.0 / n) * (var_part + dm_part) + bias**2


def xi_indicator(instance: FiniteInstance, gamma: float) -> np.ndarray:
    """1 where the joint point mass lambda(x) * mu(a|x) is at most gamma."""
    if not (0.0 <= gamma <= 1.0):
        raise ValueError("gamma must lie in [0, 1]")
    return (instance.joint_probs <= gamma).astype(float)


def _moment_ratio(instance: FiniteInstance, table: np.ndarray, eps: float) -> float:
    """E[table^(2+eps)]^2 / E[table^2]^(2+eps) with 0/0 = 0."""
    num = expect_mu(instance, table ** (2.0 + eps))
    den = expect_mu(instance, table**2)
    if den == 0.0:
        return 0.0
    return num**2 / den ** (2.0 + eps)


def c_gamma(instance: FiniteInstance, gamma: float, epsilon_moment: float = 2.0) -> float:
    """Problem-dependent moment constant controlling the floor's preconditions."""
    if epsilon_moment <= 0:
        raise ValueError("epsilon_moment must be positive")
    xi = xi_indicator(instance, gamma)
    rho = instance.rho_table
    ratio_sigma = _moment_ratio(instance, rho * instance.noise_sd, epsilon_moment)
    # xi is 0/1 so xi * (rho cap)^p == (xi rho cap)^p for every power p
    ratio_cap = _moment_ratio(instance, xi * rho * instance.reward_cap, epsilon_moment)
    return 2.0 ** (2.0 + epsilon_moment) * max(ratio_sigma, ratio_cap)


def _gamma_log_term(gamma: float) -> float:
    return 0.0 if gamma == 0.0 else gamma * math.log(5.0 / gamma)


class LowerBound(NamedTuple):
    value: float
    preconditions_met: bool


def minimax_lower_bound(
    instance: FiniteInstance, gamma: float, n: int, epsilon_moment: float = 2.0
) -> LowerBound:
    """Minimax risk floor over the instance's reward class.

    ( E_mu[rho^2 sigma^2]
      + E_mu[xi rho^2 cap^2] * (1 - 350 n gamma log(5/gamma)) ) / (700 n).

    The flag reports whether n satisfies
    n >= max{ 16 C^(1/eps), 2 C^(2/eps) E_mu[sigma^2 / cap^2] }.
    The expression is evaluated as written even when the bracket is
    negative, where the floor is merely weaker, not wrong.
    """
    if n < 1:
        raise ValueError("n must be positive")
    xi = xi_indicator(instance, gamma)
    rho = instance.rho_table
    noise = expect_mu(instance, rho**2 * instance.noise_sd**2)
    capped = expect_mu(instance, xi * rho**2 * instance.reward_cap**2)
    value = (noise + capped * (1.0 - 350.0 * n * _gamma_log_term(gamma))) / (700.0 * n)

    c = c_gamma(instance, gamma, epsilon_moment)
    cap2 = instance.reward_cap**2
    sigma2 = instance.noise_sd**2
    ratio = np.zeros_like(cap2)
    np.divide(sigma2, cap2, out=ratio, where=cap2 > 0)
    if np.any((cap2 == 0) & (sigma2 > 0)):
        met = False
    else:
        need = max(
            16.0 * c ** (1.0 / epsilon_moment),
            2.0 * c ** (2.0 / epsilon_moment) * expect_mu(instance, ratio),
        )
        met = n >= need
    return LowerBound(value=float(value), preconditions_met=bool(met))


def lb_sigma_expr(instance: FiniteInstance, n: int) -> float:
    """Noise-driven risk floor.

    (E_mu[rho^2 sigma^2] / (32 e n)) *
    [1 - E_mu[rho^2 sigma^2 1(rho sigma^2 > cap sqrt(n E_mu[rho^2 sigma^2]/2))]
         / E_mu[rho^2 sigma^2]]^2.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rho = instance.rho_table
    sigma2 = instance.noise_sd**2
    total = expect_mu(instance, rho**2 * sigma2)
    if total == 0.0:
        return 0.0
    threshold = instance.reward_cap * math.sqrt(n * total / 2.0)
    truncated = expect_mu(instance, rho**2 * sigma2 * (rho * sigma2 > threshold))
    return total / (32.0 * E_CONST * n) * (1.0 - truncated / total) ** 2


def lb_rmax_expr(instance: FiniteInstance, gamma: float, n: int) -> float:
    """Cap-driven risk floor on rare cells, finite-instance form.

    Finite instances make each (context, action) cell its own partition
    element, so the discretization is exact: the cell constants are the
    exact cap and weight, and the resolution correction vanishes.

    (S / (32 e n)) * [1 - E_mu[xi rho^2 cap^2 1(xi rho cap > sqrt(n S / 16))]/S]^2
    - gamma log(5/gamma) S,   where S = E_mu[xi rho^2 cap^2].
    """
    if n < 1:
        raise ValueError("n must be positive")
    xi = xi_indicator(instance, gamma)
    rho = instance.rho_table
    cap = instance.reward_cap
    s = expect_mu(instance, xi * rho**2 * cap**2)
    if s == 0.0:
        return 0.0
    threshold = math.sqrt(n * s / 16.0)
    truncated = expect_mu(instance, xi * rho**2 * cap**2 * (xi * rho * cap > threshold))
    first = s / (32.0 * E_CONST * n) * (1.0 - truncated / s) ** 2
    return first - _gamma_log_term(gamma) * s


@dataclass(frozen=True)
class HardPair:
    """Two mean-reward tables no estimator can tell apart reliably at size n.

    Member rewards are Normal(eta, sigma^2) when sampled.  eta_2 is the zero
    table; eta_1 raises each cell by the largest mean shift the sample-size
    budget allows.
    """

    eta_1: np.ndarray
    eta_2: np.ndarray
    sigma: np.ndarray
    description: dict

    def members(self, base: FiniteInstance) -> tuple[FiniteInstance, FiniteInstance]:
        return (
            base.with_mean_reward(self.eta_1, reward_dist="normal"),
            base.with_mean_reward(self.eta_2, reward_dist="normal"),
        )


def gaussian_hard_pair(instance: FiniteInstance, n: int) -> HardPair:
    """Mean-shift construction driven by the reward noise.

    alpha = sqrt(2 E_mu[rho^2 sigma^2] / n);
    shift = min(alpha sigma^2 rho / E_mu[rho^2 sigma^2], cap).
    The shift satisfies E_mu[shift^2 / (2 sigma^2)] <= 1/n exactly.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rho = instance.rho_table
    sigma2 = instance.noise_sd**2
    total = expect_mu(instance, rho**2 * sigma2)
    if total == 0.0:
        raise DegenerateInstanceError("need E_mu[rho^2 sigma^2] > 0 for the Gaussian pair")
    alpha = math.sqrt(2.0 * total / n)
    delta = np.minimum(alpha * sigma2 * rho / total, instance.reward_cap)
    return HardPair(
        eta_1=delta,
        eta_2=np.zeros_like(delta),
        sigma=instance.noise_sd,
        description={"alpha": alpha, "n": n, "kind": "gaussian"},
    )


def gaussian_pair_constraint(instance: FiniteInstance, pair: HardPair) -> float:
    """Exact E_mu[shift^2 / (2 sigma^2)] with 0/0 = 0; feasible iff <= 1/n."""
    delta2 = (pair.eta_1 - pair.eta_2) ** 2
    sigma2 = instance.noise_sd**2
    ratio = np.zeros_like(delta2)
    np.divide(delta2, 2.0 * sigma2, out=ratio, where=sigma2 > 0)
    return expect_mu(instance, ratio)


class BernoulliPrior(NamedTuple):
    theta_1: np.ndarray
    theta_2: np.ndarray
    delta_table: np.ndarray


def bernoulli_hard_prior(instance: FiniteInstance, gamma: float, n: int) -> BernoulliPrior:
    """Prior pair for the noiseless, cap-driven construction on rare cells.

    alpha = sqrt(4 E_mu[xi rho^2 cap^2] / n);
    delta = min(xi rho cap alpha / E_mu[xi rho^2 cap^2], 0.5);
    theta_2 = 0.5 everywhere, theta_1 = theta_2 + delta.
    A mean-reward realization sets each cell to xi * cap with its theta
    probability and to 0 otherwise; (1/4) E_mu[xi delta^2] <= 1/n exactly.
    """
    if n < 1:
        raise ValueError("n must be positive")
    xi = xi_indicator(instance, gamma)
    rho = instance.rho_table
    cap = instance.reward_cap
    s = expect_mu(instance, xi * rho**2 * cap**2)
    if s == 0.0:
        raise DegenerateInstanceError("need E_mu[xi rho^2 cap^2] > 0 for the Bernoulli prior")
    alpha = math.sqrt(4.0 * s / n)
    delta = np.minimum(xi * rho * cap * alpha / s, 0.5)
    theta_2 = np.full_like(delta, 0.5)
    return BernoulliPrior(theta_1=theta_2 + delta, theta_2=theta_2, delta_table=delta)


def bernoulli_prior_constraint(instance: FiniteInstance, gamma: float, prior: BernoulliPrior) -> float:
    """Exact (1/4) E_mu[xi delta^2]; feasible iff <= 1/n."""
    xi = xi_indicator(instance, gamma)
    return 0.25 * expect_mu(instance, xi * prior.delta_table**2)


def sample_bernoulli_mean_reward(
    instance: FiniteInstance, gamma: float, theta: np.ndarray, seed: int
) -> np.ndarray:
    """Draw one mean-reward realization from the prior: xi * cap w.p. theta."""
    xi = xi_indicator(instance, gamma)
    shape = instance.mean_reward.shape
    u = CounterStream(seed).uniform(int(np.prod(shape))).reshape(shape)
    return np.where(u < theta, xi * instance.reward_cap, 0.0)


def kl_bernoulli_bound(p, q):
    """KL(Ber(p) || Ber(q)) and its quadratic upper bound.

    kl = p log(p/q) + (1-p) log((1-p)/(1-q));
    bound = (p-q)^2 (1/q + 1/(1-q)).  Requires p, q strictly inside (0, 1).
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.any((p <= 0) | (p >= 1) | (q <= 0) | (q >= 1)):
        raise ValueError("p and q must lie strictly inside (0, 1)")
    kl = p * np.log(p / q) + (1.0 - p) * np.log((1.0 - p) / (1.0 - q))
    bound = (p - q) ** 2 * (1.0 / q + 1.0 / (1.0 - q))
    if kl.ndim == 0:
        return float(kl), float(bound)
    return kl, bound


def instance_grid(instance: FiniteInstance, count: int = 21) -> np.ndarray:
    """Geometric threshold grid anchored at the instance's weight range."""
    rho = instance.rho_table
    positive = rho[rho > 0]
    if positive.size == 0:
        raise DegenerateInstanceError("no positive importance weight in the instance")
    return geometric_grid(float(positive.min()), float(rho.max()), count)


# ---------------------------------------------------------------------------
# Monte-Carlo oracle


class MCResult(NamedTuple):
    mse: float
    std_err: float


_CHUNK = 20000


def simulate_estimates(
    estimator: str,
    instance: FiniteInstance,
    n: int,
    replicates: int,
    seed: int,
    *,
    model_table=None,
    dr_table=None,
    impute_table=None,
    tau: Optional[float] = None,
    value: Optional[float] = None,
) -> np.ndarray:
    """Per-replicate estimates from independent simulated logs.

    Replicate r draws its log with randomness keyed to mix64(seed, r), so
    results are independent of chunking and worker scheduling.  The batched
    arithmetic here matches the per-log estimator functions bit for bit
    (asserted in the test suite), which keeps this oracle honest while
    allowing hundreds of thousands of replicates.
    """
    if replicates < 1:
        raise ValueError("replicates must be positive")
    if n < 1:
        raise ValueError("n must be positive")

    rho = instance.rho_table
    pi = instance.target
    lam_cum = np.cumsum(instance.context_probs)
    mu_cum = np.cumsum(instance.logging, axis=1)
    k_max = instance.num_actions - 1

    model = None if model_table is None else _clip_model(instance, model_table)
    drm = None if dr_table is None else _clip_model(instance, dr_table)
    imp = None if impute_table is None else _clip_model(instance, impute_table)

    if estimator == "dm" or estimator == "dr":
        if model is None:
            raise ValueError(f"{estimator} needs model_table")
        dm_row = np.sum(pi * model, axis=1)
    if estimator == "switch" or estimator == "trim-ips":
        if tau is None:
            raise ValueError(f"{estimator} needs tau")
        if estimator == "switch":
            if imp is None:
                raise ValueError("switch needs impute_table")
            impute_row = np.sum(pi * imp * (rho > tau), axis=1)
    if estimator == "switch-dr":
        if tau is None or drm is None or imp is None:
            raise ValueError("switch-dr needs tau, dr_table and impute_table")
        dr_small_row = np.sum(pi * drm * (rho <= tau), axis=1)
        impute_over_row = np.sum(pi * imp * (rho > tau), axis=1)
    if estimator == "trun-ips" and (tau is None or tau <= 0):
        raise ValueError("trun-ips needs tau > 0")
    if estimator == "constant" and value is None:
        raise ValueError("constant needs value")

    out = np.empty(replicates)
    for start in range(0, replicates, _CHUNK):
        stop = min(start + _CHUNK, replicates)
        seeds = mix64_array((seed,), np.arange(start, stop))
        m = np.searchsorted(lam_cum, uniform_block(seeds, n, block=0), side="right")
        m = np.minimum(m, instance.num_contexts - 1)
        a = (uniform_block(seeds, n, block=1)[:, :, None] > mu_cum[m]).sum(axis=2)
        a = np.minimum(a, k_max)
        mean = instance.mean_reward[m, a]
        if instance.reward_dist == "bernoulli":
            r = (uniform_block(seeds, n, block=2) < mean).astype(float)
        else:
            r = mean + instance.noise_sd[m, a] * normal_block(seeds, n, block=2)
        rho_t = rho[m, a]

        if estimator == "ips":
            vals = np.mean(r * rho_t, axis=1)
        elif estimator == "dm":
            vals = np.mean(dm_row[m], axis=1)
        elif estimator == "dr":
            vals = np.mean(rho_t * (r - model[m, a]) + dm_row[m], axis=1)
        elif estimator == "switch":
            keep = rho_t <= tau
            vals = np.mean(r * rho_t * keep + impute_row[m], axis=1)
        elif estimator == "switch-dr":
            keep = rho_t <= tau
            vals = np.mean(
                rho_t * (r - drm[m, a]) * keep + dr_small_row[m] + impute_over_row[m],
                axis=1,
            )
        elif estimator == "trim-ips":
            keep = rho_t <= tau
            vals = np.mean(r * rho_t * keep + 0.0, axis=1)
        elif estimator == "trun-ips":
            w = np.minimum(rho_t, tau)
            totals = w.sum(axis=1)
            if np.any(totals <= 0.0):
                bad = start + int(np.argmax(totals <= 0.0))
                raise DegenerateNormalizerError(
                    f"all capped weights zero in replicate {bad}"
                )
            vals = np.sum(w * r, axis=1) / totals
        elif estimator == "constant":
            vals = np.full(stop - start, float(value))
        else:
            raise ValueError(f"unknown estimator {estimator!r}")
        out[start:stop] = vals
    return out


def empirical_mse(
    estimator: str,
    instance: FiniteInstance,
    n: int,
    replicates: int,
    seed: int,
    **settings,
) -> MCResult:
    """Monte-Carlo MSE of an estimator against the exact policy value."""
    if replicates < 2:
        raise ValueError("need at least two replicates for a standard error")
    truth = policy_value_exact(instance)
    vals = simulate_estimates(estimator, instance, n, replicates, seed, **settings)
    sq = (vals - truth) ** 2
    return MCResult(
        mse=float(sq.mean()),
        std_err=float(sq.std(ddof=1) / math.sqrt(replicates)),
    )


def empirical_mean(
    estimator: str,
    instance: FiniteInstance,
    n: int,
    replicates: int,
    seed: int,
    **settings,
) -> tuple[float, float]:
    """Monte-Carlo mean of an estimator and its standard error."""
    vals = simulate_estimates(estimator, instance, n, replicates, seed, **settings)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(len(vals)))


# ---------------------------------------------------------------------------
# Standard verification battery


def run_standard_checks(fast: bool = True, seed: int = 20_17) -> dict:
    """Closed forms vs. simulation on the shipped instances.

    Each entry records the computed values, the slack actually available,
    and a pass flag.  ``fast`` trades replicate count for runtime.
    """
    from . import instances

    reps = 20_000 if fast else 200_000
    checks: list[dict] = []

    def add(name: str, passed: bool, slack: float, **values):
        checks.append(
            {"name": name, "passed": bool(passed), "slack": float(slack), "values": values}
        )

    inst = instances.instance_5x3()
    n = 40

    closed_ips = dr_closed_form_mse(inst, np.zeros_like(inst.mean_reward), n)
    mc_ips = empirical_mse("ips", inst, n, reps, mix64(seed, 1))
    rel = abs(mc_ips.mse - closed_ips) / closed_ips
    add(
        "ips-mse-closed-form",
        rel <= 0.05,
        0.05 - rel,
        closed_form=closed_ips,
        monte_carlo=mc_ips.mse,
        std_err=mc_ips.std_err,
        rel_gap=rel,
    )

    model = instances.biased_model_5x3()
    closed_dr = dr_closed_form_mse(inst, model, n)
    mc_dr = empirical_mse("dr", inst, n, reps, mix64(seed, 2), model_table=model)
    rel = abs(mc_dr.mse - closed_dr) / closed_dr
    add(
        "dr-mse-closed-form",
        rel <= 0.05,
        0.05 - rel,
        closed_form=closed_dr,
        monte_carlo=mc_dr.mse,
        std_err=mc_dr.std_err,
        rel_gap=rel,
    )

    inst4 = instances.instance_4x3()
    model4 = instances.model_4x3()
    worst_gap = math.inf
    bound_ok = True
    for i, tau in enumerate(instance_grid(inst4, 21)):
        mc = empirical_mse(
            "switch", inst4, n, reps, mix64(seed, 3, i),
            impute_table=model4, tau=float(tau),
        )
        bound = switch_mse_bound(inst4, model4, float(tau), n)
        gap = bound - (mc.mse - 3.0 * mc.std_err)
        worst_gap = min(worst_gap, gap)
        bound_ok = bound_ok and gap >= 0.0
    add("switch-mse-bound-grid", bound_ok, worst_gap, taus=21)

    pair = gaussian_hard_pair(inst, 50)
    floor = minimax_lower_bound(inst, 0.0, 50).value
    members = pair.members(inst)
    sandwich_ok = True
    details = {"floor": floor}
    sandwich_slack = math.inf
    for est, settings in (
        ("ips", {}),
        ("dr", {"model_table": np.full_like(inst.mean_reward, 0.5)}),
        ("dm", {"model_table": np.zeros_like(inst.mean_reward)}),
    ):
        worst = -math.inf
        worst_se = 0.0
        for j, member in enumerate(members):
            mc = empirical_mse(est, member, 50, reps, mix64(seed, 4, j), **settings)
            if mc.mse > worst:
                worst, worst_se = mc.mse, mc.std_err
        details[f"{est}_worst_mse"] = worst
        sandwich_slack = min(sandwich_slack, worst + 3.0 * worst_se - floor)
        sandwich_ok = sandwich_ok and floor <= worst + 3.0 * worst_se
    add("minimax-floor-sandwich", sandwich_ok, sandwich_slack, **details)

    g_constraint = gaussian_pair_constraint(inst, pair)
    add(
        "gaussian-pair-feasible",
        g_constraint <= 1.0 / 50,
        1.0 / 50 - g_constraint,
        constraint=g_constraint,
        budget=1.0 / 50,
    )

    prior = bernoulli_hard_prior(inst, 1.0, 50)
    b_constraint = bernoulli_prior_constraint(inst, 1.0, prior)
    add(
        "bernoulli-prior-feasible",
        b_constraint <= 1.0 / 50,
        1.0 / 50 - b_constraint,
        constraint=b_constraint,
        budget=1.0 / 50,
    )

    stream = CounterStream(mix64(seed, 5))
    p = stream.uniform(10_000) * 0.998 + 0.001
    q = stream.uniform(10_000) * 0.998 + 0.001
    kl, bound = kl_bernoulli_bound(p, q)
    add(
        "bernoulli-kl-bound",
        bool(np.all(kl <= bound + 1e-12)),
        float(np.min(bound - kl)),
        max_excess=float(np.max(kl - bound)),
        pairs=10_000,
    )

    return {"checks": checks, "all_passed": all(c["passed"] for c in checks)}
