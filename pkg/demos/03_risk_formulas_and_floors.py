"""
Exact risk formulas, bounds, and minimax floors
===============================================

On a finite instance every moment is an exact sum, so the theory can be
checked numerically: the closed-form MSE of the doubly robust estimator
against simulation, the switch estimator's MSE bound across thresholds,
and the minimax risk floor sandwiched below real estimators' risks on an
adversarial mean-reward pair.
"""
import numpy as np

import opeval as op
from opeval.instances import biased_model_5x3, instance_5x3
from opeval.theory_check import gaussian_pair_constraint, instance_grid

inst = instance_5x3()
model = biased_model_5x3()
n = 40

###############################################################################
# Closed-form MSE versus Monte-Carlo simulation
# ---------------------------------------------

for name, table in (("ips", np.zeros_like(model)), ("dr", model)):
    closed = op.dr_closed_form_mse(inst, table, n)
    mc = op.empirical_mse(name, inst, n, replicates=100_000, seed=1,
                          **({} if name == "ips" else {"model_table": table}))
    print(f"{name:3s}: closed form {closed:.6f}   simulated {mc.mse:.6f} "
          f"(+/- {mc.std_err:.6f})")

###############################################################################
# The switch MSE bound across the threshold grid
# ----------------------------------------------

print(f"\n{'tau':>8s} {'simulated mse':>14s} {'upper bound':>12s}")
for tau in instance_grid(inst, 7):
    mc = op.empirical_mse("switch", inst, n, 30_000, seed=2,
                          impute_table=model, tau=float(tau))
    bound = op.switch_mse_bound(inst, model, float(tau), n)
    print(f"{tau:8.3f} {mc.mse:14.6f} {bound:12.6f}")

###############################################################################
# The minimax floor and an adversarial pair that nearly attains it
# ----------------------------------------------------------------
# The pair shifts every mean upward by the largest amount a sample of
# size n cannot reliably detect; no estimator can do well on both
# members, so each estimator's worse-member risk sits above the floor.

floor = op.minimax_lower_bound(inst, gamma=0.0, n=n)
pair = op.gaussian_hard_pair(inst, n)
print(f"\nminimax floor at n={n}: {floor.value:.3e} "
      f"(preconditions met: {floor.preconditions_met})")
print(f"mean-shift budget check: {gaussian_pair_constraint(inst, pair):.5f} <= {1 / n}")

for est, settings in (("ips", {}), ("dm", {"model_table": np.zeros_like(model)})):
    worst = max(
        op.empirical_mse(est, member, n, 50_000, seed=3, **settings).mse
        for member in pair.members(inst)
    )
    print(f"{est:3s} worse-member mse: {worst:.3e}  (floor {floor.value:.3e})")
