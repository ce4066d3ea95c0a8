"""
Picking the switching threshold from data
=========================================

The switch estimators importance-weight records with small weights and
impute model predictions for the rest.  The threshold trades variance
(kept weights can be huge) against bias (the model may be wrong).  Both
sides are estimable from the log: the empirical variance of the
per-record values, and a worst-case bias bound that charges the full
reward cap to every imputed action.  The selected threshold minimizes
their sum over a geometric candidate grid.
"""
import numpy as np

import opeval as op

###############################################################################
# A log whose weights span two orders of magnitude
# ------------------------------------------------

data = op.synth_dataset(num_classes=5, dim=8, per_class=120, separation=2.2, seed=7)
target, logging = op.make_policies(data, op.TrainerConfig(iterations=200), seed=1)
log = op.simulate_log(data, logging, op.NOISY, n=400, seed=5)
truth = op.ground_truth_value(data, target, op.NOISY)

model = op.LogisticRewardModel(op.train_reward_model(log, op.TrainerConfig(iterations=200)))
taus = op.threshold_grid(log, target, 21)
print(f"candidate thresholds: {taus[0]:.3f} ... {taus[-1]:.3f} (geometric, 21 points)")

###############################################################################
# The tuning trace: variance falls, bias-bound rises, the sum dips
# ----------------------------------------------------------------

trace = op.select_tau(log, target, model, reward_cap=1.0, taus=taus)
print(f"\n{'tau':>9s} {'var-hat':>10s} {'bias-bound^2':>13s} {'objective':>10s}")
for j in range(0, 21, 4):
    marker = "  <- chosen" if j == trace.chosen_index else ""
    print(
        f"{trace.taus[j]:9.3f} {trace.var_hats[j]:10.6f} "
        f"{trace.bias_bounds_sq[j]:13.6f} {trace.objective[j]:10.6f}{marker}"
    )
print(f"\nselected threshold: {trace.chosen_tau:.3f} (index {trace.chosen_index})")

###############################################################################
# Tuned estimates versus the fixed endpoints
# ------------------------------------------

tuned, _ = op.tuned_switch(log, target, model)
print(f"\nexact value            {truth:9.4f}")
print(f"switch at tuned tau    {tuned.value:9.4f}  (tau = {tuned.tau:.3f})")
print(f"switch at tau -> 0     {op.switch_estimate(log, target, model, 0.0).value:9.4f}  (= direct method)")
print(f"switch at tau = max    {op.switch_estimate(log, target, model, float(taus[-1])).value:9.4f}  (= ips)")

###############################################################################
# The multi-threshold combiner baseline
# -------------------------------------
# Instead of one threshold, weight all of them by minimizing a quadratic
# risk proxy over the probability simplex.

combined = op.magic_combine(log, target, model, taus)
print(f"weighted combination   {combined.value:9.4f}")
