"""
A replicated experiment sweep
=============================

The harness repeats the whole pipeline (draw a log, train models, run
every estimator on the identical log) hundreds of times per sample size,
then reports each estimator's truncated MSE and its ratio to plain
importance weighting.  Everything is keyed to one master seed, so reruns
and worker pools reproduce the CSV byte for byte.
"""
import opeval as op
from opeval.harness import DatasetSpec, EstimatorSpec, ExperimentConfig

config = ExperimentConfig(
    datasets=(
        DatasetSpec(kind="synth", name="easy", num_classes=3, dim=4,
                    per_class=150, separation=2.5, seed=1),
        DatasetSpec(kind="synth", name="hard", num_classes=6, dim=10,
                    per_class=75, separation=1.2, seed=2),
    ),
    estimators=(
        EstimatorSpec("ips"),
        EstimatorSpec("dm"),
        EstimatorSpec("dr"),
        EstimatorSpec("switch-dr", tau="auto"),
    ),
    channel="noisy",
    sizes=(100, 200, 400),
    replicates=50,
    master_seed=2024,
    trainer=op.TrainerConfig(iterations=150),
    oracle=True,
    oracle_estimators=("switch-dr",),
)

rows = op.run_experiment(config)
op.write_results_csv(rows, "sweep_demo.csv")
print("wrote sweep_demo.csv\n")

print(f"{'dataset':8s} {'n':>5s} {'estimator':18s} {'mse(trunc)':>11s} {'rel mse':>8s} {'mean tau':>9s}")
for row in rows:
    tau = f"{row.tau_mean:9.2f}" if row.tau_mean is not None else "        -"
    print(f"{row.dataset:8s} {row.n:5d} {row.estimator:18s} "
          f"{row.mse_trunc:11.5f} {row.rel_mse:8.3f} {tau}")
