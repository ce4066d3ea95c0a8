"""
From sweep CSV to figures
=========================

The figure package consumes nothing but the results CSV, so any sweep
output (this demo's, or one from the command line) can be rendered the
same way.  Requires the companion package: ``pip install -e plots/``.
"""
import opeval as op
from opeval.harness import DatasetSpec, EstimatorSpec, ExperimentConfig

try:
    from opeval_plots import FigureSpec, plot_cdf, plot_convergence
except ImportError:
    raise SystemExit("install the figure package first: pip install -e plots/")

###############################################################################
# A sweep with enough structure to plot
# -------------------------------------

config = ExperimentConfig(
    datasets=tuple(
        DatasetSpec(kind="synth", name=f"fig-{k}", num_classes=k, dim=2 * k,
                    per_class=240 // k, separation=1.6, seed=k)
        for k in (3, 4, 5, 6)
    ),
    estimators=(
        EstimatorSpec("ips"),
        EstimatorSpec("dm"),
        EstimatorSpec("switch-dr", tau="auto"),
    ),
    channel="noisy",
    sizes=(60, 120, 240),
    replicates=30,
    master_seed=8,
    trainer=op.TrainerConfig(iterations=100),
    oracle=True,
    oracle_estimators=("trim-ips", "trun-ips"),
)
rows = op.run_experiment(config)
op.write_results_csv(rows, "figures_demo.csv")
print(f"swept {len(config.datasets)} datasets x {config.sizes} sizes")

###############################################################################
# Figure one: datasets reaching a given relative MSE
# --------------------------------------------------

plot_cdf(FigureSpec(csv_path="figures_demo.csv", kind="cdf", out_path="cdf_demo.png"))
print("wrote cdf_demo.png")

###############################################################################
# Figure two: convergence on one dataset, including the better of the two
# hindsight-tuned weight-capping baselines
# -----------------------------------------------------------------------

plot_convergence(
    FigureSpec(
        csv_path="figures_demo.csv",
        kind="convergence",
        out_path="convergence_demo.png",
        datasets=("fig-4",),
        estimators=("ips", "dm", "switch-dr", "oracle-trim-trun-min"),
    )
)
print("wrote convergence_demo.png")
