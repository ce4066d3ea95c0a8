"""Figures from sweep result CSVs.

Input is the results file written by the evaluation harness, with header
``dataset,channel,n,estimator,replicates,mse_trunc,rel_mse,std_err,tau_mean``.
This module never recomputes estimates; every plotted value is traceable to
a CSV row, with one documented exception: the synthetic series
``oracle-trim-trun-min`` is the pointwise minimum of the ``oracle-trim-ips``
and ``oracle-trun-ips`` rows, computed here because the harness always emits
both rows.

Two figure kinds:

* ``cdf``: for each estimator, how many datasets reach at least a given
  relative MSE (step curves, log x-axis); uses each dataset's largest
  sample size.
* ``convergence``: truncated MSE versus sample size for one dataset,
  log-log, with bands of two standard errors around each point.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

REQUIRED_COLUMNS = (
    "dataset",
    "channel",
    "n",
    "estimator",
    "replicates",
    "mse_trunc",
    "rel_mse",
    "std_err",
    "tau_mean",
)

MIN_SERIES = "oracle-trim-trun-min"
_MIN_PARENTS = ("oracle-trim-ips", "oracle-trun-ips")

# fixed styling for the usual suspects; anything else falls back to a cycle
STYLE = {
    "ips": dict(color="#555555", marker="o"),
    "dm": dict(color="#1f77b4", marker="s"),
    "dr": dict(color="#2ca02c", marker="^"),
    "switch": dict(color="#ff7f0e", marker="v"),
    "switch-dr": dict(color="#d62728", marker="D"),
    "trim-ips": dict(color="#9467bd", marker="<"),
    "trun-ips": dict(color="#8c564b", marker=">"),
    "magic": dict(color="#e377c2", marker="p"),
    "oracle-switch-dr": dict(color="#d62728", marker="D", linestyle="--"),
    "oracle-switch": dict(color="#ff7f0e", marker="v", linestyle="--"),
    MIN_SERIES: dict(color="#7f7f7f", marker="x", linestyle="--"),
}
_FALLBACK_COLORS = ("#17becf", "#bcbd22", "#aec7e8", "#ffbb78", "#98df8a")


class MissingColumnError(ValueError):
    pass


class EmptySelectionError(ValueError):
    pass


@dataclass(frozen=True)
class ResultRow:
    dataset: str
    channel: str
    n: int
    estimator: str
    replicates: int
    mse_trunc: float
    rel_mse: float
    std_err: float
    tau_mean: float | None


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: which CSV, which kind, which slice, where to write."""

    csv_path: str
    kind: str
    out_path: str
    estimators: tuple[str, ...] = ()
    datasets: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in ("cdf", "convergence"):
            raise ValueError(f"kind must be 'cdf' or 'convergence', got {self.kind!r}")


def load_results(path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise MissingColumnError(f"{path}: missing columns {missing}")
        rows = []
        for raw in reader:
            rows.append(
                ResultRow(
                    dataset=raw["dataset"],
                    channel=raw["channel"],
                    n=int(raw["n"]),
                    estimator=raw["estimator"],
                    replicates=int(raw["replicates"]),
                    mse_trunc=float(raw["mse_trunc"]),
                    rel_mse=float(raw["rel_mse"]),
                    std_err=float(raw["std_err"]),
                    tau_mean=float(raw["tau_mean"]) if raw["tau_mean"] else None,
                )
            )
    if not rows:
        raise EmptySelectionError(f"{path}: no result rows")
    return rows


def _with_min_series(rows: list[ResultRow]) -> list[ResultRow]:
    """Append the pointwise min of the two oracle weight-capping series."""
    by_key = {}
    for row in rows:
        if row.estimator in _MIN_PARENTS:
            by_key.setdefault((row.dataset, row.n), {})[row.estimator] = row
    extra = []
    for (dataset, n), pair in sorted(by_key.items()):
        if len(pair) != 2:
            continue
        best = min(pair.values(), key=lambda r: r.mse_trunc)
        extra.append(
            ResultRow(
                dataset=dataset,
                channel=best.channel,
                n=n,
                estimator=MIN_SERIES,
                replicates=best.replicates,
                mse_trunc=best.mse_trunc,
                rel_mse=best.rel_mse,
                std_err=best.std_err,
                tau_mean=best.tau_mean,
            )
        )
    return rows + extra


def _select(rows: list[ResultRow], spec: FigureSpec) -> list[ResultRow]:
    rows = _with_min_series(rows)
    have_estimators = {r.estimator for r in rows}
    have_datasets = {r.dataset for r in rows}
    for name in spec.estimators:
        if name not in have_estimators:
            raise EmptySelectionError(
                f"estimator {name!r} not in results (have {sorted(have_estimators)})"
            )
    for name in spec.datasets:
        if name not in have_datasets:
            raise EmptySelectionError(
                f"dataset {name!r} not in results (have {sorted(have_datasets)})"
            )
    out = [
        r
        for r in rows
        if (not spec.estimators or r.estimator in spec.estimators)
        and (not spec.datasets or r.dataset in spec.datasets)
    ]
    if not out:
        raise EmptySelectionError("selection matched no rows")
    return out


def _style_for(estimator: str, index: int) -> dict:
    style = dict(STYLE.get(estimator, {}))
    style.setdefault("color", _FALLBACK_COLORS[index % len(_FALLBACK_COLORS)])
    style.setdefault("marker", "o")
    return style


def cdf_curves(rows: list[ResultRow]) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Per-estimator step curves: sorted terminal relative MSEs and the
    dataset counts reaching each of them."""
    terminal = {}
    for row in rows:
        key = (row.dataset, row.estimator)
        if key not in terminal or row.n > terminal[key].n:
            terminal[key] = row
    by_estimator: dict[str, list[float]] = {}
    for (dataset, estimator), row in terminal.items():
        by_estimator.setdefault(estimator, []).append(row.rel_mse)
    curves = {}
    for estimator, values in sorted(by_estimator.items()):
        x = np.sort(np.asarray(values))
        y = np.arange(1, len(x) + 1, dtype=float)
        curves[estimator] = (x, y)
    return curves


def plot_cdf(spec: FigureSpec) -> str:
    """Count of datasets reaching at least a given relative MSE, per
    estimator, at each dataset's terminal size."""
    rows = _select(load_results(spec.csv_path), spec)
    curves = cdf_curves(rows)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for i, (estimator, (x, y)) in enumerate(curves.items()):
        style = _style_for(estimator, i)
        ax.step(x, y, where="post", label=estimator, **style)
    ax.set_xscale("log")
    ax.set_xlabel("relative MSE (vs ips)")
    ax.set_ylabel("datasets reaching at least this rel. MSE")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.out_path, dpi=150)
    plt.close(fig)
    return spec.out_path


def convergence_series(
    rows: list[ResultRow],
) -> dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Per-estimator (sizes, mse, std_err) sorted by size."""
    by_estimator: dict[str, list[ResultRow]] = {}
    for row in rows:
        by_estimator.setdefault(row.estimator, []).append(row)
    series = {}
    for estimator, chunk in sorted(by_estimator.items()):
        chunk = sorted(chunk, key=lambda r: r.n)
        series[estimator] = (
            np.array([r.n for r in chunk], dtype=float),
            np.array([r.mse_trunc for r in chunk]),
            np.array([r.std_err for r in chunk]),
        )
    return series


def plot_convergence(spec: FigureSpec) -> str:
    """Truncated MSE versus sample size for one dataset, log-log, with
    bands of two standard errors (clipped to stay positive on the log
    axis)."""
    rows = _select(load_results(spec.csv_path), spec)
    datasets = sorted({r.dataset for r in rows})
    if len(datasets) != 1:
        raise EmptySelectionError(
            f"convergence plots cover one dataset; select one of {datasets}"
        )
    sizes = {r.n for r in rows}
    if len(sizes) < 2:
        raise EmptySelectionError("need results at two or more sizes")
    series = convergence_series(rows)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    floor = 1e-12
    for i, (estimator, (x, mse, se)) in enumerate(series.items()):
        style = _style_for(estimator, i)
        ax.plot(x, np.maximum(mse, floor), label=estimator, **style)
        ax.fill_between(
            x,
            np.maximum(mse - 2 * se, floor),
            mse + 2 * se,
            color=style["color"],
            alpha=0.15,
            linewidth=0,
        )
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("sample size n")
    ax.set_ylabel("truncated MSE")
    ax.set_title(datasets[0])
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.out_path, dpi=150)
    plt.close(fig)
    return spec.out_path
