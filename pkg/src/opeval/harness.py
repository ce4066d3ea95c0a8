"""Experiment orchestration: replication loops, aggregation, persistence.

A sweep walks dataset x size x replicate.  Replicate randomness is keyed by
``mix64(master_seed, dataset_index, size_index, replicate_index)``, so any
worker can compute any replicate and the aggregate is independent of worker
count and scheduling.  Within one replicate every configured estimator sees
the identical simulated log (paired comparison).

Squared errors are truncated at 1 before averaging, which keeps the
heavy-tailed estimators' error bars finite; the truncation level is an
expert knob whose value is echoed into the sweep's metadata file.  Each
estimator's row also reports its truncated MSE relative to plain importance
weighting on the same replicates.
"""

from __future__ import annotations

import json
import multiprocessing
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .bandit_sim import (
    DETERMINISTIC,
    NOISY,
    MulticlassDataset,
    RewardChannel,
    ground_truth_value,
    load_csv,
    make_policies,
    simulate_log,
    synth_dataset,
)
from .core import BanditLog, Policy
from .estimators import (
    ESTIMATOR_NAMES,
    ZeroModel,
    dm,
    ips,
    switch_dr_estimate,
    switch_estimate,
    threshold_grid,
    trim_ips,
    trun_ips,
)
from .estimators import dr as dr_plain
from .reward_model import (
    LogisticRewardModel,
    TrainerConfig,
    cross_fit,
    cross_fitted_dr,
    train_reward_model,
)
from .seeding import mix64
from .tuning import magic_combine, select_tau, _grid_components

CONFIG_SCHEMA = "opeval-experiment/1"
DEFAULT_SIZE_SCHEDULE = (100, 200, 500, 1000, 2000, 5000, 10000)
RESULTS_HEADER = "dataset,channel,n,estimator,replicates,mse_trunc,rel_mse,std_err,tau_mean"
ORACLE_FAMILIES = ("switch", "switch-dr", "trim-ips", "trun-ips")

_FOLD_TAG = 101  # sub-seed tag for the cross-fit split


@dataclass(frozen=True)
class DatasetSpec:
    kind: str                     # "synth" or "csv"
    name: str
    path: Optional[str] = None
    num_classes: int = 0
    dim: int = 0
    per_class: int = 0
    separation: float = 0.0
    seed: int = 0

    def load(self) -> MulticlassDataset:
        if self.kind == "csv":
            if not self.path:
                raise ValueError(f"dataset {self.name}: csv spec needs a path")
            return load_csv(self.path, name=self.name)
        if self.kind == "synth":
            return synth_dataset(
                self.num_classes, self.dim, self.per_class, self.separation, self.seed,
                name=self.name,
            )
        raise ValueError(f"dataset {self.name}: unknown kind {self.kind!r}")


@dataclass(frozen=True)
class EstimatorSpec:
    name: str
    tau: object = None            # None, "auto", or a float
    label: str = ""

    def __post_init__(self):
        if self.name not in ESTIMATOR_NAMES:
            raise ValueError(f"unknown estimator {self.name!r}")
        needs_tau = self.name in ("switch", "switch-dr", "trim-ips", "trun-ips")
        tau = self.tau
        if needs_tau and tau is None:
            tau = "auto"
        if not needs_tau and tau is not None:
            raise ValueError(f"{self.name} takes no tau")
        if tau is not None and tau != "auto":
            tau = float(tau)
        object.__setattr__(self, "tau", tau)
        if not self.label:
            object.__setattr__(self, "label", self.name)


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple[DatasetSpec, ...]
    estimators: tuple[EstimatorSpec, ...]
    channel: str = "deterministic"
    sizes: Optional[tuple[int, ...]] = None
    replicates: int = 500
    master_seed: int = 0
    grid_size: int = 21
    oracle: bool = False
    oracle_estimators: tuple[str, ...] = ORACLE_FAMILIES
    truncation: float = 1.0
    trainer: TrainerConfig = field(default_factory=TrainerConfig)

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.channel not in ("deterministic", "noisy"):
            raise ValueError(f"unknown channel {self.channel!r}")
        if self.sizes is not None:
            sizes = tuple(int(s) for s in self.sizes)
            if any(s < 1 for s in sizes) or any(
                a > b for a, b in zip(sizes, sizes[1:])
            ):
                raise ValueError("sizes must be positive and nondecreasing")
            object.__setattr__(self, "sizes", sizes)
        if not self.datasets:
            raise ValueError("need at least one dataset")
        if self.truncation <= 0:
            raise ValueError("truncation must be positive")
        for fam in self.oracle_estimators:
            if fam not in ORACLE_FAMILIES:
                raise ValueError(f"oracle family must be one of {ORACLE_FAMILIES}")

    @property
    def reward_channel(self) -> RewardChannel:
        return DETERMINISTIC if self.channel == "deterministic" else NOISY

    @staticmethod
    def from_dict(raw: dict) -> "ExperimentConfig":
        if raw.get("schema") != CONFIG_SCHEMA:
            raise ValueError(
                f"config schema must be {CONFIG_SCHEMA!r}, got {raw.get('schema')!r}"
            )
        datasets = tuple(
            DatasetSpec(
                kind=d["kind"],
                name=d.get("name", f"dataset{i}"),
                path=d.get("path"),
                num_classes=int(d.get("num_classes", 0)),
                dim=int(d.get("dim", 0)),
                per_class=int(d.get("per_class", 0)),
                separation=float(d.get("separation", 0.0)),
                seed=int(d.get("seed", 0)),
            )
            for i, d in enumerate(raw["datasets"])
        )
        estimators = []
        for e in raw["estimators"]:
            if isinstance(e, str):
                estimators.append(EstimatorSpec(name=e))
            else:
                estimators.append(
                    EstimatorSpec(name=e["name"], tau=e.get("tau"), label=e.get("label", ""))
                )
        trainer_raw = raw.get("trainer", {})
        trainer = TrainerConfig(
            l2=float(trainer_raw.get("l2", 1e-4)),
            step_size=float(trainer_raw.get("step_size", 0.5)),
            iterations=int(trainer_raw.get("iterations", 500)),
            standardize=bool(trainer_raw.get("standardize", False)),
        )
        return ExperimentConfig(
            datasets=datasets,
            estimators=tuple(estimators),
            channel=raw.get("channel", "deterministic"),
            sizes=tuple(raw["sizes"]) if raw.get("sizes") else None,
            replicates=int(raw.get("replicates", 500)),
            master_seed=int(raw.get("master_seed", 0)),
            grid_size=int(raw.get("grid_size", 21)),
            oracle=bool(raw.get("oracle", False)),
            oracle_estimators=tuple(raw.get("oracle_estimators", ORACLE_FAMILIES)),
            truncation=float(raw.get("truncation", 1.0)),
            trainer=trainer,
        )


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return ExperimentConfig.from_dict(json.load(fh))


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
    tau_mean: Optional[float]

    def __post_init__(self):
        if not (0.0 <= self.mse_trunc):
            raise ValueError("truncated MSE must be nonnegative")
        if self.rel_mse < 0:
            raise ValueError("relative MSE must be nonnegative")

    def as_csv(self) -> str:
        tau = "" if self.tau_mean is None else repr(self.tau_mean)
        return (
            f"{self.dataset},{self.channel},{self.n},{self.estimator},"
            f"{self.replicates},{self.mse_trunc!r},{self.rel_mse!r},{self.std_err!r},{tau}"
        )


def default_sizes(num_rows: int) -> tuple[int, ...]:
    sizes = tuple(s for s in DEFAULT_SIZE_SCHEDULE if s <= num_rows)
    return sizes if sizes else (num_rows,)


# ---------------------------------------------------------------------------
# Per-replicate evaluation


class _ReplicateEval:
    """Runs every configured estimator on one simulated log, sharing the
    trained models and the tuning traces between estimators."""

    def __init__(self, log: BanditLog, target: Policy, trainer: TrainerConfig,
                 grid_size: int, seed: int, reward_model_override=None):
        self.log = log
        self.target = target
        self.trainer = trainer
        self.grid_size = grid_size
        self.seed = seed
        self.reward_model_override = reward_model_override
        self._full_model = None
        self._cf_model = None
        self._grid = None
        self._traces = {}

    @property
    def full_model(self) -> LogisticRewardModel:
        if self.reward_model_override is not None:
            return self.reward_model_override
        if self._full_model is None:
            self._full_model = LogisticRewardModel(
                train_reward_model(self.log, self.trainer), cap=1.0
            )
        return self._full_model

    @property
    def crossfit(self):
        if self._cf_model is None:
            pair = cross_fit(self.log, self.trainer, seed=mix64(self.seed, _FOLD_TAG))
            self._cf_model = (pair, pair.evaluation_model(cap=1.0))
        return self._cf_model

    @property
    def grid(self) -> np.ndarray:
        if self._grid is None:
            self._grid = threshold_grid(self.log, self.target, self.grid_size)
        return self._grid

    def tuning_key(self, name: str) -> str:
        if name in ("trim-ips", "trun-ips"):
            return "zero"
        if name == "switch-dr" and self.reward_model_override is None:
            return "crossfit"
        return "full"

    def _model_for(self, key: str):
        if key == "zero":
            return ZeroModel()
        if key == "full":
            return self.full_model
        return self.crossfit[1]

    def trace_for(self, key: str):
        if key not in self._traces:
            self._traces[key] = select_tau(
                self.log, self.target, self._model_for(key), 1.0, self.grid
            )
        return self._traces[key]

    def _resolve_tau(self, spec_tau, model_key: str) -> float:
        if spec_tau == "auto":
            return self.trace_for(model_key).chosen_tau
        return float(spec_tau)

    def evaluate(self, spec: EstimatorSpec) -> tuple[float, Optional[float]]:
        name = spec.name
        if name == "ips":
            return ips(self.log, self.target).value, None
        if name == "dm":
            return dm(self.log, self.target, self.full_model).value, None
        if name == "dr":
            if self.reward_model_override is not None:
                return dr_plain(self.log, self.target, self.reward_model_override).value, None
            pair, _ = self.crossfit
            return cross_fitted_dr(self.log, self.target, pair, cap=1.0).value, None
        if name == "magic":
            return magic_combine(self.log, self.target, self.full_model, self.grid).value, None
        if name == "switch":
            tau = self._resolve_tau(spec.tau, self.tuning_key(name))
            return switch_estimate(self.log, self.target, self.full_model, tau).value, tau
        if name == "switch-dr":
            tau = self._resolve_tau(spec.tau, self.tuning_key(name))
            model = self._model_for(self.tuning_key(name))
            return switch_dr_estimate(self.log, self.target, model, model, tau).value, tau
        if name == "trim-ips":
            tau = self._resolve_tau(spec.tau, "zero")
            return trim_ips(self.log, self.target, tau).value, tau
        if name == "trun-ips":
            tau = self._resolve_tau(spec.tau, "zero")
            return trun_ips(self.log, self.target, tau).value, tau
        raise ValueError(f"unknown estimator {name!r}")

    def oracle_values(self, family: str) -> np.ndarray:
        """Estimates at every grid threshold for one estimator family."""
        taus = self.grid
        if family == "switch":
            y, _, _ = _grid_components(self.log, self.target, self.full_model, 0.0, taus)
            return y.mean(axis=0)
        if family == "trim-ips":
            y, _, _ = _grid_components(self.log, self.target, ZeroModel(), 0.0, taus)
            return y.mean(axis=0)
        if family == "switch-dr":
            model = self._model_for(self.tuning_key("switch-dr"))
            return np.array(
                [
                    switch_dr_estimate(self.log, self.target, model, model, t).value
                    for t in taus
                ]
            )
        if family == "trun-ips":
            return np.array([trun_ips(self.log, self.target, t).value for t in taus])
        raise ValueError(f"unknown oracle family {family!r}")


_WORKER: dict = {}


def _init_worker(payload: dict) -> None:
    _WORKER.update(payload)


def _run_replicate(task: tuple[int, int, int, int]) -> dict:
    size_index, n, rep, seed = task
    data = _WORKER["data"]
    try:
        log = simulate_log(data, _WORKER["logging"], _WORKER["channel"], n, seed)
        ev = _ReplicateEval(
            log, _WORKER["target"], _WORKER["trainer"], _WORKER["grid_size"], seed
        )
        values, taus = {}, {}
        for spec in _WORKER["specs"]:
            values[spec.label], taus[spec.label] = ev.evaluate(spec)
        oracle = {}
        for family in _WORKER["oracle_families"]:
            oracle[family] = (ev.oracle_values(family), ev.grid.copy())
        return {"values": values, "taus": taus, "oracle": oracle}
    except Exception as exc:
        raise RuntimeError(
            f"replicate failed: dataset={data.name!r} size_index={size_index} "
            f"n={n} replicate={rep} seed={seed}"
        ) from exc


def _worker_count() -> int:
    raw = os.environ.get("OPE_WORKERS", "1")
    try:
        count = int(raw)
    except ValueError:
        raise ValueError(f"OPE_WORKERS must be an integer, got {raw!r}") from None
    return max(count, 1)


def _truncated_stats(errors: np.ndarray) -> tuple[float, float]:
    mse = float(errors.mean())
    std_err = float(errors.std(ddof=1) / np.sqrt(len(errors))) if len(errors) > 1 else 0.0
    return mse, std_err


def _sweep_dataset(
    config: ExperimentConfig,
    dataset_index: int,
    spec: DatasetSpec,
    oracle_only: bool,
) -> list[ResultRow]:
    data = spec.load()
    target, logging = make_policies(
        data, config.trainer, seed=mix64(config.master_seed, dataset_index)
    )
    truth = ground_truth_value(data, target, config.reward_channel)
    sizes = config.sizes if config.sizes is not None else default_sizes(data.num_rows)

    specs = () if oracle_only else config.estimators
    need_ips = not oracle_only and all(s.name != "ips" for s in specs)
    if need_ips:
        specs = specs + (EstimatorSpec(name="ips"),)
    oracle_families = config.oracle_estimators if (config.oracle or oracle_only) else ()

    payload = {
        "data": data,
        "target": target,
        "logging": logging,
        "channel": config.reward_channel,
        "trainer": config.trainer,
        "grid_size": config.grid_size,
        "specs": specs,
        "oracle_families": oracle_families,
    }
    tasks = [
        (si, n, rep, mix64(config.master_seed, dataset_index, si, rep))
        for si, n in enumerate(sizes)
        for rep in range(config.replicates)
    ]
    workers = _worker_count()
    if workers == 1:
        _init_worker(payload)
        results = [_run_replicate(t) for t in tasks]
        _WORKER.clear()
    else:
        with multiprocessing.Pool(
            workers, initializer=_init_worker, initargs=(payload,)
        ) as pool:
            results = pool.map(_run_replicate, tasks, chunksize=max(1, len(tasks) // (4 * workers)))

    rows: list[ResultRow] = []
    trunc = config.truncation
    for si, n in enumerate(sizes):
        chunk = results[si * config.replicates : (si + 1) * config.replicates]
        ips_errors = None
        if not oracle_only:
            ips_errors = np.minimum(
                (np.array([c["values"]["ips"] for c in chunk]) - truth) ** 2, trunc
            )
            ips_mse = float(ips_errors.mean())
        for est in config.estimators if not oracle_only else ():
            vals = np.array([c["values"][est.label] for c in chunk])
            errors = np.minimum((vals - truth) ** 2, trunc)
            mse, std_err = _truncated_stats(errors)
            taus = [c["taus"][est.label] for c in chunk]
            tau_mean = None if taus[0] is None else float(np.mean(taus))
            rel = _relative(mse, ips_mse)
            rows.append(
                ResultRow(
                    dataset=data.name,
                    channel=config.channel,
                    n=n,
                    estimator=est.label,
                    replicates=config.replicates,
                    mse_trunc=mse,
                    rel_mse=rel,
                    std_err=std_err,
                    tau_mean=tau_mean,
                )
            )
        for family in oracle_families:
            values = np.stack([c["oracle"][family][0] for c in chunk])   # (R, J)
            grids = np.stack([c["oracle"][family][1] for c in chunk])    # (R, J)
            errors = np.minimum((values - truth) ** 2, trunc)
            per_tau_mse = errors.mean(axis=0)
            j_star = int(np.argmin(per_tau_mse))
            mse, std_err = _truncated_stats(errors[:, j_star])
            rel = _relative(mse, ips_mse) if ips_errors is not None else float("nan")
            rows.append(
                ResultRow(
                    dataset=data.name,
                    channel=config.channel,
                    n=n,
                    estimator=f"oracle-{family}",
                    replicates=config.replicates,
                    mse_trunc=mse,
                    rel_mse=rel,
                    std_err=std_err,
                    tau_mean=float(grids[:, j_star].mean()),
                )
            )
    return rows


def _relative(mse: float, ips_mse: float) -> float:
    if ips_mse == 0.0:
        return 1.0 if mse == 0.0 else float("inf")
    return mse / ips_mse


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """Full sweep: every dataset, size and configured estimator.

    An ips row is always computed (and emitted only if configured) because
    every row's relative MSE is normalized by ips on the same replicates.
    """
    rows: list[ResultRow] = []
    for di, spec in enumerate(config.datasets):
        rows.extend(_sweep_dataset(config, di, spec, oracle_only=False))
    return rows


def run_oracle_tau(config: ExperimentConfig) -> list[ResultRow]:
    """Hindsight-tuned rows only: for each (dataset, size) and family, the
    single grid index minimizing the truncated MSE across replicates."""
    rows: list[ResultRow] = []
    for di, spec in enumerate(config.datasets):
        rows.extend(_sweep_dataset(config, di, spec, oracle_only=True))
    return rows


def write_results_csv(rows: Sequence[ResultRow], path) -> None:
    with open(path, "w") as fh:
        fh.write(RESULTS_HEADER + "\n")
        for row in rows:
            fh.write(row.as_csv() + "\n")


def write_sweep_metadata(config: ExperimentConfig, path) -> None:
    """Echo the settings that shaped the CSV (notably the truncation level)."""
    meta = {
        "schema": CONFIG_SCHEMA,
        "truncation": config.truncation,
        "master_seed": config.master_seed,
        "replicates": config.replicates,
        "channel": config.channel,
        "grid_size": config.grid_size,
        "estimators": [e.label for e in config.estimators],
        "datasets": [d.name for d in config.datasets],
    }
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
