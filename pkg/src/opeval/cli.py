"""Command-line entry points.

Subcommands:

* ``synth``        generate a synthetic multiclass dataset CSV
* ``simulate``     turn a dataset into a logged bandit dataset file
* ``evaluate``     run one estimator on a log file
* ``sweep``        run a full experiment config to a results CSV
* ``theory-check`` run the closed-form-vs-simulation battery to a report

Exit status: 0 on success, 1 on validation or usage errors, 2 on runtime
failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .bandit_sim import (
    DETERMINISTIC,
    NOISY,
    load_csv,
    make_policies,
    save_csv,
    simulate_log,
    synth_dataset,
)
from .core import OpevalError, read_log, write_log
from .estimators import ESTIMATOR_NAMES
from .harness import (
    EstimatorSpec,
    _ReplicateEval,
    load_config,
    run_experiment,
    write_results_csv,
    write_sweep_metadata,
)
from .reward_model import LogisticModel, LogisticRewardModel, TrainerConfig
from .theory_check import run_standard_checks


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opeval",
        description="Off-policy evaluation toolkit for contextual bandit logs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic multiclass dataset CSV")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--separation", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--name", default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("simulate", help="simulate a bandit log from a dataset CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--channel", choices=["deterministic", "noisy"], default="deterministic")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--policy-seed", type=int, default=0, help="seed for the covariate shift")
    p.add_argument("--iterations", type=int, default=500, help="policy trainer iterations")
    p.add_argument("--target-model-out", default=None)
    p.add_argument("--logging-model-out", default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="run one estimator on a log file")
    p.add_argument("--log", required=True)
    p.add_argument("--target-model", required=True)
    p.add_argument("--logging-model", required=True)
    p.add_argument(
        "--estimator", choices=list(ESTIMATOR_NAMES), required=True,
        help="note: 'magic' is a simplified multi-threshold combiner baseline",
    )
    p.add_argument("--tau", default="auto", help="'auto' or a number (switch family only)")
    p.add_argument("--reward-model", default=None, help="trained reward model file; trained on the log when omitted")
    p.add_argument("--grid-size", type=int, default=21)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iterations", type=int, default=500)
    p.add_argument("--out", default=None, help="write the JSON report here instead of stdout")

    p = sub.add_parser("sweep", help="run an experiment config to a results CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("theory-check", help="verify exact risk expressions against simulation")
    p.add_argument("--out", required=True)
    p.add_argument("--full", action="store_true", help="use the full replicate budget")
    p.add_argument("--seed", type=int, default=2017)

    return parser


def _cmd_synth(args) -> int:
    data = synth_dataset(
        args.classes, args.dim, args.per_class, args.separation, args.seed, name=args.name
    )
    save_csv(data, args.out)
    print(f"wrote {data.num_rows} rows, {data.num_classes} classes to {args.out}")
    return 0


def _cmd_simulate(args) -> int:
    data = load_csv(args.data)
    config = TrainerConfig(iterations=args.iterations)
    target, logging = make_policies(data, config, seed=args.policy_seed)
    channel = DETERMINISTIC if args.channel == "deterministic" else NOISY
    log = simulate_log(data, logging, channel, args.n, args.seed)
    write_log(log, args.out)
    if args.target_model_out:
        target.model.save(args.target_model_out)
    if args.logging_model_out:
        logging.model.save(args.logging_model_out)
    print(f"wrote {len(log)} records to {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    target_model = LogisticModel.load(args.target_model)
    logging_model = LogisticModel.load(args.logging_model)
    log = read_log(args.log, logging_policy=logging_model.as_softmax_policy())
    target = target_model.as_argmax_policy()

    override = None
    if args.reward_model is not None:
        override = LogisticRewardModel(LogisticModel.load(args.reward_model), cap=1.0)

    tau = args.tau if args.tau == "auto" else float(args.tau)
    spec = EstimatorSpec(
        name=args.estimator,
        tau=tau if args.estimator in ("switch", "switch-dr", "trim-ips", "trun-ips") else None,
    )
    ev = _ReplicateEval(
        log,
        target,
        TrainerConfig(iterations=args.iterations),
        args.grid_size,
        args.seed,
        reward_model_override=override,
    )
    value, used_tau = ev.evaluate(spec)
    payload = {"estimator": args.estimator, "value": value, "n": len(log)}
    if used_tau is not None:
        payload["tau"] = used_tau
    if spec.tau == "auto":
        payload["tuning"] = ev.trace_for(ev.tuning_key(spec.name)).to_dict()
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _cmd_sweep(args) -> int:
    config = load_config(args.config)
    rows = run_experiment(config)
    write_results_csv(rows, args.out)
    write_sweep_metadata(config, str(args.out) + ".meta.json")
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _cmd_theory_check(args) -> int:
    report = run_standard_checks(fast=not args.full, seed=args.seed)
    with open(args.out, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for check in report["checks"]:
        status = "pass" if check["passed"] else "FAIL"
        print(f"{status}  {check['name']}")
    print(f"report written to {args.out}")
    return 0 if report["all_passed"] else 2


_COMMANDS = {
    "synth": _cmd_synth,
    "simulate": _cmd_simulate,
    "evaluate": _cmd_evaluate,
    "sweep": _cmd_sweep,
    "theory-check": _cmd_theory_check,
}


def cli_dispatch(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return _COMMANDS[args.command](args)
    except (OpevalError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
