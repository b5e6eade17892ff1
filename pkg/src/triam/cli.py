"""Command-line interface.

Subcommands: ``train`` (alternating-minimization runs), ``baseline``
(backprop runs on the same setup), ``diagnose`` (re-check a metrics CSV
or audit JSON), ``synth`` (write a synthetic blobs dataset).  Exit
codes: 0 success, 1 configuration error, 2 numeric or infeasibility
abort, 3 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .config import load_config
from .data import save_csv, synth_blobs
from .diagnostics import (
    DiagnosticsReport,
    check_monotonicity,
    estimate_rate,
    max_last_quartile,
    render_report,
    verify_majorization,
)
from .errors import (
    BacktrackingError,
    ConfigError,
    DataFormatError,
    FeasibilityError,
    InfeasibleBoundsError,
    NumericError,
)
from .experiment import read_audit_json, read_metrics_csv, run_experiment
from .trainer import ABLATIONS

__all__ = ["main"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_IO = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="triam",
        description="Train MLPs by triple-inertial accelerated alternating minimization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run the alternating-minimization trainer")
    p_train.add_argument("--config", required=True, help="experiment TOML file")
    p_train.add_argument("--seed", type=int, default=None, help="run a single seed")
    p_train.add_argument("--out", default=None, help="output directory")
    p_train.add_argument("--epochs", type=int, default=None, help="override epoch count")
    p_train.add_argument("--ablation", choices=ABLATIONS, default=None)

    p_base = sub.add_parser("baseline", help="run a backprop baseline")
    p_base.add_argument("--config", required=True)
    p_base.add_argument("--optimizer", choices=("gd", "adam"), required=True)
    p_base.add_argument("--seed", type=int, default=None)
    p_base.add_argument("--out", default=None)
    p_base.add_argument("--epochs", type=int, default=None)

    p_diag = sub.add_parser("diagnose", help="check a metrics CSV or audit JSON")
    p_diag.add_argument("--history", required=True, help="metrics .csv or audit .json file")

    p_synth = sub.add_parser("synth", help="generate a blobs dataset CSV")
    p_synth.add_argument("--d", type=int, required=True)
    p_synth.add_argument("--classes", type=int, required=True)
    p_synth.add_argument("--per-class", type=int, required=True)
    p_synth.add_argument("--separation", type=float, required=True)
    p_synth.add_argument("--seed", type=int, required=True)
    p_synth.add_argument("--out", required=True)
    return parser


def _apply_overrides(cfg, args, kind):
    run = cfg.run
    updates = {"kind": kind}
    if args.seed is not None:
        updates["seeds"] = (args.seed,)
    if args.out is not None:
        updates["out_dir"] = args.out
    if getattr(args, "epochs", None) is not None:
        updates["epochs"] = args.epochs
    if getattr(args, "ablation", None) is not None:
        updates["ablation"] = args.ablation
    if getattr(args, "optimizer", None) is not None:
        updates["optimizer"] = args.optimizer
    return dataclasses.replace(cfg, run=dataclasses.replace(run, **updates))


def _cmd_train(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args, "tiam")
    return run_experiment(cfg)


def _cmd_baseline(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args, "baseline")
    return run_experiment(cfg)


def _cmd_diagnose(args) -> int:
    path = args.history
    report = DiagnosticsReport()
    if path.endswith(".json"):
        audit = read_audit_json(path)
        failures, empty = verify_majorization(audit)
        report.majorization_failures = failures
        report.majorization_checked = 0 if empty else len(audit)
    else:
        rows = read_metrics_csv(path)
        F = [m.F for m in rows]
        report.monotonicity_violations = check_monotonicity(F, 1e-8)
        if len(F) >= 3:
            report.rate_estimates = estimate_rate(F, min(F) - 1e-12)
            report.rate_max_last_quartile = max_last_quartile(report.rate_estimates)
            report.rate_max_last_quartile_wide_margin = max_last_quartile(
                estimate_rate(F, min(F) - 1e-11)
            )
    sys.stdout.write(render_report(report))
    return EXIT_OK


def _cmd_synth(args) -> int:
    ds = synth_blobs(args.d, args.classes, args.per_class, args.separation, args.seed)
    save_csv(ds, args.out)
    print(f"wrote {ds.num_samples} samples ({ds.num_features} features, "
          f"{ds.num_classes} classes) to {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "train": _cmd_train,
        "baseline": _cmd_baseline,
        "diagnose": _cmd_diagnose,
        "synth": _cmd_synth,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, DataFormatError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, FeasibilityError, InfeasibleBoundsError, BacktrackingError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
