"""Multi-seed experiment orchestration and file outputs.

Per seed: a metrics CSV, a diagnostics report (plain text plus a
key=value file), and, for audited runs, a JSON dump of the accepted
majorization conditions.  After all seeds: an aggregate CSV with the
per-epoch mean and standard deviation of test accuracy and objective
across seeds, figures rendered from the same aggregate, and an echo of
the resolved configuration.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from . import figures
from .baselines import train_baseline
from .config import ExperimentConfig
from .data import Dataset, load_csv, split, synth_blobs
from .diagnostics import build_report, render_report, report_kv
from .errors import ConfigError
from .solver import MajorizationRecord
from .trainer import EpochMetrics, RunHistory, TrainConfig, train

__all__ = [
    "METRIC_COLUMNS",
    "run_experiment",
    "write_metrics_csv",
    "read_metrics_csv",
    "write_aggregate_csv",
]

METRIC_COLUMNS = (
    "epoch", "F", "loss", "train_acc", "test_acc",
    "rho", "eps", "p1", "p2", "p3", "reverts", "wall_ms",
)


def _fmt(value) -> str:
    if isinstance(value, int):
        return str(value)
    return f"{value:.17g}"


def write_metrics_csv(history: RunHistory, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(METRIC_COLUMNS) + "\n")
        for m in history.metrics:
            fh.write(",".join(_fmt(getattr(m, c)) for c in METRIC_COLUMNS) + "\n")


def read_metrics_csv(path) -> list:
    """Read a metrics CSV back into EpochMetrics rows."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if header != list(METRIC_COLUMNS):
            raise ConfigError(f"{path}: unexpected metrics header {header}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            vals = line.split(",")
            kw = {}
            for col, raw in zip(METRIC_COLUMNS, vals):
                kw[col] = int(raw) if col in ("epoch", "reverts") else float(raw)
            rows.append(EpochMetrics(**kw))
    return rows


def write_aggregate_csv(histories: dict, path) -> None:
    """Per-epoch mean/std of test accuracy and objective across seeds,
    over the epochs every run completed."""
    n_epochs = min(len(h.metrics) for h in histories.values())
    acc = np.array([[h.metrics[k].test_acc for k in range(n_epochs)] for h in histories.values()])
    obj = np.array([[h.metrics[k].F for k in range(n_epochs)] for h in histories.values()])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("epoch,test_acc_mean,test_acc_std,F_mean,F_std\n")
        for k in range(n_epochs):
            fh.write(
                f"{k + 1},{_fmt(float(acc[:, k].mean()))},{_fmt(float(acc[:, k].std()))},"
                f"{_fmt(float(obj[:, k].mean()))},{_fmt(float(obj[:, k].std()))}\n"
            )


def write_audit_json(history: RunHistory, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([dataclasses.asdict(rec) for rec in history.audit], fh)


def read_audit_json(path) -> list:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    return [MajorizationRecord(**rec) for rec in raw]


def _load_dataset(cfg: ExperimentConfig) -> Dataset:
    ds = cfg.dataset
    if ds.kind == "csv":
        return load_csv(ds.path)
    return synth_blobs(ds.d, ds.classes, ds.per_class, ds.separation, ds.seed)


def _echo_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for section in ("dataset", "model", "schedules", "backtracking", "fista", "run"):
            fh.write(f"[{section}]\n")
            for key, value in dataclasses.asdict(getattr(cfg, section)).items():
                fh.write(f"{key} = {value!r}\n")
            fh.write("\n")


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> int:
    """Run every seed, write all artifacts, and return the exit status
    (0, or 2 when any run aborted)."""
    out = Path(out_dir if out_dir is not None else cfg.run.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    full = _load_dataset(cfg)
    train_ds, test_ds = split(full, cfg.dataset.train_fraction, cfg.dataset.split_seed)
    spec = cfg.model.build_spec(full.num_features, full.num_classes)
    train_pair = (train_ds.x, train_ds.labels)
    test_pair = (test_ds.x, test_ds.labels)

    histories = {}
    any_aborted = False
    for seed in cfg.run.seeds:
        if cfg.run.kind == "tiam":
            tcfg = TrainConfig(
                spec=spec,
                hyper=cfg.schedules,
                reg=cfg.model.build_reg(),
                backtrack=cfg.backtracking,
                fista=cfg.fista,
                epochs=cfg.run.epochs,
                seed=seed,
                ablation=cfg.run.ablation,
                audit=cfg.run.audit,
            )
            history = train(tcfg, train_pair, test_pair)
        else:
            history = train_baseline(cfg.build_baseline(seed), spec, train_pair, test_pair)
        histories[seed] = history
        any_aborted = any_aborted or history.aborted

        write_metrics_csv(history, out / f"seed_{seed}_metrics.csv")
        report = build_report(history)
        (out / f"seed_{seed}_diagnostics.txt").write_text(render_report(report), encoding="utf-8")
        kv = report_kv(report)
        (out / f"seed_{seed}_diagnostics.kv").write_text(
            "".join(f"{k}={v}\n" for k, v in kv.items()), encoding="utf-8"
        )
        if cfg.run.kind == "tiam" and cfg.run.audit:
            write_audit_json(history, out / f"seed_{seed}_audit.json")

    completed = {s: h for s, h in histories.items() if h.metrics}
    if completed:
        write_aggregate_csv(completed, out / "aggregate.csv")
        if cfg.run.figures:
            figures.render_aggregate(out / "aggregate.csv", out)
    _echo_config(cfg, out / "config_echo.txt")
    return 2 if any_aborted else 0
