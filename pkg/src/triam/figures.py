"""Figure rendering for the experiment report path.

Consumes the aggregate CSV and writes PNG curves next to it: test
accuracy and objective value per epoch, mean with a +/- one standard
deviation band across seeds.  The core library never needs these; any
plotting tool can consume the CSVs directly.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["render_aggregate"]


def _read_aggregate(path):
    data = np.genfromtxt(path, delimiter=",", names=True)
    data = np.atleast_1d(data)
    return (
        data["epoch"],
        data["test_acc_mean"],
        data["test_acc_std"],
        data["F_mean"],
        data["F_std"],
    )


def _band_plot(epoch, mean, std, ylabel, title, path):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(epoch, mean, lw=1.5)
    ax.fill_between(epoch, mean - std, mean + std, alpha=0.25, lw=0)
    ax.set_xlabel("epoch")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_aggregate(aggregate_csv, out_dir) -> list:
    """Write test_accuracy.png and objective.png; returns the paths."""
    out = Path(out_dir)
    epoch, acc_m, acc_s, f_m, f_s = _read_aggregate(aggregate_csv)
    acc_path = out / "test_accuracy.png"
    obj_path = out / "objective.png"
    _band_plot(epoch, acc_m, acc_s, "test accuracy", "mean test accuracy across seeds", acc_path)
    _band_plot(epoch, f_m, f_s, "objective value", "mean objective across seeds", obj_path)
    return [acc_path, obj_path]
