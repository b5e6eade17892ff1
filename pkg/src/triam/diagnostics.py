"""Empirical certification of a finished run.

Checks the properties the alternating trainer is built to guarantee:
monotone objective, epoch-end constraint feasibility, accepted
majorization conditions, vanishing per-block increments, approach to
stationarity (a normalized residual assembled from consecutive block
differences), and a geometric-decay estimate of the objective gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .linalg import frobenius_norm_sq
from .network import NetworkState
from .solver import MajorizationRecord
from .trainer import RunHistory

__all__ = [
    "DiagnosticsReport",
    "check_monotonicity",
    "increment_norms",
    "estimate_rate",
    "verify_majorization",
    "stationarity_residual",
    "build_report",
    "render_report",
    "report_kv",
]

# Audit re-verification slack; looser than the acceptance slack so a
# clean run can never fail its own audit through rounding.
_VERIFY_SLACK = 1e-10


@dataclass
class DiagnosticsReport:
    monotonicity_violations: list = field(default_factory=list)
    max_feasibility_violation: float = 0.0
    increment_norms: dict = field(default_factory=dict)
    increment_ratios: dict = field(default_factory=dict)
    rate_estimates: list = field(default_factory=list)
    rate_max_last_quartile: Optional[float] = None
    rate_max_last_quartile_wide_margin: Optional[float] = None
    majorization_failures: int = 0
    majorization_checked: int = 0
    stationarity_residuals: list = field(default_factory=list)
    stationarity_residual: float = 0.0
    aborted: bool = False
    abort_reason: str = ""


def _f_series(history) -> list:
    if isinstance(history, RunHistory):
        return [m.F for m in history.metrics]
    return [float(v) for v in history]


def check_monotonicity(history, slack: float) -> list:
    """Epochs where F rose by more than slack * (1 + |F_prev|); the
    equality case is allowed (descent is non-strict)."""
    F = _f_series(history)
    out = []
    for k in range(1, len(F)):
        delta = F[k] - F[k - 1]
        if delta > slack * (1.0 + abs(F[k - 1])):
            out.append((k, delta))  # k = 1-based epoch the rise departs from
    return out


def _family_diff(cur: list, prev: list) -> float:
    return math.sqrt(sum(frobenius_norm_sq(c - p) for c, p in zip(cur, prev)))


def increment_norms(snapshots):
    """Per-epoch ||delta||_F per block family from consecutive state
    snapshots, plus the (last-decile mean) / (first-decile mean) ratio.
    A single transition gives one norm and no ratio."""
    if len(snapshots) < 2:
        raise ValueError("need at least two snapshots")
    series = {"W": [], "b": [], "z": [], "a": []}
    for prev, cur in zip(snapshots, snapshots[1:]):
        series["W"].append(_family_diff(cur.W, prev.W))
        series["b"].append(_family_diff(cur.b, prev.b))
        series["z"].append(_family_diff(cur.z, prev.z))
        series["a"].append(_family_diff(cur.a, prev.a))
    return series, {k: decile_ratio(v) for k, v in series.items()}


def decile_ratio(series) -> Optional[float]:
    """(mean of last 10%) / (mean of first 10%); None when degenerate."""
    n = len(series)
    if n < 2:
        return None
    chunk = max(1, n // 10)
    head = float(np.mean(series[:chunk]))
    tail = float(np.mean(series[-chunk:]))
    if head == 0.0:
        return 0.0 if tail == 0.0 else math.inf
    return tail / head


def estimate_rate(F_history, F_star: float) -> list:
    """Two-epoch contraction candidates (F_{k+1} - F*) / (F_{k-1} - F*)
    wherever the denominator exceeds 1e-12."""
    F = _f_series(F_history)
    if len(F) < 3:
        raise ValueError("need at least three objective values")
    if F_star > min(F):
        raise ValueError("F_star must not exceed the observed minimum")
    out = []
    for k in range(2, len(F)):
        den = F[k - 2] - F_star
        if den > 1e-12:
            out.append((F[k] - F_star) / den)
    return out


def max_last_quartile(ratios) -> Optional[float]:
    if not ratios:
        return None
    return float(max(ratios[(3 * len(ratios)) // 4:]))


def verify_majorization(audit) -> tuple:
    """Re-evaluate every accepted surrogate condition from its stored
    scalars; returns (failure count, empty-audit flag)."""
    failures = 0
    count = 0
    for rec in audit:
        count += 1
        if rec.surrogate_value() < rec.target_value - _VERIFY_SLACK:
            failures += 1
    return failures, count == 0


def stationarity_residual(state_new: NetworkState, state_old: NetworkState) -> float:
    """Sum of current block-difference norms plus the previous-step terms
    for W, b, and z (normalization constant taken as 1); a vanishing
    value certifies approach to a stationary point."""
    total = (
        _family_diff(state_new.W, state_old.W)
        + _family_diff(state_new.z, state_old.z)
        + _family_diff(state_new.a, state_old.a)
        + _family_diff(state_new.b, state_old.b)
    )
    total += (
        _family_diff(state_old.W, state_old.prev_W)
        + _family_diff(state_old.b, state_old.prev_b)
        + _family_diff(state_old.z, state_old.prev_z)
    )
    return total


def _residual_series(increments: dict) -> list:
    """Stationarity residuals assembled from the per-epoch increment
    series the trainer records (previous-step terms lag one epoch)."""
    n = min((len(v) for v in increments.values() if v), default=0)
    out = []
    for k in range(n):
        cur = sum(increments[b][k] for b in ("W", "b", "z", "a") if increments[b])
        lag = sum(increments[b][k - 1] for b in ("W", "b", "z") if increments[b]) if k > 0 else 0.0
        out.append(cur + lag)
    return out


def build_report(history: RunHistory, slack: float = 1e-8) -> DiagnosticsReport:
    """Assemble the full report for one run."""
    report = DiagnosticsReport(aborted=history.aborted, abort_reason=history.abort_reason)
    report.monotonicity_violations = check_monotonicity(history, slack)
    if history.feasibility:
        report.max_feasibility_violation = float(max(history.feasibility))
    report.increment_norms = {k: list(v) for k, v in history.increments.items()}
    report.increment_ratios = {k: decile_ratio(v) for k, v in history.increments.items()}
    F = [m.F for m in history.metrics]
    if len(F) >= 3:
        report.rate_estimates = estimate_rate(F, min(F) - 1e-12)
        report.rate_max_last_quartile = max_last_quartile(report.rate_estimates)
        wide = estimate_rate(F, min(F) - 1e-11)
        report.rate_max_last_quartile_wide_margin = max_last_quartile(wide)
    failures, empty = verify_majorization(history.audit)
    report.majorization_failures = failures
    report.majorization_checked = 0 if empty else len(history.audit)
    report.stationarity_residuals = _residual_series(history.increments)
    if report.stationarity_residuals:
        report.stationarity_residual = report.stationarity_residuals[-1]
    return report


def report_kv(report: DiagnosticsReport) -> dict:
    """Flatten to the machine-readable key/value form."""
    kv = {
        "monotonicity_violations": len(report.monotonicity_violations),
        "max_feasibility_violation": report.max_feasibility_violation,
        "majorization_failures": report.majorization_failures,
        "majorization_checked": report.majorization_checked,
        "stationarity_residual": report.stationarity_residual,
        "aborted": int(report.aborted),
    }
    for block, ratio in sorted(report.increment_ratios.items()):
        kv[f"increment_ratio_{block}"] = "nan" if ratio is None else ratio
    kv["rate_max_last_quartile"] = (
        "nan" if report.rate_max_last_quartile is None else report.rate_max_last_quartile
    )
    kv["rate_max_last_quartile_wide_margin"] = (
        "nan"
        if report.rate_max_last_quartile_wide_margin is None
        else report.rate_max_last_quartile_wide_margin
    )
    return kv


def render_report(report: DiagnosticsReport) -> str:
    """Human-readable summary."""
    lines = ["run diagnostics", "==============="]
    if report.aborted:
        lines.append(f"ABORTED: {report.abort_reason}")
    nviol = len(report.monotonicity_violations)
    lines.append(f"objective monotonicity violations: {nviol}")
    for epoch, delta in report.monotonicity_violations[:10]:
        lines.append(f"  epoch {epoch}: +{delta:.3e}")
    lines.append(f"max epoch-end feasibility violation: {report.max_feasibility_violation:.3e}")
    lines.append(
        f"majorization audit: {report.majorization_failures} failures "
        f"of {report.majorization_checked} checked"
        + (" (empty audit)" if report.majorization_checked == 0 else "")
    )
    for block, ratio in sorted(report.increment_ratios.items()):
        shown = "n/a" if ratio is None else f"{ratio:.4f}"
        lines.append(f"increment decay ratio [{block}] (last/first decile): {shown}")
    if report.rate_max_last_quartile is not None:
        lines.append(
            f"contraction ratio, max over last quartile: {report.rate_max_last_quartile:.6f} "
            f"(wide margin: {report.rate_max_last_quartile_wide_margin:.6f})"
        )
    if report.stationarity_residuals:
        lines.append(f"final stationarity residual: {report.stationarity_residual:.6e}")
    else:
        lines.append("final stationarity residual: n/a (no increment series)")
    return "\n".join(lines) + "\n"
