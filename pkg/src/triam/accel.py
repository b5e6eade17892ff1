"""Inertial extrapolation, adaptive schedules, and the descent safeguard.

Each parameter block is updated through three extrapolated views: a prox
center (tilde), a gradient-evaluation point (hat), and a post-update
export (bar) that later subproblems read.  The safeguard wraps every
block update: if the accelerated step raises the objective, the step is
redone from non-extrapolated iterates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import BacktrackingError, NumericError, ShapeError

__all__ = [
    "AccelTriple",
    "ScheduleConfig",
    "extrapolate",
    "schedule_p",
    "schedule_eps",
    "schedule_rho",
    "safeguarded_update",
]


def extrapolate(current: np.ndarray, previous: np.ndarray, p: float) -> np.ndarray:
    """current + p * (current - previous)."""
    if current.shape != previous.shape:
        raise ShapeError(f"extrapolate shapes differ: {current.shape} vs {previous.shape}")
    if p == 0.0:
        return current
    return current + p * (current - previous)


@dataclass(frozen=True)
class AccelTriple:
    """The three extrapolated views of one parameter block for one update."""

    tilde: np.ndarray
    hat: np.ndarray
    bar: Optional[np.ndarray] = None

    @staticmethod
    def make(current: np.ndarray, previous: np.ndarray, p1: float, p2: float) -> "AccelTriple":
        return AccelTriple(
            tilde=extrapolate(current, previous, p1),
            hat=extrapolate(current, previous, p2),
        )


@dataclass(frozen=True)
class ScheduleConfig:
    """Inertia bases, penalty weight, and tolerance schedule settings.

    ``rho_mode`` selects the literal update max(growth*rho, clip) or the
    capped variant min(growth*rho, clip); ``rho_signal`` selects whether
    the trigger watches the full objective or the loss alone.
    """

    p1_base: float = 0.0
    p2_base: float = 0.0
    p3_base: float = 0.0
    p3_exponent: float = 1.25
    eps0: float = 100.0
    eps_floor: float = 1e-4
    rho0: float = 1e-3
    rho_growth: float = 1.2
    rho_clip: float = 1e-3
    rho_mode: str = "max"
    rho_signal: str = "objective"
    K: int = 200

    def __post_init__(self):
        for name in ("p1_base", "p2_base", "p3_base"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if not (self.eps0 >= self.eps_floor > 0.0):
            raise ValueError("need eps0 >= eps_floor > 0")
        if self.rho0 <= 0.0:
            raise ValueError(f"rho0 must be > 0, got {self.rho0}")
        if self.rho_growth <= 1.0:
            raise ValueError(f"rho_growth must be > 1, got {self.rho_growth}")
        if self.rho_mode not in ("max", "min"):
            raise ValueError(f"rho_mode must be 'max' or 'min', got {self.rho_mode!r}")
        if self.rho_signal not in ("objective", "loss"):
            raise ValueError(f"rho_signal must be 'objective' or 'loss', got {self.rho_signal!r}")
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")


def schedule_p(k: int, cfg: ScheduleConfig):
    """Inertia coefficients at epoch k (1-based): the first two ramp up as
    (k-1)/(k+2), the third decays as (1 - k/K)^exponent."""
    if not 1 <= k <= cfg.K:
        raise ValueError(f"epoch index {k} outside 1..{cfg.K}")
    ramp = (k - 1) / (k + 2)
    decay = (1.0 - k / cfg.K) ** cfg.p3_exponent
    return ramp * cfg.p1_base, ramp * cfg.p2_base, decay * cfg.p3_base


def schedule_eps(k: int, cfg: ScheduleConfig) -> float:
    """max(eps0 / 2^k, eps_floor) for k >= 0."""
    if k < 0:
        raise ValueError(f"epoch index must be >= 0, got {k}")
    return max(cfg.eps0 * 0.5 ** k, cfg.eps_floor)


def schedule_rho(rho: float, cost_history, cfg: ScheduleConfig) -> float:
    """Grow rho after two consecutive non-decreases of the epoch cost.

    ``cost_history`` holds the most recent epoch costs in chronological
    order; fewer than three entries leaves rho untouched.
    """
    if rho <= 0.0:
        raise ValueError(f"rho must be > 0, got {rho}")
    if len(cost_history) < 3:
        return rho
    c0, c1, c2 = cost_history[-3], cost_history[-2], cost_history[-1]
    if c2 >= c1 and c1 >= c0:
        grown = cfg.rho_growth * rho
        return max(grown, cfg.rho_clip) if cfg.rho_mode == "max" else min(grown, cfg.rho_clip)
    return rho


def safeguarded_update(
    block: str,
    plain_update: Callable[[], tuple],
    accel_update: Callable[[], tuple],
    f_before: float,
    f_evaluator: Callable[[np.ndarray], float],
    old_value: np.ndarray,
    p3: float,
    allow_skip: bool = True,
):
    """Run the accelerated update; fall back to the plain one on objective
    increase (or on an accelerated backtracking failure, which can occur
    because its majorization condition mixes extrapolated and plain
    evaluation points and need not be satisfiable).

    Both callables return ``(value, aux)`` where aux is update-specific
    (e.g. the accepted majorization constant).  The objective evaluator
    must cover every term of F that depends on this block; terms constant
    in the block may be omitted since only differences matter.

    When even the plain step raises the objective (possible for the
    box-projected blocks when the feasible box moved since the previous
    iterate was set) the block keeps its old value if ``allow_skip`` is
    set; otherwise the plain result is accepted as-is.

    Returns ``(value, aux, bar, reverted)``.
    """
    slack = 1e-12 * (1.0 + abs(f_before))  # absorbs last-ulp evaluation wobble
    result = None
    reverted = False
    try:
        candidate, aux = accel_update()
        f_acc = f_evaluator(candidate)
        if not math.isfinite(f_acc):
            raise NumericError(f"objective non-finite after accelerated {block} update")
        if f_acc <= f_before + slack:
            result = (candidate, aux)
    except BacktrackingError:
        pass
    if result is None:
        reverted = True
        candidate, aux = plain_update()
        f_plain = f_evaluator(candidate)
        if not math.isfinite(f_plain):
            raise NumericError(f"objective non-finite after plain {block} update")
        if allow_skip and f_plain > f_before + slack:
            candidate, aux = old_value, None
        result = (candidate, aux)
    value, aux = result
    bar = extrapolate(value, old_value, p3)
    return value, aux, bar, reverted
