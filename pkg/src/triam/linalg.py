"""Dense float64 matrix kernel.

Every parameter, pre-activation and activation in the package is a 2-D
C-contiguous float64 ndarray ("dense matrix").  numpy supplies the
arithmetic; this module pins the contracts (shape checks, finiteness,
stable softmax) that the rest of the package relies on.

Unbounded clip sides are expressed as ``None`` for a whole side, or as
``-inf``/``+inf`` entries inside a bound array (IEEE infinities compare
exactly, so no finite sentinel is ever involved).
"""

from __future__ import annotations

import numpy as np

from .errors import InfeasibleBoundsError, ShapeError

__all__ = [
    "as_matrix",
    "matmul",
    "frobenius_norm_sq",
    "clip_elementwise",
    "softmax_columns",
]


def as_matrix(values) -> np.ndarray:
    """Coerce to a 2-D float64 array (copying only if needed)."""
    m = np.asarray(values, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got ndim={m.ndim}")
    return m


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit conformability check."""
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    return a @ b


def frobenius_norm_sq(m: np.ndarray) -> float:
    """Sum of squared entries."""
    return float(np.sum(m * m))


def _broadcast_bound(bound, shape):
    if bound is None:
        return None
    arr = np.asarray(bound, dtype=np.float64)
    if arr.ndim == 0:
        return np.full(shape, float(arr))
    if arr.shape != shape:
        raise ShapeError(f"bound shape {arr.shape} does not match matrix shape {shape}")
    return arr


def clip_elementwise(m: np.ndarray, lo=None, hi=None) -> np.ndarray:
    """Entrywise min(max(m, lo), hi).

    ``lo``/``hi`` may each be None (side absent), a scalar, or an array of
    m's shape whose -inf/+inf entries leave that entry unclipped on that
    side.  Raises InfeasibleBoundsError when lo > hi somewhere.
    """
    lo_a = _broadcast_bound(lo, m.shape)
    hi_a = _broadcast_bound(hi, m.shape)
    if lo_a is not None and hi_a is not None:
        bad = lo_a > hi_a
        if np.any(bad):
            idx = tuple(int(i) for i in np.argwhere(bad)[0])
            raise InfeasibleBoundsError(
                f"lower bound {lo_a[idx]} exceeds upper bound {hi_a[idx]} at entry {idx}"
            )
    out = m
    if lo_a is not None:
        out = np.maximum(out, lo_a)
    if hi_a is not None:
        out = np.minimum(out, hi_a)
    return out


def softmax_columns(z: np.ndarray) -> np.ndarray:
    """Column-wise softmax with max subtraction for overflow safety."""
    shifted = z - np.max(z, axis=0, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=0, keepdims=True)
