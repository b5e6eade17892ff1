"""MLP problem data for penalty-based alternating minimization.

The training problem keeps, per layer l = 1..L, a weight matrix W_l, a
bias column b_l, pre-activations z_l and (for l < L) activations a_l,
coupled by the quadratic penalty

    phi(a_prev, W, z, b) = (rho/2) * ||z - W a_prev - b 1^T||_F^2

and by the relaxed activation constraint  h(z_l) - eps <= a_l <= h(z_l) + eps.
The objective is  F = R(z_L; y) + sum_l Omega(W_l) + sum_l phi_l  with R the
mean softmax cross-entropy over batch columns.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import FeasibilityError, ShapeError
from .linalg import frobenius_norm_sq, matmul, softmax_columns

__all__ = [
    "Activation",
    "NetworkSpec",
    "NetworkState",
    "RegularizerSpec",
    "activation_apply",
    "activation_derivative",
    "activation_inverse_bounds",
    "penalty_phi",
    "penalty_grads",
    "loss_R",
    "loss_R_grad",
    "regularizer_value",
    "objective_F",
    "forward_inference",
]

ACTIVATION_KINDS = ("relu", "leaky_relu", "erelu", "cerelu")

# Default negative-region slopes: 0.01 for leaky, 0.1 for the exponential kinds.
_DEFAULT_ALPHA = {"relu": 0.01, "leaky_relu": 0.01, "erelu": 0.1, "cerelu": 0.1}

# exp(z) for z below this underflows the distance to the activation's
# infimum; used when a repair must park z in the saturated region.
_SATURATED_ARG = -40.0


@dataclass(frozen=True)
class Activation:
    """A ReLU-family activation; ``alpha`` shapes the negative region."""

    kind: str
    alpha: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ACTIVATION_KINDS:
            raise ValueError(f"unknown activation kind {self.kind!r}")
        alpha = self.alpha if self.alpha is not None else _DEFAULT_ALPHA[self.kind]
        if alpha <= 0:
            raise ValueError(f"activation alpha must be > 0, got {alpha}")
        object.__setattr__(self, "alpha", float(alpha))


@dataclass(frozen=True)
class NetworkSpec:
    """Layer widths [d, n_1, ..., n_L] plus the hidden activation."""

    layer_dims: tuple
    activation: Activation
    num_classes: int

    def __post_init__(self):
        dims = tuple(int(n) for n in self.layer_dims)
        if len(dims) < 3:
            raise ValueError("need at least one hidden layer (>= 3 dims)")
        if any(n < 1 for n in dims):
            raise ValueError(f"all layer dims must be >= 1, got {dims}")
        if self.num_classes != dims[-1]:
            raise ValueError(
                f"num_classes {self.num_classes} != output dim {dims[-1]}"
            )
        object.__setattr__(self, "layer_dims", dims)

    @property
    def num_layers(self) -> int:
        return len(self.layer_dims) - 1


@dataclass
class NetworkState:
    """Per-layer parameter quadruple plus previous-iterate snapshots.

    ``W[i]``, ``b[i]``, ``z[i]`` cover layer i+1; ``a[i]`` is the activation
    of layer i+1 and exists only for the L-1 hidden layers.  The ``prev_*``
    lists hold the values of the previous outer iteration and feed the
    inertial extrapolations.
    """

    W: list = field(default_factory=list)
    b: list = field(default_factory=list)
    z: list = field(default_factory=list)
    a: list = field(default_factory=list)
    prev_W: list = field(default_factory=list)
    prev_b: list = field(default_factory=list)
    prev_z: list = field(default_factory=list)
    prev_a: list = field(default_factory=list)

    @property
    def num_layers(self) -> int:
        return len(self.W)

    def a_input(self, layer: int, x: np.ndarray) -> np.ndarray:
        """Input activation of layer ``layer`` (1-based); layer 1 reads x."""
        return x if layer == 1 else self.a[layer - 2]

    def clone(self) -> "NetworkState":
        return NetworkState(
            W=[m.copy() for m in self.W],
            b=[m.copy() for m in self.b],
            z=[m.copy() for m in self.z],
            a=[m.copy() for m in self.a],
            prev_W=[m.copy() for m in self.prev_W],
            prev_b=[m.copy() for m in self.prev_b],
            prev_z=[m.copy() for m in self.prev_z],
            prev_a=[m.copy() for m in self.prev_a],
        )


@dataclass(frozen=True)
class RegularizerSpec:
    """Weight regularizer: kind in {none, l2, l1} with strength nu >= 0."""

    kind: str = "none"
    strength: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "l2", "l1"):
            raise ValueError(f"unknown regularizer kind {self.kind!r}")
        if self.strength < 0:
            raise ValueError(f"regularizer strength must be >= 0, got {self.strength}")


def activation_apply(act: Activation, z: np.ndarray) -> np.ndarray:
    """Entrywise h(z) for the configured kind."""
    if act.kind == "relu":
        return np.maximum(z, 0.0)
    alpha = act.alpha
    neg = np.minimum(z, 0.0)
    if act.kind == "leaky_relu":
        negative = alpha * neg
    elif act.kind == "erelu":
        negative = alpha * np.expm1(neg)
    else:  # cerelu
        negative = alpha * np.expm1(neg / alpha)
    return np.where(z >= 0.0, z, negative)


def activation_derivative(act: Activation, z: np.ndarray) -> np.ndarray:
    """A.e. derivative h'(z); the kink at 0 takes the negative-side value
    for relu (0) and the closed-form negative branch otherwise."""
    if act.kind == "relu":
        return (z > 0.0).astype(np.float64)
    alpha = act.alpha
    neg = np.minimum(z, 0.0)
    if act.kind == "leaky_relu":
        negative = np.full_like(z, alpha)
    elif act.kind == "erelu":
        negative = alpha * np.exp(neg)
    else:  # cerelu
        negative = np.exp(neg / alpha)
    return np.where(z > 0.0, 1.0, negative)


def _inverse_monotone(act: Activation, t: np.ndarray) -> np.ndarray:
    """h^{-1}(t) for the strictly monotone kinds; caller guarantees t is in
    the open range of h."""
    alpha = act.alpha
    neg = np.minimum(t, 0.0)
    if act.kind == "leaky_relu":
        negative = neg / alpha
    elif act.kind == "erelu":
        negative = np.log1p(neg / alpha)
    else:  # cerelu
        negative = alpha * np.log1p(neg / alpha)
    return np.where(t >= 0.0, t, negative)


def activation_inverse_bounds(
    act: Activation, a: np.ndarray, eps: float, repair: bool = False
):
    """Entrywise tightest interval [B1, B2] with  z in [B1, B2]  iff
    a - eps <= h(z) <= a + eps.

    Unbounded sides are -inf/+inf entries.  An entry is infeasible when the
    demanded value band lies entirely below the activation's infimum
    (a + eps < 0 for relu; a + eps <= -alpha for the exponential kinds).
    Infeasible entries raise FeasibilityError unless ``repair`` is set, in
    which case they relax to the nearest achievable band: z is confined to
    the saturated region where h sits at its infimum.
    """
    if eps <= 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    t_lo = a - eps
    t_hi = a + eps

    if act.kind == "relu":
        infeasible = t_hi < 0.0
        upper = np.where(t_hi >= 0.0, t_hi, 0.0)
        lower = np.where(t_lo > 0.0, t_lo, -np.inf)
    elif act.kind == "leaky_relu":
        # Bijective on all of R: always feasible.
        infeasible = np.zeros(a.shape, dtype=bool)
        upper = _inverse_monotone(act, t_hi)
        lower = _inverse_monotone(act, t_lo)
    else:
        alpha = act.alpha
        inf_h = -alpha
        scale = 1.0 if act.kind == "erelu" else alpha
        infeasible = t_hi <= inf_h
        upper = _inverse_monotone(act, np.where(infeasible, 0.0, t_hi))
        upper = np.where(infeasible, _SATURATED_ARG * scale, upper)
        below = t_lo <= inf_h
        lower = _inverse_monotone(act, np.where(below, 0.0, t_lo))
        lower = np.where(below, -np.inf, lower)

    if np.any(infeasible):
        if not repair:
            idx = tuple(int(i) for i in np.argwhere(infeasible)[0])
            raise FeasibilityError(
                f"no pre-activation satisfies |h(z) - a| <= eps at entry {idx}: "
                f"a={a[idx]}, eps={eps}"
            )
        lower = np.where(infeasible, -np.inf, lower)
    return lower, upper


def _check_penalty_shapes(a_prev, W, z, b):
    n, m = W.shape
    if a_prev.shape[0] != m:
        raise ShapeError(f"W {W.shape} does not accept input {a_prev.shape}")
    if z.shape != (n, a_prev.shape[1]):
        raise ShapeError(f"z {z.shape} mismatches W a_prev {(n, a_prev.shape[1])}")
    if b.shape != (n, 1):
        raise ShapeError(f"b must be {(n, 1)}, got {b.shape}")


def penalty_phi(a_prev, W, z, b, rho: float) -> float:
    """(rho/2) ||z - W a_prev - b||_F^2 with b broadcast over columns."""
    _check_penalty_shapes(a_prev, W, z, b)
    r = z - matmul(W, a_prev) - b
    return 0.5 * rho * frobenius_norm_sq(r)


def penalty_grads(a_prev, W, z, b, rho: float):
    """Gradients of penalty_phi w.r.t. (W, b, z, a_prev), in that order."""
    _check_penalty_shapes(a_prev, W, z, b)
    r = z - matmul(W, a_prev) - b
    gW = -rho * matmul(r, a_prev.T)
    gb = -rho * np.sum(r, axis=1, keepdims=True)
    gz = rho * r
    ga_prev = -rho * matmul(W.T, r)
    return gW, gb, gz, ga_prev


def _check_one_hot(y: np.ndarray):
    if not np.all((y == 0.0) | (y == 1.0)) or not np.all(np.sum(y, axis=0) == 1.0):
        raise ValueError("label matrix must be one-hot per column")


def loss_R(zL: np.ndarray, y_onehot: np.ndarray) -> float:
    """Mean softmax cross-entropy over batch columns (log-sum-exp form)."""
    if zL.shape != y_onehot.shape:
        raise ShapeError(f"logits {zL.shape} vs labels {y_onehot.shape}")
    _check_one_hot(y_onehot)
    zmax = np.max(zL, axis=0, keepdims=True)
    lse = zmax + np.log(np.sum(np.exp(zL - zmax), axis=0, keepdims=True))
    picked = np.sum(y_onehot * zL, axis=0, keepdims=True)
    return float(np.mean(lse - picked))


def loss_R_grad(zL: np.ndarray, y_onehot: np.ndarray) -> np.ndarray:
    """(softmax(zL) - y) / N."""
    if zL.shape != y_onehot.shape:
        raise ShapeError(f"logits {zL.shape} vs labels {y_onehot.shape}")
    _check_one_hot(y_onehot)
    n = zL.shape[1]
    return (softmax_columns(zL) - y_onehot) / n


def regularizer_value(reg: RegularizerSpec, W: np.ndarray) -> float:
    if reg.kind == "none":
        return 0.0
    if reg.kind == "l2":
        return 0.5 * reg.strength * frobenius_norm_sq(W)
    return reg.strength * float(np.sum(np.abs(W)))


def objective_F(
    state: NetworkState,
    x: np.ndarray,
    y_onehot: np.ndarray,
    rho: float,
    reg: RegularizerSpec,
) -> float:
    """R(z_L; y) + sum_l Omega(W_l) + sum_l phi_l with a_0 = x.

    Constraint feasibility is enforced by the box projections of the
    updates, never folded into the value.
    """
    total = loss_R(state.z[-1], y_onehot)
    for i in range(state.num_layers):
        total += regularizer_value(reg, state.W[i])
        total += penalty_phi(state.a_input(i + 1, x), state.W[i], state.z[i], state.b[i], rho)
    return total


def forward_inference(spec: NetworkSpec, W: list, b: list, x: np.ndarray):
    """Feed-forward logits and argmax class predictions (lowest index wins
    ties, which is numpy argmax's behaviour)."""
    a = x
    L = spec.num_layers
    for l in range(L - 1):
        a = activation_apply(spec.activation, matmul(W[l], a) + b[l])
    logits = matmul(W[L - 1], a) + b[L - 1]
    return logits, np.argmax(logits, axis=0)
