"""Outer training loop.

Each epoch sweeps layers 1..L updating W -> b -> z -> a (a only on
hidden layers).  Every block update runs under the descent safeguard;
its accepted value refreshes that block's export (bar) view and
previous-iterate snapshot, so extrapolations in the next epoch read the
current and previous accepted iterates.  Schedules: inertia coefficients
and the constraint tolerance are functions of the epoch index; the
penalty weight grows when the recorded cost stalls two epochs running.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .accel import (
    AccelTriple,
    ScheduleConfig,
    safeguarded_update,
    schedule_eps,
    schedule_p,
    schedule_rho,
)
from .data import one_hot
from .errors import ShapeError, TriamError
from .linalg import frobenius_norm_sq, matmul
from .network import (
    NetworkSpec,
    NetworkState,
    RegularizerSpec,
    activation_apply,
    forward_inference,
    loss_R,
    objective_F,
    penalty_phi,
    regularizer_value,
    activation_inverse_bounds,
)
from .solver import (
    BacktrackConfig,
    FistaConfig,
    update_W,
    update_a,
    update_b,
    update_z_hidden,
    update_z_output,
)

__all__ = [
    "TrainConfig",
    "EpochMetrics",
    "RunHistory",
    "init_weights",
    "initialize_state",
    "train",
    "evaluate_accuracy",
]

ABLATIONS = ("baseline", "t12", "t3", "full")

BLOCKS = ("W", "b", "z", "a")


@dataclass(frozen=True)
class TrainConfig:
    """Complete recipe for one training run.

    The schedule horizon K always follows ``epochs``; the ablation flag
    zeroes inertia bases (baseline: all three; t12: the third; t3: the
    first two) so a baseline run is bit-identical to a full run whose
    bases are zero.
    """

    spec: NetworkSpec
    hyper: ScheduleConfig
    reg: RegularizerSpec = RegularizerSpec()
    backtrack: BacktrackConfig = BacktrackConfig()
    fista: FistaConfig = FistaConfig()
    epochs: int = 200
    seed: int = 0
    ablation: str = "full"
    init: str = "he_normal"
    audit: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.ablation not in ABLATIONS:
            raise ValueError(f"ablation must be one of {ABLATIONS}, got {self.ablation!r}")
        if self.init != "he_normal":
            raise ValueError(f"unknown weight init {self.init!r}")
        hyper = replace(self.hyper, K=self.epochs)
        if self.ablation == "baseline":
            hyper = replace(hyper, p1_base=0.0, p2_base=0.0, p3_base=0.0)
        elif self.ablation == "t12":
            hyper = replace(hyper, p3_base=0.0)
        elif self.ablation == "t3":
            hyper = replace(hyper, p1_base=0.0, p2_base=0.0)
        object.__setattr__(self, "hyper", hyper)


@dataclass
class EpochMetrics:
    epoch: int
    F: float
    loss: float
    train_acc: float
    test_acc: float
    rho: float
    eps: float
    p1: float
    p2: float
    p3: float
    reverts: int
    wall_ms: float


@dataclass
class RunHistory:
    """Everything a finished (or aborted) run leaves behind."""

    metrics: list = field(default_factory=list)
    final_state: Optional[NetworkState] = None
    config: Optional[TrainConfig] = None
    increments: dict = field(default_factory=lambda: {k: [] for k in BLOCKS})
    feasibility: list = field(default_factory=list)
    audit: list = field(default_factory=list)
    aborted: bool = False
    abort_reason: str = ""

    @property
    def epochs_completed(self) -> int:
        return len(self.metrics)


def init_weights(spec: NetworkSpec, seed: int):
    """Seeded He-style weights (std sqrt(2/fan_in)) and zero biases;
    shared by the alternating trainer and the backprop baselines so
    comparisons start from identical parameters."""
    rng = np.random.default_rng(seed)
    dims = spec.layer_dims
    W = [
        rng.normal(0.0, math.sqrt(2.0 / dims[l]), size=(dims[l + 1], dims[l]))
        for l in range(spec.num_layers)
    ]
    b = [np.zeros((dims[l + 1], 1)) for l in range(spec.num_layers)]
    return W, b


def initialize_state(cfg: TrainConfig, x: np.ndarray, y_onehot: np.ndarray) -> NetworkState:
    """Seeded He-style weights, zero biases, and a feed-forward fill of
    z and a, so the initial penalty is zero and the constraint holds with
    full slack.  Previous-iterate snapshots start equal to the values."""
    spec = cfg.spec
    dims = spec.layer_dims
    if x.shape[0] != dims[0]:
        raise ShapeError(f"input has {x.shape[0]} features, spec wants {dims[0]}")
    if y_onehot.shape != (spec.num_classes, x.shape[1]):
        raise ShapeError(
            f"labels {y_onehot.shape} mismatch ({spec.num_classes}, {x.shape[1]})"
        )
    L = spec.num_layers
    W, b = init_weights(spec, cfg.seed)
    z, a = [], []
    cur = x
    for l in range(L):
        zl = matmul(W[l], cur) + b[l]
        z.append(zl)
        if l < L - 1:
            cur = activation_apply(spec.activation, zl)
            a.append(cur)
    return NetworkState(
        W=W, b=b, z=z, a=a,
        prev_W=[m.copy() for m in W],
        prev_b=[m.copy() for m in b],
        prev_z=[m.copy() for m in z],
        prev_a=[m.copy() for m in a],
    )


def evaluate_accuracy(spec: NetworkSpec, W, b, x, labels) -> float:
    """Fraction of columns whose predicted class equals the label."""
    _, pred = forward_inference(spec, W, b, x)
    return float(np.mean(pred == np.asarray(labels)))


def _feasibility_violation(state: NetworkState, spec: NetworkSpec, eps: float) -> float:
    worst = 0.0
    for i in range(spec.num_layers - 1):
        h = activation_apply(spec.activation, state.z[i])
        worst = max(
            worst,
            float(np.max(h - eps - state.a[i], initial=0.0)),
            float(np.max(state.a[i] - h - eps, initial=0.0)),
        )
    return worst


def _family_norm(cur: list, prev: list) -> float:
    return math.sqrt(sum(frobenius_norm_sq(c - p) for c, p in zip(cur, prev)))


def _merge_audit(audit, reverted, aux, accel_scratch, plain_scratch):
    """Keep only the winning attempt's condition records: the accelerated
    ones unless it was reverted, the plain ones unless the block was
    skipped (aux is None then)."""
    if audit is None:
        return
    if not reverted:
        audit.extend(accel_scratch)
    elif aux is not None:
        audit.extend(plain_scratch)


def train(cfg: TrainConfig, train_data, test_data) -> RunHistory:
    """Run the full alternating schedule and return the epoch history.

    ``train_data`` and ``test_data`` are (features d x N, integer labels)
    pairs.  A numeric failure or an exhausted plain-path backtracking
    budget aborts the run; the partial history is returned with the
    abort reason attached.
    """
    spec, hyper, reg = cfg.spec, cfg.hyper, cfg.reg
    x, labels = train_data
    x_test, labels_test = test_data
    y = one_hot(labels, spec.num_classes)
    L = spec.num_layers
    act = spec.activation

    state = initialize_state(cfg, x, y)
    bars = {
        "W": [m.copy() for m in state.W],
        "b": [m.copy() for m in state.b],
        "z": [m.copy() for m in state.z],
        "a": [m.copy() for m in state.a],
    }
    warm: dict = {}
    history = RunHistory(config=cfg)
    audit = history.audit if cfg.audit else None
    rho = hyper.rho0
    cost_history: list = []
    prev_epoch_state = state.clone()

    def warm_start(block, layer):
        if cfg.backtrack.warm_start and (block, layer) in warm:
            return 0.5 * warm[(block, layer)]
        return None

    def a_in(layer):  # current input activation of 1-based layer
        return state.a_input(layer, x)

    def bar_a_in(layer):
        return x if layer == 1 else bars["a"][layer - 2]

    for k in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        p1, p2, p3 = schedule_p(k, hyper)
        eps = schedule_eps(k, hyper)
        reverts = 0
        try:
            for l in range(1, L + 1):
                i = l - 1

                # --- W_l ---
                old = state.W[i]
                views = AccelTriple.make(old, state.prev_W[i], p1, p2)

                def f_W(Wc, i=i, l=l):
                    return penalty_phi(a_in(l), Wc, state.z[i], state.b[i], rho) + regularizer_value(reg, Wc)

                start = warm_start("W", l)
                aud_acc, aud_plain = [], []
                accel = lambda: update_W(
                    bar_a_in(l), views.tilde, views.hat, bars["z"][i], bars["b"][i],
                    a_in(l), state.z[i], state.b[i], rho, reg, cfg.backtrack,
                    start, aud_acc, k, l,
                )
                plain = lambda: update_W(
                    a_in(l), old, old, state.z[i], state.b[i],
                    a_in(l), state.z[i], state.b[i], rho, reg, cfg.backtrack,
                    start, aud_plain, k, l,
                )
                new, aux, bar, rev = safeguarded_update(
                    f"W[{l}]", plain, accel, f_W(old), f_W, old, p3
                )
                _merge_audit(audit, rev, aux, aud_acc, aud_plain)
                if aux is not None:
                    warm[("W", l)] = aux
                state.prev_W[i], state.W[i], bars["W"][i] = old, new, bar
                reverts += rev

                # --- b_l ---
                old = state.b[i]
                views = AccelTriple.make(old, state.prev_b[i], p1, p2)

                def f_b(bc, i=i, l=l):
                    return penalty_phi(a_in(l), state.W[i], state.z[i], bc, rho)

                start = warm_start("b", l)
                aud_acc, aud_plain = [], []
                accel = lambda: update_b(
                    bar_a_in(l), bars["W"][i], bars["z"][i], views.tilde, views.hat,
                    a_in(l), state.W[i], state.z[i], rho, cfg.backtrack,
                    start, aud_acc, k, l,
                )
                plain = lambda: update_b(
                    a_in(l), state.W[i], state.z[i], old, old,
                    a_in(l), state.W[i], state.z[i], rho, cfg.backtrack,
                    start, aud_plain, k, l,
                )
                new, aux, bar, rev = safeguarded_update(
                    f"b[{l}]", plain, accel, f_b(old), f_b, old, p3
                )
                _merge_audit(audit, rev, aux, aud_acc, aud_plain)
                if aux is not None:
                    warm[("b", l)] = aux
                state.prev_b[i], state.b[i], bars["b"][i] = old, new, bar
                reverts += rev

                # --- z_l ---
                old = state.z[i]
                views = AccelTriple.make(old, state.prev_z[i], p1, p2)
                if l < L:
                    bounds = activation_inverse_bounds(act, state.a[i], eps, repair=True)

                    def f_z(zc, i=i, l=l):
                        return penalty_phi(a_in(l), state.W[i], zc, state.b[i], rho)

                    accel = lambda: (
                        update_z_hidden(
                            bar_a_in(l), bars["W"][i], views.tilde, views.hat,
                            bars["b"][i], bounds, rho,
                        ),
                        None,
                    )
                    plain = lambda: (
                        update_z_hidden(
                            a_in(l), state.W[i], old, old, state.b[i], bounds, rho
                        ),
                        None,
                    )
                else:

                    def f_z(zc, i=i, l=l):
                        return penalty_phi(a_in(l), state.W[i], zc, state.b[i], rho) + loss_R(zc, y)

                    accel = lambda: update_z_output(
                        bar_a_in(l), bars["W"][i], views.tilde, views.hat,
                        bars["b"][i], old, y, rho, cfg.fista,
                    )
                    plain = lambda: update_z_output(
                        a_in(l), state.W[i], old, old, state.b[i],
                        old, y, rho, cfg.fista,
                    )
                new, aux, bar, rev = safeguarded_update(
                    f"z[{l}]", plain, accel, f_z(old), f_z, old, p3
                )
                state.prev_z[i], state.z[i], bars["z"][i] = old, new, bar
                reverts += rev

                # --- a_l (hidden layers only) ---
                if l < L:
                    old = state.a[i]
                    views = AccelTriple.make(old, state.prev_a[i], p1, p2)
                    h = activation_apply(act, state.z[i])
                    box_lo, box_hi = h - eps, h + eps
                    # Skipping the update is only admissible if the old
                    # value already sits inside the current band.
                    can_skip = bool(np.all(old >= box_lo - 1e-12) and np.all(old <= box_hi + 1e-12))

                    def f_a(ac, i=i, l=l):
                        return penalty_phi(ac, state.W[i + 1], state.z[i + 1], state.b[i + 1], rho)

                    start = warm_start("a", l)
                    aud_acc, aud_plain = [], []
                    accel = lambda: update_a(
                        views.tilde, views.hat,
                        bars["W"][i + 1], bars["z"][i + 1], bars["b"][i + 1],
                        box_lo, box_hi,
                        state.W[i + 1], state.z[i + 1], state.b[i + 1],
                        rho, cfg.backtrack, start, aud_acc, k, l,
                    )
                    plain = lambda: update_a(
                        old, old,
                        state.W[i + 1], state.z[i + 1], state.b[i + 1],
                        box_lo, box_hi,
                        state.W[i + 1], state.z[i + 1], state.b[i + 1],
                        rho, cfg.backtrack, start, aud_plain, k, l,
                    )
                    new, aux, bar, rev = safeguarded_update(
                        f"a[{l}]", plain, accel, f_a(old), f_a, old, p3,
                        allow_skip=can_skip,
                    )
                    _merge_audit(audit, rev, aux, aud_acc, aud_plain)
                    if aux is not None:
                        warm[("a", l)] = aux
                    state.prev_a[i], state.a[i], bars["a"][i] = old, new, bar
                    reverts += rev
        except TriamError as exc:
            history.aborted = True
            history.abort_reason = f"epoch {k}: {exc}"
            break

        F_k = objective_F(state, x, y, rho, reg)
        loss_k = loss_R(state.z[-1], y)
        metrics = EpochMetrics(
            epoch=k,
            F=F_k,
            loss=loss_k,
            train_acc=evaluate_accuracy(spec, state.W, state.b, x, labels),
            test_acc=evaluate_accuracy(spec, state.W, state.b, x_test, labels_test),
            rho=rho,
            eps=eps,
            p1=p1,
            p2=p2,
            p3=p3,
            reverts=reverts,
            wall_ms=(time.perf_counter() - t0) * 1e3,
        )
        history.metrics.append(metrics)
        history.feasibility.append(_feasibility_violation(state, spec, eps))
        history.increments["W"].append(_family_norm(state.W, prev_epoch_state.W))
        history.increments["b"].append(_family_norm(state.b, prev_epoch_state.b))
        history.increments["z"].append(_family_norm(state.z, prev_epoch_state.z))
        history.increments["a"].append(_family_norm(state.a, prev_epoch_state.a))
        prev_epoch_state = state.clone()

        cost_history.append(F_k if hyper.rho_signal == "objective" else loss_k)
        rho = schedule_rho(rho, cost_history[-3:], hyper)

    history.final_state = state
    return history
