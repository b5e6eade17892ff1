"""Full-batch backpropagation baselines (plain gradient descent and Adam)
on the same architecture, loss, and weight initialization as the
alternating trainer."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .data import one_hot
from .errors import NumericError, ShapeError, TriamError
from .linalg import matmul
from .network import (
    NetworkSpec,
    activation_apply,
    activation_derivative,
    loss_R,
    loss_R_grad,
)
from .trainer import EpochMetrics, RunHistory, evaluate_accuracy, init_weights

__all__ = ["BaselineConfig", "backprop_grads", "baseline_step", "train_baseline"]


@dataclass(frozen=True)
class BaselineConfig:
    optimizer: str = "gd"
    alpha: float = 0.01
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    epochs: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.optimizer not in ("gd", "adam"):
            raise ValueError(f"optimizer must be 'gd' or 'adam', got {self.optimizer!r}")
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        for name in ("adam_beta1", "adam_beta2"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must be in (0, 1), got {v}")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


def backprop_grads(spec: NetworkSpec, W, b, x, y_onehot):
    """Exact gradients of the mean cross-entropy of the feed-forward net
    w.r.t. every weight matrix and bias, by the chain rule."""
    L = spec.num_layers
    if len(W) != L or len(b) != L:
        raise ShapeError(f"expected {L} weight/bias pairs, got {len(W)}/{len(b)}")
    acts = [x]
    zs = []
    cur = x
    for l in range(L):
        zl = matmul(W[l], cur) + b[l]
        zs.append(zl)
        if l < L - 1:
            cur = activation_apply(spec.activation, zl)
            acts.append(cur)
    delta = loss_R_grad(zs[-1], y_onehot)
    gW = [None] * L
    gb = [None] * L
    for l in range(L - 1, -1, -1):
        gW[l] = matmul(delta, acts[l].T)
        gb[l] = np.sum(delta, axis=1, keepdims=True)
        if l > 0:
            delta = matmul(W[l].T, delta) * activation_derivative(spec.activation, zs[l - 1])
    return gW, gb


def init_optimizer_state(cfg: BaselineConfig, params):
    """Zero moments and step counter for Adam; GD carries no state."""
    if cfg.optimizer == "gd":
        return {}
    return {
        "m": [np.zeros_like(p) for p in params],
        "v": [np.zeros_like(p) for p in params],
        "t": 0,
    }


def baseline_step(params, grads, cfg: BaselineConfig, opt_state):
    """One optimizer step over a flat list of parameter arrays; returns
    (new params, new state)."""
    if cfg.optimizer == "gd":
        return [p - cfg.alpha * g for p, g in zip(params, grads)], opt_state
    t = opt_state["t"] + 1
    m = [cfg.adam_beta1 * mi + (1 - cfg.adam_beta1) * g for mi, g in zip(opt_state["m"], grads)]
    v = [cfg.adam_beta2 * vi + (1 - cfg.adam_beta2) * g * g for vi, g in zip(opt_state["v"], grads)]
    bc1 = 1 - cfg.adam_beta1 ** t
    bc2 = 1 - cfg.adam_beta2 ** t
    new = [
        p - cfg.alpha * (mi / bc1) / (np.sqrt(vi / bc2) + cfg.adam_eps)
        for p, mi, vi in zip(params, m, v)
    ]
    return new, {"m": m, "v": v, "t": t}


def train_baseline(cfg: BaselineConfig, spec: NetworkSpec, train_data, test_data) -> RunHistory:
    """Full-batch epochs of backprop steps.  The F column of the history
    mirrors the loss; penalty/inertia columns stay at zero."""
    x, labels = train_data
    x_test, labels_test = test_data
    y = one_hot(labels, spec.num_classes)
    W, b = init_weights(spec, cfg.seed)
    L = spec.num_layers
    opt_state = init_optimizer_state(cfg, W + b)
    history = RunHistory(config=cfg)
    prev = [m.copy() for m in W], [m.copy() for m in b]
    try:
        for k in range(1, cfg.epochs + 1):
            t0 = time.perf_counter()
            gW, gb = backprop_grads(spec, W, b, x, y)
            params, opt_state = baseline_step(W + b, gW + gb, cfg, opt_state)
            W, b = params[:L], params[L:]
            if not all(np.all(np.isfinite(p)) for p in params):
                raise NumericError(f"non-finite parameters at epoch {k}")
            loss = loss_R(matmul(W[-1], _hidden_forward(spec, W, b, x)) + b[-1], y)
            history.metrics.append(
                EpochMetrics(
                    epoch=k,
                    F=loss,
                    loss=loss,
                    train_acc=evaluate_accuracy(spec, W, b, x, labels),
                    test_acc=evaluate_accuracy(spec, W, b, x_test, labels_test),
                    rho=0.0,
                    eps=0.0,
                    p1=0.0,
                    p2=0.0,
                    p3=0.0,
                    reverts=0,
                    wall_ms=(time.perf_counter() - t0) * 1e3,
                )
            )
            history.increments["W"].append(
                float(np.sqrt(sum(np.sum((c - p) ** 2) for c, p in zip(W, prev[0]))))
            )
            history.increments["b"].append(
                float(np.sqrt(sum(np.sum((c - p) ** 2) for c, p in zip(b, prev[1]))))
            )
            prev = [m.copy() for m in W], [m.copy() for m in b]
    except TriamError as exc:
        history.aborted = True
        history.abort_reason = str(exc)
    history.final_state = (W, b)
    return history


def _hidden_forward(spec: NetworkSpec, W, b, x):
    cur = x
    for l in range(spec.num_layers - 1):
        cur = activation_apply(spec.activation, matmul(W[l], cur) + b[l])
    return cur
