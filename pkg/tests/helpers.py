"""Shared test utilities: finite-difference oracles and small builders."""

import numpy as np

from triam.accel import ScheduleConfig
from triam.data import one_hot, split, synth_blobs
from triam.network import Activation, NetworkSpec
from triam.trainer import TrainConfig


def central_diff(f, x, h=1e-6):
    """Central finite differences of a scalar function of a matrix."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        xp = x.copy()
        xm = x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (f(xp) - f(xm)) / (2 * h)
    return g


def rel_err(approx, exact):
    scale = max(np.max(np.abs(exact)), 1e-12)
    return np.max(np.abs(approx - exact)) / scale


def blobs_task(seed=0, d=10, classes=3, per_class=100, separation=2.0, split_seed=0):
    """The shared synthetic classification task: returns (train, test) as
    (x, labels) pairs plus the dataset."""
    ds = synth_blobs(d, classes, per_class, separation, seed)
    tr, te = split(ds, 0.8, split_seed)
    return (tr.x, tr.labels), (te.x, te.labels), ds


def small_spec(dims=(10, 32, 32, 3), activation="relu", alpha=None):
    act = Activation(activation, alpha)
    return NetworkSpec(tuple(dims), act, dims[-1])


def train_config(spec, *, rho0=1e-3, epochs=200, seed=0, ablation="full",
                 p1=1.0, p2=1.0, p3=0.55, **kwargs):
    hyper = ScheduleConfig(p1_base=p1, p2_base=p2, p3_base=p3, rho0=rho0)
    return TrainConfig(spec=spec, hyper=hyper, epochs=epochs, seed=seed,
                       ablation=ablation, **kwargs)


def lemma_hyper(rho0=1e-3, p1=1.0, p2=1.0, p3=0.55):
    """Schedule settings in the convergence analysis's regime: constant
    tolerance, frozen penalty weight (growth capped at its start value)."""
    return ScheduleConfig(p1_base=p1, p2_base=p2, p3_base=p3,
                          eps0=1e-4, eps_floor=1e-4,
                          rho0=rho0, rho_clip=rho0, rho_mode="min")


def labels_to_onehot(labels, classes):
    return one_hot(labels, classes)
