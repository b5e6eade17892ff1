"""Experiment configuration documents.

A run is described by a TOML file with sections [dataset], [model],
[schedules], [backtracking], [fista], and [run].  Unknown sections or
keys are rejected outright so a typo cannot silently fall back to a
default.  Network input width and class count always come from the
dataset; [model] only lists hidden widths.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .accel import ScheduleConfig
from .baselines import BaselineConfig
from .errors import ConfigError
from .network import Activation, NetworkSpec, RegularizerSpec
from .solver import BacktrackConfig, FistaConfig
from .trainer import ABLATIONS

__all__ = ["DatasetConfig", "ModelConfig", "RunConfig", "ExperimentConfig", "load_config"]


@dataclass(frozen=True)
class DatasetConfig:
    kind: str = "blobs"  # "csv" or "blobs"
    path: Optional[str] = None
    d: int = 10
    classes: int = 3
    per_class: int = 100
    separation: float = 2.0
    seed: int = 0
    train_fraction: float = 0.8
    split_seed: int = 0


@dataclass(frozen=True)
class ModelConfig:
    hidden_dims: tuple = (32, 32)
    activation: str = "relu"
    alpha: Optional[float] = None
    regularizer: str = "none"
    reg_strength: float = 0.0

    def build_spec(self, d: int, num_classes: int) -> NetworkSpec:
        dims = (d, *self.hidden_dims, num_classes)
        return NetworkSpec(dims, Activation(self.activation, self.alpha), num_classes)

    def build_reg(self) -> RegularizerSpec:
        return RegularizerSpec(self.regularizer, self.reg_strength)


@dataclass(frozen=True)
class RunConfig:
    kind: str = "tiam"  # "tiam" or "baseline"
    epochs: int = 200
    seeds: tuple = tuple(range(10))
    ablation: str = "full"
    out_dir: str = "runs"
    optimizer: str = "gd"
    alpha: float = 0.01
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    audit: bool = True
    figures: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    schedules: ScheduleConfig = field(default_factory=ScheduleConfig)
    backtracking: BacktrackConfig = field(default_factory=BacktrackConfig)
    fista: FistaConfig = field(default_factory=FistaConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def build_baseline(self, seed: int) -> BaselineConfig:
        r = self.run
        return BaselineConfig(
            optimizer=r.optimizer,
            alpha=r.alpha,
            adam_beta1=r.adam_beta1,
            adam_beta2=r.adam_beta2,
            adam_eps=r.adam_eps,
            epochs=r.epochs,
            seed=seed,
        )


_SECTIONS = {
    "dataset": {
        "kind": str,
        "path": str,
        "d": int,
        "classes": int,
        "per_class": int,
        "separation": float,
        "seed": int,
        "train_fraction": float,
        "split_seed": int,
    },
    "model": {
        "hidden_dims": list,
        "activation": str,
        "alpha": float,
        "regularizer": str,
        "reg_strength": float,
    },
    "schedules": {
        "p1_base": float,
        "p2_base": float,
        "p3_base": float,
        "p3_exponent": float,
        "eps0": float,
        "eps_floor": float,
        "rho0": float,
        "rho_growth": float,
        "rho_clip": float,
        "rho_mode": str,
        "rho_signal": str,
    },
    "backtracking": {
        "init": float,
        "growth": float,
        "max_doublings": int,
        "warm_start": bool,
    },
    "fista": {
        "max_iters": int,
        "grad_tol": float,
        "step_mode": str,
        "loss_curvature": float,
    },
    "run": {
        "kind": str,
        "epochs": int,
        "seeds": list,
        "ablation": str,
        "out_dir": str,
        "optimizer": str,
        "alpha": float,
        "adam_beta1": float,
        "adam_beta2": float,
        "adam_eps": float,
        "audit": bool,
        "figures": bool,
    },
}


def _coerce(section: str, key: str, value, want):
    if want is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if want is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if isinstance(value, want) and not (want is not bool and isinstance(value, bool)):
        return value
    raise ConfigError(f"[{section}] {key}: expected {want.__name__}, got {value!r}")


def _read_section(doc: dict, name: str) -> dict:
    raw = doc.get(name, {})
    if not isinstance(raw, dict):
        raise ConfigError(f"[{name}] must be a table")
    allowed = _SECTIONS[name]
    out = {}
    for key, value in raw.items():
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in [{name}]")
        out[key] = _coerce(name, key, value, allowed[key])
    return out


def load_config(path) -> ExperimentConfig:
    """Parse and validate an experiment document."""
    try:
        with open(path, "rb") as fh:
            doc = _toml.load(fh)
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    unknown = set(doc) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown section(s): {sorted(unknown)}")

    ds = _read_section(doc, "dataset")
    model = _read_section(doc, "model")
    sched = _read_section(doc, "schedules")
    bt = _read_section(doc, "backtracking")
    fista = _read_section(doc, "fista")
    run = _read_section(doc, "run")

    if "hidden_dims" in model:
        dims = model["hidden_dims"]
        if not dims or not all(isinstance(v, int) and v >= 1 for v in dims):
            raise ConfigError("[model] hidden_dims must be a non-empty list of ints >= 1")
        model["hidden_dims"] = tuple(dims)
    if "seeds" in run:
        seeds = run["seeds"]
        if not seeds or not all(isinstance(v, int) for v in seeds):
            raise ConfigError("[run] seeds must be a non-empty list of ints")
        run["seeds"] = tuple(seeds)

    try:
        cfg = ExperimentConfig(
            dataset=DatasetConfig(**ds),
            model=ModelConfig(**model),
            schedules=ScheduleConfig(**sched),
            backtracking=BacktrackConfig(**bt),
            fista=FistaConfig(**fista),
            run=RunConfig(**run),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    ds, run, model = cfg.dataset, cfg.run, cfg.model
    if ds.kind not in ("csv", "blobs"):
        raise ConfigError(f"[dataset] kind must be 'csv' or 'blobs', got {ds.kind!r}")
    if ds.kind == "csv" and not ds.path:
        raise ConfigError("[dataset] kind='csv' requires a path")
    if not 0.0 < ds.train_fraction < 1.0:
        raise ConfigError("[dataset] train_fraction must be in (0, 1)")
    if run.kind not in ("tiam", "baseline"):
        raise ConfigError(f"[run] kind must be 'tiam' or 'baseline', got {run.kind!r}")
    if run.optimizer not in ("gd", "adam"):
        raise ConfigError(f"[run] optimizer must be 'gd' or 'adam', got {run.optimizer!r}")
    if run.ablation not in ABLATIONS:
        raise ConfigError(f"[run] ablation must be one of {ABLATIONS}")
    if run.epochs < 1:
        raise ConfigError("[run] epochs must be >= 1")
    if model.activation not in ("relu", "leaky_relu", "erelu", "cerelu"):
        raise ConfigError(f"[model] unknown activation {model.activation!r}")
    if model.regularizer not in ("none", "l2", "l1"):
        raise ConfigError(f"[model] unknown regularizer {model.regularizer!r}")
