"""Dataset loading, generation, and splitting.

Datasets carry features as columns of a d x N matrix plus one integer
class label per column.  The on-disk format is plain CSV, one sample per
row: feature values then the label in the last column.  Values are
written with 17 significant digits so a write/read round trip is exact.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError, ShapeError

__all__ = ["Dataset", "load_csv", "save_csv", "synth_blobs", "split", "one_hot"]


@dataclass(frozen=True)
class Dataset:
    """Feature matrix (d x N, samples in columns) plus per-column labels."""

    x: np.ndarray
    labels: np.ndarray
    num_classes: int
    name: str = ""

    def __post_init__(self):
        if self.x.ndim != 2 or self.x.shape[1] < 1:
            raise ValueError(f"features must be d x N with N >= 1, got {self.x.shape}")
        if not np.all(np.isfinite(self.x)):
            raise ValueError("features contain non-finite values")
        if self.labels.shape != (self.x.shape[1],):
            raise ValueError("need exactly one label per sample column")
        if np.any(self.labels < 0) or np.any(self.labels >= self.num_classes):
            raise ValueError(f"labels must lie in [0, {self.num_classes})")

    @property
    def num_features(self) -> int:
        return self.x.shape[0]

    @property
    def num_samples(self) -> int:
        return self.x.shape[1]


def load_csv(path) -> Dataset:
    """Read a dataset file; every row is features...,label."""
    features = []
    labels = []
    width = None
    with open(path, "r", encoding="utf-8") as fh:
        for ln, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) < 2:
                raise DataFormatError(f"{path}: line {ln}: need at least one feature and a label")
            if width is None:
                width = len(parts)
            elif len(parts) != width:
                raise DataFormatError(
                    f"{path}: line {ln}: expected {width} fields, found {len(parts)}"
                )
            try:
                row = [float(p) for p in parts[:-1]]
            except ValueError as exc:
                raise DataFormatError(f"{path}: line {ln}: {exc}") from None
            if not all(math.isfinite(v) for v in row):
                raise DataFormatError(f"{path}: line {ln}: non-finite feature value")
            try:
                lab = float(parts[-1])
            except ValueError as exc:
                raise DataFormatError(f"{path}: line {ln}: {exc}") from None
            if not lab.is_integer():
                raise DataFormatError(f"{path}: line {ln}: label {parts[-1]!r} is not an integer")
            if lab < 0:
                raise DataFormatError(f"{path}: line {ln}: label {int(lab)} out of range")
            features.append(row)
            labels.append(int(lab))
    if not features:
        raise DataFormatError(f"{path}: no samples found")
    x = np.asarray(features, dtype=np.float64).T
    labels_arr = np.asarray(labels, dtype=np.int64)
    return Dataset(x=x, labels=labels_arr, num_classes=int(labels_arr.max()) + 1, name=str(path))


def save_csv(ds: Dataset, path) -> None:
    """Write features...,label rows with 17 significant digits."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for j in range(ds.num_samples):
            vals = ",".join(f"{v:.17g}" for v in ds.x[:, j])
            fh.write(f"{vals},{int(ds.labels[j])}\n")


def synth_blobs(d: int, num_classes: int, per_class: int, separation: float, seed: int) -> Dataset:
    """Unit-variance Gaussian clusters with pairwise mean distance
    separation * sqrt(d): class c's mean sits on the c-th coordinate axis
    at separation * sqrt(d/2), so any two means are equidistant.  Needs
    num_classes <= d to have that many orthogonal axes."""
    if d < 1 or num_classes < 1 or per_class < 1:
        raise ValueError("d, num_classes, and per_class must all be >= 1")
    if separation <= 0:
        raise ValueError(f"separation must be > 0, got {separation}")
    if num_classes > d:
        raise ValueError(f"blob construction needs num_classes <= d, got {num_classes} > {d}")
    rng = np.random.default_rng(seed)
    radius = separation * math.sqrt(d / 2.0)
    cols = []
    labels = []
    for c in range(num_classes):
        mean = np.zeros((d, 1))
        mean[c, 0] = radius
        cols.append(mean + rng.standard_normal((d, per_class)))
        labels.extend([c] * per_class)
    return Dataset(
        x=np.concatenate(cols, axis=1),
        labels=np.asarray(labels, dtype=np.int64),
        num_classes=num_classes,
        name=f"blobs(d={d},C={num_classes},n={per_class},sep={separation},seed={seed})",
    )


def split(ds: Dataset, train_fraction: float, seed: int):
    """Seeded permutation, then a floor(train_fraction * N) prefix split."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n = ds.num_samples
    n_train = int(math.floor(train_fraction * n))
    if n_train == 0 or n_train == n:
        raise ValueError(f"split of {n} samples at fraction {train_fraction} leaves one side empty")
    perm = np.random.default_rng(seed).permutation(n)
    tr, te = perm[:n_train], perm[n_train:]
    parts = []
    for idx, tag in ((tr, "train"), (te, "test")):
        part = Dataset(
            x=ds.x[:, idx],
            labels=ds.labels[idx],
            num_classes=ds.num_classes,
            name=f"{ds.name}[{tag}]",
        )
        present = np.unique(part.labels)
        if len(present) < ds.num_classes:
            warnings.warn(
                f"{part.name} is missing {ds.num_classes - len(present)} of "
                f"{ds.num_classes} classes",
                stacklevel=2,
            )
        parts.append(part)
    return parts[0], parts[1]


def one_hot(labels, num_classes: int) -> np.ndarray:
    """C x N indicator matrix: column j is e_{labels[j]}."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.ndim != 1:
        raise ShapeError(f"labels must be 1-D, got shape {labels.shape}")
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ValueError(f"labels must lie in [0, {num_classes})")
    out = np.zeros((num_classes, labels.size))
    out[labels, np.arange(labels.size)] = 1.0
    return out
