"""Z-score standardization fitted on training rows only."""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import LabeledDataset, _frozen
from .errors import DataError, DimensionMismatchError, ZeroVarianceError


@dataclass(frozen=True, eq=False)
class Standardizer:
    """Per-feature means and population standard deviations."""

    means: np.ndarray
    stds: np.ndarray
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        means = np.asarray(self.means, dtype=np.float64)
        stds = np.asarray(self.stds, dtype=np.float64)
        if means.ndim != 1 or means.shape != stds.shape:
            raise DimensionMismatchError("means and stds must be 1-D vectors of equal length")
        if not np.all(stds > 0):
            raise DataError("standard deviations must be strictly positive")
        object.__setattr__(self, "means", _frozen(means))
        object.__setattr__(self, "stds", _frozen(stds))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def d(self) -> int:
        return self.means.shape[0]

    @classmethod
    def identity(cls, d: int) -> "Standardizer":
        return cls(np.zeros(d), np.ones(d))

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.d:
            raise DimensionMismatchError(f"expected {self.d} features, got {X.shape[-1]}")
        return (X - self.means) / self.stds

    def invert(self, Z: np.ndarray) -> np.ndarray:
        Z = np.asarray(Z, dtype=np.float64)
        if Z.shape[-1] != self.d:
            raise DimensionMismatchError(f"expected {self.d} features, got {Z.shape[-1]}")
        return Z * self.stds + self.means


def fit_standardizer(train: LabeledDataset) -> Standardizer:
    """Column means and 1/n standard deviations of the training features.

    Raises ``ZeroVarianceError`` naming the first constant column.
    """
    if train.n < 2:
        raise DataError("need at least two rows to fit a standardizer")
    X = train.features
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    for j, s in enumerate(stds):
        # relative guard: a constant column can leave rounding residue in std
        if not s > 1e-12 * max(1.0, abs(means[j])):
            raise ZeroVarianceError(train.feature_names[j])
    return Standardizer(means, stds, train.feature_names)


def transform(s: Standardizer, ds: LabeledDataset) -> LabeledDataset:
    if ds.d != s.d:
        raise DimensionMismatchError(f"standardizer fitted on {s.d} features, dataset has {ds.d}")
    return ds.with_features(s.apply(ds.features))


def inverse_transform(s: Standardizer, ds: LabeledDataset) -> LabeledDataset:
    if ds.d != s.d:
        raise DimensionMismatchError(f"standardizer fitted on {s.d} features, dataset has {ds.d}")
    return ds.with_features(s.invert(ds.features))


def write_scaler_params(s: Standardizer, path: str | os.PathLike) -> None:
    names = s.feature_names or tuple(f"x{j}" for j in range(s.d))
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        fh.write("feature_name,mean,std\n")
        for name, m, sd in zip(names, s.means, s.stds):
            fh.write(f"{name},{m:.6f},{sd:.6f}\n")
