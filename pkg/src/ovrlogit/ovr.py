"""One-vs-rest multiclass wrapper around the binary trainers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .dataset import LabeledDataset, ovr_encode
from .errors import ConfigError, DimensionMismatchError, SolverError
from .preprocess import Standardizer
from .solvers import (
    FittedBinaryModel,
    GdConfig,
    L1Config,
    ReferenceConfig,
    train_gd,
    train_l1,
    train_reference,
)

SolverConfig = Union[GdConfig, ReferenceConfig, L1Config]

_DEFAULT_CONFIGS = {"gd": GdConfig, "reference": ReferenceConfig, "l1": L1Config}


def _train_binary(bds, solver: str, config: SolverConfig) -> FittedBinaryModel:
    if solver == "gd":
        return train_gd(bds, config)
    if solver == "reference":
        return train_reference(bds, config.tolerance, config.max_iterations, config.damping)
    return train_l1(bds, config)


@dataclass(frozen=True, eq=False)
class OvrModel:
    models: tuple[FittedBinaryModel, ...]
    standardizer: Standardizer
    feature_names: tuple[str, ...]

    def __post_init__(self):
        models = tuple(self.models)
        if len(models) < 2:
            raise ValueError("an OvR model needs at least two binary models")
        if any(m.d != self.standardizer.d for m in models):
            raise DimensionMismatchError("binary models and standardizer disagree on d")
        if len(self.feature_names) != self.standardizer.d:
            raise DimensionMismatchError("feature_names length differs from d")
        object.__setattr__(self, "models", models)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def class_count(self) -> int:
        return len(self.models)

    @property
    def d(self) -> int:
        return self.standardizer.d

    @property
    def solver_tag(self) -> str:
        return self.models[0].solver_tag

    def weight_matrix(self) -> np.ndarray:
        return np.vstack([m.weights for m in self.models])

    def biases(self) -> np.ndarray:
        return np.array([m.bias for m in self.models])


def train_ovr(
    ds: LabeledDataset,
    solver: str,
    config: SolverConfig | None = None,
    standardizer: Standardizer | None = None,
) -> OvrModel:
    """Fit one binary model per class on already-standardized ``ds``.

    ``standardizer`` is the transform that produced ``ds`` from raw features;
    it is stored so that :func:`predict` accepts raw rows. Identity when
    omitted.
    """
    if solver not in _DEFAULT_CONFIGS:
        raise ConfigError(f"unknown solver {solver!r}")
    if config is None:
        config = _DEFAULT_CONFIGS[solver]()
    elif not isinstance(config, _DEFAULT_CONFIGS[solver]):
        raise ConfigError(f"{type(config).__name__} does not configure solver {solver!r}")
    if standardizer is None:
        standardizer = Standardizer.identity(ds.d)
    models = []
    for k in range(ds.class_count):
        bds = ovr_encode(ds, k)
        try:
            models.append(_train_binary(bds, solver, config))
        except SolverError as exc:
            exc.args = (f"class {k}: {exc.args[0]}",) + exc.args[1:]
            exc.class_index = k
            raise
    return OvrModel(tuple(models), standardizer, ds.feature_names)


def _as_matrix(m: OvrModel, x) -> tuple[np.ndarray, bool]:
    X = np.asarray(x, dtype=np.float64)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.ndim != 2 or X.shape[1] != m.d:
        raise DimensionMismatchError(f"expected rows of {m.d} features, got shape {np.shape(x)}")
    if not np.all(np.isfinite(X)):
        raise ValueError("input contains non-finite values")
    return X, single


def predict_proba(m: OvrModel, x) -> np.ndarray:
    """Per-class sigmoid confidences for raw feature row(s); not normalised."""
    X, single = _as_matrix(m, x)
    Z = m.standardizer.apply(X)
    P = np.column_stack([bm.predict_proba(Z) for bm in m.models])
    return P[0] if single else P


def select_class(probs):
    """Index of the largest confidence along the last axis, lowest index on ties."""
    # np.argmax returns the first maximal index
    out = np.argmax(np.asarray(probs, dtype=np.float64), axis=-1)
    return int(out) if np.ndim(out) == 0 else out.astype(np.int64)


def predict(m: OvrModel, x):
    """Class with the highest confidence for raw feature row(s)."""
    return select_class(predict_proba(m, x))
