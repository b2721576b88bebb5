"""Binary logistic-regression trainers.

Three ways to fit ``P(y=1|x) = sigmoid(w.x + b)`` on a :class:`BinaryDataset`:

* :func:`train_gd` -- fixed-rate full-batch gradient descent on the mean log
  loss, zero-initialised, with a loss trace.
* :func:`train_reference` -- damped Newton / IRLS, used as the converged
  second-order reference.
* :func:`train_l1` -- L1-penalised fit by proximal Newton with cyclic
  coordinate descent on each local quadratic model.

Features are expected to be standardized; none of the trainers check this.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .dataset import BinaryDataset, _frozen
from .errors import (
    ConfigError,
    ConvergenceError,
    DimensionMismatchError,
    NonFiniteLossError,
    SingularSystemError,
)

SolverTag = Literal["gd", "reference", "l1"]
SOLVER_TAGS: tuple[str, ...] = ("gd", "reference", "l1")

Z_CLIP = 500.0
PROB_EPSILON = 1e-15
REFERENCE_DAMPING = 1e-8
ZERO_THRESHOLD = 1e-10


@dataclass(frozen=True)
class GdConfig:
    learning_rate: float = 1e-4
    iterations: int = 10_000
    trace_every: int = 100
    z_clip: float = Z_CLIP
    prob_epsilon: float = PROB_EPSILON

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if self.iterations < 0:
            raise ConfigError("iterations must be non-negative")
        if self.trace_every <= 0 or self.z_clip <= 0 or not 0 < self.prob_epsilon < 0.5:
            raise ConfigError("trace_every, z_clip and prob_epsilon must be positive")


@dataclass(frozen=True)
class ReferenceConfig:
    tolerance: float = 1e-8
    max_iterations: int = 100
    damping: float = REFERENCE_DAMPING

    def __post_init__(self):
        if not self.tolerance > 0 or self.max_iterations <= 0 or self.damping < 0:
            raise ConfigError("invalid reference solver configuration")


@dataclass(frozen=True)
class L1Config:
    """``C`` is the inverse penalty strength; the penalty is ``||w||_1 / (C n)``."""

    C: float = 0.1
    max_iterations: int = 1000
    tolerance: float = 1e-8
    max_inner_sweeps: int = 100_000

    def __post_init__(self):
        if not self.C > 0:
            raise ConfigError(f"C must be positive, got {self.C}")
        if self.max_iterations <= 0 or not self.tolerance > 0 or self.max_inner_sweeps <= 0:
            raise ConfigError("invalid L1 solver configuration")


@dataclass(frozen=True, eq=False)
class FittedBinaryModel:
    weights: np.ndarray
    bias: float
    solver_tag: str
    hyperparams: dict = field(default_factory=dict)
    loss_trace: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or not np.all(np.isfinite(w)) or not math.isfinite(self.bias):
            raise ValueError("weights and bias must be finite")
        if self.solver_tag not in SOLVER_TAGS:
            raise ValueError(f"unknown solver tag {self.solver_tag!r}")
        its = [it for it, _ in self.loss_trace]
        if any(b <= a for a, b in zip(its, its[1:])):
            raise ValueError("loss trace iterations must be strictly increasing")
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "bias", float(self.bias))
        object.__setattr__(self, "loss_trace", tuple((int(i), float(v)) for i, v in self.loss_trace))

    @property
    def d(self) -> int:
        return self.weights.shape[0]

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.d:
            raise DimensionMismatchError(f"model has {self.d} weights, input has {X.shape[-1]} features")
        return X @ self.weights + self.bias

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return sigmoid(self.decision_function(X))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_proba(X) > 0.5).astype(np.int64)


def sigmoid(z, z_clip: float = Z_CLIP):
    """Logistic function with the input clipped to ``[-z_clip, z_clip]``."""
    z = np.clip(np.asarray(z, dtype=np.float64), -z_clip, z_clip)
    out = 1.0 / (1.0 + np.exp(-z))
    return float(out) if out.ndim == 0 else out


def mean_log_loss(targets, probs, epsilon: float = PROB_EPSILON) -> float:
    """Mean binary cross-entropy with probabilities clipped to ``[eps, 1-eps]``."""
    t = np.asarray(targets, dtype=np.float64)
    p = np.asarray(probs, dtype=np.float64)
    if t.shape != p.shape:
        raise DimensionMismatchError(f"targets {t.shape} and probs {p.shape} differ")
    p = np.clip(p, epsilon, 1.0 - epsilon)
    return float(-np.mean(t * np.log(p) + (1.0 - t) * np.log1p(-p)))


def gd_gradient(X, targets, probs) -> tuple[np.ndarray, float]:
    """Gradient of the mean log loss: ``(X^T (p - y) / n, mean(p - y))``."""
    X = np.asarray(X, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    p = np.asarray(probs, dtype=np.float64)
    if X.ndim != 2 or t.shape != (X.shape[0],) or p.shape != t.shape:
        raise DimensionMismatchError(
            f"incompatible shapes X={X.shape}, targets={t.shape}, probs={p.shape}"
        )
    r = p - t
    return X.T @ r / X.shape[0], float(r.mean())


def train_gd(bds: BinaryDataset, cfg: GdConfig = GdConfig()) -> FittedBinaryModel:
    """Full-batch gradient descent from zero weights.

    Trace entry ``(t, L)`` is the mean loss after ``t`` updates, recorded for
    every ``t`` divisible by ``cfg.trace_every`` from 0 through
    ``cfg.iterations`` (nothing is recorded when ``iterations == 0``).

    Raises:
        NonFiniteLossError: the loss became NaN or infinite.
    """
    X = bds.features
    t = bds.targets.astype(np.float64)
    w = np.zeros(bds.d)
    b = 0.0
    trace: list[tuple[int, float]] = []
    T = cfg.iterations
    for it in range(T + 1 if T > 0 else 0):
        p = sigmoid(X @ w + b, cfg.z_clip)
        loss = mean_log_loss(t, p, cfg.prob_epsilon)
        if not math.isfinite(loss):
            raise NonFiniteLossError(it)
        if it % cfg.trace_every == 0:
            trace.append((it, loss))
        if it == T:
            break
        grad_w, grad_b = gd_gradient(X, t, p)
        w = w - cfg.learning_rate * grad_w
        b = b - cfg.learning_rate * grad_b
    if not (np.all(np.isfinite(w)) and math.isfinite(b)):
        raise NonFiniteLossError(T)
    return FittedBinaryModel(
        w,
        b,
        "gd",
        {"learning_rate": cfg.learning_rate, "iterations": T},
        tuple(trace),
    )


def _augment(X: np.ndarray) -> np.ndarray:
    return np.hstack([X, np.ones((X.shape[0], 1))])


def _nll(A: np.ndarray, t: np.ndarray, theta: np.ndarray) -> float:
    # log(1 + e^z) - t z, overflow-free
    z = A @ theta
    return float(np.mean(np.logaddexp(0.0, z) - t * z))


def train_reference(
    bds: BinaryDataset,
    tolerance: float = 1e-8,
    max_iterations: int = 100,
    damping: float = REFERENCE_DAMPING,
) -> FittedBinaryModel:
    """Newton/IRLS on mean log loss plus ``damping * ||w||^2``.

    The tiny quadratic damping keeps the optimum finite on separable data.
    Each Newton step is shortened by backtracking until the objective
    decreases. Iteration stops once the largest parameter change or the
    gradient norm drops below ``tolerance``.

    Raises:
        SingularSystemError: the damped Newton system could not be solved.
        ConvergenceError: ``max_iterations`` reached; ``last_iterate`` carries
            the final parameters as a model.
    """
    cfg = ReferenceConfig(tolerance, max_iterations, damping)
    X = bds.features
    n, d = X.shape
    A = _augment(X)
    t = bds.targets.astype(np.float64)
    ridge = np.full(d + 1, 2.0 * cfg.damping)
    ridge[d] = 0.0
    theta = np.zeros(d + 1)

    def objective(th):
        return _nll(A, t, th) + cfg.damping * float(th[:d] @ th[:d])

    def model(th, iters):
        return FittedBinaryModel(
            th[:d].copy(),
            th[d],
            "reference",
            {"tolerance": cfg.tolerance, "damping": cfg.damping, "iterations": iters},
        )

    f = objective(theta)
    for it in range(cfg.max_iterations):
        p = sigmoid(A @ theta)
        grad = A.T @ (p - t) / n + ridge * theta
        if np.linalg.norm(grad) < cfg.tolerance:
            return model(theta, it)
        H = (A.T * (p * (1.0 - p))) @ A / n
        H[np.diag_indices_from(H)] += ridge
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(f"Newton system singular at iteration {it}") from exc
        if not np.all(np.isfinite(step)):
            raise SingularSystemError(f"Newton step not finite at iteration {it}")
        scale = 1.0
        while True:
            candidate = theta - scale * step
            fc = objective(candidate)
            if fc <= f - 1e-4 * scale * float(grad @ step) or scale < 1e-10:
                break
            scale *= 0.5
        change = float(np.max(np.abs(candidate - theta)))
        theta, f = candidate, fc
        if change < cfg.tolerance:
            return model(theta, it + 1)
    raise ConvergenceError(
        f"reference solver did not converge in {cfg.max_iterations} iterations",
        last_iterate=model(theta, cfg.max_iterations),
    )


def soft_threshold(x, t):
    """``sign(x) * max(|x| - t, 0)``."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("threshold must be non-negative")
    out = np.sign(x) * np.maximum(np.abs(x) - t, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def l1_penalty_strength(C: float, n: int) -> float:
    return 1.0 / (C * n)


def l1_objective(bds: BinaryDataset, weights, bias: float, C: float) -> float:
    """Mean log loss plus ``||w||_1 / (C n)``; the bias is not penalised."""
    A = _augment(bds.features)
    theta = np.append(np.asarray(weights, dtype=np.float64), bias)
    lam = l1_penalty_strength(C, bds.n)
    return _nll(A, bds.targets.astype(np.float64), theta) + lam * float(np.abs(theta[:-1]).sum())


def _cd_quadratic(g, H, theta, lam, d, tol, max_sweeps):
    """Minimise ``g.(v-theta) + (v-theta)^T H (v-theta)/2 + lam*|v_w|_1`` by cyclic CD."""
    v = theta.copy()
    Hu = np.zeros_like(theta)  # H @ (v - theta), kept incrementally
    diag = np.maximum(np.diag(H), 1e-12)
    for _ in range(max_sweeps):
        biggest = 0.0
        for j in range(d + 1):
            c = v[j] - (g[j] + Hu[j]) / diag[j]
            new = c if j == d else math.copysign(max(abs(c) - lam / diag[j], 0.0), c)
            delta = new - v[j]
            if delta != 0.0:
                Hu += delta * H[:, j]
                v[j] = new
                biggest = max(biggest, abs(delta))
        if biggest < tol:
            break
    return v


def train_l1(bds: BinaryDataset, cfg: L1Config = L1Config()) -> FittedBinaryModel:
    """L1-penalised logistic regression.

    Minimises ``mean NLL + ||w||_1 / (C n)``. Each outer iteration builds the
    second-order model of the log loss at the current point, minimises model
    plus penalty by cyclic coordinate descent (features ``0..d-1`` then the
    bias, soft-threshold updates), then backtracks along the resulting
    direction until the true objective decreases sufficiently. Converged when
    the largest parameter change of an outer step is below ``cfg.tolerance``.
    """
    X = bds.features
    n, d = X.shape
    A = _augment(X)
    t = bds.targets.astype(np.float64)
    lam = l1_penalty_strength(cfg.C, n)
    theta = np.zeros(d + 1)

    def objective(th):
        return _nll(A, t, th) + lam * float(np.abs(th[:d]).sum())

    def model(th, iters):
        return FittedBinaryModel(
            th[:d].copy(),
            th[d],
            "l1",
            {"C": cfg.C, "tolerance": cfg.tolerance, "iterations": iters},
        )

    f = objective(theta)
    for it in range(cfg.max_iterations):
        p = sigmoid(A @ theta)
        g = A.T @ (p - t) / n
        H = (A.T * (p * (1.0 - p))) @ A / n
        v = _cd_quadratic(g, H, theta, lam, d, 0.1 * cfg.tolerance, cfg.max_inner_sweeps)
        direction = v - theta
        decrease = float(g @ direction) + lam * float(np.abs(v[:d]).sum() - np.abs(theta[:d]).sum())
        scale = 1.0
        while True:
            candidate = theta + scale * direction
            fc = objective(candidate)
            if fc <= f + 1e-4 * scale * decrease or scale < 1e-10:
                break
            scale *= 0.5
        change = float(np.max(np.abs(candidate - theta)))
        theta, f = candidate, fc
        if change < cfg.tolerance:
            return model(theta, it + 1)
    raise ConvergenceError(
        f"L1 solver did not converge in {cfg.max_iterations} iterations (C={cfg.C})",
        last_iterate=model(theta, cfg.max_iterations),
    )


def retained_features(m: FittedBinaryModel, threshold: float = ZERO_THRESHOLD) -> frozenset[int]:
    """Indices of weights with magnitude above ``threshold``."""
    return frozenset(int(j) for j in np.flatnonzero(np.abs(m.weights) > threshold))
