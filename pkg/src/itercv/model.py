"""Loss models, regularizers, and datasets.

The objective being optimized everywhere in this package is

    F(theta) = sum_i loss(x_i, y_i; theta) + lam * penalty(theta)

with a pointwise loss that depends on theta only through the margin
``m = x @ theta``.  That structure gives every per-point Hessian the rank-one
form ``c(m, y) * outer(x, x)``, which the trackers exploit heavily; dense
Hessians are only materialized on demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import expit

from .errors import ConfigError, ShapeError


class DataPoint(NamedTuple):
    x: np.ndarray
    y: float


@dataclass(frozen=True)
class Dataset:
    """Design matrix X of shape (n, p) and responses y of shape (n,)."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        if X.ndim != 2:
            raise ShapeError(f"X must be 2-d, got ndim={X.ndim}")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise ShapeError(f"y must have shape ({X.shape[0]},), got {y.shape}")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise ShapeError(f"need n >= 1 and p >= 1, got X shape {X.shape}")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise ShapeError("dataset contains non-finite entries")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def point(self, i: int) -> DataPoint:
        if not 0 <= i < self.n:
            raise ShapeError(f"point index {i} out of range [0, {self.n})")
        return DataPoint(self.X[i], float(self.y[i]))


class LogisticLoss:
    """Negative Bernoulli log-likelihood, y in {0, 1}.

    loss(m, y) = -y*m + log(1 + exp(m)), computed through logaddexp so large
    positive or negative margins never overflow.
    """

    kind = "logistic"

    def values(self, margins, y):
        return -np.asarray(y) * margins + np.logaddexp(0.0, margins)

    def gcoef(self, margins, y):
        # d loss / d margin = sigmoid(m) - y, stable for both signs of m
        return expit(margins) - y

    def hcoef(self, margins, y):
        # d2 loss / d margin2 = sigmoid(m) * (1 - sigmoid(m)); y drops out
        return expit(margins) * expit(-np.asarray(margins))


class SquaredLoss:
    """Half squared error, loss(m, y) = 0.5 * (m - y)**2."""

    kind = "squared"

    def values(self, margins, y):
        return 0.5 * (margins - y) ** 2

    def gcoef(self, margins, y):
        return margins - y

    def hcoef(self, margins, y):
        return np.ones_like(np.asarray(margins, dtype=np.float64))


_LOSSES = {"logistic": LogisticLoss, "squared": SquaredLoss}


def loss_model(kind: str):
    if kind not in _LOSSES:
        raise ConfigError(f"unknown loss kind {kind!r}, expected one of {sorted(_LOSSES)}")
    return _LOSSES[kind]()


def _check_point(x, theta):
    x = np.asarray(x, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    if x.ndim != 1 or theta.ndim != 1 or x.shape != theta.shape:
        raise ShapeError(f"x and theta must be 1-d of equal length, got {x.shape} vs {theta.shape}")
    return x, theta


def loss_value(loss, x, y, theta) -> float:
    x, theta = _check_point(x, theta)
    return float(loss.values(x @ theta, y))


def loss_grad(loss, x, y, theta) -> np.ndarray:
    x, theta = _check_point(x, theta)
    return loss.gcoef(x @ theta, y) * x


def loss_hess(loss, x, y, theta) -> np.ndarray:
    """Dense p-by-p per-point Hessian c(m, y) * outer(x, x)."""
    x, theta = _check_point(x, theta)
    return loss.hcoef(x @ theta, y) * np.outer(x, x)


def loss_hess_vec(loss, x, y, theta, v) -> np.ndarray:
    """Hessian-vector product in O(p), never forming the outer product."""
    x, theta = _check_point(x, theta)
    v = np.asarray(v, dtype=np.float64)
    if v.shape != x.shape:
        raise ShapeError(f"v must have shape {x.shape}, got {v.shape}")
    return (loss.hcoef(x @ theta, y) * (x @ v)) * x


_REG_KINDS = ("none", "ridge", "l1")


@dataclass(frozen=True)
class Regularizer:
    """Penalty lam * pi(theta) with pi ridge (||.||_2^2), l1 (||.||_1), or none.

    Ridge is smooth: gradient 2*lam*theta, Hessian 2*lam*I.  The l1 penalty is
    handled only through its proximal map and has no gradient.
    """

    kind: str = "none"
    lam: float = 0.0

    def __post_init__(self):
        if self.kind not in _REG_KINDS:
            raise ShapeError(f"unknown regularizer kind {self.kind!r}")
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ShapeError(f"lam must be finite and >= 0, got {self.lam}")
        if self.kind == "none" and self.lam != 0.0:
            raise ShapeError("kind 'none' requires lam == 0")

    @property
    def smooth(self) -> bool:
        return self.kind in ("none", "ridge")

    def value(self, theta) -> float:
        theta = np.asarray(theta)
        if self.kind == "ridge":
            return float(self.lam * (theta @ theta))
        if self.kind == "l1":
            return float(self.lam * np.abs(theta).sum())
        return 0.0

    def grad(self, theta) -> np.ndarray:
        if not self.smooth:
            raise NotImplementedError("l1 penalty has no gradient; use prox")
        if self.kind == "ridge":
            return 2.0 * self.lam * np.asarray(theta, dtype=np.float64)
        return np.zeros_like(np.asarray(theta, dtype=np.float64))

    @property
    def hess_mult(self) -> float:
        """Hessian as a multiple of the identity (0 unless ridge)."""
        if not self.smooth:
            raise NotImplementedError("l1 penalty has no Hessian")
        return 2.0 * self.lam if self.kind == "ridge" else 0.0

    def prox(self, v, scale: float) -> np.ndarray:
        """Proximal map of scale * lam * pi at v."""
        if self.kind == "l1":
            return prox_l1(v, scale * self.lam)
        if self.kind == "none":
            return np.asarray(v, dtype=np.float64)
        raise NotImplementedError("prox only implemented for l1 / none")


def prox_l1(v, threshold: float) -> np.ndarray:
    """Soft thresholding: componentwise shrink of v toward 0 by threshold."""
    if threshold < 0:
        raise ShapeError(f"threshold must be >= 0, got {threshold}")
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.maximum(np.abs(v) - threshold, 0.0)


def subset_grad_hess(loss, reg, data: Dataset, subset, theta, include_reg: bool = False):
    """Gradient and dense Hessian of the loss summed over a point subset.

    ``subset`` holds 0-based point indices; an empty subset yields zeros (plus
    the regularizer terms when ``include_reg``).  The regularizer must be
    smooth when included.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (data.p,):
        raise ShapeError(f"theta must have shape ({data.p},), got {theta.shape}")
    subset = np.asarray(subset, dtype=np.intp)
    if subset.size and (subset.min() < 0 or subset.max() >= data.n):
        raise ShapeError(f"subset indices must lie in [0, {data.n})")
    if subset.size:
        Xs = data.X[subset]
        ys = data.y[subset]
        m = Xs @ theta
        g = Xs.T @ loss.gcoef(m, ys)
        h = (Xs * loss.hcoef(m, ys)[:, None]).T @ Xs
    else:
        g = np.zeros(data.p)
        h = np.zeros((data.p, data.p))
    if include_reg:
        g = g + reg.grad(theta)
        h = h + reg.hess_mult * np.eye(data.p)
    return g, h


@dataclass
class EvalCounters:
    """Instrumentation: logical work counts for cost accounting.

    point_grads counts (point, parameter-vector) gradient evaluations,
    point_hessians the analogous Hessian evaluations, rank1_updates the
    rank-one Hessian-vector corrections, and linear_solves the p-by-p solves.
    """

    point_grads: int = 0
    point_hessians: int = 0
    rank1_updates: int = 0
    linear_solves: int = 0

    def merge(self, other: "EvalCounters") -> None:
        self.point_grads += other.point_grads
        self.point_hessians += other.point_hessians
        self.rank1_updates += other.rank1_updates
        self.linear_solves += other.linear_solves
