"""Full-data iterative solvers: GD, minibatch SGD, and proximal GD.

Every algorithm is one instance of the same update: take a gradient step on
the smooth part g (pointwise losses over the batch plus any smooth penalty),
then apply the proximal map of the nonsmooth part h,

    theta_t = prox_{alpha_t * h}( theta_{t-1} - alpha_t * grad g_{S_t}(theta_{t-1}) ).

GD is h == 0 with full batches, SGD is h == 0 with stochastic batches, and
proximal GD is h == l1 with full batches.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericsError, ShapeError
from .model import Dataset, EvalCounters, Regularizer
from .schedules import BatchSchedule, StepSchedule


@dataclass(frozen=True)
class SolverSpec:
    """Everything needed to replay a run: problem, schedules, start point.

    ``smooth_reg`` is differentiated inside every gradient (never dropped when
    points are left out); ``prox_reg`` is handled only through its prox.
    """

    loss: object
    data: Dataset
    smooth_reg: Regularizer
    prox_reg: Regularizer
    steps: StepSchedule
    batches: BatchSchedule
    theta0: np.ndarray

    def __post_init__(self):
        if not self.smooth_reg.smooth:
            raise ShapeError("smooth_reg must be 'ridge' or 'none'")
        if self.prox_reg.kind not in ("l1", "none"):
            raise ShapeError("prox_reg must be 'l1' or 'none'")
        if self.batches.n != self.data.n:
            raise ShapeError(f"batch schedule is over n={self.batches.n} points, data has {self.data.n}")
        theta0 = np.asarray(self.theta0, dtype=np.float64)
        if theta0.shape != (self.data.p,):
            raise ShapeError(f"theta0 must have shape ({self.data.p},), got {theta0.shape}")
        object.__setattr__(self, "theta0", theta0)

    @property
    def algorithm(self) -> str:
        if self.prox_reg.kind == "l1":
            return "proxgd" if not self.batches.stochastic else "prox-sgd"
        return "sgd" if self.batches.stochastic else "gd"


def batch_gradient(spec: SolverSpec, theta, batch, counters: EvalCounters | None = None):
    """Gradient of the smooth part over one batch (losses + smooth penalty)."""
    X, y = spec.data.X, spec.data.y
    Xs = X[batch]
    g = Xs.T @ spec.loss.gcoef(Xs @ theta, y[batch])
    g += spec.smooth_reg.grad(theta)
    if counters is not None:
        counters.point_grads += int(batch.size)
    return g


def full_step(spec: SolverSpec, theta_prev, t: int, counters: EvalCounters | None = None):
    """One update of the full-data iterate, from iteration t-1 to t."""
    batch = spec.batches.batch_at(t)
    alpha = spec.steps.step_at(t)
    g = batch_gradient(spec, theta_prev, batch, counters)
    theta = spec.prox_reg.prox(theta_prev - alpha * g, alpha)
    if not np.isfinite(theta).all():
        raise NumericsError("non-finite full-data iterate", where=f"full_step t={t}")
    return theta


@dataclass
class TrajectoryRecord:
    """Iterates (T+1, p) including theta0, and per-step wall times (T,)."""

    thetas: np.ndarray
    step_seconds: np.ndarray

    @property
    def T(self) -> int:
        return self.thetas.shape[0] - 1

    def at(self, t: int) -> np.ndarray:
        return self.thetas[t]


def run(spec: SolverSpec, T: int) -> TrajectoryRecord:
    """Run T iterations from theta0, recording every iterate."""
    if T < 0:
        raise ShapeError(f"need T >= 0, got {T}")
    thetas = np.empty((T + 1, spec.data.p))
    thetas[0] = spec.theta0
    seconds = np.empty(T)
    theta = spec.theta0
    for t in range(1, T + 1):
        tic = time.perf_counter()
        theta = full_step(spec, theta, t)
        seconds[t - 1] = time.perf_counter() - tic
        thetas[t] = theta
    return TrajectoryRecord(thetas, seconds)


def objective(spec: SolverSpec, theta) -> float:
    """F(theta): all pointwise losses plus both penalties."""
    m = spec.data.X @ theta
    val = float(spec.loss.values(m, spec.data.y).sum())
    return val + spec.smooth_reg.value(theta) + spec.prox_reg.value(theta)


def optimality_residual(spec: SolverSpec, theta, alpha: float | None = None) -> float:
    """Stationarity measure at theta for the full objective.

    Smooth problems: the gradient norm.  With an l1 part: the prox-gradient
    fixed-point residual ||theta - prox_{alpha*h}(theta - alpha*grad g)|| / alpha,
    which vanishes exactly at minimizers.
    """
    full = np.arange(spec.data.n, dtype=np.intp)
    g = batch_gradient(spec, theta, full)
    if spec.prox_reg.kind == "none":
        return float(np.linalg.norm(g))
    if alpha is None:
        alpha = spec.steps.step_at(1)
    moved = spec.prox_reg.prox(theta - alpha * g, alpha)
    return float(np.linalg.norm(theta - moved) / alpha)
