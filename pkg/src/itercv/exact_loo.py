"""Exact leave-one-out trajectories, run in lockstep with the full iterate.

Row i of the state follows the same algorithm as the full run except that
point i never contributes a gradient term: at iteration t row i moves along
the batch S_t minus i, evaluated at row i's own parameters.  All rows share
the batch and step schedules with the full run; nothing is re-drawn.

The n rows are advanced together with matrix arithmetic.  Per iteration this
costs n * |S_t| pointwise gradient evaluations, which is the Theta(n^2) per
iteration (GD) price that the cheaper trackers avoid.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import NumericsError, ShapeError
from .model import EvalCounters
from .trajectory import SolverSpec


@dataclass
class LooState:
    """Per-row parameters, shape (n, p); row i excludes point i.  t is the
    iteration the state has reached."""

    theta: np.ndarray
    t: int = 0


def initial_loo_state(spec: SolverSpec) -> LooState:
    return LooState(np.tile(spec.theta0, (spec.data.n, 1)), 0)


def _smooth_grad_rows(reg, Theta):
    # ridge gradient is linear in theta, so rows can share one expression
    return reg.hess_mult * Theta


def loo_step(spec: SolverSpec, state: LooState, t: int,
             counters: EvalCounters | None = None) -> LooState:
    """Advance every leave-one-out row from iteration t-1 to t."""
    if state.t != t - 1:
        raise ShapeError(f"state is at iteration {state.t}, cannot step to {t}")
    S = spec.batches.batch_at(t)
    alpha = spec.steps.step_at(t)
    X, y = spec.data.X, spec.data.y
    Theta = state.theta

    if S.size:
        XS = X[S]
        # margins[i, j] = x_{S_j} . theta_row_i, one dgemm for all rows
        margins = Theta @ XS.T
        coef = spec.loss.gcoef(margins, y[S])
        G = coef @ XS
        # rows that sit in the batch drop their own term
        G[S] -= coef[S, np.arange(S.size)][:, None] * XS
    else:
        G = np.zeros_like(Theta)
    G += _smooth_grad_rows(spec.smooth_reg, Theta)
    if counters is not None:
        counters.point_grads += spec.data.n * int(S.size)

    new = spec.prox_reg.prox(Theta - alpha * G, alpha)
    if not np.isfinite(new).all():
        bad = int(np.argmax(~np.isfinite(new).all(axis=1)))
        raise NumericsError(f"non-finite leave-one-out row {bad}", where=f"loo_step t={t}")
    return LooState(new, t)


@dataclass
class LooRun:
    """states[t] is the (n, p) row matrix after iteration t, t = 0..T."""

    states: list
    step_seconds: np.ndarray

    def at(self, t: int) -> np.ndarray:
        return self.states[t]


def run_loo(spec: SolverSpec, T: int) -> LooRun:
    """Run all leave-one-out rows for T iterations, recording every state.

    Memory is (T+1) * n * p floats; for long runs drive loo_step directly and
    keep only what you need.
    """
    if T < 0:
        raise ShapeError(f"need T >= 0, got {T}")
    state = initial_loo_state(spec)
    states = [state.theta.copy()]
    seconds = np.empty(T)
    for t in range(1, T + 1):
        tic = time.perf_counter()
        state = loo_step(spec, state, t)
        seconds[t - 1] = time.perf_counter() - tic
        states.append(state.theta)
    return LooRun(states, seconds)
