"""Iterative approximate leave-one-out tracking (the cheap tracker).

Instead of advancing row i with its own gradient (exact tracking does, at
Theta(n^2) pointwise evaluations per GD iteration), each row takes a
second-order step built from quantities at the shared full-data iterate
theta_hat^{t-1}:

    u_i = tilde_i - alpha_t * ( grad_{S_t \\ i}(theta_hat)
                                + hess_{S_t \\ i}(theta_hat) @ (tilde_i - theta_hat) )
    tilde_i <- prox_{alpha_t * h}(u_i)

The batch gradient and Hessian at theta_hat are computed once and shared by
all rows; leaving point i out is a per-row rank-one correction.  The smooth
penalty is part of every gradient and Hessian and is never subtracted.  Total
cost per iteration: |S_t| pointwise gradient/Hessian evaluations plus n
rank-one corrections and one (n, p) x (p, p) product.

The tracker must see the full-data iterate *before* it advances through
iteration t; drive it with iacv_step(spec, theta_hat_prev, state, t) where
theta_hat_prev is the full iterate at t-1.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import NumericsError, ShapeError
from .exact_loo import LooState, initial_loo_state
from .model import EvalCounters
from .trajectory import SolverSpec, full_step


def iacv_step(spec: SolverSpec, theta_hat_prev, state: LooState, t: int,
              counters: EvalCounters | None = None) -> LooState:
    """Advance every tracked row from iteration t-1 to t.

    theta_hat_prev is the full-data iterate after iteration t-1 (the same one
    the full run used to take its own step t).
    """
    if state.t != t - 1:
        raise ShapeError(f"state is at iteration {state.t}, cannot step to {t}")
    theta_hat_prev = np.asarray(theta_hat_prev, dtype=np.float64)
    if theta_hat_prev.shape != (spec.data.p,):
        raise ShapeError(f"theta_hat_prev must have shape ({spec.data.p},)")
    S = spec.batches.batch_at(t)
    alpha = spec.steps.step_at(t)
    X, y = spec.data.X, spec.data.y
    Theta = state.theta
    n, p = spec.data.n, spec.data.p

    V = Theta - theta_hat_prev  # (n, p), rows tilde_i - theta_hat

    if S.size:
        XS = X[S]
        m = XS @ theta_hat_prev
        gc = spec.loss.gcoef(m, y[S])   # pointwise gradient coefficients
        hc = spec.loss.hcoef(m, y[S])   # pointwise Hessian coefficients
        G = XS.T @ gc + spec.smooth_reg.grad(theta_hat_prev)
        H = (XS * hc[:, None]).T @ XS
        H[np.diag_indices(p)] += spec.smooth_reg.hess_mult
        U = V @ H
        U += G
        # per-row corrections: batch rows drop their own gradient term and
        # their own rank-one Hessian action
        U[S] -= (gc + hc * np.einsum("ij,ij->i", XS, V[S]))[:, None] * XS
    else:
        G = spec.smooth_reg.grad(theta_hat_prev)
        U = V * spec.smooth_reg.hess_mult
        U += G
    if counters is not None:
        counters.point_grads += int(S.size)
        counters.point_hessians += int(S.size)
        counters.rank1_updates += n

    new = spec.prox_reg.prox(Theta - alpha * U, alpha)
    if not np.isfinite(new).all():
        bad = int(np.argmax(~np.isfinite(new).all(axis=1)))
        raise NumericsError(f"non-finite tracked row {bad}", where=f"iacv_step t={t}")
    return LooState(new, t)


@dataclass
class IacvRun:
    """states[t] is the (n, p) tracked-row matrix after iteration t."""

    states: list
    step_seconds: np.ndarray

    def at(self, t: int) -> np.ndarray:
        return self.states[t]


def iacv_run(spec: SolverSpec, T: int) -> IacvRun:
    """Track for T iterations, replaying the full run internally."""
    if T < 0:
        raise ShapeError(f"need T >= 0, got {T}")
    state = initial_loo_state(spec)
    theta_hat = spec.theta0
    states = [state.theta.copy()]
    seconds = np.empty(T)
    for t in range(1, T + 1):
        tic = time.perf_counter()
        state = iacv_step(spec, theta_hat, state, t)
        seconds[t - 1] = time.perf_counter() - tic
        theta_hat = full_step(spec, theta_hat, t)
        states.append(state.theta)
    return IacvRun(states, seconds)
