"""Step-size and minibatch schedules.

Both schedules are pure functions of the iteration counter t (1-based), so a
run can be replayed exactly: two schedules built with the same arguments agree
at every t no matter in which order the iterations are queried.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError


@dataclass(frozen=True)
class StepSchedule:
    """Learning-rate sequence alpha_t.

    kind 'constant': alpha_t = alpha for all t.
    kind 'epoch_doubling': alpha for the first t0 steps, alpha/2 for the next
    2*t0 steps, alpha/4 for the next 4*t0, and so on (epoch k has 2**k * t0
    steps at rate alpha / 2**k).
    """

    kind: str
    alpha: float
    t0: int = 0

    def __post_init__(self):
        if self.kind not in ("constant", "epoch_doubling"):
            raise ShapeError(f"unknown step schedule kind {self.kind!r}")
        if not np.isfinite(self.alpha) or self.alpha <= 0:
            raise ShapeError(f"alpha must be finite and > 0, got {self.alpha}")
        if self.kind == "epoch_doubling" and self.t0 < 1:
            raise ShapeError("epoch_doubling requires t0 >= 1")

    def step_at(self, t: int) -> float:
        if t < 1:
            raise ShapeError(f"iterations are 1-based, got t={t}")
        if self.kind == "constant":
            return self.alpha
        # epoch k covers t in ((2**k - 1)*t0, (2**(k+1) - 1)*t0]; integer
        # arithmetic only, so the boundary cases are exact
        k = ((t + self.t0 - 1) // self.t0).bit_length() - 1
        return self.alpha / float(2**k)


def constant_steps(alpha: float) -> StepSchedule:
    return StepSchedule("constant", alpha)


def epoch_doubling_steps(alpha: float, t0: int) -> StepSchedule:
    return StepSchedule("epoch_doubling", alpha, t0)


@dataclass(frozen=True)
class BatchSchedule:
    """Minibatch index sets S_t, shared by a run and all its trackers.

    kind 'full': S_t = all n points.
    kind 'bernoulli': each point enters S_t independently with probability
    k/n, so |S_t| is random with mean k.
    kind 'fixed_size': exactly k points drawn without replacement.

    Stochastic batches are counter-based: S_t is a deterministic function of
    (seed, t, n, k), never of how many draws happened before.  Indices are
    returned sorted.
    """

    kind: str
    n: int
    k: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("full", "bernoulli", "fixed_size"):
            raise ShapeError(f"unknown batch schedule kind {self.kind!r}")
        if self.n < 1:
            raise ShapeError(f"need n >= 1, got {self.n}")
        if self.kind != "full" and not 1 <= self.k <= self.n:
            raise ShapeError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")

    @property
    def stochastic(self) -> bool:
        return self.kind != "full"

    @property
    def mean_size(self) -> int:
        return self.n if self.kind == "full" else self.k

    def batch_at(self, t: int) -> np.ndarray:
        if t < 1:
            raise ShapeError(f"iterations are 1-based, got t={t}")
        if self.kind == "full":
            return np.arange(self.n, dtype=np.intp)
        rng = np.random.default_rng(np.random.SeedSequence((self.seed, self.n, self.k, t)))
        if self.kind == "bernoulli":
            # inclusion probability k/n; k == n keeps every point since
            # random() < 1.0 always holds
            mask = rng.random(self.n) < self.k / self.n
            return np.flatnonzero(mask).astype(np.intp)
        idx = rng.choice(self.n, size=self.k, replace=False)
        idx.sort()
        return idx.astype(np.intp)


def full_batches(n: int) -> BatchSchedule:
    return BatchSchedule("full", n)


def bernoulli_batches(n: int, k: int, seed: int) -> BatchSchedule:
    return BatchSchedule("bernoulli", n, k, seed)


def fixed_size_batches(n: int, k: int, seed: int) -> BatchSchedule:
    return BatchSchedule("fixed_size", n, k, seed)
