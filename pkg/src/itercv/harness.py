"""Config-driven experiments over the trackers and one-step estimators.

A run is: draw synthetic sparse-logistic data per trial, run the full-data
solver for T iterations with the exact leave-one-out rows and the cheap
tracker advancing in lockstep, and at recorded iterations score every
requested method against the exact rows.  Outputs are plain CSV files plus a
timing ledger; all error columns are deterministic given the config (wall
times of course are not), and a digest over the deterministic columns is
reported so runs can be compared byte-for-byte.

Method names: 'iacv' (the iterative tracker), 'ns', 'ij' (one-step estimates
recomputed at each recorded iterate), 'baseline' (the full iterate itself).
The exact rows are always computed since every metric is measured against
them; listing 'exact' under methods is allowed and redundant.  Per-trial
seeds are base_seed + trial index; trials never share random state, so
results do not depend on how many worker processes are used.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import math
import time
from dataclasses import dataclass, field, asdict

import numpy as np
import yaml

from .datagen import gen_logistic
from .errors import ConfigError
from .exact_loo import initial_loo_state, loo_step
from .iacv import iacv_step
from .metrics import AggregateRow, MetricsRow, aggregate, err_approx, err_cv
from .model import EvalCounters, Regularizer, loss_model
from .onestep import along_path_estimates
from .schedules import (BatchSchedule, StepSchedule, bernoulli_batches, constant_steps,
                        epoch_doubling_steps, fixed_size_batches, full_batches)
from .trajectory import SolverSpec, full_step

_FMT = "%.17g"

_SOLVERS = ("gd", "sgd", "proxgd")
_METHODS = ("exact", "iacv", "baseline", "ns", "ij")
_TOP_KEYS = {"solver", "n", "p", "iterations", "base_seed", "loss", "sparsity",
             "lam_coef", "penalty", "step", "batch", "cadence", "methods",
             "trials", "workers"}
_STEP_KEYS = {"kind", "alpha", "t0"}
_BATCH_KEYS = {"kind", "k"}


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one experiment; see README for every key."""

    solver: str
    n: int
    p: int
    iterations: int
    step: dict
    batch: dict = field(default_factory=lambda: {"kind": "full"})
    base_seed: int = 0
    loss: str = "logistic"
    sparsity: int = 5
    lam_coef: float = 1e-6
    penalty: str = ""            # '' means: l1 for proxgd, ridge otherwise
    cadence: object = "auto"
    methods: tuple = ("iacv", "baseline", "ns", "ij")
    trials: int = 1
    workers: int = 0

    def __post_init__(self):
        if self.solver not in _SOLVERS:
            raise ConfigError(f"solver must be one of {_SOLVERS}, got {self.solver!r}")
        for name, lo in (("n", 1), ("p", 1), ("iterations", 1), ("trials", 1)):
            v = getattr(self, name)
            if not isinstance(v, int) or v < lo:
                raise ConfigError(f"{name} must be an integer >= {lo}, got {v!r}")
        if not isinstance(self.sparsity, int) or not 0 <= self.sparsity <= self.p:
            raise ConfigError(f"sparsity must be an integer in [0, p], got {self.sparsity!r}")
        if self.lam_coef < 0:
            raise ConfigError(f"lam_coef must be >= 0, got {self.lam_coef}")
        if self.workers < 0:
            raise ConfigError(f"workers must be >= 0, got {self.workers}")
        object.__setattr__(self, "methods", tuple(self.methods))
        for m in self.methods:
            if m not in _METHODS:
                raise ConfigError(f"unknown method {m!r}, expected subset of {_METHODS}")
        object.__setattr__(self, "penalty", self.penalty or
                           ("l1" if self.solver == "proxgd" else "ridge"))
        if self.solver == "proxgd" and self.penalty != "l1":
            raise ConfigError("solver proxgd requires penalty l1")
        if self.solver != "proxgd" and self.penalty == "l1":
            raise ConfigError(f"penalty l1 requires solver proxgd, got {self.solver}")
        self._validate_step()
        self._validate_batch()
        self._validate_cadence()

    def _validate_step(self):
        step = dict(self.step)
        unknown = set(step) - _STEP_KEYS
        if unknown:
            raise ConfigError(f"unknown step keys {sorted(unknown)}")
        kind = step.get("kind")
        if kind == "constant":
            if "t0" in step:
                raise ConfigError("step kind constant takes no t0")
        elif kind == "epoch_doubling":
            if not isinstance(step.get("t0"), int) or step["t0"] < 1:
                raise ConfigError("epoch_doubling requires integer t0 >= 1")
        else:
            raise ConfigError(f"step kind must be constant or epoch_doubling, got {kind!r}")
        alpha = step.get("alpha")
        if not isinstance(alpha, (int, float)) or not alpha > 0:
            raise ConfigError(f"step alpha must be > 0, got {alpha!r}")
        object.__setattr__(self, "step", step)

    def _validate_batch(self):
        batch = dict(self.batch)
        unknown = set(batch) - _BATCH_KEYS
        if unknown:
            raise ConfigError(f"unknown batch keys {sorted(unknown)}")
        kind = batch.get("kind")
        if kind == "full":
            if "k" in batch:
                raise ConfigError("batch kind full takes no k")
            if self.solver == "sgd":
                raise ConfigError("solver sgd requires a stochastic batch kind")
        elif kind in ("bernoulli", "fixed_size"):
            if self.solver != "sgd":
                raise ConfigError(f"solver {self.solver} requires batch kind full")
            k = batch.get("k")
            if not isinstance(k, int) or not 1 <= k <= self.n:
                raise ConfigError(f"batch k must be an integer in [1, n], got {k!r}")
        else:
            raise ConfigError(f"batch kind must be full, bernoulli, or fixed_size, got {kind!r}")
        object.__setattr__(self, "batch", batch)

    def _validate_cadence(self):
        c = self.cadence
        if isinstance(c, bool) or not (c in ("auto", "all", "log") or
                                       (isinstance(c, int) and c >= 1)):
            raise ConfigError(f"cadence must be auto, all, log, or an integer >= 1, got {c!r}")

    @property
    def lam(self) -> float:
        return self.lam_coef * self.n

    @property
    def estimators(self) -> tuple:
        return tuple(m for m in self.methods if m != "exact")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["methods"] = list(self.methods)
        return d

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError(f"config must be a mapping, got {type(raw).__name__}")
        unknown = set(raw) - _TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        missing = {"solver", "n", "p", "iterations", "step"} - set(raw)
        if missing:
            raise ConfigError(f"missing required config keys {sorted(missing)}")
        kwargs = dict(raw)
        if "methods" in kwargs:
            kwargs["methods"] = tuple(kwargs["methods"])
        return cls(**kwargs)

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    @classmethod
    def from_yaml(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(yaml.safe_load(text))

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_yaml(fh.read())


def build_solver_spec(cfg: ExperimentConfig, trial_seed: int) -> SolverSpec:
    """Materialize data, penalties, and schedules for one trial (origin start)."""
    data, _ = gen_logistic(cfg.n, cfg.p, cfg.sparsity, trial_seed)
    lam = cfg.lam
    if cfg.penalty == "ridge":
        smooth, prox = Regularizer("ridge", lam), Regularizer()
    elif cfg.penalty == "l1":
        smooth, prox = Regularizer(), Regularizer("l1", lam)
    else:
        smooth, prox = Regularizer(), Regularizer()
    step = cfg.step
    if step["kind"] == "constant":
        steps = constant_steps(float(step["alpha"]))
    else:
        steps = epoch_doubling_steps(float(step["alpha"]), int(step["t0"]))
    batch = cfg.batch
    if batch["kind"] == "full":
        batches = full_batches(cfg.n)
    elif batch["kind"] == "bernoulli":
        batches = bernoulli_batches(cfg.n, int(batch["k"]), trial_seed)
    else:
        batches = fixed_size_batches(cfg.n, int(batch["k"]), trial_seed)
    return SolverSpec(loss_model(cfg.loss), data, smooth, prox, steps, batches,
                      np.zeros(cfg.p))


def checkpoints(T: int, cadence) -> np.ndarray:
    """Recorded iterations: every one, every m-th, or ~120 log-spaced."""
    if cadence == "auto":
        cadence = "all" if T <= 1000 else "log"
    if cadence == "all":
        return np.arange(1, T + 1)
    if cadence == "log":
        pts = np.unique(np.geomspace(1, T, num=min(120, T)).round().astype(int))
        return pts
    m = int(cadence)
    pts = np.arange(m, T + 1, m)
    if pts.size == 0 or pts[-1] != T:
        pts = np.append(pts, T)
    return pts


@dataclass
class TrialResult:
    rows: list
    totals: dict          # method -> cumulative seconds
    step_seconds: dict    # method -> per-iteration (or per-invocation) times
    counters: dict        # method -> EvalCounters


def run_trial(cfg: ExperimentConfig, trial: int) -> TrialResult:
    """One seeded trial of the lockstep run; see run_experiment."""
    spec = build_solver_spec(cfg, cfg.base_seed + trial)
    record = set(int(t) for t in checkpoints(cfg.iterations, cfg.cadence))
    estimators = cfg.estimators
    track = "iacv" in estimators

    theta = spec.theta0
    exact = initial_loo_state(spec)
    tilde = initial_loo_state(spec) if track else None
    stepping = ["full", "exact"] + (["iacv"] if track else [])
    counters = {m: EvalCounters() for m in set(stepping) | set(estimators)}
    totals = {m: 0.0 for m in set(stepping) | set(estimators)}
    per_iter = {m: [] for m in stepping}
    per_call = {m: [] for m in estimators if m != "iacv"}
    rows = []

    for t in range(1, cfg.iterations + 1):
        if track:
            tic = time.perf_counter()
            tilde = iacv_step(spec, theta, tilde, t, counters["iacv"])
            dt = time.perf_counter() - tic
            totals["iacv"] += dt
            per_iter["iacv"].append(dt)
        tic = time.perf_counter()
        exact = loo_step(spec, exact, t, counters["exact"])
        dt = time.perf_counter() - tic
        totals["exact"] += dt
        per_iter["exact"].append(dt)
        tic = time.perf_counter()
        theta = full_step(spec, theta, t, counters["full"])
        dt = time.perf_counter() - tic
        totals["full"] += dt
        per_iter["full"].append(dt)

        if t in record:
            for m in estimators:
                if m == "iacv":
                    est = tilde.theta
                else:
                    tic = time.perf_counter()
                    est = along_path_estimates(spec, theta, m, counters[m])
                    dt = time.perf_counter() - tic
                    totals[m] += dt
                    per_call[m].append(dt)
                e_approx = err_approx(est, exact.theta)
                e_cv, rel_cv = err_cv(spec.loss, spec.data, est, exact.theta)
                rows.append(MetricsRow(trial, m, t, e_approx, e_cv, rel_cv, totals[m]))
    step_seconds = {m: np.asarray(v) for m, v in {**per_iter, **per_call}.items()}
    return TrialResult(rows, totals, step_seconds, counters)


def _run_trial_star(args):
    return run_trial(*args)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list
    aggregates: list
    trial_results: list
    digest: str


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> ExperimentResult:
    """Run all trials (optionally in parallel processes) and aggregate.

    Trial outputs are collected in trial order, so the metrics CSV and its
    digest are identical for any worker count.
    """
    tasks = [(cfg, trial) for trial in range(cfg.trials)]
    if cfg.workers > 1 and cfg.trials > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            trial_results = list(pool.map(_run_trial_star, tasks))
    else:
        trial_results = [run_trial(*task) for task in tasks]
    rows = [r for tr in trial_results for r in tr.rows]
    aggregates = aggregate(rows)
    result = ExperimentResult(cfg, rows, aggregates, trial_results,
                              metrics_digest(rows))
    if out_dir is not None:
        write_outputs(result, out_dir)
    return result


# ---------------------------------------------------------------- output ---

_METRIC_COLS = ("trial", "method", "t", "err_approx", "err_cv", "rel_err_cv")


def render_metrics_csv(rows, with_timing: bool = True) -> str:
    header = ",".join(_METRIC_COLS + (("cum_seconds",) if with_timing else ()))
    lines = [header]
    for r in rows:
        vals = [str(r.trial), r.method, str(r.t), _FMT % r.err_approx,
                _FMT % r.err_cv, _FMT % r.rel_err_cv]
        if with_timing:
            vals.append(_FMT % r.cum_seconds)
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def render_aggregate_csv(aggs) -> str:
    header = ("method,t,median_err_approx,q1_err_approx,q3_err_approx,"
              "median_err_cv,q1_err_cv,q3_err_cv,median_rel_err_cv,median_cum_seconds")
    lines = [header]
    for a in aggs:
        lines.append(",".join([a.method, str(a.t)] + [
            _FMT % v for v in (a.median_err_approx, a.q1_err_approx, a.q3_err_approx,
                               a.median_err_cv, a.q1_err_cv, a.q3_err_cv,
                               a.median_rel_err_cv, a.median_cum_seconds)]))
    return "\n".join(lines) + "\n"


def render_timing_csv(trial_results) -> str:
    header = ("trial,method,total_seconds,median_step_seconds,"
              "point_grads,point_hessians,rank1_updates,linear_solves")
    lines = [header]
    for trial, tr in enumerate(trial_results):
        for m in sorted(tr.totals):
            med = float(np.median(tr.step_seconds[m])) if len(tr.step_seconds.get(m, [])) else float("nan")
            c = tr.counters[m]
            lines.append(",".join([str(trial), m, _FMT % tr.totals[m], _FMT % med,
                                   str(c.point_grads), str(c.point_hessians),
                                   str(c.rank1_updates), str(c.linear_solves)]))
    return "\n".join(lines) + "\n"


def metrics_digest(rows) -> str:
    """SHA-256 over the deterministic metric columns (timing excluded)."""
    text = render_metrics_csv(rows, with_timing=False)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def summary_text(result: ExperimentResult) -> str:
    cfg = result.config
    out = [f"solver={cfg.solver} n={cfg.n} p={cfg.p} T={cfg.iterations} "
           f"trials={cfg.trials} methods={','.join(cfg.estimators)}",
           f"digest={result.digest}"]
    final_t = max((a.t for a in result.aggregates), default=0)
    for a in result.aggregates:
        if a.t == final_t:
            out.append(f"  t={a.t} {a.method}: median err_approx={a.median_err_approx:.6g} "
                       f"median err_cv={a.median_err_cv:.6g}")
    exact_total = sum(tr.totals.get("exact", 0.0) for tr in result.trial_results)
    iacv_total = sum(tr.totals.get("iacv", 0.0) for tr in result.trial_results)
    out.append(f"  exact rows total {exact_total:.2f}s, tracker total {iacv_total:.2f}s")
    return "\n".join(out) + "\n"


def write_outputs(result: ExperimentResult, out_dir) -> None:
    import os

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "metrics.csv"), "w", encoding="utf-8") as fh:
        fh.write(render_metrics_csv(result.rows))
    with open(os.path.join(out_dir, "aggregate.csv"), "w", encoding="utf-8") as fh:
        fh.write(render_aggregate_csv(result.aggregates))
    with open(os.path.join(out_dir, "timing.csv"), "w", encoding="utf-8") as fh:
        fh.write(render_timing_csv(result.trial_results))
    with open(os.path.join(out_dir, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(summary_text(result))


# ------------------------------------------------------------- runtime ----


@dataclass
class RuntimeReport:
    median_seconds: dict   # method -> median per-iteration seconds
    total_seconds: dict
    counters: dict         # method -> EvalCounters
    iterations: int

    @property
    def speedup(self) -> float:
        return self.median_seconds["exact"] / self.median_seconds["iacv"]

    def text(self) -> str:
        lines = [f"per-iteration wall time over {self.iterations} iterations (medians):"]
        for m in ("full", "iacv", "exact"):
            c = self.counters[m]
            lines.append(f"  {m:6s} {self.median_seconds[m] * 1e3:9.4f} ms/iter  "
                         f"total {self.total_seconds[m]:8.3f}s  "
                         f"point grads {c.point_grads}  rank1 {c.rank1_updates}")
        lines.append(f"exact-rows / tracker speedup: {self.speedup:.1f}x")
        return "\n".join(lines) + "\n"


def compare_runtime(cfg: ExperimentConfig) -> RuntimeReport:
    """Time the full run, the exact rows, and the tracker on one trial.

    The tracker must be among the configured methods; the exact rows always
    run (they are what everything is measured against).
    """
    if "iacv" not in cfg.methods:
        raise ConfigError("compare_runtime needs method 'iacv' in the config")
    spec = build_solver_spec(cfg, cfg.base_seed)
    theta = spec.theta0
    exact = initial_loo_state(spec)
    tilde = initial_loo_state(spec)
    counters = {m: EvalCounters() for m in ("full", "exact", "iacv")}
    seconds = {m: np.empty(cfg.iterations) for m in ("full", "exact", "iacv")}
    for t in range(1, cfg.iterations + 1):
        tic = time.perf_counter()
        tilde = iacv_step(spec, theta, tilde, t, counters["iacv"])
        seconds["iacv"][t - 1] = time.perf_counter() - tic
        tic = time.perf_counter()
        exact = loo_step(spec, exact, t, counters["exact"])
        seconds["exact"][t - 1] = time.perf_counter() - tic
        tic = time.perf_counter()
        theta = full_step(spec, theta, t, counters["full"])
        seconds["full"][t - 1] = time.perf_counter() - tic
    return RuntimeReport(
        median_seconds={m: float(np.median(v)) for m, v in seconds.items()},
        total_seconds={m: float(v.sum()) for m, v in seconds.items()},
        counters=counters,
        iterations=cfg.iterations,
    )


# ---------------------------------------------------------------- plots ----


def plot_metrics(input_csv, out_svg, metric: str = "err_approx") -> None:
    """Render median curves per method from a metrics.csv as an SVG.

    Axes are log scaled; rows whose value is zero or NaN cannot appear on a
    log plot and are dropped.
    """
    if metric not in ("err_approx", "err_cv", "rel_err_cv"):
        raise ConfigError(f"unknown metric {metric!r}")
    import csv as _csv

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    per_method: dict = {}
    with open(input_csv, "r", encoding="utf-8") as fh:
        for row in _csv.DictReader(fh):
            key = (row["method"], int(row["t"]))
            per_method.setdefault(key, []).append(float(row[metric]))
    series: dict = {}
    for (method, t), vals in sorted(per_method.items()):
        series.setdefault(method, ([], []))
        med = float(np.nanmedian(np.asarray(vals)))
        if np.isfinite(med) and med > 0:
            series[method][0].append(t)
            series[method][1].append(med)
    fig, ax = plt.subplots(figsize=(6, 4))
    for method, (ts, vals) in sorted(series.items()):
        ax.plot(ts, vals, label=method)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("iteration")
    ax.set_ylabel(f"median {metric}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_svg, format="svg")
    plt.close(fig)
