"""Leave-one-out cross-validation tracked along iterative optimizers.

Exact leave-one-out trajectories cost Theta(n^2) pointwise gradient
evaluations per GD iteration; the iterative tracker in :mod:`itercv.iacv`
follows all n of them for Theta(n) per iteration using shared second-order
information at the full-data iterate, and converges to the classical one-step
(Newton / infinitesimal jackknife) estimates once the optimizer converges.
"""

from .datagen import gen_logistic, read_csv, write_csv
from .errors import (ConfigError, ConvergenceError, NotPositiveDefiniteError,
                     NumericsError, ShapeError)
from .exact_loo import LooState, initial_loo_state, loo_step, run_loo
from .harness import (ExperimentConfig, compare_runtime, metrics_digest,
                      run_experiment, run_trial)
from .iacv import iacv_run, iacv_step
from .metrics import MetricsRow, aggregate, cv_loss, err_approx, err_cv
from .model import (DataPoint, Dataset, EvalCounters, Regularizer, loss_grad,
                    loss_hess, loss_hess_vec, loss_model, loss_value, prox_l1,
                    subset_grad_hess)
from .onestep import (along_path_estimates, baseline_estimates, ij_estimate,
                      ns_estimate, prox_ij_estimate, prox_ns_estimate, scaled_prox)
from .schedules import (BatchSchedule, StepSchedule, bernoulli_batches,
                        constant_steps, epoch_doubling_steps, fixed_size_batches,
                        full_batches)
from .theory import (BoundSequences, TheoryConstants, bound_recursion,
                     estimate_constants, hypothesis_violations, reverse_jensen_ratio)
from .trajectory import SolverSpec, TrajectoryRecord, full_step, objective, optimality_residual, run

__version__ = "0.1.0"
