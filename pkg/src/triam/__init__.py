"""Gradient-free MLP training by triple-inertial accelerated alternating
minimization, with backprop baselines, convergence diagnostics, and a
multi-seed benchmark harness."""

from .accel import AccelTriple, ScheduleConfig, extrapolate, schedule_eps, schedule_p, schedule_rho
from .baselines import BaselineConfig, backprop_grads, baseline_step, train_baseline
from .data import Dataset, load_csv, one_hot, save_csv, split, synth_blobs
from .diagnostics import (
    DiagnosticsReport,
    build_report,
    check_monotonicity,
    estimate_rate,
    increment_norms,
    stationarity_residual,
    verify_majorization,
)
from .network import (
    Activation,
    NetworkSpec,
    NetworkState,
    RegularizerSpec,
    activation_apply,
    activation_inverse_bounds,
    forward_inference,
    loss_R,
    loss_R_grad,
    objective_F,
    penalty_grads,
    penalty_phi,
    regularizer_value,
)
from .solver import BacktrackConfig, FistaConfig, backtrack_constant
from .trainer import EpochMetrics, RunHistory, TrainConfig, evaluate_accuracy, initialize_state, train

__version__ = "0.1.0"
