"""Sparse drift estimation for ergodic diffusions.

Simulation of dX = -b_theta(X) dt + dW with linear-in-parameter drift,
sufficient statistics of the quadratic likelihood, MLE / Lasso / marginal /
adaptive-Lasso estimators with KKT certificates, block cross-validation,
support-recovery metrics, assumption diagnostics and a Monte Carlo harness.
"""

from .dictionary import (
    DriftDictionary,
    LipschitzMatrix,
    cosine_dictionary,
    custom_dictionary,
    eval_drift,
    eval_phi,
    linear_ou_dictionary,
    lipschitz_matrix,
    split_cosine_dictionary,
)
from .diagnostics import concentration_check, irrepresentable_check, min_eig_active
from .estimate import adaptive_lasso, adaptive_weights, lasso, marginal, mle
from .evaluate import an_statistic, lp_errors, sign_consistent, support_errors
from .experiments import ExperimentConfig, generate_theta, load_config, run_experiment
from .simulate import SimConfig, Trajectory, read_trajectory, simulate_path, write_trajectory
from .solvers import (
    Fit,
    SolveOptions,
    kkt_residual,
    lambda_max,
    ridge_solve,
    soft_threshold,
    weighted_lasso,
)
from .stats import (
    NoiseStats,
    SuffStats,
    compute_noise_term,
    compute_stats,
    gradient,
    load_stats,
    neg_loglik,
    save_stats,
)
from .tune import CvResult, block_cv, block_stats, combine_stats, lambda_grid

__version__ = "0.1.0"
