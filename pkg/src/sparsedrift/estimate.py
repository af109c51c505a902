"""Estimator pipeline: MLE, Lasso, marginal pre-estimator, adaptive Lasso.

The adaptive Lasso reweights the l1 penalty by the reciprocal magnitudes of a
first-stage estimate; coordinates whose pre-estimate is (relatively) zero are
pinned to zero outright, the exact limit of an infinite weight.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .errors import DegeneratePreEstimator
from .solvers import (
    ADAPTIVE_LASSO,
    LASSO,
    MARGINAL,
    Fit,
    SolveOptions,
    ridge_solve,
    weighted_lasso,
)
from .stats import SuffStats

PIN_REL = 1e-8  # |pre_j| below this fraction of max |pre| pins coordinate j
PIN_ABS = 1e-12  # absolute fallback when the whole pre-estimate is zero


def mle(stats: SuffStats, opts: Optional[SolveOptions] = None) -> Fit:
    """Unpenalized maximizer via the ridge-guarded linear solve."""
    return ridge_solve(stats, opts)


def lasso(
    stats: SuffStats,
    lam: float,
    opts: Optional[SolveOptions] = None,
    theta_init: Optional[np.ndarray] = None,
) -> Fit:
    """l1-penalized fit with unit weights."""
    return weighted_lasso(
        stats, lam, np.ones(stats.p), opts=opts, theta_init=theta_init, method=LASSO
    )


def marginal(stats: SuffStats) -> Fit:
    """Componentwise estimator m = -(1/T) int Phi' dX; no optimization involved."""
    return Fit(
        theta=stats.m.copy(),
        method=MARGINAL,
        lam=0.0,
        weights=np.ones(stats.p),
        kkt_residual=0.0,
        iterations=0,
        converged=True,
    )


def adaptive_weights(pre_theta: np.ndarray) -> np.ndarray:
    """Weights 1/|pre_j|, with relatively-zero coordinates pinned (weight inf)."""
    pre_theta = np.asarray(pre_theta, dtype=float)
    scale = float(np.max(np.abs(pre_theta))) if pre_theta.size else 0.0
    cutoff = PIN_REL * scale if scale > 0.0 else PIN_ABS
    weights = np.full(pre_theta.shape, np.inf)
    live = np.abs(pre_theta) >= cutoff
    weights[live] = 1.0 / np.abs(pre_theta[live])
    return weights


def adaptive_lasso(
    stats: SuffStats,
    lam: float,
    pre: Fit,
    opts: Optional[SolveOptions] = None,
    theta_init: Optional[np.ndarray] = None,
) -> Fit:
    """Second-stage fit with weights from the pre-estimate `pre`."""
    pre_theta = np.asarray(pre.theta, dtype=float)
    if pre_theta.shape != (stats.p,):
        raise ValueError(f"pre-estimate must have length p={stats.p}")
    weights = adaptive_weights(pre_theta)
    if not np.any(np.isfinite(weights)):
        raise DegeneratePreEstimator("every pre-estimate coordinate is pinned")
    return weighted_lasso(
        stats, lam, weights, opts=opts, theta_init=theta_init, method=ADAPTIVE_LASSO
    )
