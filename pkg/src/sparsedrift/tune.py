"""Lambda-path construction and contiguous-block cross-validation.

Trajectory data are serially dependent, so folds are contiguous time blocks
rather than shuffled points. Training statistics are exact T-weighted
combinations of the retained blocks (left-endpoint sums are additive over a
partition of the step indices); the validation score is the held-out block's
negative log-likelihood at the fitted parameter.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .dictionary import DriftDictionary
from .errors import CvFailed, DegenerateCoordinate, DegeneratePreEstimator
from .estimate import adaptive_weights, lasso
from .simulate import Trajectory
from .solvers import (
    ADAPTIVE_LASSO,
    LASSO,
    Fit,
    SolveOptions,
    lambda_max,
    weighted_lasso,
)
from .stats import SuffStats, compute_stats, neg_loglik

DEFAULT_FOLDS = 5
DEFAULT_GRID_SIZE = 20
DEFAULT_GRID_RATIO = 1e-3


@dataclass(frozen=True)
class CvResult:
    grid: np.ndarray  # descending lambda values
    scores: np.ndarray  # mean validation negative log-likelihood per grid point
    best_lambda: float
    fold_count: int
    skipped_folds: int = 0


def lambda_grid(
    stats: SuffStats, weights: np.ndarray, n_grid: int, ratio: float
) -> np.ndarray:
    """Geometric grid from lambda_max down to ratio * lambda_max, descending."""
    if n_grid < 2:
        raise ValueError("n_grid must be >= 2")
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must lie in (0, 1)")
    top = lambda_max(stats, weights)
    return np.geomspace(top, ratio * top, n_grid)


def split_steps(n_steps: int, blocks: int) -> List[tuple]:
    """Partition step indices 0..n-1 into contiguous near-equal blocks."""
    if blocks < 1 or blocks > n_steps:
        raise ValueError(f"cannot split {n_steps} steps into {blocks} blocks")
    sizes = np.full(blocks, n_steps // blocks)
    sizes[: n_steps % blocks] += 1
    edges = np.concatenate([[0], np.cumsum(sizes)])
    return [(int(edges[b]), int(edges[b + 1])) for b in range(blocks)]


def block_stats(
    traj: Trajectory, dictionary: DriftDictionary, blocks: int
) -> List[SuffStats]:
    """Per-block sufficient statistics; block b covers states[a : b_end + 1]."""
    parts = []
    for a, b in split_steps(traj.n_steps, blocks):
        sub = Trajectory(dt=traj.dt, states=traj.states[a : b + 1])
        parts.append(compute_stats(sub, dictionary))
    return parts


def combine_stats(parts: Sequence[SuffStats]) -> SuffStats:
    """T-weighted average of block statistics; exact inverse of the split."""
    if not parts:
        raise ValueError("no statistics to combine")
    T = sum(s.T for s in parts)
    C = sum(s.T * s.C for s in parts) / T
    g = sum(s.T * s.g for s in parts) / T
    m = sum(s.T * s.m for s in parts) / T
    return SuffStats(C=C, g=g, T=T, m=m)


def _path_scores(
    train: SuffStats,
    val: SuffStats,
    grid: np.ndarray,
    weights: np.ndarray,
    opts: SolveOptions,
    method: str,
) -> np.ndarray:
    """Warm-started descending-lambda path on train, scored on val."""
    scores = np.empty(len(grid))
    warm = None
    for i, lam in enumerate(grid):
        fit = weighted_lasso(
            train, float(lam), weights, opts=opts, theta_init=warm, method=method
        )
        warm = fit.theta
        scores[i] = neg_loglik(val, fit.theta)
    return scores


def _cv_lasso_on_parts(
    parts: Sequence[SuffStats], n_grid: int, ratio: float, opts: SolveOptions
) -> Fit:
    """CV-tuned Lasso using the given blocks as folds; fitted on their union."""
    full = combine_stats(parts)
    ones = np.ones(full.p)
    grid = lambda_grid(full, ones, n_grid, ratio)
    if len(parts) >= 2:
        scores = np.zeros(len(grid))
        for f in range(len(parts)):
            train = combine_stats([s for i, s in enumerate(parts) if i != f])
            scores += _path_scores(train, parts[f], grid, ones, opts, LASSO)
        best = float(grid[int(np.argmin(scores))])
    else:
        # single training block: no inner folds, take the geometric midpoint
        best = float(np.sqrt(grid[0] * grid[-1]))
    return lasso(full, best, opts=opts)


def block_cv(
    traj: Trajectory,
    dictionary: DriftDictionary,
    method: str,
    grid: np.ndarray,
    folds: int = DEFAULT_FOLDS,
    opts: Optional[SolveOptions] = None,
    pre_rule: Optional[Callable[[Sequence[SuffStats]], Fit]] = None,
) -> CvResult:
    """K-fold contiguous-block CV over a descending lambda grid.

    For the adaptive method the pre-estimator is refitted within each fold's
    training blocks; the default rule is a CV-tuned Lasso over those blocks.
    Ties in the mean score break toward the larger lambda (stronger sparsity).
    """
    if method not in (LASSO, ADAPTIVE_LASSO):
        raise ValueError("block_cv supports the lasso and adaptive_lasso methods")
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if traj.states.shape[0] < 2 * folds:
        raise ValueError("trajectory must contain at least 2*folds grid points")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 1 or np.any(grid < 0):
        raise ValueError("grid must be a nonnegative vector")
    if np.any(np.diff(grid) > 0):
        raise ValueError("grid must be descending")
    opts = opts or SolveOptions()
    if pre_rule is None and method == ADAPTIVE_LASSO:
        ratio = float(grid[-1] / grid[0]) if grid[0] > 0 and len(grid) > 1 else DEFAULT_GRID_RATIO
        ratio = min(max(ratio, 1e-12), 0.999999)
        pre_rule = lambda parts: _cv_lasso_on_parts(parts, max(len(grid), 2), ratio, opts)

    parts = block_stats(traj, dictionary, folds)
    fold_scores = []
    skipped = 0
    for f in range(folds):
        train = combine_stats([s for i, s in enumerate(parts) if i != f])
        try:
            if method == ADAPTIVE_LASSO:
                pre = pre_rule([s for i, s in enumerate(parts) if i != f])
                weights = adaptive_weights(pre.theta)
                if not np.any(np.isfinite(weights)):
                    raise DegeneratePreEstimator("pre-estimate pinned every coordinate")
            else:
                weights = np.ones(train.p)
            scores = _path_scores(train, parts[f], grid, weights, opts, method)
        except (DegeneratePreEstimator, DegenerateCoordinate, np.linalg.LinAlgError):
            skipped += 1
            continue
        if not np.all(np.isfinite(scores)):
            skipped += 1
            continue
        fold_scores.append(scores)
    if not fold_scores:
        raise CvFailed(f"all {folds} folds were degenerate")
    mean_scores = np.mean(fold_scores, axis=0)
    best = int(np.argmin(mean_scores))  # first minimum = largest lambda on ties
    return CvResult(
        grid=grid,
        scores=mean_scores,
        best_lambda=float(grid[best]),
        fold_count=folds,
        skipped_folds=skipped,
    )
