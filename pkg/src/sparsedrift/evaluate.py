"""Support, sign and error metrics, plus the standardized normality statistic."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import EmptySupport, SingularInformation
from .stats import SuffStats

ZERO_TOL = 1e-8  # soft-thresholding yields exact zeros; this guards MLE output

METRIC_HEADER = "seed,method,T,p,d,s,support_errors,sign_consistent,l1,l2,an_stat"


@dataclass(frozen=True)
class MetricRow:
    method: str
    T: float
    p: int
    d: int
    s: int
    support_errors: int
    sign_consistent: bool
    l1: float
    l2: float
    an_stat: Optional[float]
    seed: int

    def csv_fields(self) -> list:
        return [
            self.seed,
            self.method,
            repr(self.T),
            self.p,
            self.d,
            self.s,
            self.support_errors,
            int(self.sign_consistent),
            repr(self.l1),
            repr(self.l2),
            "" if self.an_stat is None else repr(self.an_stat),
        ]


def _pair(theta_hat: np.ndarray, theta0: np.ndarray):
    theta_hat = np.asarray(theta_hat, dtype=float)
    theta0 = np.asarray(theta0, dtype=float)
    if theta_hat.shape != theta0.shape or theta_hat.ndim != 1:
        raise ValueError("theta_hat and theta0 must be vectors of equal length")
    return theta_hat, theta0


def support_errors(
    theta_hat: np.ndarray, theta0: np.ndarray, zero_tol: float = ZERO_TOL
) -> int:
    """Count coordinates whose estimated activity disagrees with the truth."""
    theta_hat, theta0 = _pair(theta_hat, theta0)
    if zero_tol < 0:
        raise ValueError("zero_tol must be nonnegative")
    return int(np.sum((np.abs(theta_hat) > zero_tol) != (theta0 != 0.0)))


def sign_consistent(
    theta_hat: np.ndarray, theta0: np.ndarray, zero_tol: float = ZERO_TOL
) -> bool:
    """True iff the sign patterns match exactly after zero_tol zeroing."""
    theta_hat, theta0 = _pair(theta_hat, theta0)
    if zero_tol < 0:
        raise ValueError("zero_tol must be nonnegative")
    s_hat = np.where(np.abs(theta_hat) > zero_tol, np.sign(theta_hat), 0.0)
    return bool(np.array_equal(s_hat, np.sign(theta0)))


def lp_errors(theta_hat: np.ndarray, theta0: np.ndarray) -> tuple:
    """(l1, l2) norms of the estimation error."""
    theta_hat, theta0 = _pair(theta_hat, theta0)
    diff = theta_hat - theta0
    return float(np.sum(np.abs(diff))), float(np.sqrt(diff @ diff))


def an_statistic(
    theta_hat: np.ndarray,
    theta0: np.ndarray,
    stats: SuffStats,
    zero_tol: float = ZERO_TOL,
) -> float:
    """Standardized error sqrt(T) * s^-1 * alpha . (theta_hat - theta0) on the
    estimated support, with alpha the equal-weight unit vector there and
    s^2 = alpha . (C_SS)^-1 alpha from the plug-in empirical covariance."""
    theta_hat, theta0 = _pair(theta_hat, theta0)
    if theta_hat.shape != (stats.p,):
        raise ValueError(f"vectors must have length p={stats.p}")
    support = np.nonzero(np.abs(theta_hat) > zero_tol)[0]
    if support.size == 0:
        raise EmptySupport("estimated support is empty")
    alpha = np.full(support.size, 1.0 / np.sqrt(support.size))
    c_ss = stats.C[np.ix_(support, support)]
    try:
        solved = np.linalg.solve(c_ss, alpha)
    except np.linalg.LinAlgError as exc:
        raise SingularInformation("active-block covariance is singular") from exc
    s_sq = float(alpha @ solved)
    if not np.isfinite(s_sq) or s_sq <= 0:
        raise SingularInformation(f"plug-in variance {s_sq} is not positive")
    gap = alpha @ (theta_hat[support] - theta0[support])
    return float(np.sqrt(stats.T / s_sq) * gap)
