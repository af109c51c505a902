"""Sufficient statistics of the quadratic drift likelihood.

The scaled negative log-likelihood of a linear drift is, up to a term free of
theta,

    L(theta) = g . theta + 0.5 theta . C theta,

with the empirical covariance C = (1/T) int Phi(X)' Phi(X) dt and the linear
coefficient g = (1/T) int Phi(X)' dX + (1/T) int Phi(X)' phi_0(X) dt.  The
vector m = -(1/T) int Phi(X)' dX is the marginal estimator.  All integrals use
left-endpoint sums: mandatory for the Ito integral and used for the Riemann
integral too so that statistics are exactly additive over time blocks.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dictionary import DriftDictionary, eval_phi0_batch, eval_phi_batch
from .errors import MissingNoise
from .simulate import Trajectory

_CHUNK = 8192


@dataclass(frozen=True)
class SuffStats:
    """Quadratic-form representation (C, g, m) of the likelihood over [0, T].

    When built by hand (tests, synthetic problems) `m` may be omitted; it then
    defaults to -g, the value it takes when phi_0 vanishes.
    """

    C: np.ndarray
    g: np.ndarray
    T: float
    m: Optional[np.ndarray] = None
    p: int = field(init=False)

    def __post_init__(self):
        C = np.asarray(self.C, dtype=float)
        g = np.asarray(self.g, dtype=float)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "p", g.shape[0] if g.ndim == 1 else -1)
        if g.ndim != 1 or C.shape != (self.p, self.p):
            raise ValueError("C must be p x p and g a length-p vector")
        if self.T <= 0:
            raise ValueError("T must be positive")
        scale = np.max(np.abs(C)) if C.size else 0.0
        if scale and np.max(np.abs(C - C.T)) > 1e-12 * scale:
            raise ValueError("C must be symmetric (relative tolerance 1e-12)")
        m = -g if self.m is None else np.asarray(self.m, dtype=float)
        if m.shape != (self.p,):
            raise ValueError("m must be a length-p vector")
        object.__setattr__(self, "m", m)


@dataclass(frozen=True)
class NoiseStats:
    """Oracle martingale term eps = (1/T) int Phi(X)' dW from recorded noise."""

    eps: np.ndarray


def _accumulate(traj: Trajectory, dictionary: DriftDictionary, rhs: np.ndarray):
    """Left-endpoint sums of Phi'Phi, Phi'rhs and Phi'phi_0 in fixed chunk order."""
    p = dictionary.p
    n = traj.n_steps
    gram = np.zeros((p, p))
    ito = np.zeros(p)
    cross = np.zeros(p)
    with_phi0 = dictionary.has_phi0()
    for a in range(0, n, _CHUNK):
        b = min(a + _CHUNK, n)
        x = traj.states[a:b]
        phi = eval_phi_batch(dictionary, x)
        flat = phi.reshape((b - a) * traj.d, p)
        gram += flat.T @ flat
        ito += flat.T @ rhs[a:b].reshape(-1)
        if with_phi0:
            cross += flat.T @ eval_phi0_batch(dictionary, x).reshape(-1)
    return gram, ito, cross, with_phi0


def compute_stats(traj: Trajectory, dictionary: DriftDictionary) -> SuffStats:
    """Reduce a trajectory to (C, g, m); C is symmetrized after accumulation."""
    if traj.d != dictionary.d:
        raise ValueError(f"trajectory width {traj.d} != dictionary d={dictionary.d}")
    if traj.states.shape[0] < 2:
        raise ValueError("trajectory must contain at least 2 grid points")
    dx = np.diff(traj.states, axis=0)
    gram, ito, cross, with_phi0 = _accumulate(traj, dictionary, dx)
    T = traj.T
    C = gram * (traj.dt / T)
    C = (C + C.T) / 2.0
    m = -ito / T
    g = (ito + traj.dt * cross) / T if with_phi0 else -m
    return SuffStats(C=C, g=g, T=T, m=m)


def compute_noise_term(traj: Trajectory, dictionary: DriftDictionary) -> NoiseStats:
    """eps = (1/T) sum_k Phi(X_k)' (W_{t_{k+1}} - W_{t_k}); needs recorded noise."""
    if traj.noise is None:
        raise MissingNoise("trajectory was simulated without record_noise")
    if traj.d != dictionary.d:
        raise ValueError(f"trajectory width {traj.d} != dictionary d={dictionary.d}")
    _, ito, _, _ = _accumulate(traj, dictionary, traj.noise)
    return NoiseStats(eps=ito / traj.T)


def neg_loglik(stats: SuffStats, theta: np.ndarray) -> float:
    """Theta-dependent part of the scaled negative log-likelihood."""
    theta = _check_theta(stats, theta)
    return float(stats.g @ theta + 0.5 * theta @ (stats.C @ theta))


def gradient(stats: SuffStats, theta: np.ndarray) -> np.ndarray:
    """Gradient g + C theta of `neg_loglik`."""
    theta = _check_theta(stats, theta)
    return stats.g + stats.C @ theta


def _check_theta(stats: SuffStats, theta: np.ndarray) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (stats.p,):
        raise ValueError(f"theta must have length p={stats.p}")
    return theta


def save_stats(stats: SuffStats, path: str) -> None:
    """Flat CSV cache: C row-major, then g, then m, then T (one value per line)."""
    values = np.concatenate([stats.C.reshape(-1), stats.g, stats.m, [stats.T]])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for v in values:
            writer.writerow([repr(float(v))])


def load_stats(path: str) -> SuffStats:
    """Load a `save_stats` cache; p is recovered from the record count (p+1)^2."""
    with open(path, newline="") as fh:
        values = np.array([float(row[0]) for row in csv.reader(fh) if row])
    p = int(round(np.sqrt(values.size))) - 1
    if (p + 1) ** 2 != values.size or p < 1:
        raise ValueError(f"stats cache has {values.size} values, not (p+1)^2")
    C = values[: p * p].reshape(p, p)
    g = values[p * p : p * p + p]
    m = values[p * p + p : p * p + 2 * p]
    return SuffStats(C=C, g=g, T=float(values[-1]), m=m)
