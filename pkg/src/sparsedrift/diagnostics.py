"""Numeric checks of the model assumptions and concentration bounds.

The tail checks compare Monte Carlo exceedance frequencies of the empirical
covariance entries and of the martingale term against their sub-Gaussian /
Bernstein bounds; the bounds are deliberately conservative, so any flag points
at an implementation bug rather than at bad luck.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .dictionary import DriftDictionary, lipschitz_matrix
from .errors import SingularInformation
from .simulate import SimConfig, simulate_path
from .stats import compute_noise_term, compute_stats

CONCENTRATION_HEADER = "x,empirical_C,bound_lemma61,empirical_eps,bound_prop64,flag"


def _check_support(p: int, support: Sequence[int]) -> np.ndarray:
    idx = np.asarray(list(support), dtype=int)
    if idx.size == 0:
        raise ValueError("index set must be nonempty")
    if idx.min() < 0 or idx.max() >= p or len(np.unique(idx)) != idx.size:
        raise ValueError(f"invalid index set for p={p}: {support}")
    return idx


def min_eig_active(C: np.ndarray, support: Sequence[int]) -> float:
    """Smallest eigenvalue of the principal submatrix on `support` (0-based)."""
    C = np.asarray(C, dtype=float)
    idx = _check_support(C.shape[0], support)
    return float(np.linalg.eigvalsh(C[np.ix_(idx, idx)]).min())


def irrepresentable_check(
    C: np.ndarray, support: Sequence[int], eta0: np.ndarray
) -> float:
    """Largest violation ratio of the adaptive irrepresentable condition.

    With u_j = sign(eta0_j)/|eta0_j| on the support, returns

        kappa_hat = max_{j off support} |eta0_j| * |(C_off,S (C_SS)^-1 u)_j|,

    so the condition holds with constant kappa_hat iff kappa_hat < 1. A block
    diagonal C gives exactly 0.
    """
    C = np.asarray(C, dtype=float)
    p = C.shape[0]
    idx = _check_support(p, support)
    eta0 = np.asarray(eta0, dtype=float)
    if eta0.shape != (p,):
        raise ValueError(f"eta0 must have length p={p}")
    if np.any(eta0[idx] == 0.0):
        raise ValueError("eta0 must be nonzero on the support")
    comp = np.setdiff1d(np.arange(p), idx)
    if comp.size == 0:
        return 0.0
    u = 1.0 / eta0[idx]  # sign(e)/|e| == 1/e
    try:
        solved = np.linalg.solve(C[np.ix_(idx, idx)], u)
    except np.linalg.LinAlgError as exc:
        raise SingularInformation("active-block matrix is singular") from exc
    cross = C[np.ix_(comp, idx)] @ solved
    return float(np.max(np.abs(eta0[comp]) * np.abs(cross)))


@dataclass(frozen=True)
class ConcentrationReport:
    x: np.ndarray
    empirical_C: np.ndarray
    bound_lemma61: np.ndarray
    empirical_eps: np.ndarray
    bound_prop64: np.ndarray
    flags: np.ndarray
    worst_entry: tuple
    worst_component: int
    lipschitz_K: float
    diag_max: float

    @property
    def n_flags(self) -> int:
        return int(np.sum(self.flags))


def _one_replication(args) -> tuple:
    dictionary, theta0, cfg, seed = args
    traj = simulate_path(dictionary, theta0, replace(cfg, seed=seed, record_noise=True))
    st = compute_stats(traj, dictionary)
    eps = compute_noise_term(traj, dictionary).eps
    return st.C, eps


def concentration_check(
    dictionary: DriftDictionary,
    theta0: np.ndarray,
    cfg: SimConfig,
    reps: int,
    x_grid: Sequence[float],
    ref_factor: float = 50.0,
    threads: int = 1,
) -> ConcentrationReport:
    """Monte Carlo tail frequencies of |C_T - C_inf| entries and |eps_T|
    components versus their exponential bounds.

    The reference C_inf is estimated from a single run of length
    ref_factor * cfg.T. Replication r uses seed cfg.seed + 1 + r. A grid point
    is flagged when an empirical frequency exceeds its bound by more than
    three binomial standard errors.
    """
    if reps < 100:
        raise ValueError("reps must be >= 100 for meaningful frequencies")
    x = np.asarray(list(x_grid), dtype=float)
    if x.ndim != 1 or x.size == 0 or np.any(x < 0):
        raise ValueError("x_grid must be a nonempty nonnegative vector")
    K = lipschitz_matrix(dictionary).K

    ref_cfg = replace(cfg, T=ref_factor * cfg.T, record_noise=False)
    ref = compute_stats(simulate_path(dictionary, theta0, ref_cfg), dictionary)
    c_inf = ref.C
    diag_max = float(np.max(np.diag(c_inf)))

    tasks = [(dictionary, theta0, cfg, cfg.seed + 1 + r) for r in range(reps)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_one_replication, tasks, chunksize=8))
    else:
        results = [_one_replication(t) for t in tasks]
    c_devs = np.stack([np.abs(c - c_inf) for c, _ in results])
    eps_all = np.stack([np.abs(e) for _, e in results])

    worst_entry = np.unravel_index(np.argmax(c_devs.max(axis=0)), c_inf.shape)
    worst_comp = int(np.argmax(eps_all.max(axis=0)))
    dev_series = c_devs[:, worst_entry[0], worst_entry[1]]
    eps_series = eps_all[:, worst_comp]

    T = cfg.T
    emp_c = np.array([np.mean(dev_series >= xi) for xi in x])
    emp_e = np.array([np.mean(eps_series >= xi) for xi in x])
    bound_c = 6.0 * np.exp(-T * x**2 / (36.0 * K))
    bound_e = 2.0 * np.exp(-T * x**2 / (2.0 * (np.sqrt(K) + diag_max))) + 6.0 * np.exp(
        -T / 36.0
    )
    se_c = np.sqrt(emp_c * (1.0 - emp_c) / reps)
    se_e = np.sqrt(emp_e * (1.0 - emp_e) / reps)
    flags = (emp_c > bound_c + 3.0 * se_c) | (emp_e > bound_e + 3.0 * se_e)
    return ConcentrationReport(
        x=x,
        empirical_C=emp_c,
        bound_lemma61=bound_c,
        empirical_eps=emp_e,
        bound_prop64=bound_e,
        flags=flags,
        worst_entry=(int(worst_entry[0]), int(worst_entry[1])),
        worst_component=worst_comp,
        lipschitz_K=K,
        diag_max=diag_max,
    )


def write_concentration_report(report: ConcentrationReport, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CONCENTRATION_HEADER.split(","))
        for i in range(report.x.size):
            writer.writerow(
                [
                    repr(float(report.x[i])),
                    repr(float(report.empirical_C[i])),
                    repr(float(report.bound_lemma61[i])),
                    repr(float(report.empirical_eps[i])),
                    repr(float(report.bound_prop64[i])),
                    int(report.flags[i]),
                ]
            )
