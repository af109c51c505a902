"""Drift dictionaries: the basis functions defining a linear-in-parameter drift.

A dictionary holds the mappings phi_0, phi_1, ..., phi_p from R^d to R^d.
The drift evaluated at parameter theta is

    b_theta(x) = phi_0(x) + sum_j theta_j phi_j(x) = phi_0(x) + Phi(x) @ theta,

where Phi(x) is the d x p matrix whose j-th column is phi_j(x).

Built-in kinds:
  - "cosine":     column j (1-based) has m-th component cos((j+1) * x_m);
                  phi_0(x) = base_coeff * x.
  - "linear_ou":  coordinate projections phi_j(x) = x_j e_j (requires p <= d),
                  or user-declared linear maps phi_j(x) = A_j x; phi_0 = 0.
  - "custom":     caller-supplied callables with declared Lipschitz bounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import UnsupportedBasis

COSINE = "cosine"
LINEAR_OU = "linear_ou"
CUSTOM = "custom"

_KINDS = (COSINE, LINEAR_OU, CUSTOM)


@dataclass(frozen=True)
class LipschitzMatrix:
    """Entrywise bounds Q_ij on the Lipschitz norm of x -> <phi_i(x), phi_j(x)>,
    together with K = operator norm of Q (the sub-Gaussian constant of the
    empirical covariance functional)."""

    Q: np.ndarray
    K: float


@dataclass(frozen=True)
class DriftDictionary:
    """Immutable description of the drift basis; safe to share across threads."""

    kind: str
    d: int
    p: int
    base_coeff: float = 0.0
    # custom hooks: per-column callables x (d,) -> (d,), optional intercept,
    # declared Lipschitz bounds, and an optional vectorized evaluator
    # X (n, d) -> (n, d, p) that must agree with the per-column callables.
    phi_funcs: Optional[tuple] = None
    phi0_func: Optional[Callable] = None
    lipschitz_q: Optional[np.ndarray] = None
    phi_batch: Optional[Callable] = None
    # linear_ou hook: one d x d matrix per column, phi_j(x) = A_j x.
    linear_maps: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown dictionary kind {self.kind!r}")
        if self.d < 1 or self.p < 1:
            raise ValueError("dictionary dimensions d and p must be >= 1")
        if self.kind == CUSTOM and self.phi_funcs is None:
            raise ValueError("custom dictionary requires phi_funcs")
        if self.kind == CUSTOM and len(self.phi_funcs) != self.p:
            raise ValueError("custom dictionary needs exactly p basis callables")
        if self.kind == LINEAR_OU and self.linear_maps is None and self.p > self.d:
            raise ValueError(
                "linear_ou with coordinate projections requires p <= d; "
                "declare linear_maps for p > d"
            )
        if self.linear_maps is not None and len(self.linear_maps) != self.p:
            raise ValueError("linear_maps must supply one d x d matrix per column")

    @property
    def frequencies(self) -> np.ndarray:
        """Cosine frequencies (j + 1 for the 1-based column index j)."""
        if self.kind != COSINE:
            raise ValueError("frequencies are defined for the cosine kind only")
        return np.arange(2, self.p + 2, dtype=float)

    def has_phi0(self) -> bool:
        if self.kind == COSINE:
            return self.base_coeff != 0.0
        if self.kind == CUSTOM:
            return self.phi0_func is not None
        return False


def cosine_dictionary(d: int, p: int, base_coeff: float) -> DriftDictionary:
    return DriftDictionary(kind=COSINE, d=d, p=p, base_coeff=base_coeff)


def linear_ou_dictionary(
    d: int, p: int, maps: Optional[Sequence[np.ndarray]] = None
) -> DriftDictionary:
    if maps is not None:
        maps = tuple(np.asarray(m, dtype=float) for m in maps)
        for m in maps:
            if m.shape != (d, d):
                raise ValueError("each linear map must be a d x d matrix")
    return DriftDictionary(kind=LINEAR_OU, d=d, p=p, linear_maps=maps)


def custom_dictionary(
    d: int,
    p: int,
    phi_funcs: Sequence[Callable],
    phi0: Optional[Callable] = None,
    lipschitz_q: Optional[np.ndarray] = None,
    phi_batch: Optional[Callable] = None,
) -> DriftDictionary:
    q = None
    if lipschitz_q is not None:
        q = np.asarray(lipschitz_q, dtype=float)
        if q.shape != (p, p):
            raise ValueError("lipschitz_q must be p x p")
        if not np.allclose(q, q.T) or np.any(q < 0):
            raise ValueError("lipschitz_q must be symmetric with nonnegative entries")
    return DriftDictionary(
        kind=CUSTOM,
        d=d,
        p=p,
        phi_funcs=tuple(phi_funcs),
        phi0_func=phi0,
        lipschitz_q=q,
        phi_batch=phi_batch,
    )


class _SplitCosineColumn:
    """phi_j hitting a single coordinate: x -> cos(freq * x[coord]) e_coord."""

    def __init__(self, d: int, coord: int, freq: float):
        self.d = d
        self.coord = coord
        self.freq = freq

    def __call__(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros(self.d)
        out[self.coord] = np.cos(self.freq * x[self.coord])
        return out


class _SplitCosineBatch:
    def __init__(self, d: int, p: int, coords: np.ndarray, freqs: np.ndarray):
        self.d = d
        self.p = p
        self.coords = coords
        self.freqs = freqs

    def __call__(self, states: np.ndarray) -> np.ndarray:
        n = states.shape[0]
        phi = np.zeros((n, self.d, self.p))
        for c in range(self.d):
            cols = np.nonzero(self.coords == c)[0]
            phi[:, c, cols] = np.cos(states[:, c : c + 1] * self.freqs[cols])
        return phi


def split_cosine_dictionary(d: int, p: int, base_coeff: float = 0.0) -> DriftDictionary:
    """Block-orthogonal cosine sub-dictionaries for p >> d settings.

    Column j (0-based) acts only on coordinate j % d with frequency j // d + 2,
    so <phi_i, phi_j> vanishes identically across coordinate blocks and the
    Gram matrix is exactly block diagonal.
    """
    coords = np.arange(p) % d
    freqs = (np.arange(p) // d + 2).astype(float)
    funcs = tuple(_SplitCosineColumn(d, int(coords[j]), freqs[j]) for j in range(p))
    same_block = coords[:, None] == coords[None, :]
    q = np.where(same_block, freqs[:, None] + freqs[None, :], 0.0)
    phi0 = None
    if base_coeff != 0.0:
        phi0 = lambda x, c=base_coeff: c * np.asarray(x, dtype=float)
    return custom_dictionary(
        d, p, funcs, phi0=phi0, lipschitz_q=q, phi_batch=_SplitCosineBatch(d, p, coords, freqs)
    )


def _check_point(dictionary: DriftDictionary, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (dictionary.d,):
        raise ValueError(f"x must have length d={dictionary.d}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("x contains non-finite entries")
    return x


def eval_phi(dictionary: DriftDictionary, x: np.ndarray) -> np.ndarray:
    """Evaluate the d x p basis matrix Phi(x); column j is phi_j(x)."""
    x = _check_point(dictionary, x)
    return eval_phi_batch(dictionary, x[None, :])[0]


def eval_phi_batch(dictionary: DriftDictionary, states: np.ndarray) -> np.ndarray:
    """Evaluate Phi along a batch of points; states is (n, d), result (n, d, p)."""
    states = np.asarray(states, dtype=float)
    n, d = states.shape
    p = dictionary.p
    if d != dictionary.d:
        raise ValueError(f"states have width {d}, dictionary expects d={dictionary.d}")
    if dictionary.kind == COSINE:
        return np.cos(states[:, :, None] * dictionary.frequencies)
    if dictionary.kind == LINEAR_OU:
        phi = np.zeros((n, d, p))
        if dictionary.linear_maps is None:
            idx = np.arange(p)
            phi[:, idx, idx] = states[:, :p]
        else:
            for j, m in enumerate(dictionary.linear_maps):
                phi[:, :, j] = states @ m.T
        return phi
    if dictionary.phi_batch is not None:
        return dictionary.phi_batch(states)
    phi = np.empty((n, d, p))
    for k in range(n):
        for j, f in enumerate(dictionary.phi_funcs):
            phi[k, :, j] = f(states[k])
    return phi


def eval_phi0_batch(dictionary: DriftDictionary, states: np.ndarray) -> np.ndarray:
    """Evaluate phi_0 along a batch of points; result (n, d)."""
    states = np.asarray(states, dtype=float)
    if dictionary.kind == COSINE:
        return dictionary.base_coeff * states
    if dictionary.kind == CUSTOM and dictionary.phi0_func is not None:
        return np.stack([np.asarray(dictionary.phi0_func(x), dtype=float) for x in states])
    return np.zeros_like(states)


def eval_drift(
    dictionary: DriftDictionary, theta: np.ndarray, x: np.ndarray
) -> np.ndarray:
    """Evaluate b_theta(x) = phi_0(x) + Phi(x) @ theta."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (dictionary.p,):
        raise ValueError(f"theta must have length p={dictionary.p}")
    x = _check_point(dictionary, x)
    return drift_function(dictionary, theta)(x)


def drift_function(dictionary: DriftDictionary, theta: np.ndarray) -> Callable:
    """Return a closure x -> b_theta(x), precomputing what the kind allows.

    The linear kinds collapse to a single matrix-vector (or elementwise)
    product, which keeps the per-step cost of long simulations low.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (dictionary.p,):
        raise ValueError(f"theta must have length p={dictionary.p}")
    if dictionary.kind == COSINE:
        freqs = dictionary.frequencies
        base = dictionary.base_coeff
        return lambda x: base * x + np.cos(x[:, None] * freqs) @ theta
    if dictionary.kind == LINEAR_OU:
        if dictionary.linear_maps is None:
            w = np.zeros(dictionary.d)
            w[: dictionary.p] = theta
            return lambda x: w * x
        m = sum(t * a for t, a in zip(theta, dictionary.linear_maps))
        m = np.asarray(m, dtype=float)
        return lambda x: m @ x
    funcs = dictionary.phi_funcs
    phi0 = dictionary.phi0_func

    def _drift(x):
        b = phi0(x).astype(float).copy() if phi0 is not None else np.zeros(dictionary.d)
        for t, f in zip(theta, funcs):
            if t != 0.0:
                b += t * np.asarray(f(x), dtype=float)
        return b

    return _drift


def lipschitz_matrix(dictionary: DriftDictionary) -> LipschitzMatrix:
    """Entrywise Lipschitz bounds for <phi_i, phi_j> and their operator norm.

    For the cosine kind each partial derivative of <phi_i, phi_j> is bounded
    by the sum of the two frequencies, giving Q_ij = sqrt(d) * (f_i + f_j).
    Custom dictionaries must declare their own bounds; nothing is inferred
    numerically.
    """
    if dictionary.kind == COSINE:
        f = dictionary.frequencies
        q = np.sqrt(dictionary.d) * (f[:, None] + f[None, :])
    elif dictionary.kind == CUSTOM and dictionary.lipschitz_q is not None:
        q = dictionary.lipschitz_q
    else:
        raise UnsupportedBasis(
            f"no Lipschitz bounds available for dictionary kind {dictionary.kind!r}"
        )
    return LipschitzMatrix(Q=q, K=float(np.linalg.norm(q, 2)))
