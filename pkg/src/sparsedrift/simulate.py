"""Euler-Maruyama simulation of the diffusion dX = -b_theta(X) dt + dW.

A burn-in stretch started from the origin is simulated and discarded so the
retained window approximately starts from the invariant law. The generator is
Philox (counter based), so replication r can use stream seed = base_seed + r
and remain reproducible under any parallel schedule.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dictionary import DriftDictionary, drift_function
from .errors import SimulationDiverged

EXPLOSION_NORM = 1e8


@dataclass(frozen=True)
class SimConfig:
    """Horizon T, step dt and burn-in are in time units; burn-in defaults to 10."""

    T: float
    dt: float
    burn_in: float = 10.0
    seed: int = 0
    record_noise: bool = False

    def __post_init__(self):
        if self.dt <= 0 or self.T <= 0:
            raise ValueError("T and dt must be positive")
        if self.dt > self.T:
            raise ValueError("dt must not exceed T")
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")
        for name, value in (("T", self.T), ("burn_in", self.burn_in)):
            steps = value / self.dt
            if abs(steps - round(steps)) > 1e-6:
                raise ValueError(f"{name}/dt must round to an integer, got {steps}")
        if round(self.T / self.dt) < 1:
            raise ValueError("T/dt must give at least one step")

    @property
    def n_steps(self) -> int:
        return int(round(self.T / self.dt))

    @property
    def burn_steps(self) -> int:
        return int(round(self.burn_in / self.dt))


@dataclass(frozen=True)
class Trajectory:
    """Discretized path: states row k is X_{t_k}; optional noise row k is
    W_{t_{k+1}} - W_{t_k} (the increment leaving state k)."""

    dt: float
    states: np.ndarray
    noise: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.states.ndim != 2 or self.states.shape[0] < 2:
            raise ValueError("states must be an (n+1) x d matrix with n >= 1")
        if not np.all(np.isfinite(self.states)):
            raise ValueError("states contain non-finite entries")
        if self.noise is not None:
            if self.noise.shape != (self.n_steps, self.d):
                raise ValueError("noise must have exactly n rows of width d")
            if not np.all(np.isfinite(self.noise)):
                raise ValueError("noise contains non-finite entries")

    @property
    def n_steps(self) -> int:
        return self.states.shape[0] - 1

    @property
    def d(self) -> int:
        return self.states.shape[1]

    @property
    def T(self) -> float:
        return self.n_steps * self.dt


def simulate_path(
    dictionary: DriftDictionary,
    theta0: np.ndarray,
    cfg: SimConfig,
    x0: Optional[np.ndarray] = None,
    noise: Optional[np.ndarray] = None,
) -> Trajectory:
    """Simulate X_{k+1} = X_k - b_theta0(X_k) dt + sqrt(dt) xi_k.

    `x0` and `noise` are test/diagnostic hooks: `x0` overrides the zero start
    and `noise` supplies the Brownian increments for all burn-in + retained
    steps, bypassing the seeded generator.
    """
    theta0 = np.asarray(theta0, dtype=float)
    if theta0.shape != (dictionary.p,):
        raise ValueError(f"theta0 must have length p={dictionary.p}")
    drift = drift_function(dictionary, theta0)
    d = dictionary.d
    n, nb = cfg.n_steps, cfg.burn_steps
    total = nb + n

    if noise is None:
        rng = np.random.Generator(np.random.Philox(key=cfg.seed))
        increments = np.sqrt(cfg.dt) * rng.standard_normal((total, d))
    else:
        increments = np.asarray(noise, dtype=float)
        if increments.shape != (total, d):
            raise ValueError(f"noise hook must have shape ({total}, {d})")

    x = np.zeros(d) if x0 is None else np.asarray(x0, dtype=float).copy()
    if x.shape != (d,):
        raise ValueError(f"x0 must have length d={d}")
    states = np.empty((n + 1, d))
    dt = cfg.dt
    for k in range(total):
        if k >= nb:
            states[k - nb] = x
        x = x - drift(x) * dt + increments[k]
        if not np.all(np.isfinite(x)) or x @ x > EXPLOSION_NORM**2:
            raise SimulationDiverged(k)
    states[n] = x
    kept = increments[nb:].copy() if cfg.record_noise else None
    return Trajectory(dt=dt, states=states, noise=kept)


def write_trajectory(traj: Trajectory, path: str) -> None:
    """CSV with header t,x1,...,xd[,w1,...,wd]; one row per grid point.

    Noise cells are empty on the last row (no increment leaves the endpoint).
    """
    d = traj.d
    header = ["t"] + [f"x{i + 1}" for i in range(d)]
    if traj.noise is not None:
        header += [f"w{i + 1}" for i in range(d)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(traj.n_steps + 1):
            row = [repr(k * traj.dt)] + [repr(float(v)) for v in traj.states[k]]
            if traj.noise is not None:
                if k < traj.n_steps:
                    row += [repr(float(v)) for v in traj.noise[k]]
                else:
                    row += [""] * d
            writer.writerow(row)


def read_trajectory(path: str) -> Trajectory:
    """Read a trajectory written by `write_trajectory`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader if row]
    x_cols = [i for i, name in enumerate(header) if name.startswith("x")]
    w_cols = [i for i, name in enumerate(header) if name.startswith("w")]
    if header[0] != "t" or not x_cols:
        raise ValueError(f"unrecognized trajectory header: {header}")
    t = np.array([float(r[0]) for r in rows])
    states = np.array([[float(r[i]) for i in x_cols] for r in rows])
    if len(rows) < 2:
        raise ValueError("trajectory file has fewer than 2 grid points")
    dt = float(t[1] - t[0])
    noise = None
    if w_cols:
        noise = np.array([[float(r[i]) for i in w_cols] for r in rows[:-1]])
    return Trajectory(dt=dt, states=states, noise=noise)
