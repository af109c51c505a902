"""Declarative Monte Carlo harness for the four experiment families.

A flat `key = value` config describes the model, the swept axis (observation
horizons or parameter dimensions), the replication count and the estimators;
`run_experiment` writes one flat CSV row per (axis value, replication, method)
plus kind-specific side outputs (per-coordinate estimates for heatmaps, a
tail-bound report for diagnostics). Replication r at axis index a uses seed
base_seed + a * 10^6 + r, so any slice of a sweep is independently
reproducible; failures are recorded as tagged rows and never abort the sweep.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional

import numpy as np

from .diagnostics import concentration_check, write_concentration_report
from .dictionary import (
    DriftDictionary,
    cosine_dictionary,
    linear_ou_dictionary,
    split_cosine_dictionary,
)
from .errors import DegenerateParameter
from .estimate import adaptive_lasso, adaptive_weights, lasso, marginal, mle
from .evaluate import MetricRow, an_statistic, lp_errors, sign_consistent, support_errors
from .simulate import SimConfig, simulate_path
from .solvers import ADAPTIVE_LASSO, LASSO, MLE, SolveOptions
from .stats import SuffStats, compute_stats
from .tune import block_cv, combine_stats, lambda_grid
from .errors import EmptySupport, SingularInformation

KINDS = ("heatmap", "support_curve", "error_curve", "normality", "diagnostics")

RESULT_HEADER = (
    "kind,axis,seed,method,T,p,d,s,support_errors,sign_consistent,l1,l2,an_stat,error"
)
HEATMAP_HEADER = "coordinate,estimate,method"

# theta draws use seed + this offset so they never collide with simulation
# seeds (which occupy base_seed + a*10^6 + r for r < reps)
_THETA_SEED_OFFSET = 500_000

_AXIS_STRIDE = 10**6


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    d: int
    p: int
    sparsity: float
    nonzero_low: float = 2.0
    nonzero_high: float = 3.0
    T_values: tuple = ()
    p_values: tuple = ()
    T: float = 10.0
    reps: int = 25
    dt: float = 0.05
    burn_in: float = 10.0
    base_seed: int = 0
    methods: tuple = (MLE, LASSO, ADAPTIVE_LASSO)
    cv_folds: int = 5
    grid_size: int = 20
    grid_ratio: float = 1e-3
    # the adaptive stage needs a shorter grid: its weights already suppress
    # the inactive coordinates, so the useful lambda range is ~2 decades
    ada_grid_ratio: float = 0.015
    fixed_lambda: Optional[float] = None
    # fixes only the second-stage penalty (the pre-estimator stays CV-tuned);
    # used by the normality experiment, where CV's prediction-optimal lambda
    # leaves an O(1) bias in the standardized statistic
    ada_lambda: Optional[float] = None
    # `ada_lambda = rate` in a config: lambda = (d T)^(-3/4) per horizon
    ada_rate_lambda: bool = False
    signs: str = "positive"
    pre: str = "lasso"
    dict_kind: str = "cosine"
    base_coeff: Optional[float] = None  # None: auto, 3 * (number of nonzeros)
    x_grid: tuple = ()
    threads: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not 0.0 <= self.sparsity < 1.0:
            raise ValueError("sparsity must lie in [0, 1)")
        if self.nonzero_low > self.nonzero_high:
            raise ValueError("nonzero_low must not exceed nonzero_high")
        if self.kind == "error_curve":
            if not self.p_values:
                raise ValueError("error_curve sweeps p_values; none given")
        elif self.kind != "diagnostics" and not self.T_values:
            raise ValueError(f"{self.kind} sweeps T_values; none given")
        if self.signs not in ("positive", "random"):
            raise ValueError("signs must be 'positive' or 'random'")
        if self.pre not in ("lasso", "marginal"):
            raise ValueError("pre must be 'lasso' or 'marginal'")
        bad = [m for m in self.methods if m not in (MLE, LASSO, ADAPTIVE_LASSO)]
        if bad:
            raise ValueError(f"unsupported methods: {bad}")


def generate_theta(
    p: int,
    sparsity: float,
    low: float,
    high: float,
    rng: np.random.Generator,
    signs: str = "positive",
) -> np.ndarray:
    """Sparse parameter: round((1-sparsity)*p) nonzeros (round-half-to-even)
    at uniform positions, magnitudes uniform on [low, high], rest exactly 0."""
    if not 0.0 <= sparsity < 1.0:
        raise ValueError("sparsity must lie in [0, 1)")
    if low > high:
        raise ValueError("low must not exceed high")
    s = int(round((1.0 - sparsity) * p))
    if s == 0:
        raise DegenerateParameter(f"sparsity {sparsity} leaves no nonzeros for p={p}")
    theta = np.zeros(p)
    positions = rng.choice(p, size=s, replace=False)
    values = rng.uniform(low, high, size=s)
    if signs == "random":
        values = values * rng.choice([-1.0, 1.0], size=s)
    theta[positions] = values
    return theta


def sparsity_count(cfg: ExperimentConfig, p: int) -> int:
    return int(round((1.0 - cfg.sparsity) * p))


def build_dictionary(cfg: ExperimentConfig, p: int) -> DriftDictionary:
    base = cfg.base_coeff
    if base is None:
        base = 3.0 * sparsity_count(cfg, p)
    if cfg.dict_kind == "cosine":
        return cosine_dictionary(cfg.d, p, base)
    if cfg.dict_kind == "split_cosine":
        return split_cosine_dictionary(cfg.d, p, base)
    if cfg.dict_kind == "linear_ou":
        return linear_ou_dictionary(cfg.d, p)
    raise ValueError(f"unknown dict kind {cfg.dict_kind!r}")


@dataclass(frozen=True)
class PipelineResult:
    fits: dict
    lambdas: dict = field(default_factory=dict)
    cv: dict = field(default_factory=dict)


def fit_methods(
    traj,
    dictionary: DriftDictionary,
    stats: SuffStats,
    methods,
    cv_folds: int = 5,
    grid_size: int = 20,
    grid_ratio: float = 1e-3,
    ada_grid_ratio: float = 0.015,
    fixed_lambda: Optional[float] = None,
    ada_lambda: Optional[float] = None,
    pre_kind: str = "lasso",
    opts: Optional[SolveOptions] = None,
) -> PipelineResult:
    """Fit the requested estimators, tuning penalties by block CV.

    The adaptive stage takes its weights from the CV-tuned Lasso on the full
    data (or the marginal estimator when pre_kind='marginal'); within each
    adaptive CV fold the pre-estimator is refitted on the training blocks.
    """
    opts = opts or SolveOptions()
    fits, lambdas, cvs = {}, {}, {}
    if MLE in methods:
        fits[MLE] = mle(stats, opts)
    want_adaptive = ADAPTIVE_LASSO in methods
    lasso_fit = None
    if LASSO in methods or (want_adaptive and pre_kind == "lasso"):
        if fixed_lambda is not None:
            lam = fixed_lambda
        else:
            grid = lambda_grid(stats, np.ones(stats.p), grid_size, grid_ratio)
            cvs[LASSO] = block_cv(traj, dictionary, LASSO, grid, cv_folds, opts)
            lam = cvs[LASSO].best_lambda
        lasso_fit = lasso(stats, lam, opts)
        lambdas[LASSO] = lam
        if LASSO in methods:
            fits[LASSO] = lasso_fit
    if want_adaptive:
        pre = lasso_fit if pre_kind == "lasso" else marginal(stats)
        weights = adaptive_weights(pre.theta)
        if ada_lambda is not None:
            lam = ada_lambda
        elif fixed_lambda is not None:
            lam = fixed_lambda
        else:
            grid = lambda_grid(stats, weights, grid_size, ada_grid_ratio)
            pre_rule = None
            if pre_kind == "marginal":
                pre_rule = lambda parts: marginal(combine_stats(parts))
            cvs[ADAPTIVE_LASSO] = block_cv(
                traj, dictionary, ADAPTIVE_LASSO, grid, cv_folds, opts, pre_rule=pre_rule
            )
            lam = cvs[ADAPTIVE_LASSO].best_lambda
        fits[ADAPTIVE_LASSO] = adaptive_lasso(stats, lam, pre, opts)
        lambdas[ADAPTIVE_LASSO] = lam
    return PipelineResult(fits=fits, lambdas=lambdas, cv=cvs)


def _axis_values(cfg: ExperimentConfig):
    if cfg.kind == "error_curve":
        return [int(v) for v in cfg.p_values]
    return [float(v) for v in cfg.T_values]


def _replicate(cfg: ExperimentConfig, axis_index: int, rep: int):
    """One replication; returns (metric rows, heatmap payload or None)."""
    axis = _axis_values(cfg)[axis_index]
    p = int(axis) if cfg.kind == "error_curve" else cfg.p
    T = cfg.T if cfg.kind == "error_curve" else float(axis)
    seed = cfg.base_seed + axis_index * _AXIS_STRIDE + rep
    dictionary = build_dictionary(cfg, p)
    theta_rng = np.random.Generator(np.random.Philox(key=seed + _THETA_SEED_OFFSET))
    theta0 = generate_theta(
        p, cfg.sparsity, cfg.nonzero_low, cfg.nonzero_high, theta_rng, cfg.signs
    )
    sim = SimConfig(T=T, dt=cfg.dt, burn_in=cfg.burn_in, seed=seed)
    traj = simulate_path(dictionary, theta0, sim)
    stats = compute_stats(traj, dictionary)
    ada_lambda = cfg.ada_lambda
    if cfg.ada_rate_lambda:
        ada_lambda = (cfg.d * T) ** -0.75
    result = fit_methods(
        traj,
        dictionary,
        stats,
        cfg.methods,
        cv_folds=cfg.cv_folds,
        grid_size=cfg.grid_size,
        grid_ratio=cfg.grid_ratio,
        ada_grid_ratio=cfg.ada_grid_ratio,
        fixed_lambda=cfg.fixed_lambda,
        ada_lambda=ada_lambda,
        pre_kind=cfg.pre,
    )
    s = int(np.sum(theta0 != 0.0))
    rows = []
    for method in cfg.methods:
        fit = result.fits[method]
        an = None
        if cfg.kind == "normality":
            try:
                an = an_statistic(fit.theta, theta0, stats)
            except (EmptySupport, SingularInformation):
                an = None
        l1, l2 = lp_errors(fit.theta, theta0)
        rows.append(
            MetricRow(
                method=method,
                T=T,
                p=p,
                d=cfg.d,
                s=s,
                support_errors=support_errors(fit.theta, theta0),
                sign_consistent=sign_consistent(fit.theta, theta0),
                l1=l1,
                l2=l2,
                an_stat=an,
                seed=seed,
            )
        )
    heat = None
    if cfg.kind == "heatmap" and axis_index == 0 and rep == 0:
        heat = {"truth": theta0}
        heat.update({m: result.fits[m].theta for m in cfg.methods})
    return rows, heat


def _replicate_safe(args):
    cfg, axis_index, rep = args
    try:
        return axis_index, rep, _replicate(cfg, axis_index, rep), None
    except Exception as exc:  # isolate failures: the sweep must survive
        return axis_index, rep, None, f"{type(exc).__name__}: {exc}"


def _run_diagnostics(cfg: ExperimentConfig, out_dir: str) -> str:
    dictionary = build_dictionary(cfg, cfg.p)
    rng = np.random.Generator(np.random.Philox(key=cfg.base_seed + _THETA_SEED_OFFSET))
    theta0 = generate_theta(
        cfg.p, cfg.sparsity, cfg.nonzero_low, cfg.nonzero_high, rng, cfg.signs
    )
    T = float(cfg.T_values[0]) if cfg.T_values else cfg.T
    sim = SimConfig(T=T, dt=cfg.dt, burn_in=cfg.burn_in, seed=cfg.base_seed)
    x_grid = cfg.x_grid or tuple(np.linspace(0.1, 1.0, 10))
    report = concentration_check(
        dictionary, theta0, sim, cfg.reps, x_grid, threads=cfg.threads
    )
    path = os.path.join(out_dir, "diagnostics.csv")
    write_concentration_report(report, path)
    return path


def run_experiment(
    cfg: ExperimentConfig, out_dir: str, threads: Optional[int] = None
) -> str:
    """Run the configured sweep and return the path of the results CSV."""
    os.makedirs(out_dir, exist_ok=True)
    if cfg.kind == "diagnostics":
        return _run_diagnostics(cfg, out_dir)
    threads = cfg.threads if threads is None else threads
    axis = _axis_values(cfg)
    tasks = [(cfg, a, r) for a in range(len(axis)) for r in range(cfg.reps)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_replicate_safe, tasks, chunksize=1))
    else:
        outcomes = [_replicate_safe(t) for t in tasks]

    path = os.path.join(out_dir, f"{cfg.kind}_results.csv")
    heat_payload = None
    with open(path, "w", newline="") as fh:
        fh.write(f"# generated {datetime.now(timezone.utc).isoformat()}\n")
        writer = csv.writer(fh)
        writer.writerow(RESULT_HEADER.split(","))
        for axis_index, rep, payload, error in outcomes:
            axis_value = axis[axis_index]
            if error is not None:
                seed = cfg.base_seed + axis_index * _AXIS_STRIDE + rep
                writer.writerow(
                    [cfg.kind, axis_value, seed, "", "", "", "", ""]
                    + ["", "", "", "", ""]
                    + [error]
                )
                continue
            rows, heat = payload
            if heat is not None:
                heat_payload = heat
            for row in rows:
                writer.writerow([cfg.kind, axis_value] + row.csv_fields() + [""])
    if cfg.kind == "heatmap" and heat_payload is not None:
        heat_path = os.path.join(out_dir, "heatmap_coordinates.csv")
        with open(heat_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(HEATMAP_HEADER.split(","))
            for method, theta in heat_payload.items():
                for j, value in enumerate(theta):
                    writer.writerow([j + 1, repr(float(value)), method])
    return path


_LIST_KEYS = {"T_values", "p_values", "methods", "x_grid"}
_INT_KEYS = {"d", "p", "reps", "base_seed", "cv_folds", "grid_size", "threads"}
_FLOAT_KEYS = {
    "sparsity",
    "nonzero_low",
    "nonzero_high",
    "T",
    "dt",
    "burn_in",
    "grid_ratio",
    "ada_grid_ratio",
    "fixed_lambda",
    "ada_lambda",
}
_STR_KEYS = {"kind", "signs", "pre", "dict_kind"}

_ALIASES = {
    "dict.kind": "dict_kind",
    "dict.d": "d",
    "dict.p": "p",
    "dict.base_coeff": "base_coeff",
    "lambda": "fixed_lambda",
    "ada-lambda": "ada_lambda",
    "cv-folds": "cv_folds",
    "grid-size": "grid_size",
    "grid-ratio": "grid_ratio",
}

_METHOD_ALIASES = {"adalasso": ADAPTIVE_LASSO, "adaptive": ADAPTIVE_LASSO}


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse flat `key = value` lines; malformed lines name their line number."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = _ALIASES.get(key.strip(), key.strip())
        value = value.strip()
        if key in _LIST_KEYS:
            items = [v.strip() for v in value.split(",") if v.strip()]
            if key == "methods":
                items = [_METHOD_ALIASES.get(v, v) for v in items]
                values[key] = tuple(items)
            elif key == "p_values":
                values[key] = tuple(int(v) for v in items)
            else:
                values[key] = tuple(float(v) for v in items)
        elif key in _INT_KEYS:
            values[key] = int(value)
        elif key == "ada_lambda" and value.lower() == "rate":
            values["ada_rate_lambda"] = True
        elif key in _FLOAT_KEYS:
            values[key] = float(value)
        elif key == "base_coeff":
            values[key] = None if value.lower() == "auto" else float(value)
        elif key in _STR_KEYS:
            values[key] = value
        else:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ValueError(f"incomplete config: {exc}") from exc


def load_config(path: str) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config_text(fh.read())
