"""Command-line surface: simulate / estimate / experiment / diagnose.

Exit codes: 0 success, 1 usage error (bad flags, malformed config or input
files), 2 numeric/runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

import numpy as np

from . import errors
from .dictionary import cosine_dictionary, linear_ou_dictionary, split_cosine_dictionary
from .estimate import marginal, mle
from .experiments import fit_methods, load_config, run_experiment
from .simulate import SimConfig, read_trajectory, simulate_path, write_trajectory
from .solvers import ADAPTIVE_LASSO, LASSO
from .stats import compute_stats


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _add_dict_flags(sub):
    sub.add_argument("--dict", default="cosine", choices=["cosine", "linear_ou", "split_cosine"])
    sub.add_argument("--d", type=int, required=True)
    sub.add_argument("--p", type=int, required=True)
    sub.add_argument("--base-coeff", type=float, default=0.0)


def _build_dictionary(args):
    if args.dict == "cosine":
        return cosine_dictionary(args.d, args.p, args.base_coeff)
    if args.dict == "split_cosine":
        return split_cosine_dictionary(args.d, args.p, args.base_coeff)
    return linear_ou_dictionary(args.d, args.p)


def _parse_theta(spec: str, p: int) -> np.ndarray:
    if os.path.exists(spec):
        with open(spec) as fh:
            text = fh.read()
        values = [float(v) for v in text.replace("\n", ",").split(",") if v.strip()]
    else:
        values = [float(v) for v in spec.split(",")]
    theta = np.asarray(values, dtype=float)
    if theta.shape != (p,):
        raise _UsageError(f"--theta0 supplied {theta.size} values, expected p={p}")
    return theta


def build_parser() -> _Parser:
    parser = _Parser(prog="sparsedrift", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate", help="simulate a trajectory and write it as CSV")
    _add_dict_flags(sim)
    sim.add_argument("--theta0", required=True, help="comma-separated values or a CSV file")
    sim.add_argument("--T", type=float, required=True)
    sim.add_argument("--dt", type=float, required=True)
    sim.add_argument("--burn-in", type=float, default=10.0)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--record-noise", action="store_true")
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=_cmd_simulate)

    est = subs.add_parser("estimate", help="estimate the drift parameter from a trajectory CSV")
    _add_dict_flags(est)
    est.add_argument("--input", required=True)
    est.add_argument(
        "--method", required=True, choices=["mle", "lasso", "adalasso", "marginal"]
    )
    est.add_argument("--lambda", dest="lam", type=float, default=None)
    est.add_argument("--cv", action="store_true")
    est.add_argument("--cv-folds", type=int, default=5)
    est.add_argument("--grid-size", type=int, default=20)
    est.add_argument("--grid-ratio", type=float, default=1e-3)
    est.add_argument("--pre", default="lasso", choices=["lasso", "marginal"])
    est.add_argument("--out", default=None, help="JSON output path (default: stdout)")
    est.set_defaults(func=_cmd_estimate)

    exp = subs.add_parser("experiment", help="run a configured Monte Carlo sweep")
    exp.add_argument("--config", required=True)
    exp.add_argument("--out-dir", required=True)
    exp.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    exp.set_defaults(func=_cmd_experiment)

    dia = subs.add_parser("diagnose", help="run the concentration-bound diagnostics")
    dia.add_argument("--config", required=True)
    dia.add_argument("--reps", type=int, default=None)
    dia.add_argument("--out", required=True)
    dia.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    dia.set_defaults(func=_cmd_diagnose)
    return parser


def _cmd_simulate(args) -> int:
    dictionary = _build_dictionary(args)
    theta0 = _parse_theta(args.theta0, args.p)
    cfg = SimConfig(
        T=args.T,
        dt=args.dt,
        burn_in=args.burn_in,
        seed=args.seed,
        record_noise=args.record_noise,
    )
    traj = simulate_path(dictionary, theta0, cfg)
    write_trajectory(traj, args.out)
    print(f"wrote {traj.n_steps + 1} grid points to {args.out}")
    return 0


def _cmd_estimate(args) -> int:
    dictionary = _build_dictionary(args)
    traj = read_trajectory(args.input)
    if traj.d != args.d:
        raise _UsageError(f"--d {args.d} does not match trajectory width {traj.d}")
    stats = compute_stats(traj, dictionary)
    if args.method == "mle":
        fit = mle(stats)
    elif args.method == "marginal":
        fit = marginal(stats)
    else:
        method = LASSO if args.method == "lasso" else ADAPTIVE_LASSO
        if args.lam is None and not args.cv:
            raise _UsageError(f"--method {args.method} requires --lambda or --cv")
        result = fit_methods(
            traj,
            dictionary,
            stats,
            [method],
            cv_folds=args.cv_folds,
            grid_size=args.grid_size,
            grid_ratio=args.grid_ratio,
            fixed_lambda=args.lam,
            pre_kind=args.pre,
        )
        fit = result.fits[method]
    payload = {
        "theta": [float(v) for v in fit.theta],
        "method": fit.method,
        "lambda": fit.lam,
        "kkt_residual": fit.kkt_residual,
        "converged": fit.converged,
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _cmd_experiment(args) -> int:
    cfg = load_config(args.config)
    path = run_experiment(cfg, args.out_dir, threads=args.threads)
    print(f"results written to {path}")
    return 0


def _cmd_diagnose(args) -> int:
    from dataclasses import replace as dc_replace

    from .experiments import _run_diagnostics

    cfg = load_config(args.config)
    if args.reps is not None:
        cfg = dc_replace(cfg, reps=args.reps)
    cfg = dc_replace(cfg, kind="diagnostics", threads=args.threads)
    out_dir = os.path.dirname(os.path.abspath(args.out)) or "."
    os.makedirs(out_dir, exist_ok=True)
    path = _run_diagnostics(cfg, out_dir)
    if os.path.abspath(path) != os.path.abspath(args.out):
        os.replace(path, args.out)
    print(f"diagnostics written to {args.out}")
    return 0


def dispatch(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help and friends
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (
        errors.SimulationDiverged,
        errors.SingularInformation,
        errors.CvFailed,
        ArithmeticError,
        np.linalg.LinAlgError,
        RuntimeError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
