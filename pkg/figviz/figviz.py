"""Render sparsedrift experiment CSVs as figures.

Usage: figviz <kind> <in.csv> <out.png>

Kinds and their input schemas:
  heatmap        coordinate,estimate,method           (per-coordinate estimates)
  support_curve  experiment results CSV               (mean +/- sd support errors vs T)
  error_curve    experiment results CSV               (mean +/- sd l1 and l2 vs p)
  normality      experiment results CSV with an_stat  (densities vs the standard normal)

Results CSVs may start with `#` comment lines; rows carrying an error tag are
skipped. Heatmap cells with |estimate| <= 1e-8 are left blank. Exit codes
mirror the sparsedrift CLI: 0 success, 1 usage/schema error, 2 render error.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("heatmap", "support_curve", "error_curve", "normality")

ZERO_TOL = 1e-8  # mirrors the estimator package's zero threshold

RESULT_COLUMNS = [
    "kind", "axis", "seed", "method", "T", "p", "d", "s",
    "support_errors", "sign_consistent", "l1", "l2", "an_stat", "error",
]


class SchemaError(ValueError):
    pass


def read_csv_rows(path):
    """Rows of a CSV as dicts, skipping `#` comments; header goes first."""
    with open(path, newline="") as fh:
        lines = [l for l in fh if not l.startswith("#")]
    reader = csv.reader(lines)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError(f"{path}: empty file")
    rows = [dict(zip(header, row)) for row in reader if row]
    return header, rows


def check_columns(path, header, required):
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaError(
            f"{path}: missing column(s) {missing}; found {header}"
        )


def read_results(path):
    """Parse an experiment results CSV, dropping rows with an error tag."""
    header, rows = read_csv_rows(path)
    check_columns(path, header, RESULT_COLUMNS)
    clean = [r for r in rows if not r.get("error") and r.get("method")]
    if not clean:
        raise SchemaError(f"{path}: no data rows")
    return clean


def aggregate(rows, field):
    """method -> (axis values, means, sds); sd is nan for single replications."""
    buckets = defaultdict(list)
    for r in rows:
        buckets[(r["method"], float(r["axis"]))].append(float(r[field]))
    out = {}
    for method in sorted({m for m, _ in buckets}):
        axes = sorted(a for m, a in buckets if m == method)
        means = [float(np.mean(buckets[(method, a)])) for a in axes]
        sds = [
            float(np.std(buckets[(method, a)], ddof=1)) if len(buckets[(method, a)]) > 1 else math.nan
            for a in axes
        ]
        out[method] = (np.array(axes), np.array(means), np.array(sds))
    return out


def gaussian_kde(samples, grid):
    """Plain Gaussian KDE with the Silverman rule-of-thumb bandwidth."""
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    if n < 3:
        raise SchemaError("need at least three samples for a density estimate")
    sd = float(np.std(samples, ddof=1))
    q75, q25 = np.percentile(samples, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34) or sd or 1.0
    bw = 0.9 * spread * n ** (-1 / 5)
    z = (grid[:, None] - samples[None, :]) / bw
    return np.exp(-0.5 * z * z).sum(axis=1) / (n * bw * np.sqrt(2 * np.pi))


def _plot_band(ax, axes, means, sds, label):
    ax.plot(axes, means, marker="o", label=label)
    if np.all(np.isfinite(sds)):
        ax.fill_between(axes, means - sds, means + sds, alpha=0.2)


def render_heatmap(in_csv, out_png):
    header, rows = read_csv_rows(in_csv)
    check_columns(in_csv, header, ["coordinate", "estimate", "method"])
    if not rows:
        raise SchemaError(f"{in_csv}: no data rows")
    methods = []
    values = defaultdict(dict)
    for r in rows:
        m = r["method"]
        if m not in methods:
            methods.append(m)
        values[m][int(r["coordinate"])] = float(r["estimate"])
    if "truth" in methods:  # truth renders on top
        methods.insert(0, methods.pop(methods.index("truth")))
    coords = sorted({c for per in values.values() for c in per})
    grid = np.full((len(methods), len(coords)), np.nan)
    for i, m in enumerate(methods):
        for j, c in enumerate(coords):
            if c in values[m]:
                grid[i, j] = values[m][c]
    masked = np.ma.masked_where(np.abs(grid) <= ZERO_TOL, grid)
    fig, ax = plt.subplots(figsize=(10, 0.6 * len(methods) + 1.5))
    cmap = plt.get_cmap("viridis").copy()
    cmap.set_bad("white")
    im = ax.imshow(masked, aspect="auto", cmap=cmap, interpolation="nearest")
    ax.set_yticks(range(len(methods)), methods)
    step = max(1, len(coords) // 15)
    ax.set_xticks(range(0, len(coords), step), coords[::step])
    ax.set_xlabel("coordinate")
    fig.colorbar(im, ax=ax, label="estimate (blank = zero)")
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)


def render_support_curve(in_csv, out_png):
    rows = read_results(in_csv)
    grouped = aggregate(rows, "support_errors")
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for method, (axes, means, sds) in grouped.items():
        _plot_band(ax, axes, means, sds, method)
    ax.set_xlabel("observation horizon T")
    ax.set_ylabel("support errors (mean +/- sd)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)


def render_error_curve(in_csv, out_png):
    rows = read_results(in_csv)
    fig, axs = plt.subplots(1, 2, figsize=(11, 4.5))
    for ax, field, label in ((axs[0], "l1", "l1 error"), (axs[1], "l2", "l2 error")):
        for method, (axes, means, sds) in aggregate(rows, field).items():
            _plot_band(ax, axes, means, sds, method)
        ax.set_xlabel("parameter dimension p")
        ax.set_ylabel(f"{label} (mean +/- sd)")
        ax.set_yscale("log")
        ax.legend()
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)


def render_normality(in_csv, out_png):
    rows = read_results(in_csv)
    by_T = defaultdict(list)
    for r in rows:
        if r.get("an_stat"):
            by_T[float(r["T"])].append(float(r["an_stat"]))
    if not by_T:
        raise SchemaError(f"{in_csv}: no an_stat values")
    lo = min(min(v) for v in by_T.values())
    hi = max(max(v) for v in by_T.values())
    grid = np.linspace(min(lo, -4.0) - 0.5, max(hi, 4.0) + 0.5, 400)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for T in sorted(by_T):
        ax.plot(grid, gaussian_kde(by_T[T], grid), label=f"T = {T:g}")
    ax.plot(grid, np.exp(-grid**2 / 2) / np.sqrt(2 * np.pi), "k--", label="N(0,1)")
    ax.set_xlabel("standardized statistic")
    ax.set_ylabel("density")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_png, dpi=120)
    plt.close(fig)


RENDERERS = {
    "heatmap": render_heatmap,
    "support_curve": render_support_curve,
    "error_curve": render_error_curve,
    "normality": render_normality,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="figviz", description=__doc__)
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("input_csv")
    parser.add_argument("output_image")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        RENDERERS[args.kind](args.input_csv, args.output_image)
    except (SchemaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
