"""Figure rendering from trace CSVs.

Consumes the delimited output of the experiment harness and writes PNG
files next to it (or into a chosen directory): regret curves aggregated
across trials, local-subset sizes over time, and fitted length scales over
time. Multiple CSVs overlay as separate labeled series, so different
methods or strategies can be compared on one axis.
"""

from __future__ import annotations

import argparse
import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def load_trace(path) -> dict[str, np.ndarray]:
    """Columns of a trace CSV as arrays (floats except trial/t/method)."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path} contains no rows")
    out: dict[str, np.ndarray] = {}
    for key in rows[0]:
        if key == "method":
            out[key] = np.array([r[key] for r in rows])
        elif key in ("trial", "t", "lsod_size", "subspace_id"):
            out[key] = np.array([int(r[key]) for r in rows])
        else:
            out[key] = np.array([float(r[key]) for r in rows])
    return out


def _per_t(trace, column):
    """Mean and std of a column grouped by t, NaN entries dropped."""
    ts = np.unique(trace["t"])
    means = np.full(ts.size, math.nan)
    stds = np.full(ts.size, math.nan)
    for i, t in enumerate(ts):
        vals = trace[column][trace["t"] == t]
        vals = vals[~np.isnan(vals)]
        if vals.size:
            means[i] = np.mean(vals)
            stds[i] = np.std(vals)
    return ts, means, stds


def _series_label(path, trace) -> str:
    methods = sorted(set(trace["method"]))
    label = "+".join(methods)
    return f"{label} ({Path(path).stem})"


def _band_plot(ax, traces, column, ylabel):
    for path, trace in traces:
        ts, mean, std = _per_t(trace, column)
        (line,) = ax.plot(ts, mean, label=_series_label(path, trace))
        ax.fill_between(ts, mean - std, mean + std, alpha=0.2, color=line.get_color())
    ax.set_xlabel("observations")
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)


def render_report(csv_paths, out_dir=None, prefix="report") -> list[Path]:
    """Render the standard figure set from one or more trace CSVs.

    Returns the list of written files: log-regret curves (mean and
    one-standard-deviation band over trials), surrogate training-set sizes,
    and fitted length scales.
    """
    csv_paths = [Path(p) for p in csv_paths]
    if not csv_paths:
        raise ValueError("no trace files given")
    out_dir = Path(out_dir) if out_dir is not None else csv_paths[0].parent
    out_dir.mkdir(parents=True, exist_ok=True)
    traces = [(p, load_trace(p)) for p in csv_paths]

    written = []
    panels = [
        ("log_regret", "log10 regret", "log_regret"),
        ("lsod_size", "surrogate training size", "lsod_size"),
        ("theta_l", "fitted length scale", "length_scale"),
    ]
    for column, ylabel, suffix in panels:
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        _band_plot(ax, traces, column, ylabel)
        fig.tight_layout()
        target = out_dir / f"{prefix}_{suffix}.png"
        fig.savefig(target, dpi=150)
        plt.close(fig)
        written.append(target)
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bolduc-report",
        description="Render comparison figures from bolduc trace CSVs.",
    )
    parser.add_argument("traces", nargs="+", help="trace CSV files")
    parser.add_argument("--out-dir", default=None)
    parser.add_argument("--prefix", default="report")
    args = parser.parse_args(argv)
    written = render_report(args.traces, args.out_dir, args.prefix)
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
