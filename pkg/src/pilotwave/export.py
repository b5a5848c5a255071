"""Plot-ready CSV summaries derived from a scenario report's datasets."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .guidance import STATUS_NAMES

MAX_POINTS = 500
TRIAL_COLUMNS = ("outcome", "seed", "x0", "y0", "pointer_final", "fidelity", "status")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def downsample_indices(n: int, max_points: int = MAX_POINTS) -> np.ndarray:
    """At most ``max_points`` evenly spread indices into ``range(n)``, always keeping both ends."""
    if n <= max_points:
        return np.arange(n)
    return np.unique(np.round(np.linspace(0, n - 1, max_points)).astype(int))


def write_trajectories(path, times, positions, status=None, max_trajectories: int = 100,
                       max_points: int = MAX_POINTS) -> int:
    """Concatenated trajectory CSV: ``trajectory_id, t, q_0..q_{D-1}, status``.

    Returns the number of trajectories written.
    """
    times = np.asarray(times, float)
    pos = np.asarray(positions, float)
    if pos.ndim == 2:
        pos = pos[..., None]
    n = min(pos.shape[1], max_trajectories)
    rows = downsample_indices(len(times), max_points)
    D = pos.shape[2]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trajectory_id", "t"] + [f"q_{d}" for d in range(D)] + ["status"])
        for i in range(n):
            label = STATUS_NAMES[int(status[i])] if status is not None else ""
            for r in rows:
                if not np.all(np.isfinite(pos[r, i])):
                    continue
                w.writerow([i, _fmt(times[r])] + [_fmt(v) for v in pos[r, i]] + [label])
    return n


def write_histogram(path, arrays: dict) -> None:
    """Observed versus expected bin fractions of a 1D equivariance dataset."""
    edges = np.asarray(arrays["edges_0"], float)
    x = np.asarray(arrays["positions"], float).reshape(-1)
    counts = np.histogram(x, bins=np.clip(edges, -np.finfo(float).max, np.finfo(float).max))[0]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_low", "bin_high", "expected", "observed"])
        for lo, hi, m, c in zip(edges[:-1], edges[1:], arrays["masses"], counts / max(1, x.size)):
            w.writerow([_fmt(lo), _fmt(hi), _fmt(m), _fmt(c)])


def write_trials(path, arrays: dict) -> None:
    """Per-trial measurement records."""
    cols = [c for c in TRIAL_COLUMNS if c in arrays]
    n = len(arrays["outcome"])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trial_id"] + cols)
        for i in range(n):
            w.writerow([i] + [_fmt(arrays[c][i]) for c in cols])


def _status_for(report, n: int):
    for arrays in report.datasets.values():
        s = arrays.get("status")
        if s is not None and np.ndim(s) == 1 and len(s) == n:
            return np.asarray(s)
    return None


def export_csv(report, outdir, trajectories: bool = True, histograms: bool = True,
               trials: bool = True, max_trajectories: int = 100) -> dict:
    """Write CSV summaries under ``outdir/csv`` and register them in ``report.files``."""
    out = Path(outdir) / "csv"
    out.mkdir(parents=True, exist_ok=True)
    written = {}
    for name in sorted(report.datasets):
        arrays = report.datasets[name]
        rel = None
        if trajectories and "times" in arrays and np.ndim(arrays.get("positions")) == 3:
            pos = arrays["positions"]
            rel = f"csv/{name}_trajectories.csv"
            write_trajectories(Path(outdir) / rel, arrays["times"], pos,
                               _status_for(report, pos.shape[1]), max_trajectories)
        elif histograms and name.startswith("equiv_") and "masses" in arrays \
                and "edges_1" not in arrays:
            rel = f"csv/{name}_histogram.csv"
            write_histogram(Path(outdir) / rel, arrays)
        elif trials and "outcome" in arrays:
            rel = f"csv/{name}_trials.csv"
            write_trials(Path(outdir) / rel, arrays)
        if rel is not None:
            report.files[rel.split("/", 1)[1]] = rel
            written[name] = rel
    return written
