"""CSV and gnuplot writers. Floats are written with ``repr`` precision so reruns are byte-identical."""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .fluid import FluidSolution, RegimeIntervals
from .simulator import KIND_NAMES, SimPath

EVENT_COLUMNS = ("time", "kind", "job_id", "occupied_count")
PATH_COLUMNS = ("time", "rho_n", "theta_n", "b_n")
SOLUTION_COLUMNS = ("time", "rho", "w", "theta", "b")
REGIME_COLUMNS = ("k", "tau_k", "sigma_k")
FLUID_BLOCKED_COLUMNS = ("time", "b", "b_indicator", "Lambda", "congestion_ratio")
SIM_BLOCKED_COLUMNS = ("time", "b_n", "Lambda", "congestion_ratio")
SUMMARY_COLUMNS = ("n", "metric", "median", "q1", "q3")


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return ""
        return repr(x)
    return str(x)


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def write_columns(path, *series) -> Path:
    """Whitespace-separated columns for gnuplot, no header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        for row in zip(*series):
            fh.write(" ".join(_fmt(v) for v in row) + "\n")
    return path


def event_rows(path: SimPath):
    for t, k, j, c in zip(path.times, path.kinds, path.job_ids, path.counts):
        yield float(t), KIND_NAMES[int(k)], int(j), int(c)


def path_rows(path: SimPath, mesh):
    mesh = np.asarray(mesh, dtype=float)
    return zip(mesh, path.occupancy_at(mesh), path.integrated(mesh), path.blocked_fraction(mesh))


def solution_rows(sol: FluidSolution):
    t = sol.times
    return zip(t, sol.rho, sol.w, sol.integrated(t), sol.blocked(t))


def regime_rows(reg: RegimeIntervals):
    yield 0, math.nan, reg.sigmas[0]
    for k, tau in enumerate(reg.taus, start=1):
        sigma = reg.sigmas[k] if k < len(reg.sigmas) else math.inf
        yield k, tau, sigma


def fluid_blocked_rows(sol: FluidSolution):
    t = sol.times
    cum = sol.config.intensity.cumulative(t)
    b = sol.blocked(t)
    ratio = np.divide(b, cum, out=np.full_like(b, np.nan), where=cum > 0)
    return zip(t, b, sol.blocked_indicator(t), cum, ratio)


def sim_blocked_rows(path: SimPath, mesh):
    mesh = np.asarray(mesh, dtype=float)
    cum = path.config.intensity.cumulative(mesh)
    b = path.blocked_fraction(mesh)
    ratio = np.divide(b, cum, out=np.full_like(b, np.nan), where=cum > 0)
    return zip(mesh, b, cum, ratio)
