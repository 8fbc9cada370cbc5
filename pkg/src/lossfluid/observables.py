"""Post-processing shared by the harness and the CLI."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .fluid import FluidSolution
from .intensity import IntensitySpec
from .simulator import SimPath

OVERLAY_COLUMNS = ("time", "rho_n", "rho", "theta_n", "theta", "b_n", "b", "congestion_ratio")


def congestion_ratio(sol: FluidSolution, spec: IntensitySpec, t):
    """Fluid blocked mass over offered mass, b(t) / Lambda(t)."""
    cum = np.asarray(spec.cumulative(t), dtype=float)
    if np.any(cum <= 0):
        raise DomainError("congestion ratio is undefined where Lambda(t) = 0")
    out = np.asarray(sol.blocked(t)) / cum
    return out if np.ndim(t) else float(out)


def idleness(obj, t):
    """Cumulative idleness t - Theta(t) of a fluid solution or a simulated path."""
    theta = obj.integrated(t)
    return np.asarray(t, dtype=float) - theta if np.ndim(t) else t - theta


def check_same_model(path: SimPath, sol: FluidSolution):
    if path.config.fluid_part() != sol.config:
        raise DomainError("simulated path and fluid solution come from different models")


@dataclass
class OverlaySeries:
    time: np.ndarray
    rho_n: np.ndarray
    rho: np.ndarray
    theta_n: np.ndarray
    theta: np.ndarray
    b_n: np.ndarray
    b: np.ndarray
    congestion_ratio: np.ndarray  # NaN where Lambda(t) = 0

    def rows(self):
        cols = [getattr(self, c) for c in OVERLAY_COLUMNS]
        return zip(*cols)


def align(path: SimPath, sol: FluidSolution, grid=None) -> OverlaySeries:
    """Sample simulated and fluid observables on ``grid`` plus all event times."""
    check_same_model(path, sol)
    T = path.horizon
    grid = np.empty(0) if grid is None else np.asarray(grid, dtype=float)
    t = np.unique(np.concatenate((grid, path.times[path.times <= T])))
    cum = sol.config.intensity.cumulative(t)
    ratio = np.full_like(t, np.nan)
    pos = cum > 0
    ratio[pos] = sol.blocked(t[pos]) / cum[pos]
    return OverlaySeries(
        time=t,
        rho_n=path.occupancy_at(t),
        rho=sol.rho_at(t),
        theta_n=path.integrated(t),
        theta=sol.integrated(t),
        b_n=path.blocked_fraction(t),
        b=sol.blocked(t),
        congestion_ratio=ratio,
    )
