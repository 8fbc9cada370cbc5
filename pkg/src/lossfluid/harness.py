"""Replication experiments comparing simulated paths with the fluid limit."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, UnsupportedConfigError
from .fluid import FluidSolution, solve
from .model import ModelConfig
from .observables import check_same_model
from .simulator import SimPath, martingale_residual, simulate

log = logging.getLogger(__name__)

ERROR_COLUMNS = (
    "n",
    "seed",
    "sup_err_rho",
    "sup_err_theta",
    "sup_err_b",
    "max_residual_sq_over_bound",
)
RESIDUAL_COLUMNS = ("time", "mean_sq", "bound", "ratio")


def _eval_points(path: SimPath, sol: FluidSolution, mesh) -> np.ndarray:
    mesh = sol.times if mesh is None else np.asarray(mesh, dtype=float)
    return np.unique(np.concatenate((mesh, path.times)))


def sup_error(path: SimPath, sol: FluidSolution, mesh=None) -> float:
    """sup_t |rho^n(t) - rho(t)| over the mesh and every event time.

    Both one-sided values of the step path are compared at event times, so
    the result is exact for a piecewise-linear fluid interpolant.
    """
    check_same_model(path, sol)
    t = _eval_points(path, sol, mesh)
    rho = sol.rho_at(t)
    right = np.abs(path.occupancy_at(t) - rho)
    left = np.abs(path.occupancy_before(t) - rho)
    return float(max(right.max(), left.max()))


def sup_error_theta(path: SimPath, sol: FluidSolution, mesh=None) -> float:
    check_same_model(path, sol)
    t = _eval_points(path, sol, mesh)
    return float(np.abs(path.integrated(t) - sol.integrated(t)).max())


def sup_error_blocked(path: SimPath, sol: FluidSolution, mesh=None) -> float:
    check_same_model(path, sol)
    t = _eval_points(path, sol, mesh)
    b = sol.blocked(t)
    right = np.abs(path.blocked_fraction(t) - b)
    left = np.abs(path.blocked_before(t) - b)
    return float(max(right.max(), left.max()))


def residual_grid(T: float, points: int = 40) -> np.ndarray:
    return T * np.arange(1, points + 1) / points


@dataclass
class ErrorTable:
    rows: list = field(default_factory=list)

    def column(self, name: str, n: Optional[int] = None) -> np.ndarray:
        i = ERROR_COLUMNS.index(name)
        return np.array([r[i] for r in self.rows if n is None or r[0] == n], dtype=float)

    @property
    def n_values(self) -> list:
        return sorted({r[0] for r in self.rows})

    def median(self, name: str, n: int) -> float:
        return float(np.median(self.column(name, n)))

    def summary(self) -> list:
        """Rows ``(n, metric, median, q1, q3)``."""
        out = []
        for n in self.n_values:
            for name in ERROR_COLUMNS[2:]:
                x = self.column(name, n)
                x = x[~np.isnan(x)]
                if x.size == 0:
                    continue
                q1, med, q3 = np.percentile(x, [25, 50, 75])
                out.append((n, name, float(med), float(q1), float(q3)))
        return out


def _replicate(config: ModelConfig, seed: int, sol: FluidSolution, grid):
    path = simulate(config, seed)
    ratio = float("nan")
    if config.r0 == 0:
        bound = config.intensity.cumulative(grid) / config.n
        x = martingale_residual(path, config, grid)
        pos = bound > 0
        ratio = float(np.max(x[pos] ** 2 / bound[pos])) if pos.any() else 0.0
    return (
        config.n,
        seed,
        sup_error(path, sol),
        sup_error_theta(path, sol),
        sup_error_blocked(path, sol),
        ratio,
    )


def _map(fn, jobs, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, *zip(*jobs)))
    return [fn(*job) for job in jobs]


def convergence_experiment(
    config: ModelConfig,
    n_list,
    reps: int,
    base_seed: int,
    h: Optional[float] = None,
    sol: Optional[FluidSolution] = None,
    workers: int = 1,
    residual_points: int = 40,
) -> ErrorTable:
    """Simulate ``reps`` replications per capacity and measure sup errors against one fluid solution.

    Replication ``i`` uses seed ``base_seed + i`` for every ``n``.
    """
    n_list = [int(n) for n in n_list]
    if not n_list or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise DomainError(f"n_list must be strictly increasing, got {n_list}")
    if reps < 10:
        raise DomainError(f"need at least 10 replications, got {reps}")
    fluid_cfg = config.fluid_part()
    if sol is None:
        sol = solve(fluid_cfg, h)
    grid = residual_grid(fluid_cfg.horizon, residual_points)
    jobs = [
        (fluid_cfg.with_capacity(n), base_seed + i, sol, grid)
        for n in n_list
        for i in range(reps)
    ]
    rows = _map(_replicate, jobs, workers)
    table = ErrorTable(rows)
    for n in n_list:
        log.info("n=%d median sup error rho=%.4g", n, table.median("sup_err_rho", n))
    return table


@dataclass
class ResidualTable:
    times: np.ndarray
    mean_sq: np.ndarray
    bound: np.ndarray

    @property
    def ratio(self) -> np.ndarray:
        out = np.zeros_like(self.mean_sq)
        pos = self.bound > 0
        out[pos] = self.mean_sq[pos] / self.bound[pos]
        return out

    @property
    def max_ratio(self) -> float:
        return float(self.ratio.max()) if self.ratio.size else 0.0

    def rows(self):
        return zip(self.times, self.mean_sq, self.bound, self.ratio)


def _residual_path(config: ModelConfig, seed: int, grid):
    return martingale_residual(simulate(config, seed), config, grid)


def residual_moment_check(
    config: ModelConfig,
    n: int,
    reps: int,
    base_seed: int,
    points: int = 40,
    workers: int = 1,
) -> ResidualTable:
    """Empirical E[X^n(t)^2] on a grid against the bound Lambda(t)/n."""
    if config.r0 != 0:
        raise UnsupportedConfigError("the residual bound is stated for empty-start systems (r0 = 0)")
    if reps < 100:
        raise DomainError(f"need at least 100 replications, got {reps}")
    cfg = config.with_capacity(n)
    grid = residual_grid(cfg.horizon, points)
    jobs = [(cfg, base_seed + i, grid) for i in range(reps)]
    x = np.array(_map(_residual_path, jobs, workers))
    return ResidualTable(grid, np.mean(x**2, axis=0), cfg.intensity.cumulative(grid) / n)
