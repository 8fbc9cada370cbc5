"""Nonstationary M_t/G/n/n loss queues: simulation, fluid limits and their comparison."""

__version__ = "0.1.0"

from .errors import ConfigError, DomainError, LossFluidError, UnsupportedConfigError
from .fluid import (
    FluidSolution,
    RegimeIntervals,
    reconstruct_from_regimes,
    regimes,
    solve,
    solve_mollified,
)
from .intensity import (
    ConstantIntensity,
    IntensitySpec,
    PiecewiseConstantIntensity,
    SinusoidalIntensity,
    TableIntensity,
)
from .lifetimes import Deterministic, Empirical, Exponential, LifetimeDist, LogNormal, Weibull
from .model import ModelConfig
from .simulator import SimPath, martingale_residual, run_events, sample_arrivals, simulate

__all__ = [
    "ConfigError",
    "ConstantIntensity",
    "Deterministic",
    "DomainError",
    "Empirical",
    "Exponential",
    "FluidSolution",
    "IntensitySpec",
    "LifetimeDist",
    "LogNormal",
    "LossFluidError",
    "ModelConfig",
    "PiecewiseConstantIntensity",
    "RegimeIntervals",
    "SimPath",
    "SinusoidalIntensity",
    "TableIntensity",
    "UnsupportedConfigError",
    "Weibull",
    "martingale_residual",
    "reconstruct_from_regimes",
    "regimes",
    "run_events",
    "sample_arrivals",
    "simulate",
    "solve",
    "solve_mollified",
]
