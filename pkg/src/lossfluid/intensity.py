"""Deterministic arrival intensities lambda(u) and their cumulative integrals.

Every intensity is an immutable object defined on ``[0, horizon]``. The
cumulative mass ``Lambda(t) = int_0^t lambda(u) du`` is available in closed
form for all variants (the table variant uses the exact integral of its
linear interpolant).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

_SLACK = 1e-12


def _check_times(t, horizon):
    arr = np.asarray(t, dtype=float)
    if arr.size and (np.any(arr < -_SLACK * (1 + horizon)) or np.any(arr > horizon * (1 + _SLACK) + _SLACK)):
        raise DomainError(f"time outside [0, {horizon}]: {t!r}")
    return np.clip(arr, 0.0, horizon)


def _out(values, t):
    return float(values) if np.ndim(t) == 0 else values


class IntensitySpec:
    """Common interface of the intensity variants.

    ``rate``, ``cumulative`` and ``derivative`` accept scalars or arrays and
    return the same shape.
    """

    kind: str = ""
    horizon: float = math.inf
    #: True when lambda is constant between consecutive ``breakpoints``.
    locally_constant: bool = False

    def rate(self, t):
        tt = _check_times(t, self.horizon)
        return _out(self._rate(tt), t)

    # alias of rate()
    eval = rate

    def cumulative(self, t):
        tt = _check_times(t, self.horizon)
        return _out(self._cumulative(tt), t)

    def derivative(self, t):
        """d lambda / du, taken from the right at breakpoints."""
        tt = _check_times(t, self.horizon)
        return _out(self._derivative(tt), t)

    def upper_bound(self, t0: float, t1: float) -> float:
        if not t0 < t1:
            raise DomainError(f"empty interval [{t0}, {t1}]")
        _check_times([t0, t1], self.horizon)
        return float(self._upper_bound(max(t0, 0.0), min(t1, self.horizon)))

    def breakpoints(self, t0: float, t1: float) -> np.ndarray:
        """Points in the open interval (t0, t1) where lambda is not smooth."""
        return np.empty(0)

    def thinning_grid(self, T: float) -> np.ndarray:
        """Partition of [0, T] used to pick local dominating rates."""
        return np.concatenate(([0.0], self.breakpoints(0.0, T), [T]))

    def with_horizon(self, horizon: float) -> "IntensitySpec":
        raise NotImplementedError

    def _derivative(self, t):
        return np.zeros_like(t)


@dataclass(frozen=True)
class ConstantIntensity(IntensitySpec):
    c: float
    horizon: float = math.inf
    kind = "constant"
    locally_constant = True

    def __post_init__(self):
        if not (self.c >= 0 and math.isfinite(self.c)):
            raise DomainError(f"constant rate must be finite and >= 0, got {self.c}")

    def _rate(self, t):
        return np.full_like(t, self.c)

    def _cumulative(self, t):
        return self.c * t

    def _upper_bound(self, t0, t1):
        return self.c

    def with_horizon(self, horizon):
        return ConstantIntensity(self.c, horizon)


@dataclass(frozen=True)
class SinusoidalIntensity(IntensitySpec):
    """``lambda(u) = base * (1 + amplitude * sin(2 pi u / period))``."""

    base: float
    amplitude: float
    period: float
    horizon: float = math.inf
    kind = "sinusoidal"

    def __post_init__(self):
        if self.base < 0:
            raise DomainError(f"sinusoid base must be >= 0, got {self.base}")
        if abs(self.amplitude) > 1:
            raise DomainError(f"|amplitude| must be <= 1, got {self.amplitude}")
        if not self.period > 0:
            raise DomainError(f"period must be > 0, got {self.period}")

    @property
    def _omega(self):
        return 2.0 * math.pi / self.period

    def _rate(self, t):
        return np.maximum(self.base * (1.0 + self.amplitude * np.sin(self._omega * t)), 0.0)

    def _cumulative(self, t):
        w = self._omega
        return self.base * (t + self.amplitude * (1.0 - np.cos(w * t)) / w)

    def _derivative(self, t):
        w = self._omega
        return self.base * self.amplitude * w * np.cos(w * t)

    def _upper_bound(self, t0, t1):
        candidates = [t0, t1]
        # interior extremum where sin(w u) = sign(amplitude)
        peak = 0.25 if self.amplitude >= 0 else 0.75
        k = math.ceil(t0 / self.period - peak)
        u = (k + peak) * self.period
        if u <= t1:
            candidates.append(u)
        return float(np.max(self._rate(np.asarray(candidates))))

    def thinning_grid(self, T):
        quarter = self.period / 4.0
        grid = np.arange(0.0, T, quarter)
        return np.append(grid, T)

    def with_horizon(self, horizon):
        return SinusoidalIntensity(self.base, self.amplitude, self.period, horizon)


@dataclass(frozen=True)
class PiecewiseConstantIntensity(IntensitySpec):
    """Rate ``rates[i]`` on ``[starts[i], starts[i+1])``; the last rate extends to the horizon."""

    starts: tuple
    rates: tuple
    horizon: float = math.inf
    kind = "piecewise-constant"
    locally_constant = True
    _cum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        starts = np.asarray(self.starts, dtype=float)
        rates = np.asarray(self.rates, dtype=float)
        if starts.ndim != 1 or starts.shape != rates.shape or starts.size == 0:
            raise DomainError("starts and rates must be equal-length, nonempty sequences")
        if starts[0] != 0.0:
            raise DomainError("first piece must start at 0")
        if np.any(np.diff(starts) <= 0):
            raise DomainError("piece starts must be strictly increasing")
        if np.any(rates < 0) or not np.all(np.isfinite(rates)):
            raise DomainError("piecewise rates must be finite and >= 0")
        object.__setattr__(self, "starts", tuple(starts.tolist()))
        object.__setattr__(self, "rates", tuple(rates.tolist()))
        cum = np.concatenate(([0.0], np.cumsum(rates[:-1] * np.diff(starts))))
        object.__setattr__(self, "_cum", cum)

    def _index(self, t):
        return np.searchsorted(np.asarray(self.starts), t, side="right") - 1

    def _rate(self, t):
        return np.asarray(self.rates)[self._index(t)]

    def _cumulative(self, t):
        i = self._index(t)
        return self._cum[i] + np.asarray(self.rates)[i] * (t - np.asarray(self.starts)[i])

    def _upper_bound(self, t0, t1):
        starts = np.asarray(self.starts)
        i0 = self._index(t0)
        # pieces starting strictly before t1 intersect [t0, t1)
        i1 = max(int(np.searchsorted(starts, t1, side="left")) - 1, int(i0))
        return float(max(self.rates[i0 : i1 + 1]))

    def breakpoints(self, t0, t1):
        s = np.asarray(self.starts)
        return s[(s > t0) & (s < t1)]

    def with_horizon(self, horizon):
        return PiecewiseConstantIntensity(self.starts, self.rates, horizon)


@dataclass(frozen=True)
class TableIntensity(IntensitySpec):
    """Linear interpolation of sampled ``(time, rate)`` pairs.

    The table must start at 0; the horizon defaults to the last sample time
    and may not exceed it.
    """

    times: tuple
    values: tuple
    horizon: float = math.nan
    kind = "table-interpolated"

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or times.size < 2:
            raise DomainError("table needs at least two (time, rate) pairs of equal length")
        if times[0] != 0.0:
            raise DomainError("table must start at time 0")
        if np.any(np.diff(times) <= 0):
            raise DomainError("table times must be strictly increasing")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise DomainError("table rates must be finite and >= 0")
        horizon = float(times[-1]) if math.isnan(self.horizon) else float(self.horizon)
        if horizon > times[-1]:
            raise DomainError(f"horizon {horizon} exceeds the last table time {times[-1]}")
        object.__setattr__(self, "times", tuple(times.tolist()))
        object.__setattr__(self, "values", tuple(values.tolist()))
        object.__setattr__(self, "horizon", horizon)

    def _arrays(self):
        return np.asarray(self.times), np.asarray(self.values)

    def _rate(self, t):
        x, y = self._arrays()
        return np.interp(t, x, y)

    def _cumulative(self, t):
        x, y = self._arrays()
        seg = np.concatenate(([0.0], np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))))
        i = np.clip(np.searchsorted(x, t, side="right") - 1, 0, len(x) - 2)
        rt = np.interp(t, x, y)
        return seg[i] + 0.5 * (y[i] + rt) * (t - x[i])

    def _derivative(self, t):
        x, y = self._arrays()
        slopes = np.diff(y) / np.diff(x)
        i = np.clip(np.searchsorted(x, t, side="right") - 1, 0, len(x) - 2)
        return slopes[i]

    def _upper_bound(self, t0, t1):
        x, y = self._arrays()
        inner = y[(x > t0) & (x < t1)]
        ends = np.interp([t0, t1], x, y)
        return float(max(ends.max(), inner.max() if inner.size else 0.0))

    def breakpoints(self, t0, t1):
        x = np.asarray(self.times)
        return x[(x > t0) & (x < t1)]

    def with_horizon(self, horizon):
        return TableIntensity(self.times, self.values, horizon)


def sup_rate(spec: IntensitySpec, T: float) -> float:
    """Supremum of the rate over [0, T], taken over the thinning partition."""
    grid = spec.thinning_grid(T)
    return max(spec.upper_bound(a, b) for a, b in zip(grid[:-1], grid[1:]) if b > a)
