"""Service-time laws: survival P(S > t), sampling and truncated means E[S ^ t]."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import integrate, special

from .errors import DomainError


def _check_duration(t):
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise DomainError(f"duration must be >= 0, got {t!r}")
    return arr


def _out(values, t):
    return float(values) if np.ndim(t) == 0 else values


class LifetimeDist:
    """Interface shared by all service-time distributions.

    ``survival`` and ``truncated_mean`` are vectorized over ``t``.
    """

    kind: str = ""

    def survival(self, t):
        tt = _check_duration(t)
        return _out(self._survival(tt), t)

    def truncated_mean(self, t):
        """E[min(S, t)] = int_0^t survival(s) ds."""
        tt = _check_duration(t)
        return _out(self._truncated_mean(tt), t)

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    @property
    def mean(self) -> float:
        raise NotImplementedError

    def jumps(self) -> np.ndarray:
        """Points where the survival function is discontinuous."""
        return np.empty(0)

    def _truncated_mean(self, t):
        # generic fallback; every shipped variant overrides it
        def one(x):
            if x == 0:
                return 0.0
            pts = self.jumps()
            pts = pts[(pts > 0) & (pts < x)]
            f = lambda s: float(self._survival(np.asarray(s)))
            return integrate.quad(f, 0.0, x, points=pts if pts.size else None,
                                  epsabs=1e-10, limit=200)[0]

        flat = [one(x) for x in np.atleast_1d(t).ravel()]
        return np.asarray(flat).reshape(np.shape(t))


@dataclass(frozen=True)
class Exponential(LifetimeDist):
    rate: float
    kind = "exponential"

    def __post_init__(self):
        if not self.rate > 0:
            raise DomainError(f"exponential rate must be > 0, got {self.rate}")

    def _survival(self, t):
        return np.exp(-self.rate * t)

    def _truncated_mean(self, t):
        return -np.expm1(-self.rate * t) / self.rate

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.rate, size)

    @property
    def mean(self):
        return 1.0 / self.rate


@dataclass(frozen=True)
class Deterministic(LifetimeDist):
    value: float
    kind = "deterministic"

    def __post_init__(self):
        if not self.value >= 0:
            raise DomainError(f"deterministic duration must be >= 0, got {self.value}")

    def _survival(self, t):
        return (t < self.value).astype(float)

    def _truncated_mean(self, t):
        return np.minimum(t, self.value)

    def sample(self, rng, size=None):
        if size is None:
            return float(self.value)
        return np.full(size, float(self.value))

    @property
    def mean(self):
        return float(self.value)

    def jumps(self):
        return np.array([self.value])


@dataclass(frozen=True)
class LogNormal(LifetimeDist):
    """``log S ~ Normal(location, scale**2)``."""

    location: float
    scale: float
    kind = "lognormal"

    def __post_init__(self):
        if not self.scale > 0:
            raise DomainError(f"lognormal scale must be > 0, got {self.scale}")

    def _z(self, t):
        with np.errstate(divide="ignore"):
            return (np.log(t) - self.location) / self.scale

    def _survival(self, t):
        return special.ndtr(-self._z(t))

    def _truncated_mean(self, t):
        # E[S; S <= t] + t P(S > t)
        z = self._z(t)
        partial = self.mean * special.ndtr(z - self.scale)
        return partial + np.where(t > 0, t * special.ndtr(-z), 0.0)

    def sample(self, rng, size=None):
        return rng.lognormal(self.location, self.scale, size)

    @property
    def mean(self):
        return math.exp(self.location + 0.5 * self.scale**2)


@dataclass(frozen=True)
class Weibull(LifetimeDist):
    """Survival ``exp(-(t/scale)**shape)``."""

    shape: float
    scale: float
    kind = "weibull"

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise DomainError("weibull shape and scale must be > 0")

    def _survival(self, t):
        return np.exp(-((t / self.scale) ** self.shape))

    def _truncated_mean(self, t):
        x = (t / self.scale) ** self.shape
        a = 1.0 + 1.0 / self.shape
        return self.scale * special.gamma(a) * special.gammainc(a, x) + t * np.exp(-x)

    def sample(self, rng, size=None):
        return self.scale * rng.weibull(self.shape, size)

    @property
    def mean(self):
        return self.scale * math.gamma(1.0 + 1.0 / self.shape)


@dataclass(frozen=True)
class Empirical(LifetimeDist):
    """Uniform law on a finite sample; survival is the right-continuous step function."""

    values: tuple
    kind = "empirical"
    _sorted: np.ndarray = field(init=False, repr=False, compare=False)
    _cumsum: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float).ravel())
        if v.size == 0:
            raise DomainError("empirical distribution needs at least one value")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise DomainError("empirical durations must be finite and >= 0")
        object.__setattr__(self, "values", tuple(v.tolist()))
        object.__setattr__(self, "_sorted", v)
        object.__setattr__(self, "_cumsum", np.concatenate(([0.0], np.cumsum(v))))

    @classmethod
    def from_file(cls, path) -> "Empirical":
        data = np.loadtxt(Path(path), dtype=float, ndmin=1)
        if data.ndim != 1:
            raise DomainError(f"{path}: expected a single column of durations")
        return cls(tuple(data.tolist()))

    def _survival(self, t):
        v = self._sorted
        return 1.0 - np.searchsorted(v, t, side="right") / v.size

    def _truncated_mean(self, t):
        v = self._sorted
        k = np.searchsorted(v, t, side="right")
        return (self._cumsum[k] + t * (v.size - k)) / v.size

    def sample(self, rng, size=None):
        return rng.choice(self._sorted, size=size)

    @property
    def mean(self):
        return float(self._sorted.mean())

    def jumps(self):
        return np.unique(self._sorted)


def dkw_epsilon(n_samples: int, confidence: float) -> float:
    """Half-width of the Dvoretzky-Kiefer-Wolfowitz band."""
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * n_samples))

