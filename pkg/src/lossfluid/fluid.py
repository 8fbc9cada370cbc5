"""Numerical solution of the capacity-constrained Volterra equation

    rho(t) = r0 * Gbar(t) + int_0^t 1{rho(u-) < 1} Fbar(t - u) lambda(u) du

on a uniform mesh, together with its regime structure (hitting times of
level 1, exit times, admission intervals) and the integrated-occupancy and
blocked-arrival functionals.

The strict solver replaces the indicator by an admission fraction
``w_k in [0, 1]`` per mesh cell: full admission unless that would push the
next mesh value above 1, in which case ``w_k`` is cut back so the value
lands exactly on 1. With strictly decreasing survival in overload the
literal indicator chatters; the projected fraction is its stable limit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .convolution import convolve_survival
from .errors import DomainError, UnsupportedConfigError
from .intensity import sup_rate
from .model import ModelConfig

STRICT = "strict"
MOLLIFIED = "mollified"


@dataclass
class FluidSolution:
    """Mesh solution. ``w[k]`` and ``weights[k] = w[k] * lam[k]`` belong to cell ``[t_k, t_{k+1})``."""

    config: ModelConfig
    times: np.ndarray
    rho: np.ndarray
    w: np.ndarray
    lam: np.ndarray
    h: float
    scheme: str = STRICT
    width: Optional[float] = None
    _theta: np.ndarray = field(init=False, repr=False)
    _blocked: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        h = self.h
        self._theta = np.concatenate(([0.0], np.cumsum(0.5 * h * (self.rho[1:] + self.rho[:-1]))))
        blocked_rate = (1.0 - self.w[:-1]) * self.lam[:-1]
        self._blocked = np.concatenate(([0.0], np.cumsum(h * blocked_rate)))

    @property
    def weights(self) -> np.ndarray:
        return self.w * self.lam

    @property
    def horizon(self) -> float:
        return self.config.horizon

    def _locate(self, t):
        tt = np.asarray(t, dtype=float)
        T = self.horizon
        if np.any(tt < 0) or np.any(tt > T * (1 + 1e-12)):
            raise DomainError(f"time outside [0, {T}]: {t!r}")
        tt = np.minimum(tt, T)
        k = np.minimum((tt / self.h).astype(int), len(self.times) - 2)
        return tt, k, tt - self.times[k]

    def rho_at(self, t):
        """Linear interpolation of the mesh values."""
        tt, k, dt = self._locate(t)
        out = self.rho[k] + (self.rho[k + 1] - self.rho[k]) * dt / self.h
        return out if np.ndim(t) else float(out)

    def integrated(self, t):
        """Theta(t) = int_0^t rho(u) du of the piecewise-linear interpolant."""
        tt, k, dt = self._locate(t)
        mid = self.rho[k] + 0.5 * (self.rho[k + 1] - self.rho[k]) * dt / self.h
        out = self._theta[k] + dt * mid
        return out if np.ndim(t) else float(out)

    def integrated_explicit(self, t):
        """Integrated occupancy from expected truncated service times.

        ``r0 * E[S0 ^ t] + h * sum_{t_j < t} w_j lam_j E[S ^ (t - t_j)]``,
        the integral of the mesh equation taken term by term.
        """
        cfg = self.config
        tt = np.atleast_1d(self._locate(t)[0])
        out = np.empty_like(tt)
        for i, s in enumerate(tt):
            j = self.times[:-1] < s
            lag = s - self.times[:-1][j]
            out[i] = cfg.r0 * cfg.initial_service.truncated_mean(s) + self.h * np.sum(
                self.weights[:-1][j] * cfg.service.truncated_mean(lag)
            )
        return out if np.ndim(t) else float(out[0])

    def blocked(self, t):
        """b(t) = int_0^t (1 - w(u)) lambda(u) du on the mesh."""
        tt, k, dt = self._locate(t)
        out = self._blocked[k] + (1.0 - self.w[k]) * self.lam[k] * dt
        return out if np.ndim(t) else float(out)

    def blocked_indicator(self, t, tol_pin: Optional[float] = None):
        """b(t) computed with the literal indicator 1{rho(u) = 1} (within tol_pin)."""
        tol = default_tol_pin(self.h) if tol_pin is None else tol_pin
        tt, k, dt = self._locate(t)
        pinned = (self.rho[:-1] >= 1.0 - tol) * self.lam[:-1] * self.h
        cum = np.concatenate(([0.0], np.cumsum(pinned)))
        out = cum[k] + (self.rho[k] >= 1.0 - tol) * self.lam[k] * dt
        return out if np.ndim(t) else float(out)


def default_step(T: float) -> float:
    return T / 4000.0


def default_tol_pin(h: float) -> float:
    return min(10.0 * h, 0.1)


def _mesh(config: ModelConfig, h: Optional[float]):
    T = config.horizon
    h = default_step(T) if h is None else float(h)
    if not 0 < h <= T / 10 * (1 + 1e-12):
        raise DomainError(f"step h must lie in (0, T/10] = (0, {T / 10}], got {h}")
    N = max(int(math.ceil(T / h - 1e-9)), 10)
    h = T / N
    times = np.linspace(0.0, T, N + 1)
    return times, h, N


def _march(config: ModelConfig, h, admission):
    """Explicit left-rectangle stepping; ``admission(k, rho_k, base, trial_inc)`` returns w_k."""
    times, h, N = _mesh(config, h)
    lam = config.intensity.rate(times)
    lags = h * np.arange(N + 2)
    fbar = config.service.survival(lags)
    init = config.r0 * config.initial_service.survival(np.append(times, times[-1] + h))

    rho = np.empty(N + 1)
    w = np.empty(N + 1)
    a = np.zeros(N + 1)
    rho[0] = config.r0
    # one extra step so the last cell also carries an admission fraction
    for k in range(N + 1):
        # surviving mass at t_{k+1} from cells 0..k-1
        base = init[k + 1] + h * np.dot(a[:k], fbar[k + 1 : 1 : -1])
        inc = h * lam[k] * fbar[1]
        w[k] = admission(k, rho[k], base, inc)
        a[k] = w[k] * lam[k]
        if k < N:
            rho[k + 1] = base + w[k] * inc
    return times, h, rho, w, lam


def solve(config: ModelConfig, h: Optional[float] = None) -> FluidSolution:
    """Solve the fluid equation with projected admission (``w_k`` in [0, 1])."""

    def project(k, rho_k, base, inc):
        if base + inc <= 1.0:
            return 1.0
        if base >= 1.0 or inc <= 0.0:
            return 0.0
        return min(max((1.0 - base) / inc, 0.0), 1.0)

    times, h, rho, w, lam = _march(config.fluid_part(), h, project)
    np.clip(rho, 0.0, 1.0, out=rho)  # removes round-off only; the projection keeps values in range
    return FluidSolution(config.fluid_part(), times, rho, w, lam, h, STRICT)


def mollifier(x, width: float):
    """Smooth stand-in for 1{x < 1}: 1 below 1 - 2d/3, 0 above 1 - d/3, cubic smoothstep between."""
    lo, hi = 1.0 - 2.0 * width / 3.0, 1.0 - width / 3.0
    s = np.clip((np.asarray(x, dtype=float) - lo) / (hi - lo), 0.0, 1.0)
    out = 1.0 - s * s * (3.0 - 2.0 * s)
    return out if np.ndim(x) else float(out)


def lower_mollifier(x, width: float):
    """Step 1{x <= 1 - d}, the lower envelope of the smooth family."""
    out = (np.asarray(x, dtype=float) <= 1.0 - width).astype(float)
    return out if np.ndim(x) else float(out)


def solve_mollified(config: ModelConfig, h: Optional[float], width: float) -> FluidSolution:
    """Solve with the admission weight ``mollifier(rho_k, width)`` instead of the indicator.

    Requires ``h * sup lambda <= width / 3`` so a single step cannot carry
    the solution past 1.
    """
    if not 0.0 < width < 1.0:
        raise DomainError(f"mollifier width must lie in (0, 1), got {width}")
    cfg = config.fluid_part()
    _, h_eff, _ = _mesh(cfg, h)
    peak = sup_rate(cfg.intensity, cfg.horizon)
    if h_eff * peak > width / 3.0:
        raise DomainError(
            f"step {h_eff:g} too coarse for mollifier width {width:g}: need h * sup lambda <= d/3"
        )
    times, h_eff, rho, w, lam = _march(cfg, h, lambda k, rho_k, base, inc: mollifier(rho_k, width))
    return FluidSolution(cfg, times, rho, w, lam, h_eff, MOLLIFIED, width)


@dataclass
class RegimeIntervals:
    """Alternating admission and pinned intervals covering ``[0, T]``.

    ``taus[k-1]`` is the k-th hitting time of level 1 and ``sigmas[k]`` the
    k-th exit time (``sigmas[0]`` is 0 unless the system starts full). An
    exit time of ``inf`` means the solution is still pinned at ``T``.
    """

    horizon: float
    tol_pin: float
    sigmas: list
    taus: list
    chattering: bool

    @property
    def admission(self) -> list:
        """The intervals ``[sigma_{k-1}, tau_k)`` whose union is J_T."""
        T = self.horizon
        out = []
        for k, s in enumerate(self.sigmas):
            if s >= T:
                break
            end = self.taus[k] if k < len(self.taus) else T
            if end > s:
                out.append((s, min(end, T)))
        return out

    @property
    def pinned(self) -> list:
        T = self.horizon
        out = []
        if self.sigmas[0] > 0:
            out.append((0.0, min(self.sigmas[0], T)))
        for k, tau in enumerate(self.taus, start=1):
            sig = self.sigmas[k] if k < len(self.sigmas) else math.inf
            out.append((tau, min(sig, T)))
        return out

    def intervals(self) -> list:
        """``(start, end, pinned)`` triples in time order."""
        tagged = [(a, b, False) for a, b in self.admission] + [(a, b, True) for a, b in self.pinned]
        return sorted(tagged)

    def admission_set(self, t: float) -> np.ndarray:
        """J_t as an ``(m, 2)`` array."""
        iv = [(a, min(b, t)) for a, b in self.admission if a < t]
        return np.asarray(iv, dtype=float).reshape(-1, 2)


def regimes(sol: FluidSolution, tol_pin: Optional[float] = None) -> RegimeIntervals:
    """Split the mesh into admission and pinned runs.

    Cell ``k`` is pinned when ``rho_k >= 1 - tol_pin`` and the cell does not
    admit a positive flow at full rate. The cell in which capacity is
    reached has ``rho_k < 1`` and a partial ``w_k``; the hitting time is put
    at ``t_k + w_k h``, the instant a full admission rate fills the remaining
    capacity. Exit times are resolved to the mesh.

    The result is flagged ``chattering`` when pinned cells carry fractional
    admission beyond the two boundary cells (hit and refill) of each run.
    """
    tol = default_tol_pin(sol.h) if tol_pin is None else float(tol_pin)
    if not 0.0 < tol <= 0.1:
        raise DomainError(f"tol_pin must lie in (0, 0.1], got {tol}")
    rho, w, lam, times, h = sol.rho, sol.w, sol.lam, sol.times, sol.h
    N = len(times) - 1
    admitting = (lam[:N] > 0) & (w[:N] >= 1.0 - tol)
    pinned = (rho[:N] >= 1.0 - tol) & ~admitting
    fractional = pinned & (lam[:N] > 0) & (w[:N] > tol)

    sigmas, taus = [], []
    k = 0
    if pinned[0]:
        while k < N and pinned[k]:
            k += 1
        sigmas.append(times[k] if k < N else math.inf)
    else:
        sigmas.append(0.0)
    while k < N:
        while k < N and not pinned[k]:
            k += 1
        if k == N:
            break
        taus.append(_hit_time(k, rho, w, times, h))
        while k < N and pinned[k]:
            k += 1
        sigmas.append(times[k] if k < N else math.inf)
    runs = len(taus) + (1 if sigmas[0] > 0 else 0)
    chattering = int(fractional.sum()) > 2 * runs
    return RegimeIntervals(sol.horizon, tol, sigmas, taus, chattering)


def _hit_time(k, rho, w, times, h):
    if rho[k] < 1.0 and w[k] < 1.0:
        return times[k] + w[k] * h
    if k > 0 and w[k - 1] < 1.0:
        return times[k - 1] + w[k - 1] * h
    return times[k]


def reconstruct_from_regimes(reg: RegimeIntervals, config: ModelConfig, t: float) -> float:
    """rho(t) = r0 Gbar(t) + int_{J_t} Fbar(t - u) lambda(u) du."""
    if not 0.0 <= t <= config.horizon:
        raise DomainError(f"time outside [0, {config.horizon}]: {t}")
    if reg.chattering:
        raise UnsupportedConfigError(
            "pinned intervals carry fractional admission; the interval representation does not apply"
        )
    init = config.r0 * config.initial_service.survival(t)
    return float(init + convolve_survival(config.intensity, config.service, t, reg.admission_set(t)))

