"""Event-driven simulation of the M_t/G/n/n loss system.

Arrivals form a Poisson process with intensity ``n * lambda(u)``. Every
arrival carries a service requirement drawn from ``F`` (blocked arrivals
too, so the marks do not depend on the admission history). An arrival at
``u`` is admitted iff fewer than ``n`` servers are busy just before ``u``;
departures scheduled at exactly ``u`` are processed first.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .convolution import convolve_survival
from .errors import DomainError, UnsupportedConfigError
from .intensity import IntensitySpec
from .model import ModelConfig

__all__ = [
    "ModelConfig",
    "SimPath",
    "sample_arrivals",
    "simulate",
    "run_events",
    "martingale_residual",
    "ADMITTED",
    "BLOCKED",
    "DEPARTURE",
    "KIND_NAMES",
]

ADMITTED, BLOCKED, DEPARTURE = 0, 1, 2
KIND_NAMES = {ADMITTED: "arrival-admitted", BLOCKED: "arrival-blocked", DEPARTURE: "departure"}


def replication_streams(seed) -> tuple:
    """Independent Philox generators for (arrivals, marks, initial work)."""
    children = np.random.SeedSequence(seed).spawn(3)
    return tuple(np.random.Generator(np.random.Philox(c)) for c in children)


def sample_arrivals(spec: IntensitySpec, n: int, T: float, rng: np.random.Generator) -> np.ndarray:
    """Epochs of a Poisson process with intensity ``n * spec.rate`` on [0, T].

    Thinning is done separately on each cell of ``spec.thinning_grid(T)``
    against the local supremum of the rate.
    """
    grid = spec.thinning_grid(T)
    out = []
    for a, b in zip(grid[:-1], grid[1:]):
        if b <= a:
            continue
        bound = n * spec.upper_bound(a, b)
        if bound <= 0:
            continue
        m = rng.poisson(bound * (b - a))
        cand = np.sort(rng.uniform(a, b, m))
        keep = rng.uniform(0.0, bound, m) < n * spec.rate(cand)
        out.append(cand[keep])
    return np.concatenate(out) if out else np.empty(0)


@dataclass
class SimPath:
    """One realized trajectory over ``[0, horizon]``.

    ``counts[i]`` is the number of busy servers right after event ``i``.
    Job ids ``0 .. n_initial-1`` are the jobs present at time 0; arrival
    ``i`` (admitted or not) has id ``n_initial + i``.
    """

    config: ModelConfig
    seed: object
    times: np.ndarray
    kinds: np.ndarray
    job_ids: np.ndarray
    counts: np.ndarray
    arrival_times: np.ndarray
    service_times: np.ndarray
    admitted: np.ndarray
    initial_remaining: np.ndarray

    @property
    def n(self) -> int:
        return self.config.n

    @property
    def horizon(self) -> float:
        return self.config.horizon

    @property
    def n_initial(self) -> int:
        return len(self.initial_remaining)

    def _check(self, t):
        tt = np.asarray(t, dtype=float)
        if np.any(tt < 0) or np.any(tt > self.horizon):
            raise DomainError(f"time outside [0, {self.horizon}]: {t!r}")
        return tt

    @cached_property
    def _knots(self):
        # value vals[i] holds on [knots[i], knots[i+1])
        knots = np.concatenate(([0.0], self.times))
        vals = np.concatenate(([self.n_initial], self.counts)).astype(float)
        area = np.concatenate(([0.0], np.cumsum(vals[:-1] * np.diff(knots))))
        return knots, vals, area

    def count_at(self, t):
        tt = self._check(t)
        knots, vals, _ = self._knots
        k = vals[np.searchsorted(knots, tt, side="right") - 1]
        return k if np.ndim(t) else int(k)

    def count_before(self, t):
        """Left limit k(t-); at t = 0 this is the initial count."""
        tt = self._check(t)
        knots, vals, _ = self._knots
        idx = np.maximum(np.searchsorted(knots, tt, side="left") - 1, 0)
        k = vals[idx]
        return k if np.ndim(t) else int(k)

    def occupancy_at(self, t):
        """rho^n(t) = k(t)/n, right-continuous."""
        return self.count_at(t) / self.n

    def occupancy_before(self, t):
        return self.count_before(t) / self.n

    def integrated(self, t):
        """Theta^n(t) = int_0^t rho^n(u) du, exact."""
        tt = self._check(t)
        knots, vals, area = self._knots
        i = np.searchsorted(knots, tt, side="right") - 1
        out = (area[i] + vals[i] * (tt - knots[i])) / self.n
        return out if np.ndim(t) else float(out)

    @cached_property
    def blocked_times(self) -> np.ndarray:
        return self.times[self.kinds == BLOCKED]

    def blocked_fraction(self, t):
        """b^n(t): blocked arrivals in [0, t] divided by n."""
        tt = self._check(t)
        out = np.searchsorted(self.blocked_times, tt, side="right") / self.n
        return out if np.ndim(t) else float(out)

    def blocked_before(self, t):
        tt = self._check(t)
        out = np.searchsorted(self.blocked_times, tt, side="left") / self.n
        return out if np.ndim(t) else float(out)

    def admission_intervals(self) -> np.ndarray:
        """Maximal ``[a, b)`` pieces of [0, T] on which k(u-) < n."""
        knots, vals, _ = self._knots
        ends = np.append(knots[1:], self.horizon)
        open_ = vals < self.n
        # merge runs of consecutive open pieces
        starts = np.flatnonzero(open_ & ~np.concatenate(([False], open_[:-1])))
        stops = np.flatnonzero(open_ & ~np.concatenate((open_[1:], [False])))
        iv = np.column_stack((knots[starts], ends[stops]))
        return iv[iv[:, 1] > iv[:, 0]]

    def event_counts(self, t: float) -> dict:
        """Cumulative arrivals, admissions, blocks and departures up to t."""
        i = int(np.searchsorted(self.times, self._check(t), side="right"))
        kinds = self.kinds[:i]
        return {
            "arrivals": int(np.searchsorted(self.arrival_times, t, side="right")),
            "admitted": int(np.sum(kinds == ADMITTED)),
            "blocked": int(np.sum(kinds == BLOCKED)),
            "departed": int(np.sum(kinds == DEPARTURE)),
        }


def simulate(config: ModelConfig, seed) -> SimPath:
    """Simulate one replication of the loss system over ``[0, T]``."""
    if config.n is None:
        raise DomainError("simulation needs a capacity n")
    n, T = config.n, config.horizon
    rng_arr, rng_marks, rng_init = replication_streams(seed)
    initial = config.initial_service.sample(rng_init, config.n_initial)
    arrivals = sample_arrivals(config.intensity, n, T, rng_arr)
    marks = config.service.sample(rng_marks, arrivals.size)
    return run_events(config, arrivals, marks, initial, seed=seed)


def run_events(config: ModelConfig, arrivals, marks, initial=(), seed=None) -> SimPath:
    """Play given arrival epochs, service marks and initial remaining work through the system."""
    if config.n is None:
        raise DomainError("simulation needs a capacity n")
    n, T = config.n, config.horizon
    arrivals = np.asarray(arrivals, dtype=float)
    marks = np.asarray(marks, dtype=float)
    initial = np.asarray(initial, dtype=float)
    if arrivals.shape != marks.shape:
        raise DomainError("need exactly one service mark per arrival")
    if arrivals.size and (np.any(np.diff(arrivals) < 0) or arrivals[0] < 0 or arrivals[-1] > T):
        raise DomainError("arrival epochs must be sorted and lie in [0, T]")
    if initial.size > n:
        raise DomainError("more initial jobs than servers")
    n0 = initial.size

    times, kinds, ids, counts = [], [], [], []
    heap = [(float(s), j) for j, s in enumerate(initial)]
    heapq.heapify(heap)
    k = n0
    admitted = np.zeros(arrivals.size, dtype=bool)

    def log(u, kind, j):
        times.append(u)
        kinds.append(kind)
        ids.append(j)
        counts.append(k)

    def depart_until(u):
        nonlocal k
        while heap and heap[0][0] <= u:
            d, j = heapq.heappop(heap)
            k -= 1
            log(d, DEPARTURE, j)

    for i, u in enumerate(arrivals.tolist()):
        depart_until(u)
        jid = n0 + i
        if k < n:
            k += 1
            admitted[i] = True
            heapq.heappush(heap, (u + float(marks[i]), jid))
            log(u, ADMITTED, jid)
        else:
            log(u, BLOCKED, jid)
    depart_until(T)

    return SimPath(
        config=config,
        seed=seed,
        times=np.asarray(times, dtype=float),
        kinds=np.asarray(kinds, dtype=np.int8),
        job_ids=np.asarray(ids, dtype=np.int64),
        counts=np.asarray(counts, dtype=np.int64),
        arrival_times=arrivals,
        service_times=marks,
        admitted=admitted,
        initial_remaining=initial,
    )


def martingale_residual(path: SimPath, config: ModelConfig, t):
    """X^n(t) = rho^n(t) - int_0^t 1{rho^n(u-) < 1} Fbar(t-u) lambda(u) du.

    Defined for empty-start systems only. Vectorized over ``t``.
    """
    if config.r0 != 0:
        raise UnsupportedConfigError("the martingale residual is only defined for r0 = 0")
    tt = np.atleast_1d(path._check(t))
    iv = path.admission_intervals()
    comp = np.array([convolve_survival(config.intensity, config.service, s, iv) for s in tt])
    out = path.occupancy_at(tt) - comp
    return out if np.ndim(t) else float(out[0])
