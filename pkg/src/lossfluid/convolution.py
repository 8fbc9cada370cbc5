"""Integrals of the form ``sum_i int_{a_i}^{b_i} Fbar(t - u) lambda(u) du``.

The integrand is split at the intensity's breakpoints and at ``t - x`` for
every jump ``x`` of the survival function, so each elementary segment is
smooth. With ``M(x) = E[S ^ x]`` (so ``d/du M(t - u) = -Fbar(t - u)``):

* locally constant lambda = c: the segment integral is ``c (M(t-x) - M(t-y))``;
* otherwise, by parts,
  ``lam(x) M(t-x) - lam(y) M(t-y) + int_x^y lam'(u) M(t-u) du``,
  the last term by Gauss-Legendre on chunks no longer than ``max_chunk``.
  ``M`` is Lipschitz even where ``Fbar`` is singular, so the quadrature is
  well conditioned.
"""
from __future__ import annotations

import numpy as np

from .intensity import IntensitySpec
from .lifetimes import LifetimeDist

_NODES, _WEIGHTS = np.polynomial.legendre.leggauss(12)


def convolve_survival(
    intensity: IntensitySpec,
    dist: LifetimeDist,
    t: float,
    intervals,
    max_chunk: float = 0.25,
) -> float:
    """Integrate ``Fbar(t-u) lambda(u)`` over a union of disjoint intervals.

    ``intervals`` is an ``(m, 2)`` array of sorted, disjoint ``[a, b)``
    pairs; parts beyond ``[0, t]`` are ignored.
    """
    iv = np.asarray(intervals, dtype=float).reshape(-1, 2)
    iv = np.column_stack((np.maximum(iv[:, 0], 0.0), np.minimum(iv[:, 1], t)))
    iv = iv[iv[:, 1] > iv[:, 0]]
    if iv.size == 0 or t <= 0:
        return 0.0

    cuts = [iv.ravel(), intensity.breakpoints(0.0, t)]
    if not intensity.locally_constant:
        jumps = dist.jumps()
        cuts.append(t - jumps[(jumps > 0) & (jumps < t)])
        cuts.append(np.arange(0.0, t, max_chunk))
    pts = np.unique(np.concatenate(cuts))
    x, y = pts[:-1], pts[1:]
    mid = 0.5 * (x + y)
    # keep segments whose midpoint lies inside one of the intervals
    k = np.searchsorted(iv[:, 0], mid, side="right") - 1
    keep = (k >= 0) & (mid < iv[np.maximum(k, 0), 1])
    x, y, mid = x[keep], y[keep], mid[keep]
    if x.size == 0:
        return 0.0

    Mx = dist.truncated_mean(np.maximum(t - x, 0.0))
    My = dist.truncated_mean(np.maximum(t - y, 0.0))
    if intensity.locally_constant:
        return float(np.sum(intensity.rate(mid) * (Mx - My)))

    half = 0.5 * (y - x)
    nodes = mid[:, None] + half[:, None] * _NODES[None, :]
    inner = intensity.derivative(nodes) * dist.truncated_mean(np.maximum(t - nodes, 0.0))
    quad = half * (inner @ _WEIGHTS)
    lx, ly = intensity.rate(x), intensity.rate(y)
    return float(np.sum(lx * Mx - ly * My + quad))
