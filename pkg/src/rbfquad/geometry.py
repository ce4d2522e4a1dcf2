"""Area of the unit square left uncovered by the supports of compact kernels."""
from __future__ import annotations

from dataclasses import dataclass
from math import asin, isqrt, pi, sin, sqrt

import numpy as np

from .pointsets import PointSet, make_rng

__all__ = ["CoverageQuery", "uncovered_area_equidistant", "breakpoints", "monte_carlo_uncovered", "McEstimate"]


@dataclass(frozen=True)
class CoverageQuery:
    """``N`` grid points on ``[0,1]^2`` (a perfect square), supports of radius ``1/eps``."""

    N: int
    eps: float

    def __post_init__(self):
        n = isqrt(self.N)
        if n * n != self.N or n < 2:
            raise ValueError("N must be a perfect square >= 4")
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    @property
    def cells(self) -> int:
        """Grid cells per axis, ``sqrt(N) - 1``."""
        return isqrt(self.N) - 1


def breakpoints(N: int) -> tuple:
    """``(sqrt(2) s, 2 s)`` with ``s = sqrt(N) - 1``: full coverage below, disjoint discs above."""
    s = CoverageQuery(N, 1.0).cells
    return sqrt(2) * s, 2.0 * s


def uncovered_area_equidistant(N: int, eps: float) -> float:
    """Uncovered fraction of ``[0,1]^2`` for discs of radius ``1/eps`` at an equidistant grid.

    Counting per grid cell (four quarter discs, minus half-lenses along the
    four edges) makes the formula exact, boundary clipping included.
    """
    q = CoverageQuery(N, eps)
    s = q.cells
    if eps > 2 * s:
        return 1.0 - pi / eps**2 * s**2
    if eps > sqrt(2) * s:
        theta = 2 * asin(sqrt(4 * s**2 - eps**2) / (2 * s))
        return 1.0 - pi / eps**2 * s**2 + 2 * (theta - sin(theta)) / eps**2 * s**2
    return 0.0


@dataclass(frozen=True)
class McEstimate:
    value: float
    stderr: float
    samples: int


def _covered(points: np.ndarray, radius: float, samples: np.ndarray, lo: float, width: float) -> np.ndarray:
    """Bucket samples into x-slabs of width about ``radius``; each centre tests only nearby slabs."""
    nb = int(min(4096, max(1, np.ceil(width / radius))))
    slab = np.clip(((samples[:, 0] - lo) / width * nb).astype(np.int32), 0, nb - 1)
    order = np.argsort(slab, kind="stable")
    s = samples[order]
    start = np.concatenate([[0], np.cumsum(np.bincount(slab, minlength=nb))])
    covered = np.zeros(len(s), dtype=bool)
    r2 = radius * radius
    for p in points:
        b0 = int(np.clip(np.floor((p[0] - radius - lo) / width * nb), 0, nb - 1))
        b1 = int(np.clip(np.floor((p[0] + radius - lo) / width * nb), 0, nb - 1))
        i, j = start[b0], start[b1 + 1]
        seg = s[i:j]
        covered[i:j] |= (seg[:, 0] - p[0]) ** 2 + (seg[:, 1] - p[1]) ** 2 <= r2
    return covered


def monte_carlo_uncovered(points: PointSet, radius: float, samples: int, seed: int, block: int = 1_000_000) -> McEstimate:
    """Fraction of uniform samples in the domain farther than ``radius`` from every point.

    Samples are drawn in fixed-size blocks from one seeded stream, so the
    estimate does not depend on how the work is split. The standard error is
    the binomial one.
    """
    if samples < 10_000:
        raise ValueError("use at least 1e4 samples")
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    dom = points.domain
    if dom.dim != 2:
        raise ValueError("coverage is defined for 2D point sets")
    rng = make_rng(seed)
    pts = points.points
    uncovered = 0
    done = 0
    while done < samples:
        n = min(block, samples - done)
        u = dom.from_unit(rng.random((n, 2)))
        if radius > 0:
            uncovered += int(n - _covered(pts, radius, u, dom.lower[0], dom.upper[0] - dom.lower[0]).sum())
        else:
            uncovered += n
        done += n
    p = uncovered / samples
    return McEstimate(p, sqrt(p * (1 - p) / samples), samples)
