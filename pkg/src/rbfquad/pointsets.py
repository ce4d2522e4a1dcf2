"""Box domains, point-set generators and distance measures."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import prod

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "Domain",
    "PointSet",
    "unit_interval",
    "unit_square",
    "equidistant",
    "halton",
    "random",
    "radical_inverse",
    "make_rng",
    "min_distance",
    "max_fill_distance",
    "nearest_neighbor_distances",
    "parse_pointset",
]

# Every pseudo-random draw in the package goes through Philox-4x64-10, a
# counter-based generator (Salmon et al., SC'11) with fixed round constants
# 0xD2E7470EE14C6C93, 0xCA5A826395121157 and Weyl keys 0x9E3779B97F4A7C15,
# 0xBB67AE8584CAA73B. Output is platform independent for a given key.
RNG_NAME = "numpy.random.Philox (4x64-10), key=seed"


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed)))


@dataclass(frozen=True)
class Domain:
    """Axis-aligned box ``[a_1, b_1] x ... x [a_D, b_D]`` with D in {1, 2}."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lo) != len(hi) or len(lo) not in (1, 2):
            raise ValueError("domain must be 1D or 2D with matching bounds")
        if any(a >= b for a, b in zip(lo, hi)):
            raise ValueError(f"empty domain {lo} x {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def volume(self) -> float:
        return prod(b - a for a, b in zip(self.lower, self.upper))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (np.array(self.lower) + np.array(self.upper))

    @property
    def halfwidth(self) -> np.ndarray:
        return 0.5 * (np.array(self.upper) - np.array(self.lower))

    def from_unit(self, u) -> np.ndarray:
        """Map points of the unit cube affinely onto the domain."""
        lo, hi = np.array(self.lower), np.array(self.upper)
        return lo + np.asarray(u, dtype=float) * (hi - lo)

    def contains(self, x, tol: float = 0.0) -> np.ndarray:
        x = np.atleast_2d(x)
        lo, hi = np.array(self.lower), np.array(self.upper)
        return np.all((x >= lo - tol) & (x <= hi + tol), axis=1)


def unit_interval() -> Domain:
    return Domain((0.0,), (1.0,))


def unit_square() -> Domain:
    return Domain((0.0, 0.0), (1.0, 1.0))


@dataclass(frozen=True)
class PointSet:
    """An ordered set of distinct points in a box domain.

    ``points`` always has shape ``(n, dim)``.
    """

    domain: Domain
    points: np.ndarray
    label: str = field(default="", compare=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[1] != self.domain.dim:
            raise ValueError(f"points of shape {pts.shape} do not match a {self.domain.dim}D domain")
        if not np.all(self.domain.contains(pts)):
            raise ValueError("points must lie in the closed domain")
        if len(pts) > 1 and len(np.unique(pts, axis=0)) != len(pts):
            raise ValueError("points must be pairwise distinct")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    @property
    def dim(self) -> int:
        return self.domain.dim

    def prefix(self, n: int) -> "PointSet":
        return PointSet(self.domain, self.points[:n], self.label)


def equidistant(domain: Domain, n_per_axis: int) -> PointSet:
    """Tensor grid with ``n_per_axis`` points per axis, endpoints included.

    2D grids are row-major with x varying fastest.
    """
    if n_per_axis < 2:
        raise ValueError("n_per_axis must be >= 2")
    axes = [np.linspace(a, b, n_per_axis) for a, b in zip(domain.lower, domain.upper)]
    if domain.dim == 1:
        pts = axes[0][:, None]
    else:
        yy, xx = np.meshgrid(axes[1], axes[0], indexing="ij")
        pts = np.column_stack([xx.ravel(), yy.ravel()])
    return PointSet(domain, pts, f"equid:{n_per_axis}")


def radical_inverse(indices, base: int) -> np.ndarray:
    """Van der Corput radical inverse of nonnegative integers in ``base``."""
    i = np.asarray(indices, dtype=np.int64).copy()
    out = np.zeros(i.shape, dtype=float)
    scale = 1.0 / base
    while np.any(i > 0):
        out += (i % base) * scale
        i //= base
        scale /= base
    return out


_HALTON_BASES = (2, 3)


def halton(domain: Domain, n: int, skip: int = 0) -> PointSet:
    """The plain (unscrambled, unleaped) Halton sequence.

    Element ``j`` (counting from 1) is the radical inverse of ``j`` in bases
    2 and 3; the first ``skip`` elements are dropped.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    idx = np.arange(skip + 1, skip + n + 1)
    u = np.column_stack([radical_inverse(idx, b) for b in _HALTON_BASES[: domain.dim]])
    return PointSet(domain, domain.from_unit(u), f"halton:{n}:{skip}")


def random(domain: Domain, n: int, seed: int) -> PointSet:
    """``n`` i.i.d. uniform points; the first ``m`` points never depend on ``n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    u = make_rng(seed).random((n, domain.dim))
    pts = domain.from_unit(u)
    if len(np.unique(pts, axis=0)) != n:
        raise ValueError(f"seed {seed} produced duplicate points; choose another seed")
    return PointSet(domain, pts, f"random:{n}:{seed}")


def nearest_neighbor_distances(ps: PointSet) -> np.ndarray:
    """Distance from each point to its closest distinct neighbour."""
    if len(ps) < 2:
        raise ValueError("need at least two points")
    dist, _ = cKDTree(ps.points).query(ps.points, k=2)
    return dist[:, 1]


def min_distance(ps: PointSet) -> float:
    """Separation distance: smallest distance between two distinct points."""
    return float(nearest_neighbor_distances(ps).min())


def max_fill_distance(ps: PointSet) -> float:
    """Largest nearest-neighbour distance over the set."""
    return float(nearest_neighbor_distances(ps).max())


def parse_pointset(text: str, domain: Domain) -> PointSet:
    """Parse ``equid:<n>``, ``halton:<n>[:skip]`` or ``random:<n>:<seed>``.

    For ``equid`` the count is per axis.
    """
    kind, *args = text.strip().lower().split(":")
    try:
        vals = [int(a) for a in args]
    except ValueError:
        raise ValueError(f"bad point-set spec {text!r}") from None
    if kind == "equid" and len(vals) == 1:
        return equidistant(domain, vals[0])
    if kind == "halton" and len(vals) in (1, 2):
        return halton(domain, *vals)
    if kind == "random" and len(vals) == 2:
        return random(domain, *vals)
    raise ValueError(f"bad point-set spec {text!r}")
