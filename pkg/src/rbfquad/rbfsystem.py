"""RBF spaces, the bordered interpolation system and cardinal functions."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.linalg.lapack import dgecon
from scipy.spatial.distance import cdist

from .kernels import Kernel
from .pointsets import PointSet, nearest_neighbor_distances
from .polybasis import PolyBasis, check_unisolvent, domain_monomials

__all__ = [
    "RbfSpace",
    "ShapePolicy",
    "SaddleSystem",
    "SingularSystemError",
    "OverlapError",
    "make_space",
    "assemble",
    "interpolate",
    "eval_interpolant",
    "cardinal_values",
    "explicit_cardinal_nonoverlap",
    "condition_estimate",
    "COND_LIMIT",
]

COND_LIMIT = 1e15


class SingularSystemError(np.linalg.LinAlgError):
    def __init__(self, msg, condition=None):
        super().__init__(msg)
        self.condition = condition


class OverlapError(ValueError):
    """Translated compact kernels overlap other centres."""


@dataclass(frozen=True)
class ShapePolicy:
    """How per-centre shape parameters are chosen.

    ``constant``: every centre gets ``eps``.
    ``equal_moment_boundary``: 1D only; the two domain endpoints get
    ``eps / 2`` so that their clipped supports integrate like interior ones.
    """

    kind: str
    eps: float

    def __post_init__(self):
        if self.kind not in ("constant", "equal_moment_boundary"):
            raise ValueError(f"unknown shape policy {self.kind!r}")
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    @classmethod
    def constant(cls, eps: float) -> "ShapePolicy":
        return cls("constant", float(eps))

    @classmethod
    def equal_moment_boundary(cls, eps: float) -> "ShapePolicy":
        return cls("equal_moment_boundary", float(eps))

    def __call__(self, centers: PointSet) -> np.ndarray:
        shape = np.full(len(centers), self.eps)
        if self.kind == "equal_moment_boundary":
            if centers.dim != 1:
                raise ValueError("equal_moment_boundary is defined for 1D point sets only")
            x = centers.points[:, 0]
            (a,), (b,) = centers.domain.lower, centers.domain.upper
            shape[(x == a) | (x == b)] = self.eps / 2
        return shape


@dataclass(frozen=True)
class RbfSpace:
    """The span of ``phi(eps_n |x - x_n|)`` plus polynomials of degree <= ``degree``."""

    kernel: Kernel
    centers: PointSet
    shape: np.ndarray
    degree: int
    basis: PolyBasis = field(repr=False)

    @property
    def N(self) -> int:
        return len(self.centers)

    @property
    def K(self) -> int:
        return len(self.basis)

    @property
    def domain(self):
        return self.centers.domain

    def describe(self) -> str:
        eps = np.unique(self.shape)
        eps_txt = f"{eps[0]:.6g}" if len(eps) == 1 else f"{eps.min():.6g}..{eps.max():.6g}"
        return f"{self.kernel} eps={eps_txt} d={self.degree} N={self.N} pts={self.centers.label}"

    def with_degree(self, degree: int) -> "RbfSpace":
        return make_space(self.kernel, self.centers, self.shape, degree)

    def kernel_matrix(self, x) -> np.ndarray:
        """``phi(eps_n |x_m - c_n|)`` for evaluation points x (rows) and centres (columns)."""
        r = cdist(np.atleast_2d(x), self.centers.points)
        return self.kernel(r * self.shape[None, :])


def make_space(kernel: Kernel, centers: PointSet, eps=1.0, degree: int = -1) -> RbfSpace:
    """Build an :class:`RbfSpace`.

    ``eps`` may be a scalar, one value per centre, or a :class:`ShapePolicy`.
    Polyharmonic splines always use ``eps = 1``. A degree below
    ``kernel.order - 1`` is allowed (some configurations are still
    solvable) but triggers a warning, and solvability is then left to the
    factorisation.
    """
    if degree < -1:
        raise ValueError("degree must be >= -1")
    if isinstance(eps, ShapePolicy):
        shape = eps(centers)
    else:
        shape = np.broadcast_to(np.asarray(eps, dtype=float), (len(centers),)).copy()
    if kernel.is_phs:
        shape = np.ones(len(centers))
    if np.any(shape <= 0):
        raise ValueError("shape parameters must be positive")
    if degree < kernel.min_degree:
        warnings.warn(
            f"degree {degree} below {kernel.min_degree} for {kernel}; unique solvability not guaranteed",
            stacklevel=2,
        )
    shape.setflags(write=False)
    basis = domain_monomials(centers.domain, degree)
    return RbfSpace(kernel, centers, shape, degree, basis)


def condition_estimate(lu_piv, anorm: float) -> float:
    """1-norm condition estimate from an LU factorisation (LAPACK dgecon)."""
    lu, _ = lu_piv
    if lu.size == 0:
        return 1.0
    rcond, info = dgecon(lu, anorm, norm="1")
    if info != 0 or rcond == 0:
        return np.inf
    return 1.0 / rcond


@dataclass(frozen=True)
class SaddleSystem:
    """Kernel block ``Phi`` and polynomial block ``P`` evaluated at data points.

    For the square case (data = centres) the bordered matrix
    ``A = [[Phi, P], [P^T, 0]]`` is factorised once.
    """

    space: RbfSpace
    data: PointSet
    Phi: np.ndarray
    P: np.ndarray
    lu: tuple | None = field(default=None, repr=False)
    condition: float = np.nan

    @property
    def square(self) -> bool:
        return self.lu is not None

    @property
    def A(self) -> np.ndarray:
        K = self.P.shape[1]
        return np.block([[self.Phi, self.P], [self.P.T, np.zeros((K, K))]])

    def solve(self, rhs, trans: int = 0, refine: int = 1) -> np.ndarray:
        """Solve ``A z = rhs`` (``trans=1``: ``A^T z = rhs``) with iterative refinement."""
        if not self.square:
            raise ValueError("only square systems can be solved")
        A = self.A if trans == 0 else self.A.T
        z = lu_solve(self.lu, rhs, trans=trans)
        for _ in range(refine):
            z = z + lu_solve(self.lu, rhs - A @ z, trans=trans)
        return z


def assemble(space: RbfSpace, data_points: PointSet | None = None) -> SaddleSystem:
    """Evaluate the kernel and polynomial blocks; factorise the square case."""
    square = data_points is None or data_points is space.centers
    data = space.centers if square else data_points
    Phi = space.kernel_matrix(data.points)
    P = space.basis(data.points)
    check_unisolvent(P)
    if not square:
        return SaddleSystem(space, data, Phi, P)
    K = P.shape[1]
    A = np.block([[Phi, P], [P.T, np.zeros((K, K))]])
    lu = lu_factor(A, check_finite=True)
    if np.any(np.diag(lu[0]) == 0):
        raise SingularSystemError("bordered RBF matrix is exactly singular", np.inf)
    cond = condition_estimate(lu, np.abs(A).sum(axis=0).max())
    return SaddleSystem(space, data, Phi, P, lu, cond)


def _require_conditioned(sys: SaddleSystem):
    if not sys.square:
        raise ValueError("a square system (data = centres) is required")
    if not sys.condition <= COND_LIMIT:
        raise SingularSystemError(
            f"bordered matrix is numerically singular (condition estimate {sys.condition:.2e})",
            sys.condition,
        )


def interpolate(sys: SaddleSystem, f_values):
    """Coefficients ``(alpha, beta)`` of the interpolant of nodal values."""
    _require_conditioned(sys)
    f = np.asarray(f_values, dtype=float)
    N = sys.space.N
    rhs = np.concatenate([f, np.zeros(sys.space.K)])
    z = sys.solve(rhs)
    return z[:N], z[N:]


def eval_interpolant(space: RbfSpace, coefficients, x) -> np.ndarray:
    """``sum_n alpha_n phi(eps_n |x - x_n|) + sum_k beta_k p_k(x)``."""
    alpha, beta = coefficients
    x = np.atleast_2d(x)
    if x.shape[1] != space.centers.dim:
        x = x.reshape(-1, space.centers.dim)
    return space.kernel_matrix(x) @ alpha + space.basis(x) @ np.asarray(beta)


def cardinal_values(sys: SaddleSystem, x) -> np.ndarray:
    """All cardinal functions at the points ``x``; shape ``(len(x), N)``.

    One transposed solve per evaluation point, batched.
    """
    _require_conditioned(sys)
    space = sys.space
    x = np.atleast_2d(x)
    if x.shape[1] != space.centers.dim:
        x = x.reshape(-1, space.centers.dim)
    rhs = np.hstack([space.kernel_matrix(x), space.basis(x)]).T
    z = sys.solve(rhs, trans=1)
    return z[: space.N].T


def check_nonoverlap(space: RbfSpace, rtol: float = 1e-12):
    h = nearest_neighbor_distances(space.centers)
    if np.any(1.0 / space.shape > h * (1 + rtol)):
        worst = int(np.argmax(1.0 / (space.shape * h)))
        raise OverlapError(
            f"support radius {1 / space.shape[worst]:.3g} exceeds nearest-neighbour distance "
            f"{h[worst]:.3g} at centre {worst}"
        )


def explicit_cardinal_nonoverlap(space: RbfSpace, dops: PolyBasis, m, x) -> np.ndarray:
    """Cardinal function(s) ``c_m(x)`` for non-overlapping compact kernels.

    Uses the closed representation available when the kernel block is the
    identity and ``dops`` is orthonormal for the point-sampled inner product:
    ``c_m = phi_m - |Omega|/N sum_n (sum_k p_k(x_m) p_k(x_n)) phi_n + |Omega|/N sum_k p_k(x_m) p_k``.

    ``m`` may be an index or an index array; result has shape ``(len(x), len(m))``.
    """
    if not space.kernel.is_compact:
        raise ValueError("explicit representation needs a compactly supported kernel")
    check_nonoverlap(space)
    x = np.atleast_2d(x)
    if x.shape[1] != space.centers.dim:
        x = x.reshape(-1, space.centers.dim)
    m = np.atleast_1d(m)
    w = space.domain.volume / space.N
    phi_x = space.kernel_matrix(x)  # (M, N)
    if len(dops) == 0:
        return phi_x[:, m]
    Pc = dops(space.centers.points)  # (N, K)
    Px = dops(x)  # (M, K)
    kern = Pc[m] @ Pc.T  # (|m|, N)
    return phi_x[:, m] - w * phi_x @ kern.T + w * Px @ Pc[m].T
