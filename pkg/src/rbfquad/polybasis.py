"""Polynomial bases, the point-sampled inner product and discrete orthogonal polynomials."""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .pointsets import Domain, PointSet

__all__ = [
    "PolyBasis",
    "UnisolvencyError",
    "monomial_exponents",
    "monomial_basis",
    "DiscreteInnerProduct",
    "discrete_ip",
    "build_dops",
    "poly_moments",
    "check_unisolvent",
    "RANK_RTOL",
]

RANK_RTOL = 1e-10
GRAM_TOL = 1e-10


class UnisolvencyError(np.linalg.LinAlgError):
    """Points are not unisolvent for the requested polynomial space."""

    def __init__(self, msg, rank=None, size=None):
        super().__init__(msg)
        self.rank = rank
        self.size = size


def monomial_exponents(D: int, d: int) -> np.ndarray:
    """Exponent table of all monomials of total degree <= d, graded-lex order.

    For D=2 this is 1, x, y, x^2, xy, y^2, ...
    """
    if d < 0:
        return np.zeros((0, D), dtype=int)
    if D == 1:
        return np.arange(d + 1)[:, None]
    rows = [(t - j, j) for t in range(d + 1) for j in range(t + 1)]
    return np.array(rows, dtype=int)


@dataclass(frozen=True)
class PolyBasis:
    """``K`` polynomials given as rows of a coefficient table.

    Element ``k`` is ``sum_j coef[k, j] * prod_i ((x_i - shift_i) / scale_i)**exponents[j, i]``.
    """

    exponents: np.ndarray
    coef: np.ndarray
    shift: np.ndarray
    scale: np.ndarray

    @property
    def dim(self) -> int:
        return self.exponents.shape[1]

    @property
    def degree(self) -> int:
        return int(self.exponents.sum(axis=1).max()) if len(self.exponents) else -1

    def __len__(self):
        return self.coef.shape[0]

    def monomials(self, x) -> np.ndarray:
        t = (np.atleast_2d(x) - self.shift) / self.scale
        if len(self.exponents) == 0:
            return np.zeros((len(t), 0))
        return np.prod(t[:, None, :] ** self.exponents[None, :, :], axis=2)

    def __call__(self, x) -> np.ndarray:
        """Values of all basis elements, shape ``(n, K)``."""
        return self.monomials(x) @ self.coef.T


def monomial_basis(D: int, d: int, shift=None, scale=None) -> PolyBasis:
    """Monomials up to total degree ``d`` (``K = binom(d + D, D)``; empty for d = -1).

    ``shift``/``scale`` optionally recentre the monomials, e.g. onto the domain.
    """
    exps = monomial_exponents(D, d)
    K = len(exps)
    assert K == (comb(d + D, D) if d >= 0 else 0)
    shift = np.zeros(D) if shift is None else np.asarray(shift, dtype=float)
    scale = np.ones(D) if scale is None else np.asarray(scale, dtype=float)
    return PolyBasis(exps, np.eye(K), shift, scale)


def domain_monomials(domain: Domain, d: int) -> PolyBasis:
    """Monomials centred on the domain and scaled to [-1, 1] per axis."""
    return monomial_basis(domain.dim, d, domain.center, domain.halfwidth)


@dataclass(frozen=True)
class DiscreteInnerProduct:
    """``[u, v] = |Omega| / N * sum_n u(x_n) v(x_n)``."""

    points: PointSet

    @property
    def factor(self) -> float:
        return self.points.domain.volume / len(self.points)

    def __call__(self, u, v) -> float:
        return discrete_ip(self, u, v)


def _sample(f, pts):
    if callable(f):
        vals = np.asarray(f(pts), dtype=float)
        return vals.reshape(len(pts), -1) if vals.ndim > 1 else vals
    return np.asarray(f, dtype=float)


def discrete_ip(ip: DiscreteInnerProduct, u, v) -> float:
    """Point-sampled inner product. ``u``, ``v`` are callables or value vectors."""
    pts = ip.points.points
    uu = np.ravel(_sample(u, pts))
    vv = np.ravel(_sample(v, pts))
    return float(ip.factor * np.dot(uu, vv))


def check_unisolvent(values: np.ndarray) -> int:
    """Return the numerical rank of an evaluation table; raise if deficient."""
    n, K = values.shape
    if K == 0:
        return 0
    if n < K:
        raise UnisolvencyError(f"{n} points cannot be unisolvent for {K} polynomials", rank=n, size=K)
    s = np.linalg.svd(values, compute_uv=False)
    rank = int(np.sum(s > RANK_RTOL * s[0]))
    if rank < K:
        raise UnisolvencyError(f"points not unisolvent: numerical rank {rank} < {K}", rank=rank, size=K)
    return rank


def build_dops(points: PointSet, d: int) -> PolyBasis:
    """Discrete orthonormal polynomials of degree <= d on ``points``.

    Modified Gram-Schmidt (with one reorthogonalisation pass) applied to
    domain-scaled monomials in graded-lex order. The first element is the
    constant ``|Omega|**-0.5`` and each element has a positive coefficient
    on its own leading monomial.
    """
    domain = points.domain
    mono = domain_monomials(domain, d)
    V = mono.monomials(points.points)
    check_unisolvent(V)
    K = V.shape[1]
    w = domain.volume / len(points)
    Q = V.copy()
    C = np.eye(K)
    for k in range(K):
        for _ in range(2):
            for j in range(k):
                r = w * (Q[:, j] @ Q[:, k])
                Q[:, k] -= r * Q[:, j]
                C[k] -= r * C[j]
        nrm = np.sqrt(w * (Q[:, k] @ Q[:, k]))
        Q[:, k] /= nrm
        C[k] /= nrm
    basis = PolyBasis(mono.exponents, C, mono.shift, mono.scale)
    gram = w * Q.T @ Q
    dev = np.abs(gram - np.eye(K)).max() if K else 0.0
    if dev > GRAM_TOL:
        raise np.linalg.LinAlgError(f"DOP construction broke down (Gram deviation {dev:.2e})")
    return basis


def dop_gram(points: PointSet, basis: PolyBasis) -> np.ndarray:
    """Discrete Gram matrix ``[p_k, p_l]`` of a basis on ``points``."""
    vals = basis(points.points)
    return points.domain.volume / len(points) * vals.T @ vals


def continuous_gram(basis: PolyBasis, domain: Domain) -> np.ndarray:
    """``int_Omega p_k p_l dx``, exact via tensor Gauss-Legendre."""
    n = max(basis.degree, 0) + 1
    x, wt = np.polynomial.legendre.leggauss(n)
    grids = [lo + (hi - lo) * (x + 1) / 2 for lo, hi in zip(domain.lower, domain.upper)]
    wts = [(hi - lo) / 2 * wt for lo, hi in zip(domain.lower, domain.upper)]
    mesh = np.meshgrid(*grids, indexing="ij")
    W = np.prod(np.meshgrid(*wts, indexing="ij"), axis=0).ravel()
    pts = np.column_stack([m.ravel() for m in mesh])
    vals = basis(pts)
    return (vals * W[:, None]).T @ vals


def _monomial_integrals(basis: PolyBasis, domain: Domain) -> np.ndarray:
    e = basis.exponents + 1
    lo = (np.array(domain.lower) - basis.shift) / basis.scale
    hi = (np.array(domain.upper) - basis.shift) / basis.scale
    per_axis = basis.scale * (hi**e - lo**e) / e
    return np.prod(per_axis, axis=1)


def poly_moments(basis: PolyBasis, domain: Domain) -> np.ndarray:
    """Exact integrals ``int_Omega p_k dx`` of every basis element."""
    if len(basis) == 0:
        return np.zeros(0)
    return basis.coef @ _monomial_integrals(basis, domain)
