"""Interpolatory RBF quadrature, stability diagnostics and the polynomial-correction split."""
from __future__ import annotations

from dataclasses import dataclass, field

import gmpy2
import numpy as np
from scipy.linalg import lu_factor, lu_solve, null_space

from .moments import MomentVector, rbf_moments
from .pointsets import Domain, PointSet, equidistant
from .rbfsystem import (
    COND_LIMIT,
    RbfSpace,
    SingularSystemError,
    assemble,
    cardinal_values,
    condition_estimate,
)

__all__ = [
    "QuadratureRule",
    "StabilityReport",
    "interpolatory_weights",
    "apply",
    "exactness_error",
    "stability_report",
    "positivity_tolerance",
    "estimate_lebesgue",
    "default_lebesgue_grid",
    "decompose_weights",
    "WeightDecomposition",
]

RESIDUAL_RTOL = 1e-9


def positivity_tolerance(weights) -> float:
    """Roundoff allowance below zero: ``1e-12 * max(1, sum |w|)``."""
    return 1e-12 * max(1.0, float(np.abs(weights).sum()))


@dataclass(frozen=True)
class QuadratureRule:
    """Weights ``w_n`` at ``points``; integrates ``f`` as ``sum w_n f(x_n)``.

    Only the constant weight function is supported.
    """

    points: PointSet
    weights: np.ndarray
    multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    provenance: str = "interpolatory"
    condition: float = np.nan
    residual: float = np.nan
    space: str = ""

    @property
    def stability_measure(self) -> float:
        return float(np.abs(self.weights).sum())

    @property
    def rule_of_one(self) -> float:
        return float(self.weights.sum())

    @property
    def min_weight(self) -> float:
        return float(self.weights.min())

    @property
    def is_stable(self) -> bool:
        return self.min_weight >= -positivity_tolerance(self.weights)

    def __call__(self, f) -> float:
        return apply(self, f)


@dataclass(frozen=True)
class StabilityReport:
    stability_measure: float
    rule_of_one: float
    min_weight: float
    is_stable: bool
    condition_estimate: float = np.nan

    def as_dict(self) -> dict:
        return {
            "stability_measure": self.stability_measure,
            "rule_of_one": self.rule_of_one,
            "min_weight": self.min_weight,
            "is_stable": self.is_stable,
            "condition_estimate": self.condition_estimate,
        }


def interpolatory_weights(
    space: RbfSpace, domain: Domain | None = None, moments: MomentVector | None = None, strict: bool = True
) -> QuadratureRule:
    """Weights of the rule that integrates the RBF interpolant exactly.

    Solves ``A^T [w; v] = [m_rbf; m_poly]``; the transpose matters only when
    shape parameters vary between centres, where it is what makes the rule
    exact on the space. With ``strict`` the condition estimate must not exceed
    ``COND_LIMIT`` and the solve residual must be below ``1e-9 * max|m|``;
    otherwise the rule is returned with both recorded.
    """
    domain = space.domain if domain is None else domain
    mom = rbf_moments(space, domain) if moments is None else moments
    sys = assemble(space)
    rhs = mom.full
    z = sys.solve(rhs, trans=1)
    resid = float(np.abs(sys.A.T @ z - rhs).max())
    scale = max(float(np.abs(rhs).max()), np.finfo(float).tiny)
    if strict and not sys.condition <= COND_LIMIT:
        raise SingularSystemError(
            f"bordered matrix is numerically singular (condition estimate {sys.condition:.2e})", sys.condition
        )
    if strict and resid > RESIDUAL_RTOL * scale:
        raise SingularSystemError(
            f"weight solve residual {resid:.2e} exceeds tolerance (condition {sys.condition:.2e})",
            sys.condition,
        )
    N = space.N
    return QuadratureRule(
        points=space.centers,
        weights=z[:N],
        multipliers=z[N:],
        provenance="interpolatory",
        condition=sys.condition,
        residual=resid / scale,
        space=space.describe(),
    )


def exactness_error(rule: QuadratureRule, space: RbfSpace, moments: MomentVector | None = None) -> float:
    """Largest error of ``rule`` over a basis of ``space``, relative to the largest moment.

    The space holds the polynomials and the kernel combinations
    ``sum_n alpha_n phi_n`` with ``P^T alpha = 0``; the latter are spanned
    by an orthonormal basis of the null space of ``P^T``. Without a
    polynomial tail the basis is the translated kernels themselves.
    """
    mom = rbf_moments(space, space.domain) if moments is None else moments
    x = rule.points.points
    Phi, P = space.kernel_matrix(x), space.basis(x)
    Z = null_space(space.basis(space.centers.points).T) if space.K else np.eye(space.N)
    got = np.concatenate([rule.weights @ Phi @ Z, rule.weights @ P])
    want = np.concatenate([mom.m_rbf @ Z, mom.m_poly])
    return float(np.abs(got - want).max() / max(np.abs(mom.full).max(), np.finfo(float).tiny))


def apply(rule: QuadratureRule, f) -> float:
    """``sum_n w_n f(x_n)``; ``f`` is a callable on ``(n, D)`` arrays or a value vector."""
    vals = f(rule.points.points) if callable(f) else f
    return float(np.dot(rule.weights, np.ravel(np.asarray(vals, dtype=float))))


def stability_report(rule: QuadratureRule) -> StabilityReport:
    return StabilityReport(
        stability_measure=rule.stability_measure,
        rule_of_one=rule.rule_of_one,
        min_weight=rule.min_weight,
        is_stable=rule.is_stable,
        condition_estimate=rule.condition,
    )


def default_lebesgue_grid(domain: Domain) -> PointSet:
    """2000 uniform samples in 1D, a 101 x 101 grid in 2D."""
    return equidistant(domain, 2000 if domain.dim == 1 else 101)


def estimate_lebesgue(space: RbfSpace, sample_grid: PointSet | None = None, chunk: int = 2048) -> float:
    """``max_x sum_n |c_n(x)|`` over a sample grid: a lower bound on the Lebesgue constant."""
    grid = default_lebesgue_grid(space.domain) if sample_grid is None else sample_grid
    sys = assemble(space)
    best = 0.0
    pts = grid.points
    for start in range(0, len(pts), chunk):
        c = cardinal_values(sys, pts[start : start + chunk])
        best = max(best, float(np.abs(c).sum(axis=1).max()))
    return best


@dataclass(frozen=True)
class WeightDecomposition:
    """``w = w_hat - correction`` with ``correction = B I[tau]``.

    ``digits`` is 16 for a double-precision computation, otherwise the
    number of decimal digits the extended-precision path used.
    """

    w: np.ndarray
    w_hat: np.ndarray
    correction: np.ndarray
    tau_moments: np.ndarray
    identity_error: float
    digits: int = 16


def decompose_weights(space: RbfSpace, domain: Domain | None = None, precision: str = "auto") -> WeightDecomposition:
    """Split polynomial-augmented weights into pure-RBF weights and a correction.

    With ``B = Phi^-T P (P^T Phi^-T P)^-1`` and ``I[tau] = P^T w_hat - m_poly``
    the augmented weights satisfy ``w = w_hat - B I[tau]`` (``Phi^-T``
    reduces to ``Phi^-1`` for a common shape parameter). ``w`` comes from an
    independent bordered solve and the identity is checked to
    ``1e-8 * max|w|``.

    precision : {"auto", "double", "extended"}
        Gaussian kernel blocks are routinely too ill-conditioned to invert in
        double precision. ``auto`` falls back to ``extended`` (MPFR (gmpy2), digits
        increased until the weights settle) when the double-precision
        condition estimate exceeds the limit; other kernels then raise.
    """
    if space.K == 0:
        raise ValueError("decomposition needs a polynomial tail (degree >= 0)")
    if precision not in ("auto", "double", "extended"):
        raise ValueError(f"unknown precision {precision!r}")
    domain = space.domain if domain is None else domain
    if precision != "extended":
        try:
            return _decompose_double(space, domain)
        except SingularSystemError:
            if precision == "double" or space.kernel.family != "gaussian":
                raise
    return _decompose_extended(space, domain)


def _decompose_double(space: RbfSpace, domain: Domain) -> WeightDecomposition:
    mom = rbf_moments(space, domain)
    sys = assemble(space)
    Phi, P = sys.Phi, sys.P
    lu = lu_factor(Phi)
    cond_phi = condition_estimate(lu, np.abs(Phi).sum(axis=0).max())
    if not cond_phi <= COND_LIMIT:
        raise SingularSystemError(f"kernel block is numerically singular (condition {cond_phi:.2e})", cond_phi)
    w_hat = lu_solve(lu, mom.m_rbf, trans=1)
    PhiT_inv_P = lu_solve(lu, P, trans=1)
    S = P.T @ PhiT_inv_P
    lu_s = lu_factor(S)
    cond_s = condition_estimate(lu_s, np.abs(S).sum(axis=0).max())
    if not cond_s <= COND_LIMIT:
        raise SingularSystemError(f"P^T Phi^-1 P is numerically singular (condition {cond_s:.2e})", cond_s)
    tau = P.T @ w_hat - mom.m_poly
    correction = PhiT_inv_P @ lu_solve(lu_s, tau)

    w = sys.solve(mom.full, trans=1)[: space.N]
    return _checked(w, w_hat, correction, tau, 16)


def _checked(w, w_hat, correction, tau, digits) -> WeightDecomposition:
    err = float(np.abs(w - (w_hat - correction)).max())
    if err > 1e-8 * float(np.abs(w).max()):
        raise ArithmeticError(f"weight decomposition identity violated by {err:.2e}")
    return WeightDecomposition(w, w_hat, correction, tau, err, digits)


def _mp_blocks(space: RbfSpace, domain: Domain):
    """Transposed kernel block, polynomial block and moments as MPFR object arrays (Gaussian only)."""
    mpf = np.frompyfunc(gmpy2.mpfr, 1, 1)
    exp = np.frompyfunc(gmpy2.exp, 1, 1)
    erf = np.frompyfunc(gmpy2.erf, 1, 1)
    X = mpf(space.centers.points.astype(float))
    eps = mpf(space.shape.astype(float))
    diff = X[:, None, :] - X[None, :, :]
    r2 = (diff * diff).sum(axis=2)
    PhiT = exp(-(eps**2)[:, None] * r2)  # row n holds phi_n at every centre
    basis = space.basis
    shift, scale = mpf(basis.shift), mpf(basis.scale)
    t = (X - shift) / scale
    mono = np.array(
        [[np.prod([t[i, j] ** int(e[j]) for j in range(t.shape[1])]) for e in basis.exponents] for i in range(len(t))],
        dtype=object,
    )
    coef = mpf(basis.coef)
    P = mono.dot(coef.T)
    lo, hi = mpf(np.array(domain.lower)), mpf(np.array(domain.upper))
    half_sqrt_pi = gmpy2.sqrt(gmpy2.const_pi()) / 2
    per_axis = half_sqrt_pi / eps[:, None] * (erf(eps[:, None] * (hi - X)) - erf(eps[:, None] * (lo - X)))
    m_rbf = np.prod(per_axis, axis=1)
    a, b = (lo - shift) / scale, (hi - shift) / scale
    mono_int = np.array(
        [
            np.prod([scale[j] * (b[j] ** (int(e[j]) + 1) - a[j] ** (int(e[j]) + 1)) / (int(e[j]) + 1) for j in range(len(a))])
            for e in basis.exponents
        ],
        dtype=object,
    )
    m_poly = coef.dot(mono_int)
    return PhiT, P, m_rbf, m_poly


def _mp_lu(A):
    """LU with partial pivoting of an object array; returns (LU, perm)."""
    A = A.copy()
    n = A.shape[0]
    perm = np.arange(n)
    for k in range(n):
        p = k + int(np.argmax(np.abs(A[k:, k])))
        if A[p, k] == 0:
            raise ZeroDivisionError("singular at working precision")
        if p != k:
            A[[k, p]] = A[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        A[k + 1 :, k] /= A[k, k]
        A[k + 1 :, k + 1 :] -= np.outer(A[k + 1 :, k], A[k, k + 1 :])
    return A, perm


def _mp_solve(lu, b):
    A, perm = lu
    x = b[perm].copy()
    n = len(x)
    for i in range(1, n):
        x[i] -= A[i, :i].dot(x[:i])
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - A[i, i + 1 :].dot(x[i + 1 :])) / A[i, i]
    return x


def _mp_decompose_at(space, domain, dps):
    bits = int(dps * 3.33) + 8
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        PhiT, P, m_rbf, m_poly = _mp_blocks(space, domain)
        N, K = space.N, space.K
        lu = _mp_lu(PhiT)
        rhs = np.column_stack([m_rbf, P])
        sol = _mp_solve(lu, rhs)
        w_hat, PhiT_inv_P = sol[:, 0], sol[:, 1:]
        S = P.T.dot(PhiT_inv_P)
        tau = P.T.dot(w_hat) - m_poly
        correction = PhiT_inv_P.dot(_mp_solve(_mp_lu(S), tau))
        # independent bordered solve of A^T z = m
        AT = np.empty((N + K, N + K), dtype=object)
        AT[:N, :N], AT[:N, N:], AT[N:, :N] = PhiT, P, P.T
        AT[N:, N:] = gmpy2.mpfr(0)
        z = _mp_solve(_mp_lu(AT), np.concatenate([m_rbf, m_poly]))
        w = z[:N]
        return [np.array([float(v) for v in vec], dtype=float) for vec in (w, w_hat, correction, tau)]


def _agreement(a, b) -> float:
    """Number of matching decimal digits between two float vectors."""
    scale = max(float(np.abs(b).max()), 1e-300)
    err = float(np.abs(a - b).max()) / scale
    return 17.0 if err == 0 else -np.log10(err)


def _decompose_extended(space: RbfSpace, domain: Domain, max_dps: int = 2000):
    """Two runs at different working precision; their agreement reveals the digits lost."""
    if space.kernel.family != "gaussian":
        raise ValueError("extended precision is implemented for the Gaussian kernel only")
    dps, step = 60, 30
    while dps <= max_dps:
        try:
            lo = _mp_decompose_at(space, domain, dps)
            hi = _mp_decompose_at(space, domain, dps + step)
        except ZeroDivisionError:
            dps *= 2
            continue
        digits = min(_agreement(a, b) for a, b in zip(lo, hi))
        if digits >= 13:
            return _checked(*hi, dps + step)
        lost = dps - max(digits, 0.0)
        dps = int(max(2 * dps, lost + 30)) if digits <= 0 else int(lost + 30)
    raise SingularSystemError(f"weights did not settle within {max_dps} digits", np.inf)
