"""Positive least-squares RBF quadrature on oversampled data points."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import lstsq

from .moments import MomentVector, rbf_moments
from .pointsets import Domain, PointSet, halton, random
from .quadrature import QuadratureRule, positivity_tolerance
from .rbfsystem import RbfSpace, make_space

__all__ = [
    "LsProblem",
    "RankDeficientError",
    "ExactnessError",
    "build_ls_problem",
    "weighted_min_norm",
    "algorithm1",
    "Algorithm1Result",
    "sequence",
    "ratio_study",
    "fit_power_law",
]

RESIDUAL_RTOL = 1e-9


class RankDeficientError(np.linalg.LinAlgError):
    def __init__(self, msg, rank=None, rows=None):
        super().__init__(msg)
        self.rank = rank
        self.rows = rows


class ExactnessError(ArithmeticError):
    pass


@dataclass(frozen=True)
class LsProblem:
    """Exactness system ``B w = m`` for the space over ``Y_M`` sampled at ``X_N``.

    Rows of ``B`` are the M translated kernels followed by the K polynomials;
    ``r`` holds the discrete weights ``|Omega| omega(x_n) / N``.
    """

    space: RbfSpace
    data: PointSet
    B: np.ndarray
    m: np.ndarray
    r: np.ndarray

    @property
    def shape(self):
        return self.B.shape


def build_ls_problem(
    space: RbfSpace,
    data: PointSet,
    omega: Callable | None = None,
    domain: Domain | None = None,
    moments: MomentVector | np.ndarray | None = None,
) -> LsProblem:
    """Assemble ``B`` and ``m``.

    ``omega`` defaults to 1. The analytic moments are for ``omega = 1``; a
    non-constant ``omega`` therefore needs an explicit ``moments`` vector.
    """
    domain = space.domain if domain is None else domain
    rows = space.N + space.K
    if len(data) < rows:
        raise ValueError(f"need at least {rows} data points, got {len(data)}")
    if omega is None:
        om = np.ones(len(data))
    else:
        if moments is None:
            raise ValueError("a non-constant weight function requires user-supplied moments")
        om = np.asarray(omega(data.points), dtype=float).ravel()
        if np.any(om <= 0):
            raise ValueError("weight function must be positive at every data point")
    if moments is None:
        moments = rbf_moments(space, domain)
    m = moments.full if isinstance(moments, MomentVector) else np.asarray(moments, dtype=float)
    if len(m) != rows:
        raise ValueError(f"moment vector has length {len(m)}, expected {rows}")
    B = np.vstack([space.kernel_matrix(data.points).T, space.basis(data.points).T])
    r = domain.volume * om / len(data)
    return LsProblem(space, data, B, m, r)


def weighted_min_norm(problem: LsProblem, check: bool = True) -> QuadratureRule:
    """Exact weights minimising ``|| R^-1/2 w ||_2``.

    With ``w = R^1/2 z`` this is the minimum-norm solution of
    ``(B R^1/2) z = m``, computed by a complete orthogonal factorisation
    (QR with column pivoting, LAPACK ``gelsy``).
    """
    sq = np.sqrt(problem.r)
    rows = problem.B.shape[0]
    z, _, rank, _ = lstsq(problem.B * sq[None, :], problem.m, lapack_driver="gelsy")
    if rank < rows:
        raise RankDeficientError(f"exactness matrix has numerical rank {rank} < {rows}", rank, rows)
    w = sq * z
    scale = float(np.abs(problem.m).max())
    resid = float(np.abs(problem.B @ w - problem.m).max()) / scale
    if check and resid > RESIDUAL_RTOL:
        raise ExactnessError(f"exactness residual {resid:.2e} above {RESIDUAL_RTOL:.0e}")
    return QuadratureRule(
        points=problem.data,
        weights=w,
        provenance="least_squares",
        residual=resid,
        space=problem.space.describe(),
    )


def sequence(kind: str, domain: Domain, seed: int = 0) -> Callable[[int], PointSet]:
    """First-``n`` accessor of a nested point sequence (``halton`` or ``random``)."""
    if kind == "halton":
        return lambda n: halton(domain, n)
    if kind == "random":
        return lambda n: random(domain, n, seed)
    raise ValueError(f"unknown sequence {kind!r}")


@dataclass
class Algorithm1Result:
    rule: QuadratureRule | None
    N_final: int | None
    success: bool
    N_start: int
    iterations: list = field(default_factory=list)
    best: QuadratureRule | None = None
    reason: str = ""


def algorithm1(
    space: RbfSpace,
    data_sequence: Callable[[int], PointSet],
    omega: Callable | None = None,
    domain: Domain | None = None,
    N_start: int | None = None,
    N_max: int = 100_000,
    geometric: bool = False,
    moments=None,
    on_iteration: Callable | None = None,
    rank_patience: int | None = None,
) -> Algorithm1Result:
    """Grow the data set one point at a time until the least-squares weights are nonnegative.

    ``data_sequence(n)`` must return the first ``n`` points of a nested
    sequence. ``N_start`` defaults to ``M + K``; if that prefix is rank
    deficient, ``N`` advances until it is not. With ``geometric`` the step
    is ``max(1, N // 10)`` instead of 1. Every iteration is logged as
    ``{N, min_weight, residual}``; on budget exhaustion the least negative
    iterate is returned as ``best``. Flat kernels can make ``B`` rank
    deficient for every ``N``; the loop gives up after ``rank_patience``
    (default ``2 (M + K)``) consecutive rank-deficient iterations.
    """
    domain = space.domain if domain is None else domain
    rows = space.N + space.K
    N = rows if N_start is None else int(N_start)
    if N < rows:
        raise ValueError(f"N_start must be >= M + K = {rows}")
    if moments is None and omega is None:
        moments = rbf_moments(space, domain)
    result = Algorithm1Result(None, None, False, N)
    best_min = -np.inf
    patience = 2 * rows if rank_patience is None else rank_patience
    stalled = 0
    while N <= N_max:
        problem = build_ls_problem(space, data_sequence(N), omega, domain, moments)
        try:
            rule = weighted_min_norm(problem)
        except RankDeficientError:
            rule = None
        if rule is None:
            entry = {"N": N, "min_weight": None, "residual": None}
            stalled += 1
        else:
            stalled = 0
            entry = {"N": N, "min_weight": rule.min_weight, "residual": rule.residual}
        result.iterations.append(entry)
        if on_iteration is not None:
            on_iteration(entry)
        if rule is not None:
            if rule.min_weight > best_min:
                best_min, result.best = rule.min_weight, rule
            if rule.min_weight >= -positivity_tolerance(rule.weights):
                result.rule, result.N_final, result.success = rule, N, True
                result.reason = "positive"
                return result
        if stalled >= patience:
            result.reason = "rank_deficient"
            return result
        N += max(1, N // 10) if geometric else 1
    result.reason = "budget_exhausted"
    return result


def fit_power_law(M, N):
    """Ordinary least-squares fit of ``log N = log C + s log M``; returns ``(C, s)``."""
    x, y = np.log(np.asarray(M, dtype=float)), np.log(np.asarray(N, dtype=float))
    s, logC = np.polyfit(x, y, 1)
    return float(np.exp(logC)), float(s)


def ratio_study(M_values, kernel, eps, degree, kind, domain, seed=0, N_max=100_000, geometric=False):
    """Smallest ``N`` giving a positive rule for the first ``M`` sequence points as centres.

    Returns ``(rows, C, s)`` with rows ``{M, N_final, success}``.
    """
    seq = sequence(kind, domain, seed)
    rows = []
    for M in M_values:
        space = make_space(kernel, seq(M), eps, degree)
        res = algorithm1(space, seq, domain=domain, N_max=N_max, geometric=geometric)
        rows.append({"M": M, "N_final": res.N_final, "success": res.success, "reason": res.reason})
    ok = [r for r in rows if r["success"]]
    C, s = fit_power_law([r["M"] for r in ok], [r["N_final"] for r in ok]) if len(ok) >= 2 else (np.nan, np.nan)
    return rows, C, s
