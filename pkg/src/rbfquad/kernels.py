"""Radial kernels used to build the approximation spaces.

Four families are supported:

==============  ====================================  =====
name            phi(r)                                order
==============  ====================================  =====
gaussian        exp(-r^2)                             0
wendland:D,k    phi_{D,k}(r), support [0, 1]          0
phs:p  (odd)    r^p                                   (p+1)/2
phslog:p (even) r^p log r                             p/2 + 1
==============  ====================================  =====

"order" is the order of conditional positive definiteness; a polynomial
tail of degree ``order - 1`` guarantees a uniquely solvable interpolation
problem on unisolvent points.

The kernels never see a shape parameter. Callers scale the argument,
``phi(eps * r)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.polynomial import Polynomial

__all__ = ["Kernel", "gaussian", "wendland", "phs", "phslog", "parse_kernel"]

# Wendland's minimal-degree piecewise polynomials phi_{D,k} on [0, 1], scaled
# to phi(0) = 1. Source: H. Wendland, Adv. Comput. Math. 4 (1995), Table 9.1
# in "Scattered Data Approximation" (2004). phi_{2,k} coincides with phi_{3,k}
# because both use l = floor(D/2) + k + 1 = k + 2.
#   phi_{1,0} = (1-r)
#   phi_{1,1} = (1-r)^3 (3r + 1)
#   phi_{1,2} = (1-r)^5 (8r^2 + 5r + 1)
#   phi_{3,0} = (1-r)^2
#   phi_{3,1} = (1-r)^4 (4r + 1)
#   phi_{3,2} = (1-r)^6 (35r^2 + 18r + 3) / 3
_ONE_MINUS_R = Polynomial([1.0, -1.0])
_WENDLAND = {
    (1, 0): _ONE_MINUS_R,
    (1, 1): _ONE_MINUS_R**3 * Polynomial([1.0, 3.0]),
    (1, 2): _ONE_MINUS_R**5 * Polynomial([1.0, 5.0, 8.0]),
    (3, 0): _ONE_MINUS_R**2,
    (3, 1): _ONE_MINUS_R**4 * Polynomial([1.0, 4.0]),
    (3, 2): _ONE_MINUS_R**6 * Polynomial([3.0, 18.0, 35.0]) / 3.0,
}
_WENDLAND[(2, 0)] = _WENDLAND[(3, 0)]
_WENDLAND[(2, 1)] = _WENDLAND[(3, 1)]
_WENDLAND[(2, 2)] = _WENDLAND[(3, 2)]

FAMILIES = ("gaussian", "wendland", "phs", "phslog")


@dataclass(frozen=True)
class Kernel:
    """A radial kernel ``phi: [0, inf) -> R``.

    Use the factory functions (:func:`gaussian`, :func:`wendland`,
    :func:`phs`, :func:`phslog`) or :func:`parse_kernel` rather than
    building instances by hand.
    """

    family: str
    D: int = 0
    k: int = 0
    p: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family == "wendland":
            if self.D not in (1, 2, 3) or self.k not in (0, 1, 2):
                raise ValueError(
                    f"Wendland kernel needs D in {{1,2,3}}, k in {{0,1,2}}; got D={self.D}, k={self.k}"
                )
        elif self.family == "phs":
            if self.p < 1 or self.p % 2 != 1:
                raise ValueError(f"phs exponent must be odd and >= 1, got {self.p}")
        elif self.family == "phslog":
            if self.p < 2 or self.p % 2 != 0:
                raise ValueError(f"phslog exponent must be even and >= 2, got {self.p}")

    def __str__(self):
        if self.family == "gaussian":
            return "gaussian"
        if self.family == "wendland":
            return f"wendland:{self.D},{self.k}"
        return f"{self.family}:{self.p}"

    @property
    def is_phs(self) -> bool:
        return self.family in ("phs", "phslog")

    @property
    def uses_shape(self) -> bool:
        """False for polyharmonic splines, whose shape parameter is fixed at 1."""
        return not self.is_phs

    @property
    def is_compact(self) -> bool:
        return self.family == "wendland"

    @property
    def is_nonnegative(self) -> bool:
        return self.family in ("gaussian", "wendland")

    @property
    def order(self) -> int:
        """Order of conditional positive definiteness."""
        if self.family in ("gaussian", "wendland"):
            return 0
        if self.family == "phs":
            return (self.p + 1) // 2
        return self.p // 2 + 1

    @property
    def min_degree(self) -> int:
        """Smallest polynomial degree guaranteeing unique solvability (-1 = none)."""
        return self.order - 1

    @cached_property
    def polynomial(self) -> Polynomial:
        """The Wendland polynomial on [0, 1] (Wendland kernels only)."""
        if self.family != "wendland":
            raise TypeError(f"{self} is not piecewise polynomial")
        return _WENDLAND[(self.D, self.k)]

    def __call__(self, r):
        return evaluate(self, r)


def evaluate(kernel: Kernel, r):
    """Evaluate ``phi(r)`` elementwise. Negative radii are rejected."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("kernel argument must be nonnegative")
    fam = kernel.family
    if fam == "gaussian":
        return np.exp(-(r * r))
    if fam == "wendland":
        return np.where(r < 1.0, kernel.polynomial(np.minimum(r, 1.0)), 0.0)
    if fam == "phs":
        return r**kernel.p
    # r^p log r, continuously extended by 0 at r = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        out = r**kernel.p * np.log(r)
    return np.where(r > 0, out, 0.0)


def gaussian() -> Kernel:
    return Kernel("gaussian")


def wendland(D: int, k: int) -> Kernel:
    return Kernel("wendland", D=D, k=k)


def phs(p: int) -> Kernel:
    return Kernel("phs", p=p)


def phslog(p: int) -> Kernel:
    return Kernel("phslog", p=p)


def parse_kernel(text: str) -> Kernel:
    """Parse ``gaussian``, ``wendland:<D>,<k>``, ``phs:<p>`` or ``phslog:<p>``."""
    name, _, arg = text.strip().lower().partition(":")
    try:
        if name == "gaussian" and not arg:
            return gaussian()
        if name == "wendland":
            D, k = (int(v) for v in arg.split(","))
            return wendland(D, k)
        if name == "phs":
            return phs(int(arg))
        if name == "phslog":
            return phslog(int(arg))
    except ValueError as exc:
        raise ValueError(f"bad kernel spec {text!r}: {exc}") from None
    raise ValueError(f"bad kernel spec {text!r}")
