"""Radial basis function quadrature on boxes: weights, stability and least-squares rules."""
from .kernels import Kernel, gaussian, parse_kernel, phs, phslog, wendland
from .pointsets import Domain, PointSet, equidistant, halton, random, unit_interval, unit_square
from .quadrature import QuadratureRule, apply, interpolatory_weights, stability_report
from .rbfsystem import RbfSpace, ShapePolicy, make_space

__version__ = "0.1.0"

__all__ = [
    "Kernel",
    "gaussian",
    "wendland",
    "phs",
    "phslog",
    "parse_kernel",
    "Domain",
    "PointSet",
    "equidistant",
    "halton",
    "random",
    "unit_interval",
    "unit_square",
    "QuadratureRule",
    "apply",
    "interpolatory_weights",
    "stability_report",
    "RbfSpace",
    "ShapePolicy",
    "make_space",
]
