import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rbfquad.pointsets import Domain, PointSet, equidistant, halton, random, unit_interval, unit_square
from rbfquad.polybasis import (
    DiscreteInnerProduct,
    UnisolvencyError,
    build_dops,
    check_unisolvent,
    continuous_gram,
    discrete_ip,
    dop_gram,
    monomial_basis,
    poly_moments,
)


@pytest.mark.parametrize("D, d, K", [(2, 1, 3), (1, 2, 3), (2, 2, 6), (2, 5, 21), (1, -1, 0)])
def test_monomial_count(D, d, K):
    assert len(monomial_basis(D, d)) == K


def test_monomial_values():
    vals = monomial_basis(2, 1)(np.array([[2.0, 3.0]]))
    np.testing.assert_array_equal(vals, [[1, 2, 3]])


def test_discrete_ip_examples():
    ip = DiscreteInnerProduct(halton(unit_interval(), 17))
    assert discrete_ip(ip, lambda x: np.ones(len(x)), lambda x: np.ones(len(x))) == pytest.approx(1.0)
    ip = DiscreteInnerProduct(PointSet(unit_interval(), np.array([0.0, 1.0])))
    assert discrete_ip(ip, [1, 1], [0, 1]) == pytest.approx(0.5)  # (1/2)(0 + 1)
    ip = DiscreteInnerProduct(PointSet(unit_interval(), np.array([0.0, 0.5, 1.0])))
    assert ip(lambda x: x[:, 0], lambda x: x[:, 0]) == pytest.approx(5 / 12)


def test_dop_examples():
    x = np.linspace(0, 1, 7)[:, None]
    np.testing.assert_allclose(build_dops(halton(unit_interval(), 9), 0)(x), 1.0)
    p = build_dops(PointSet(unit_interval(), np.array([0.0, 1.0])), 1)
    np.testing.assert_allclose(p(x)[:, 1], 2 * x[:, 0] - 1, atol=1e-14)


def test_dop_constant_scales_with_volume():
    dom = Domain((0.0, 0.0), (2.0, 3.0))
    p = build_dops(halton(dom, 40), 2)
    np.testing.assert_allclose(p(dom.center[None, :])[0, 0], 6**-0.5)


@pytest.mark.parametrize("dim, d", [(1, 3), (1, 5), (2, 3), (2, 5)])
def test_gram_identity(dim, d):
    ps = halton(unit_interval() if dim == 1 else unit_square(), 50 if d <= 3 else 200)
    G = dop_gram(ps, build_dops(ps, d))
    assert np.abs(G - np.eye(len(G))).max() <= 1e-10


def test_leading_coefficient_positive():
    p = build_dops(halton(unit_square(), 60), 3)
    for k in range(len(p)):
        assert p.coef[k, k] > 0
        np.testing.assert_array_equal(p.coef[k, k + 1 :], 0)


def test_unisolvency_rejected():
    collinear = PointSet(unit_square(), np.column_stack([np.linspace(0, 1, 5)] * 2))
    with pytest.raises(UnisolvencyError):
        build_dops(collinear, 1)
    with pytest.raises(UnisolvencyError):
        check_unisolvent(np.ones((2, 3)))


def test_poly_moments_examples():
    np.testing.assert_allclose(poly_moments(monomial_basis(2, 0), unit_square()), [1.0])
    np.testing.assert_allclose(poly_moments(monomial_basis(2, 1), unit_square()), [1.0, 0.5, 0.5])
    m = poly_moments(monomial_basis(1, 2), Domain((0.0,), (2.0,)))
    assert m[2] == pytest.approx(8 / 3)


@pytest.mark.parametrize("dim", [1, 2])
def test_continuous_gram_trend(dim):
    """Continuous Gram of the discrete orthonormal basis approaches the identity as N grows."""
    dom = unit_interval() if dim == 1 else unit_square()
    dev = []
    for N in (64, 4096):
        p = build_dops(halton(dom, N), 3)
        dev.append(np.abs(continuous_gram(p, dom) - np.eye(len(p))))
    exact = dev[0] <= 1e-12  # the constant is orthonormal for every N
    assert np.all(dev[1][~exact] < dev[0][~exact])
    assert np.all(dev[1][exact] <= 1e-12)


@given(n=st.integers(30, 120), seed=st.integers(0, 10**6), d=st.integers(0, 3))
def test_poly_moments_against_dops(n, seed, d):
    """First DOP is |Omega|^-1/2, so its moment is |Omega|^1/2; higher DOPs integrate like the sampled mean."""
    dom = Domain((-1.0, 0.0), (1.0, 0.5))
    p = build_dops(random(dom, n, seed), d)
    m = poly_moments(p, dom)
    assert m[0] == pytest.approx(dom.volume**0.5)
    G = continuous_gram(p, dom)
    np.testing.assert_allclose(m, G[0] * dom.volume**0.5, atol=1e-12)


@given(n=st.integers(3, 40), d=st.integers(0, 2))
def test_dops_equidistant_orthonormal(n, d):
    ps = equidistant(unit_interval(), n)
    if n <= d:
        return
    G = dop_gram(ps, build_dops(ps, d))
    assert np.abs(G - np.eye(d + 1)).max() <= 1e-10
