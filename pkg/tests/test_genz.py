import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate
from scipy.special import erf

from rbfquad.genz import (
    FAMILIES,
    GenzFunction,
    add_noise,
    closed_form_integral,
    evaluate,
    oracle_integral,
    parse_integrand,
    random_genz,
    reference_integral,
)

unit = st.floats(0, 1)


def test_examples():
    g = GenzFunction("oscillatory", [0.0, 0.0], [0.3, 0.9])
    np.testing.assert_allclose(g(np.random.default_rng(0).random((5, 2))), np.cos(2 * np.pi * 0.3))
    assert reference_integral(g) == pytest.approx(np.cos(2 * np.pi * 0.3), rel=1e-15)
    assert evaluate(GenzFunction("gaussian_peak", [0.7, 0.2], [0.4, 0.1]), [0.4, 0.1])[0] == 1.0
    assert evaluate(GenzFunction("product_peak", [1, 1], [0, 0]), [0.0, 0.0])[0] == 1.0


def test_gaussian_peak_example():
    g = GenzFunction("gaussian_peak", [1.0, 1.0], [0.0, 0.0])
    assert reference_integral(g) == pytest.approx((np.sqrt(np.pi) / 2 * erf(1.0)) ** 2, rel=1e-15)
    assert reference_integral(g) == pytest.approx(0.557746, abs=1e-6)


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("q", [1, 2])
def test_closed_form_vs_oracle(family, q):
    for seed in range(50):
        g = random_genz(family, q, seed)
        assert closed_form_integral(g) == pytest.approx(oracle_integral(g), abs=1e-10)


@pytest.mark.parametrize("family", FAMILIES)
def test_closed_form_vs_scipy(family):
    """A second, adaptive route for a few draws."""
    for seed in (3, 17):
        g = random_genz(family, 2, seed)
        ref = integrate.dblquad(lambda y, x: float(g([x, y])[0]), 0, 1, 0, 1, epsabs=1e-13, epsrel=1e-13)[0]
        assert closed_form_integral(g) == pytest.approx(ref, abs=1e-11)


def test_corner_peak_small_a():
    g = GenzFunction("corner_peak", [1e-9, 2e-9], [0.5, 0.5])
    assert closed_form_integral(g) == pytest.approx(1 - 3 * 1.5e-9, rel=1e-15)


def test_gaussian_peak_zero_a():
    assert closed_form_integral(GenzFunction("gaussian_peak", [0.0, 0.5], [0.2, 0.3])) == pytest.approx(
        closed_form_integral(GenzFunction("gaussian_peak", [0.5], [0.3]))
    )


def test_reference_check():
    g = random_genz("oscillatory", 2, 1)
    assert reference_integral(g, check=True) == closed_form_integral(g)


def test_random_genz_seeds():
    gs = [random_genz("oscillatory", 2, s) for s in (0, 1, 2)]
    assert len({(g.a, g.b) for g in gs}) == 3
    for g in gs:
        assert all(0 <= v <= 1 for v in g.a + g.b)
    assert random_genz("g1", 2, 5) == random_genz("oscillatory", 2, 5)


def test_noise():
    v = np.linspace(0, 1, 1000)
    np.testing.assert_array_equal(add_noise(v, 0.0, 3), v)
    n = add_noise(v, 1e-2, 3)
    assert np.abs(n - v).max() <= 1e-2
    assert np.abs(n - v).max() > 0.9e-2
    np.testing.assert_array_equal(n, add_noise(v, 1e-2, 3))
    assert not np.array_equal(n, add_noise(v, 1e-2, 4))
    with pytest.raises(ValueError):
        add_noise(v, -1.0, 0)


def test_parse():
    assert parse_integrand("genz:oscillatory:4") == random_genz("oscillatory", 2, 4)
    g = parse_integrand("genz:corner_peak:a=0.5,0.25:b=0.1,0.2")
    assert g.a == (0.5, 0.25) and g.family == "corner_peak"
    assert parse_integrand(str(g)) == g
    for bad in ("genz", "poly:1:2", "genz:oscillatory:c=1:b=2", "genz:nope:1"):
        with pytest.raises(ValueError):
            parse_integrand(bad)


def test_invalid():
    with pytest.raises(ValueError):
        GenzFunction("oscillatory", [1, 2], [1])
    with pytest.raises(ValueError):
        GenzFunction("oscillatory", [1, 2, 3], [1, 2, 3])


@given(a=st.tuples(unit, unit), b=st.tuples(unit, unit), family=st.sampled_from(FAMILIES))
def test_bounded(a, b, family):
    x = np.stack(np.meshgrid(np.linspace(0, 1, 41), np.linspace(0, 1, 41)), -1).reshape(-1, 2)
    vals = GenzFunction(family, a, b)(x)
    assert np.all(np.isfinite(vals))
