import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import Polynomial

from rbfquad.kernels import Kernel, evaluate, gaussian, parse_kernel, phs, phslog, wendland

WENDLAND_PARAMS = [(D, k) for D in (1, 2, 3) for k in (0, 1, 2)]


def wendland_oracle(D, k):
    """Wendland's construction: k integrations t*phi(t) from r to 1 of (1-r)^l, l = floor(D/2)+k+1."""
    p = Polynomial([1.0, -1.0]) ** (D // 2 + k + 1)
    t = Polynomial([0.0, 1.0])
    for _ in range(k):
        anti = (t * p).integ()
        p = anti(1.0) - anti
    return p / p(0.0)


@pytest.mark.parametrize(
    "kernel, r, expected",
    [
        (gaussian(), 0.0, 1.0),
        (phs(3), 2.0, 8.0),
        (wendland(1, 1), 0.5, 0.3125),
        (phs(1), 0.75, 0.75),
        (phslog(2), np.e, np.e**2),
    ],
)
def test_examples(kernel, r, expected):
    assert evaluate(kernel, r) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("D, k", WENDLAND_PARAMS)
def test_wendland_matches_construction(D, k):
    r = np.linspace(0, 1, 201)
    np.testing.assert_allclose(wendland(D, k)(r), wendland_oracle(D, k)(r), atol=1e-12)  # power-basis roundoff


@pytest.mark.parametrize("D, k", WENDLAND_PARAMS)
def test_wendland_support_and_continuity(D, k):
    ker = wendland(D, k)
    assert ker(0.0) == 1.0
    assert ker(1.5) == 0.0
    assert np.all(ker(np.linspace(1, 5, 50)) == 0.0)
    assert abs(ker(1 - 1e-15)) < 1e-14


@pytest.mark.parametrize(
    "kernel, order",
    [(gaussian(), 0), (wendland(2, 1), 0), (phs(1), 1), (phs(3), 2), (phs(5), 3), (phslog(2), 2), (phslog(4), 3)],
)
def test_order(kernel, order):
    assert kernel.order == order
    assert kernel.min_degree == order - 1


def test_phslog_at_origin():
    assert abs(evaluate(phslog(2), 1e-12)) < 1e-10
    assert evaluate(phslog(2), 0.0) == 0.0


@pytest.mark.parametrize("bad", [dict(family="phs", p=2), dict(family="phs", p=0), dict(family="phslog", p=3),
                                 dict(family="wendland", D=4, k=1), dict(family="wendland", D=1, k=3),
                                 dict(family="multiquadric")])
def test_invalid_parameters(bad):
    with pytest.raises(ValueError):
        Kernel(**bad)


def test_negative_radius_rejected():
    with pytest.raises(ValueError):
        evaluate(gaussian(), -0.1)


@pytest.mark.parametrize("text", ["gaussian", "wendland:2,1", "phs:5", "phslog:2"])
def test_parse_roundtrip(text):
    assert str(parse_kernel(text)) == text


@pytest.mark.parametrize("text", ["gauss", "phs", "phs:x", "wendland:1", ""])
def test_parse_rejects(text):
    with pytest.raises(ValueError):
        parse_kernel(text)


@given(r=st.floats(0, 1e3, allow_nan=False), D=st.sampled_from([1, 2, 3]), k=st.sampled_from([0, 1, 2]))
def test_wendland_bounded(r, D, k):
    v = float(wendland(D, k)(r))
    assert -1e-15 <= v <= 1.0


@given(r=st.floats(0, 50, allow_nan=False), text=st.sampled_from(["gaussian", "phs:1", "phs:7", "phslog:2", "phslog:4"]))
def test_finite(r, text):
    assert np.isfinite(parse_kernel(text)(r))
