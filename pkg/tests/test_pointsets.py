from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rbfquad.pointsets import (
    Domain,
    PointSet,
    equidistant,
    halton,
    make_rng,
    max_fill_distance,
    min_distance,
    nearest_neighbor_distances,
    parse_pointset,
    random,
    unit_interval,
    unit_square,
)


def van_der_corput(j, base):
    """Exact radical inverse with rational arithmetic."""
    out, f = Fraction(0), Fraction(1, base)
    while j:
        j, digit = divmod(j, base)
        out += digit * f
        f /= base
    return out


def pts1d(*xs):
    return PointSet(unit_interval(), np.array(xs, dtype=float))


def test_equidistant_examples():
    np.testing.assert_array_equal(equidistant(unit_interval(), 3).points[:, 0], [0, 0.5, 1])
    corners = equidistant(unit_square(), 2).points
    np.testing.assert_array_equal(corners, [[0, 0], [1, 0], [0, 1], [1, 1]])
    np.testing.assert_allclose(np.diff(equidistant(unit_interval(), 101).points[:, 0]), 0.01, atol=1e-15)


def test_halton_examples():
    np.testing.assert_array_equal(halton(unit_interval(), 3).points[:, 0], [0.5, 0.25, 0.75])
    np.testing.assert_allclose(halton(unit_square(), 1).points, [[0.5, 1 / 3]], rtol=1e-15)
    assert halton(Domain((0.0,), (2.0,)), 1).points[0, 0] == 1.0


@pytest.mark.parametrize("skip", [0, 7, 100])
def test_halton_matches_exact_radical_inverse(skip):
    ps = halton(unit_square(), 64, skip=skip)
    for i, p in enumerate(ps.points):
        j = skip + i + 1
        assert p[0] == pytest.approx(float(van_der_corput(j, 2)), abs=1e-15)
        assert p[1] == pytest.approx(float(van_der_corput(j, 3)), abs=1e-15)


def test_random_examples():
    a = random(unit_square(), 5, 42)
    assert len(np.unique(a.points, axis=0)) == 5
    assert np.all(unit_square().contains(a.points))
    np.testing.assert_array_equal(a.points, random(unit_square(), 5, 42).points)
    np.testing.assert_array_equal(random(unit_square(), 3, 42).points, a.points[:3])


def test_rng_is_philox():
    assert isinstance(make_rng(3).bit_generator, np.random.Philox)
    assert make_rng(3).random() == make_rng(3).random()


@pytest.mark.parametrize(
    "xs, h_min, h_max, nn",
    [((0, 0.5, 1), 0.5, 0.5, [0.5, 0.5, 0.5]), ((0, 0.1, 0.7), 0.1, 0.6, [0.1, 0.1, 0.6])],
)
def test_distances(xs, h_min, h_max, nn):
    ps = pts1d(*xs)
    assert min_distance(ps) == pytest.approx(h_min)
    assert max_fill_distance(ps) == pytest.approx(h_max)
    np.testing.assert_allclose(nearest_neighbor_distances(ps), nn)


def test_distances_corners():
    ps = equidistant(unit_square(), 2)
    assert min_distance(ps) == 1.0
    np.testing.assert_array_equal(nearest_neighbor_distances(ps), [1, 1, 1, 1])


@pytest.mark.parametrize("n", [2, 5, 50])
def test_equidistant_fill(n):
    assert max_fill_distance(equidistant(unit_interval(), n)) == pytest.approx(1 / (n - 1))


def test_pointset_validation():
    with pytest.raises(ValueError):
        pts1d(0.0, 0.0)
    with pytest.raises(ValueError):
        pts1d(0.0, 1.5)
    with pytest.raises(ValueError):
        PointSet(unit_square(), np.zeros((3, 1)))
    with pytest.raises(ValueError):
        Domain((1.0,), (0.0,))


@pytest.mark.parametrize("text, n", [("equid:5", 25), ("halton:17", 17), ("halton:10:3", 10), ("random:8:1", 8)])
def test_parse(text, n):
    assert len(parse_pointset(text, unit_square())) == n


@pytest.mark.parametrize("text", ["grid:4", "halton", "random:5", "equid:x"])
def test_parse_rejects(text):
    with pytest.raises(ValueError):
        parse_pointset(text, unit_square())


@given(M=st.integers(1, 200), extra=st.integers(1, 200), dim=st.sampled_from([1, 2]))
def test_halton_prefix(M, extra, dim):
    dom = unit_interval() if dim == 1 else unit_square()
    np.testing.assert_array_equal(halton(dom, M).points, halton(dom, M + extra).points[:M])


@given(n=st.integers(2, 300), seed=st.integers(0, 2**32), dim=st.sampled_from([1, 2]))
def test_distance_order_and_containment(n, seed, dim):
    dom = Domain((-1.0,) * dim, (2.0,) * dim)
    for ps in (random(dom, n, seed), halton(dom, n)):
        assert np.all(dom.contains(ps.points))
        assert min_distance(ps) <= max_fill_distance(ps)
