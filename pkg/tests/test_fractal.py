import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from biflab.errors import DegenerateCloud, InsufficientPairs
from biflab.fractal import (PointCloud, box_count, count_boxes, holder_fit,
                            lyapunov_dimension_bound, moran_bounds)


def cantor(depth):
    w = np.array(np.meshgrid(*[[0, 1]] * depth, indexing="ij")).reshape(depth, -1).T
    return (w * 2 * 3.0 ** -np.arange(1, depth + 1)).sum(axis=1)


def test_segment():
    pts = np.random.default_rng(0).random(10000)
    assert box_count(PointCloud(pts)).slope == pytest.approx(1.0, abs=0.05)


def test_square():
    pts = np.random.default_rng(0).random((10000, 2))
    assert box_count(PointCloud(pts)).slope == pytest.approx(2.0, abs=0.07)


def test_cantor_set():
    r = box_count(PointCloud(cantor(12)))
    assert r.slope == pytest.approx(np.log(2) / np.log(3), abs=0.05)
    assert r.band[0] <= r.slope <= r.band[1]


def test_complex_points_become_planar():
    z = np.exp(2j * np.pi * np.linspace(0, 1, 50))
    assert PointCloud(z).dim == 2


def test_coincident_points_are_degenerate():
    with pytest.raises(DegenerateCloud):
        box_count(PointCloud(np.zeros((10, 2))))


def test_user_scales():
    # interval midpoints, plus 0 to pin the grid, keep points off box edges
    pts = np.append(cantor(8) + 0.5 * 3.0 ** -8, 0.0)
    r = box_count(PointCloud(pts), scales=[3.0 ** -k for k in range(1, 7)])
    assert r.counts == tuple(2 ** k for k in range(1, 7))
    assert r.slope == pytest.approx(np.log(2) / np.log(3), abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(10, 200), st.floats(0.01, 0.5), st.integers(0, 10 ** 6))
def test_adding_points_never_lowers_counts(n, eps, seed):
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2))
    more = np.vstack([pts, rng.random((n, 2))])
    origin = np.zeros(2)
    assert count_boxes(more, eps, origin) >= count_boxes(pts, eps, origin)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 100), st.integers(0, 10 ** 6))
def test_counts_are_scale_invariant(c, seed):
    pts = np.random.default_rng(seed).random((300, 2))
    scales = [0.5, 0.25, 0.125, 0.0625]
    a = box_count(PointCloud(pts), scales=scales).counts
    b = box_count(PointCloud(c * pts), scales=[c * s for s in scales]).counts
    # floating point can move a point across a box edge
    assert all(abs(x - y) <= max(2, 0.02 * x) for x, y in zip(a, b))


def test_moran_bounds():
    b = moran_bounds(2, np.log(3), np.log(3), 1)
    assert b.lower_slice == pytest.approx(0.6309, abs=1e-4)
    assert b.lower_projected == pytest.approx(0.6309, abs=1e-4)
    b = moran_bounds(81, np.log(5), np.log(5), 2)
    assert b.lower_projected == pytest.approx(np.log(81) / np.log(5) - 2)
    assert moran_bounds(81, 1e-9, np.log(5), 2).vacuous


def test_lyapunov_dimension_bound():
    assert lyapunov_dimension_bound(np.log(2), np.log(2), 1, 4) == pytest.approx(2)
    assert lyapunov_dimension_bound(np.log(3), np.log(3), 1, 3) == pytest.approx(1)


def test_holder_fit_exact():
    x = np.logspace(-6, -1, 200)
    assert holder_fit(np.column_stack([x, x])).exponent == pytest.approx(1, abs=1e-6)
    assert holder_fit(np.column_stack([x, x ** 0.5])).exponent == pytest.approx(0.5, abs=0.02)


def test_holder_fit_noisy():
    rng = np.random.default_rng(0)
    x = np.logspace(-6, -1, 2000)
    y = x ** 0.5 * (1 + 0.2 * rng.uniform(-1, 1, len(x)))
    assert holder_fit(np.column_stack([x, y])).exponent >= 0.45


def test_holder_fit_needs_pairs():
    with pytest.raises(InsufficientPairs):
        holder_fit(np.ones((50, 2)))
