import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hjlb.initial_data import (SubgradientSet, gradient_stats_on_ball, make_constant_datum, make_datum,
                               make_sampled_datum, numeric_subgradient_1d, theta_on_ball)

cone = make_datum("cone", 1)


@pytest.mark.parametrize("x, lo, hi", [(0.5, -1.0, -1.0), (-0.5, 1.0, 1.0), (2.0, 0.0, 0.0), (1.0, -1.0, 0.0)])
def test_cone_subgradients(x, lo, hi):
    s = cone.subgradient_set(x)
    assert not s.is_empty
    assert s.min_norm == pytest.approx(min(abs(lo), abs(hi)) if lo * hi > 0 or lo == hi else 0.0)
    assert s.max_norm == pytest.approx(max(abs(lo), abs(hi)))


def test_cone_apex_empty():
    s = cone.subgradient_set(0.0)
    assert s.is_empty
    assert s.min_norm == np.inf


def test_cone_values():
    assert cone(np.array([0.0, 0.25, -0.5, 2.0])) == pytest.approx([1.0, 0.75, 0.5, 0.0])


@pytest.mark.parametrize("r, expected", [(0.9, 1.0), (0.5, 1.0), (1.5, None)])
def test_theta_cone(r, expected):
    th = theta_on_ball(cone, 0.0, r)
    assert th == expected if expected is None else th == pytest.approx(expected)


def test_theta_zero_datum():
    assert theta_on_ball(make_constant_datum(0.0), 0.0, 1.0) is None


@pytest.mark.parametrize("radius, inf, sup", [(0.5, 1.0, 1.0), (1.2, 0.0, 1.0)])
def test_gradient_stats_cone(radius, inf, sup):
    g = gradient_stats_on_ball(cone, 0.0, radius, 0.0)
    assert (g.inf_norm, g.sup_norm) == pytest.approx((inf, sup))


def test_gradient_stats_zero():
    g = gradient_stats_on_ball(make_constant_datum(0.0), 0.0, 1.0, 0.0)
    assert (g.inf_norm, g.sup_norm) == (0.0, 0.0)


def _tent(dx):
    x = np.arange(-1.0, 1.0 + dx / 2, dx)
    return x, 1.0 - np.abs(x)


def test_numeric_subgradient_slope():
    x, v = _tent(1e-3)
    i = int(np.argmin(np.abs(x - 0.5)))
    s = numeric_subgradient_1d(v, i, 1e-3)
    assert s.is_singleton
    assert s.min_norm_element()[0] == pytest.approx(-1.0, abs=1e-9)


def test_numeric_subgradient_apex_empty():
    x, v = _tent(1e-3)
    assert numeric_subgradient_1d(v, int(np.argmin(np.abs(x))), 1e-3).is_empty


def test_numeric_subgradient_smooth_min():
    dx = 1e-3
    x = np.arange(-1.0, 1.0 + dx / 2, dx)
    s = numeric_subgradient_1d(x ** 2, int(np.argmin(np.abs(x))), dx)
    assert s.min_norm <= dx


def test_convex_kink_gives_segment():
    dx = 1e-2
    x = np.arange(-1.0, 1.0 + dx / 2, dx)
    s = numeric_subgradient_1d(np.abs(x), int(np.argmin(np.abs(x))), dx)
    assert s.min_norm == pytest.approx(0.0)
    assert s.max_norm == pytest.approx(1.0)


def test_sampled_datum_matches_cone():
    grid = np.linspace(-2, 2, 401)
    d = make_sampled_datum(grid, cone(grid))
    assert d(np.array([0.3, -1.7])) == pytest.approx(cone(np.array([0.3, -1.7])))
    assert theta_on_ball(d, 0.0, 0.9) == pytest.approx(1.0)


def test_sampled_rejects_short():
    with pytest.raises(ValueError):
        make_sampled_datum([0.0, 1.0], [0.0, 1.0])


@settings(max_examples=60, deadline=None)
@given(st.floats(-0.99, 0.99).filter(lambda v: abs(v) > 1e-6), st.floats(-0.5, 0.5))
def test_segment_distance(a, q):
    s = SubgradientSet.segment(np.array([min(a, 0.0)]), np.array([max(a, 0.0)]))
    lo, hi = min(a, 0.0), max(a, 0.0)
    assert s.distance(np.array([q])) == pytest.approx(max(lo - q, q - hi, 0.0), abs=1e-12)
