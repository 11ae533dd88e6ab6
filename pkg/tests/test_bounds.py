import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hjlb.bounds import (BoundInputs, DependenceDomain, bounds_table, compare_F, in_domain_D, in_domain_E,
                         lower_L, lower_l, lower_ley, lower_sharpened, radius_R, radius_R_eps, special_M, special_m,
                         two_sided_bounds, vanish_time_L, vanish_time_l)
from hjlb.hamiltonians import StructuralConstants as SC
from hjlb.initial_data import GradientStats

mp.mp.dps = 40
B1 = BoundInputs(SC(c1=1.0, beta=1), 1.0)
TRANSPORT = SC(c1=1.0, a2=1.0, k3=1.0)


@pytest.mark.parametrize("c, x, t, expected", [
    (SC(b2=1.0), 0.0, 0.5, 0.5),
    (SC(a2=1.0), 1.0, math.log(2), 1.0),
    (SC(a2=2.0, b2=3.0), 5.0, 0.0, 0.0),
])
def test_radius_R(c, x, t, expected):
    assert radius_R(c, x, t) == pytest.approx(expected, abs=1e-15)


def test_radius_R_eps():
    assert radius_R_eps(SC(b2=1.0), 0.5, 0.0, 1.0) == pytest.approx(1.5)
    assert radius_R_eps(SC(a2=1.0), 1.0, 0.0, math.log(2)) == pytest.approx(1.0)
    c = SC(a2=0.7, b2=0.2)
    assert radius_R_eps(c, 0.0, 0.4, 0.3) == pytest.approx(radius_R(c, 0.4, 0.3))


def test_domain_examples():
    tr = DependenceDomain(0.0, 1.0, TRANSPORT)
    assert in_domain_E(tr, 0.5, 0.5)
    assert in_domain_D(tr, 0.3, 0.2)
    assert in_domain_E(tr, 0.3, 0.2)
    eik = DependenceDomain(0.0, 1.0, SC(b2=1.0, k3=1.0))
    assert not in_domain_E(eik, 0.5, 0.6)
    assert in_domain_E(eik, 0.99, 1e-12)
    assert in_domain_D(tr, 0.0, 0.0)


def test_transport_E_is_shrinking_ball():
    tr = DependenceDomain(0.0, 1.0, TRANSPORT)
    for t in (0.1, 0.5, 1.0):
        edge = math.exp(-t)
        assert in_domain_E(tr, edge * (1 - 1e-9), t)
        assert not in_domain_E(tr, edge * (1 + 1e-9), t)


def test_l_examples():
    assert lower_l(B1, 0.0) == 1.0
    assert lower_l(B1, 0.1) == pytest.approx(float(mp.sqrt(mp.e ** -0.25 - 0.2)), abs=1e-14)
    assert lower_l(B1, 0.1) == pytest.approx(0.76079, abs=1e-5)


@pytest.mark.parametrize("t", [0.0, 0.1, 0.7, 2.0])
def test_beta_zero_bounds_coincide(t):
    inp = BoundInputs(SC(c1=1.3, k3=0.4), 2.0)
    ref = 2.0 * math.exp(-1.7 * t)
    assert lower_l(inp, t) == pytest.approx(ref)
    assert lower_L(inp, t) == pytest.approx(ref)
    assert lower_sharpened(inp, t) == pytest.approx(ref)


def test_L_examples():
    assert lower_L(B1, 0.1) == pytest.approx(float(2 * mp.e ** -0.1 - 1), abs=1e-14)
    inp = BoundInputs(TRANSPORT, 1.0)
    for t in (0.1, 0.3):
        assert lower_L(inp, t) == pytest.approx(math.exp(-2 * t), abs=1e-15)


def test_ley():
    inp = BoundInputs(SC(c1=1.0, beta=1), 1.0, horizon_T=0.1, t0=0.05)
    oracle = mp.e ** mp.mpf(-0.0625) * mp.sqrt(1 - mp.mpf("0.1") * mp.e ** mp.mpf(0.25))
    assert lower_ley(inp, 0.05) == pytest.approx(float(oracle), abs=1e-14)
    b0 = BoundInputs(SC(c1=2.0), 1.5, t0=0.5)
    assert lower_ley(b0, 0.3) == pytest.approx(1.5 * math.exp(-2.5 * 0.3))
    assert lower_ley(BoundInputs(SC(), 1.5, t0=0.5), 0.3) == 1.5


def test_sharpened():
    oracle = mp.sqrt(mp.e ** -0.25 - mp.mpf(4) / 5 * (1 - mp.e ** -0.25))
    v = lower_sharpened(B1, 0.1)
    assert v == pytest.approx(float(oracle), abs=1e-14)
    assert v >= lower_l(B1, 0.1)
    assert lower_sharpened(B1, 0.0) == 1.0


def test_two_sided():
    s = GradientStats(0.3, 2.0, 1.0, 0.0, False)
    assert two_sided_bounds(s, SC(), 0.5) == (0.3, 2.0)
    one = GradientStats(1.0, 1.0, 1.0, 0.0, False)
    lo, hi = two_sided_bounds(one, TRANSPORT, 0.4)
    assert (lo, hi) == pytest.approx((math.exp(-0.8), math.exp(0.8)))
    assert two_sided_bounds(one, SC(c1=1.0, beta=1), 0.1)[0] == pytest.approx(lower_L(B1, 0.1))


def test_special_bounds():
    inp = BoundInputs(SC(c1=1.0, beta=1, k3=1.0, lam=-1.0), 1.0)
    assert special_M(inp, 0.0) == special_m(inp, 0.0) == 1.0
    assert special_M(inp, 0.2) == pytest.approx(0.8)
    assert special_m(inp, 0.2) == pytest.approx(float(1 - (mp.e ** 0.2 - 1)))
    assert special_M(inp, 0.2) > special_m(inp, 0.2)
    b0 = BoundInputs(SC(c1=1.0, k3=0.5, lam=0.5), 1.0)
    assert special_M(b0, 0.3) == pytest.approx(math.exp(-0.45))
    assert special_m(b0, 0.3) == pytest.approx(math.exp(-0.45))


def test_vanish_times():
    assert vanish_time_L(B1) == pytest.approx(math.log(2), abs=1e-12)
    tl = vanish_time_l(B1)
    root = mp.findroot(lambda s: mp.e ** (-2.5 * s) - 2 * s, 0.26)
    assert tl == pytest.approx(float(root), abs=1e-12)
    assert lower_l(B1, tl) is not None and lower_l(B1, tl) <= 1e-6
    assert vanish_time_l(BoundInputs(SC(c1=1.0), 1.0)) is None
    assert vanish_time_L(BoundInputs(SC(c1=1.0), 1.0)) is None


def test_compare_F():
    F = compare_F(B1, 0.1)
    oracle = (2 * mp.e ** -0.1 - 1) ** 2 - (mp.e ** -0.25 - 0.2)
    assert F == pytest.approx(float(oracle), abs=1e-14)
    assert F > 0
    assert compare_F(B1, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert compare_F(BoundInputs(SC(c1=1.0, k3=1.0), 1.0), 0.4) == pytest.approx(0.0, abs=1e-15)


def test_table_keys():
    rows = bounds_table(BoundInputs(SC(c1=1.0, beta=1, k3=1.0, lam=1.0), 1.0), [0.0, 0.1])
    assert set(rows[0]) == {"t", "l", "L", "sharpened", "ley", "M", "m", "F"}
    assert rows[0]["M"] == 1.0 and rows[0]["ley"] is None


def test_bad_inputs():
    with pytest.raises(ValueError):
        BoundInputs(SC(), 0.0)
    with pytest.raises(ValueError):
        lower_L(B1, -0.1)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 3), st.floats(0.01, 10), st.floats(0, 10), st.floats(0, 1))
def test_dominance_beta_one(theta, c1, k3, frac):
    inp = BoundInputs(SC(c1=c1, beta=1, k3=k3), theta)
    t = frac * vanish_time_l(inp)
    l = lower_l(inp, t)
    assert lower_L(inp, t) >= l - 1e-12
    assert lower_sharpened(inp, t) >= l - 1e-12


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 3), st.floats(0, 3), st.floats(0.1, 3), st.floats(-2, 2), st.floats(0, 1))
def test_D_inside_E(a2, b2, r, x, t):
    d = DependenceDomain(0.2, r, SC(a2=a2, b2=b2))
    if in_domain_D(d, x, t):
        assert in_domain_E(d, x, t)
