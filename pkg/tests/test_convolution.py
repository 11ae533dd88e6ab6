import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from hjlb.convolution import (ConvolutionParams, FieldSlice, SpaceTimeBlock, admissible_epsilon, boundary_margin,
                              check_initial_gap, gamma_min, inf_convolution_block, inf_convolution_spacetime,
                              inf_convolution_spatial, subsolution_residual, sup_convolution_spacetime,
                              sup_convolution_spatial)
from hjlb.hamiltonians import StructuralConstants as SC, make_builtin
from hjlb.initial_data import make_constant_datum, make_datum
from hjlb.solver import ClosedFormOracle, oracle_eval

cone = make_datum("cone", 1)


@pytest.mark.parametrize("c, expected", [(SC(c1=1.0, a2=1.0, k3=1.0), 3.0), (SC(c1=1.0, beta=1), 2.5), (SC(), 0.0)])
def test_gamma_min(c, expected):
    assert gamma_min(c) == expected


def test_constant_field_unchanged():
    x = np.linspace(-1, 1, 101)
    f = FieldSlice(x, np.full_like(x, 2.5), 0.3)
    p = ConvolutionParams(0.1, 1.0)
    assert np.allclose(inf_convolution_spatial(f, p).values, 2.5)
    assert np.allclose(sup_convolution_spatial(f, p).values, 2.5)


def _brute(x, u, xt, w, lo, hi):
    res = minimize_scalar(lambda y: np.interp(y, x, u) + w * (xt - y) ** 2, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    grid = np.linspace(lo, hi, 200_001)
    return min(res.fun, float(np.min(np.interp(grid, x, u) + w * (xt - grid) ** 2)))


def test_abs_example():
    x = np.linspace(-1, 1, 2001)
    out = inf_convolution_spatial(FieldSlice(x, np.abs(x)), ConvolutionParams(0.2, 5.0))
    assert out.values[-1] == pytest.approx(0.99, abs=1e-12)
    assert out.argmin[-1] == pytest.approx(1 - 0.02, abs=1e-12)


@pytest.mark.parametrize("xt", [-0.7, -0.1, 0.0, 0.33, 0.95])
@pytest.mark.parametrize("t", [0.0, 0.4])
def test_matches_brute_force(xt, t):
    x = np.linspace(-1, 1, 41)
    u = np.sin(3 * x) + 0.5 * np.abs(x - 0.2)
    p = ConvolutionParams(0.3, 2.0)
    out = inf_convolution_spatial(FieldSlice(x, u, t), p)
    i = int(np.argmin(np.abs(out.x - xt)))
    w = math.exp(-p.gamma * t) / p.epsilon ** 2
    assert out.values[i] == pytest.approx(_brute(x, u, out.x[i], w, -1, 1), abs=1e-9)


def test_sup_is_negated_inf():
    x = np.linspace(-1, 1, 201)
    u = np.cos(2 * x)
    p = ConvolutionParams(0.2, 0.0)
    a = sup_convolution_spatial(FieldSlice(x, u), p).values
    b = -inf_convolution_spatial(FieldSlice(x, -u), p).values
    assert np.allclose(a, b)


def test_tent_interior_gap():
    x = np.linspace(-0.9, 0.9, 1801)
    eps = 0.1
    out = inf_convolution_spatial(FieldSlice(x, cone(x)), ConvolutionParams(eps, 0.0, 0.0, 0.9))
    mask = (np.abs(x) > 0.1) & (np.abs(x) < 0.8)
    assert np.allclose(out.values[mask] - cone(x)[mask], -eps ** 2 / 4, atol=1e-12)


def test_spacetime_constant_identity():
    x = np.linspace(-1, 1, 21)
    ts = np.linspace(0, 1, 5)
    blk = SpaceTimeBlock(x, ts, np.full((5, 21), 1.5))
    out = inf_convolution_spacetime(blk, ConvolutionParams(0.2, 1.0, alpha=0.1))
    assert np.allclose(out.values, 1.5)


def test_spacetime_reduces_to_spatial():
    x = np.linspace(-1, 1, 201)
    ts = np.linspace(0, 0.5, 6)
    blk = SpaceTimeBlock(x, ts, np.tile(np.abs(x), (6, 1)))
    p = ConvolutionParams(0.2, 1.0, alpha=1e-3)
    out = inf_convolution_spacetime(blk, p)
    for k, t in enumerate(ts):
        ref = inf_convolution_spatial(FieldSlice(x, np.abs(x), t), p)
        assert np.allclose(out.values[k], ref.values, atol=1e-9)
        assert np.all(out.argmin_s[k] == t)


def test_spacetime_large_alpha_lower_face():
    x = np.linspace(-1, 1, 21)
    ts = np.linspace(0, 1, 11)
    blk = SpaceTimeBlock(x, ts, np.tile(ts[:, None], (1, 21)))
    out = inf_convolution_spacetime(blk, ConvolutionParams(0.5, 0.0, alpha=100.0))
    assert np.all(out.argmin_s == 0.0)
    sup = sup_convolution_spacetime(blk, ConvolutionParams(0.5, 0.0, alpha=100.0))
    assert np.all(sup.argmin_s == 1.0)


def test_spacetime_needs_alpha():
    blk = SpaceTimeBlock(np.linspace(0, 1, 3), np.array([0.0, 1.0]), np.zeros((2, 3)))
    with pytest.raises(ValueError):
        inf_convolution_spacetime(blk, ConvolutionParams(0.1, 0.0))


def test_margin_helpers():
    p = ConvolutionParams(0.1, 2.0)
    assert boundary_margin(1.5, p, 0.5) == pytest.approx(math.exp(0.5) * 0.15)
    assert admissible_epsilon(0.0, 0.1, 1.0, 1.0) == math.inf


@pytest.mark.parametrize("eps", [0.05, 0.1, 0.2])
def test_initial_gap(eps):
    rep = check_initial_gap(cone, 1.0, eps, 0.0, 0.9)
    assert rep.passed
    assert rep["initial_gap"].lhs == pytest.approx(-eps ** 2 / 4, abs=1e-12)


def test_initial_gap_precondition():
    with pytest.raises(ValueError):
        check_initial_gap(make_constant_datum(0.0), None, 0.1)
    with pytest.raises(ValueError):
        check_initial_gap(cone, 2.0, 0.1, 0.0, 0.9)


def _block(kind, n=400, levels=81):
    o = ClosedFormOracle(kind, cone)
    x = np.linspace(-1, 1, n + 1)
    ts = np.linspace(0, 0.5, levels)
    return SpaceTimeBlock(x, ts, np.array([oracle_eval(o, x, t) for t in ts]))


@pytest.mark.parametrize("kind", ["transport_plus", "eikonal"])
def test_subsolution(kind):
    m = make_builtin(kind, 1)
    p = ConvolutionParams(0.1, gamma_min(m.constants))
    rep = subsolution_residual(inf_convolution_block(_block(kind), p), m, p)
    assert rep.checks and rep.passed


def test_subsolution_gamma_too_small():
    m = make_builtin("transport_plus", 1)
    p = ConvolutionParams(0.1, 1.0)
    rep = subsolution_residual(_block("transport_plus", 40, 5), m, p)
    assert not rep.checks
    assert "parameter violation" in rep.notes[0]
