import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from hjlb.hamiltonians import make_builtin
from hjlb.herglotz import Curve, action, caratheodory_solve, check_semiconcavity, dpp_check, is_feasible, value_function
from hjlb.initial_data import make_constant_datum, make_datum

quad = make_builtin("quadratic", 1, lam=1.0)
eik = make_builtin("eikonal", 1, c=1.0)
cone = make_datum("cone", 1)


def euler_oracle(x, t, lam=1.0):
    """min over xi(0) of the cost of the Euler curve xi(s) = A + B e^{-lam s} ending at x, datum |y|."""
    ed = math.exp(-lam * t)

    def cost(y):
        b = (y - x) / (1 - ed)
        return ed * abs(y) + 0.5 * lam * b * b * ed * (1 - ed)

    ys = np.linspace(x - 3, x + 3, 60_001)
    y0 = ys[int(np.argmin([cost(y) for y in ys]))]
    res = minimize_scalar(cost, bounds=(y0 - 1e-4, y0 + 1e-4), method="bounded", options={"xatol": 1e-12})
    return min(res.fun, cost(0.0))


def test_caratheodory_quadratic_line():
    u = caratheodory_solve(quad, Curve.uniform(1.0, [0.0, 1.0]), 0.0)
    assert u[-1] == pytest.approx(0.5 * (1 - math.exp(-1)), abs=1e-8)


@pytest.mark.parametrize("a", [0.0, 0.7, -2.0])
def test_caratheodory_eikonal_decay(a):
    curve = Curve.uniform(0.8, [0.0, 0.1, 0.05, -0.1, 0.0])
    u = caratheodory_solve(eik, curve, a)
    assert u[-1] == pytest.approx(a * math.exp(-0.8), abs=1e-9)


def test_caratheodory_rest():
    assert np.allclose(caratheodory_solve(quad, Curve.uniform(1.0, [0.0, 0.0]), 0.0), 0.0)


def test_action_zero_and_constant():
    rest = Curve.uniform(1.0, [0.0, 0.0, 0.0])
    assert action(quad, make_constant_datum(0.0), rest).action == pytest.approx(0.0, abs=1e-12)
    lam2 = make_builtin("quadratic", 1, lam=2.0)
    res = action(lam2, make_constant_datum(1.5), Curve.uniform(0.7, [0.2, 0.2]))
    assert res.u_end == pytest.approx(1.5 * math.exp(-1.4), abs=1e-10)
    assert res.action == pytest.approx(1.5 * math.exp(-1.4), abs=1e-7)


def test_infeasible_curve():
    fast = Curve.uniform(0.5, [0.0, 1.0])
    assert not is_feasible(eik, fast)
    res = action(eik, cone, fast)
    assert not res.feasible and res.action == math.inf


def test_eikonal_value():
    v, curve = value_function(eik, cone, 0.25, 0.25)
    assert v == pytest.approx(math.exp(-0.25) * 0.5, abs=1e-3)
    assert curve.nodes[-1, 0] == pytest.approx(0.25)


def test_zero_datum_value():
    v, curve = value_function(quad, make_constant_datum(0.0), 0.4, 0.5, nodes=4, restarts=2)
    assert v == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(curve.nodes, 0.4)


@pytest.mark.parametrize("x", [0.0, 0.5])
def test_quadratic_abs_value(x):
    v, _ = value_function(quad, make_datum("abs", 1), x, 1.0, nodes=6, restarts=2)
    assert v == pytest.approx(euler_oracle(x, 1.0), abs=1e-3)


def test_dpp_equality_on_minimizer():
    v, curve = value_function(eik, cone, 0.25, 0.25)
    rep = dpp_check(eik, cone, 0.25, 0.25, curve, 0.1, minimizer=True)
    assert rep.passed, rep.rows()


def test_dpp_strict_on_perturbed_curve():
    curve = Curve.uniform(0.25, [0.25, 0.3, 0.25])
    rep = dpp_check(eik, cone, 0.25, 0.25, curve, 0.0, restarts=2)
    assert rep.passed and rep["dpp"].slack > 1e-3


def test_dpp_tau_equals_t():
    curve = Curve.uniform(0.25, [0.25, 0.25])
    assert dpp_check(eik, cone, 0.25, 0.25, curve, 0.25).passed


def test_semiconcavity():
    x = np.linspace(-1, 1, 201)
    assert check_semiconcavity(-(x ** 2), x[1] - x[0], 0.5).passed
    assert not check_semiconcavity(np.abs(x), x[1] - x[0], 0.5).passed
