"""Characteristics of u_t + H(x, t, u, Du) = 0 and the gradient-propagation checks along them.

The contact system integrated here is

    xi'  = D_p H
    eta' = -D_x H - D_u H * eta
    u'   = <eta, xi'> - H

with fixed-step classic RK4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._report import Report, leq
from .bounds import radius_R
from .hamiltonians import HamiltonianModel, StructuralConstants, as_point
from .initial_data import InitialDatum

TOL = 1e-9
ETA_FLOOR = 1e-12


class CharacteristicSingularity(RuntimeError):
    """D_p H is undefined at the current state (eta hit the kink of H)."""


@dataclass(frozen=True)
class TerminalCondition:
    x: np.ndarray
    t: float
    p: np.ndarray
    u: float

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError("terminal time must be positive")
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))
        object.__setattr__(self, "p", np.atleast_1d(np.asarray(self.p, dtype=float)))
        object.__setattr__(self, "u", float(self.u))


@dataclass(frozen=True)
class CharacteristicPath:
    times: np.ndarray  # increasing, times[0] = 0
    xi: np.ndarray  # (m+1, n)
    eta: np.ndarray  # (m+1, n)
    u_xi: np.ndarray  # (m+1,)
    model: HamiltonianModel

    @property
    def step_count(self) -> int:
        return len(self.times) - 1

    @property
    def t(self) -> float:
        return float(self.times[-1])

    def herglotz_residual(self) -> float:
        """Max over interior nodes of |u_xi' - <eta, xi'> + H|.

        u_xi' comes from fourth-order finite differences on the uniform node grid
        (second order when there are fewer than 4 steps).
        """
        m = self.step_count
        if m < 2:
            return 0.0
        s, u = self.times, self.u_xi
        h = s[1] - s[0]
        if m < 4:
            du = (u[2:] - u[:-2]) / (2.0 * h)
        else:
            du = np.empty(m - 1)
            du[1:-1] = (u[:-4] - 8.0 * u[1:-3] + 8.0 * u[3:-1] - u[4:]) / (12.0 * h)
            du[0] = (-3.0 * u[0] - 10.0 * u[1] + 18.0 * u[2] - 6.0 * u[3] + u[4]) / (12.0 * h)
            du[-1] = (3.0 * u[-1] + 10.0 * u[-2] - 18.0 * u[-3] + 6.0 * u[-4] - u[-5]) / (12.0 * h)
        x, e, uu, tt = self.xi[1:-1], self.eta[1:-1], u[1:-1], s[1:-1]
        md = self.model
        rhs = np.sum(e * md.grad_p(x, tt, uu, e), axis=-1) - md.eval(x, tt, uu, e)
        return float(np.max(np.abs(du - rhs)))


def _rhs(model: HamiltonianModel, s: float, y: np.ndarray, n: int) -> np.ndarray:
    x, e, u = y[:n], y[n:2 * n], y[2 * n]
    if model.kink_at_zero and np.linalg.norm(e) < ETA_FLOOR:
        raise CharacteristicSingularity(f"|eta| < {ETA_FLOOR:g} at s = {s:.6g}")
    gp = np.asarray(model.grad_p(x, s, u, e), dtype=float).reshape(n)
    gx = np.asarray(model.grad_x(x, s, u, e), dtype=float).reshape(n)
    gu = float(np.asarray(model.grad_u(x, s, u, e)))
    h = float(np.asarray(model.eval(x, s, u, e)))
    out = np.empty_like(y)
    out[:n] = gp
    out[n:2 * n] = -gx - gu * e
    out[2 * n] = float(e @ gp) - h
    if not np.all(np.isfinite(out)):
        raise CharacteristicSingularity(f"non-finite derivative at s = {s:.6g}")
    return out


def _rk4(model: HamiltonianModel, y0: np.ndarray, s0: float, s1: float, steps: int, n: int) -> np.ndarray:
    if steps < 1:
        raise ValueError("steps must be >= 1")
    h = (s1 - s0) / steps
    if h == 0.0 and s1 != s0:
        raise FloatingPointError("step underflow")
    ys = np.empty((steps + 1, y0.size))
    ys[0] = y = y0
    for k in range(steps):
        s = s0 + k * h
        k1 = _rhs(model, s, y, n)
        k2 = _rhs(model, s + 0.5 * h, y + 0.5 * h * k1, n)
        k3 = _rhs(model, s + 0.5 * h, y + 0.5 * h * k2, n)
        k4 = _rhs(model, s + h, y + h * k3, n)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        ys[k + 1] = y
    return ys


def _pack(x, p, u, n):
    return np.concatenate([as_point(x, n).reshape(n), as_point(p, n).reshape(n), [float(u)]])


def integrate_backward(model: HamiltonianModel, terminal: TerminalCondition, steps: int = 1000) -> CharacteristicPath:
    """Integrate from (x, p, u) at time t back to time 0."""
    n = model.dimension
    ys = _rk4(model, _pack(terminal.x, terminal.p, terminal.u, n), terminal.t, 0.0, int(steps), n)[::-1]
    times = np.linspace(0.0, terminal.t, int(steps) + 1)
    return CharacteristicPath(times, ys[:, :n].copy(), ys[:, n:2 * n].copy(), ys[:, 2 * n].copy(), model)


def _rhs_batch(model: HamiltonianModel, s: np.ndarray, y: np.ndarray, n: int) -> np.ndarray:
    x, e, u = y[:, :n], y[:, n:2 * n], y[:, 2 * n]
    if model.kink_at_zero and np.any(np.linalg.norm(e, axis=1) < ETA_FLOOR):
        raise CharacteristicSingularity(f"|eta| < {ETA_FLOOR:g} on some path")
    k = y.shape[0]
    gp = np.broadcast_to(np.asarray(model.grad_p(x, s, u, e), dtype=float), (k, n))
    gx = np.broadcast_to(np.asarray(model.grad_x(x, s, u, e), dtype=float), (k, n))
    gu = np.broadcast_to(np.asarray(model.grad_u(x, s, u, e), dtype=float), (k,))
    h = np.broadcast_to(np.asarray(model.eval(x, s, u, e), dtype=float), (k,))
    out = np.empty_like(y)
    out[:, :n] = gp
    out[:, n:2 * n] = -gx - gu[:, None] * e
    out[:, 2 * n] = np.sum(e * gp, axis=1) - h
    if not np.all(np.isfinite(out)):
        raise CharacteristicSingularity("non-finite derivative on some path")
    return out


def integrate_backward_many(model: HamiltonianModel, terminals, steps: int = 1000) -> list[CharacteristicPath]:
    """integrate_backward for many terminal conditions at once (vectorised RK4, same step count)."""
    n = model.dimension
    steps = int(steps)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    terminals = list(terminals)
    if not terminals:
        return []
    y = np.array([_pack(tc.x, tc.p, tc.u, n) for tc in terminals])
    t_end = np.array([tc.t for tc in terminals])
    h = -t_end / steps
    ys = np.empty((steps + 1,) + y.shape)
    ys[0] = y
    for k in range(steps):
        s = t_end + k * h
        k1 = _rhs_batch(model, s, y, n)
        k2 = _rhs_batch(model, s + 0.5 * h, y + 0.5 * h[:, None] * k1, n)
        k3 = _rhs_batch(model, s + 0.5 * h, y + 0.5 * h[:, None] * k2, n)
        k4 = _rhs_batch(model, s + h, y + h[:, None] * k3, n)
        y = y + (h / 6.0)[:, None] * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        ys[k + 1] = y
    ys = ys[::-1]
    out = []
    for i, tc in enumerate(terminals):
        yi = ys[:, i]
        out.append(CharacteristicPath(np.linspace(0.0, tc.t, steps + 1), yi[:, :n].copy(), yi[:, n:2 * n].copy(),
                                      yi[:, 2 * n].copy(), model))
    return out


def integrate_forward(model: HamiltonianModel, initial, t: float, steps: int = 1000) -> CharacteristicPath:
    """Integrate from (xi(0), eta(0), u_xi(0)) forward to time t."""
    if not t >= 0:
        raise ValueError("t must be nonnegative")
    n = model.dimension
    x0, p0, u0 = initial
    ys = _rk4(model, _pack(x0, p0, u0, n), 0.0, float(t), int(steps), n)
    times = np.linspace(0.0, float(t), int(steps) + 1)
    return CharacteristicPath(times, ys[:, :n].copy(), ys[:, n:2 * n].copy(), ys[:, 2 * n].copy(), model)


def check_propagation(path: CharacteristicPath, constants: StructuralConstants, tol: float = TOL) -> Report:
    """Growth/decay of |eta| between s = 0 and s = t against the structural constants."""
    c = constants
    t = path.t
    pt, p0 = path.eta[-1], path.eta[0]
    nt, n0 = float(np.linalg.norm(pt)), float(np.linalg.norm(p0))
    gap = float(np.linalg.norm(pt - p0))
    rep = Report()
    if c.degenerate:
        rep.add(leq("frozen_gradient", gap, 0.0, tol))
        return rep
    a = c.c1 + c.k3
    w = c.c1 * c.beta / a
    grow = math.expm1(a * t)
    rep.add(leq("gap_vs_terminal", gap, (w + nt) * grow, tol))
    rep.add(leq("gap_vs_initial", gap, (w + n0) * grow, tol))
    rep.add(leq("lower_general", n0 * math.exp(-a * t) + w * math.expm1(-a * t), nt, tol))
    rep.add(leq("upper_general", nt, n0 * math.exp(a * t) + w * grow, tol))
    if c.k3 == 0:
        rep.add(leq("lower_k3_zero", n0 * math.exp(-c.c1 * t) + c.beta * math.expm1(-c.c1 * t), nt, tol))
    if c.beta == 0:
        rep.add(leq("lower_beta_zero", n0 * math.exp(-a * t), nt, tol))
        rep.add(leq("upper_beta_zero", nt, n0 * math.exp(a * t), tol))
    if c.c1 == 0:
        rep.add(leq("lower_c1_zero", n0 * math.exp(-c.k3 * t), nt, tol))
        rep.add(leq("upper_c1_zero", nt, n0 * math.exp(c.k3 * t), tol))
    return rep


def check_spatial(path: CharacteristicPath, constants: StructuralConstants, tol: float = TOL) -> Report:
    """Backward displacement |xi(t) - xi(0)| against the propagation radius."""
    x = path.xi[-1]
    rep = Report()
    rep.add(leq("displacement", float(np.linalg.norm(x - path.xi[0])), radius_R(constants, x, path.t), tol))
    return rep


def check_special_propagation(path: CharacteristicPath, lam: float, constants: StructuralConstants,
                              tol: float = TOL) -> Report:
    """Checks for H = lam u + H0(x, t, p); constants describe H0 through c1 and beta."""
    c1, beta = constants.c1, constants.beta
    lam = float(lam)
    t = path.t
    pt, p0 = path.eta[-1], path.eta[0]
    nt, n0 = float(np.linalg.norm(pt)), float(np.linalg.norm(p0))
    shifted = float(np.linalg.norm(pt - math.exp(-lam * t) * p0))
    ec = math.expm1(c1 * t)
    rep = Report()
    if math.isclose(lam, -c1, abs_tol=1e-15):
        rep.add(leq("shift_vs_terminal", shifted, c1 * beta * t * math.exp(c1 * t) + nt * ec, tol))
        rep.add(leq("special_lower", n0 - c1 * beta * t, nt, tol))
    else:
        a = c1 + lam
        rep.add(leq("shift_vs_terminal", shifted,
                    c1 * beta / a * (math.exp(c1 * t) - math.exp(-lam * t)) + nt * ec, tol))
        rep.add(leq("special_lower", n0 * math.exp(-a * t) + c1 * beta / a * math.expm1(-a * t), nt, tol))
    if math.isclose(lam, c1, abs_tol=1e-15):
        rep.add(leq("shift_vs_initial", shifted, c1 * beta * t + n0 * (-math.expm1(-c1 * t)), tol))
        rep.add(leq("special_upper", nt, n0 + c1 * beta * t, tol))
    else:
        b = c1 - lam
        eb = math.expm1(b * t)
        rep.add(leq("shift_vs_initial", shifted,
                    c1 * beta / b * eb + n0 * (math.exp(b * t) - math.exp(-lam * t)), tol))
        rep.add(leq("special_upper", nt, n0 * math.exp(b * t) + c1 * beta / b * eb, tol))
    return rep


def endpoint_subgradient_residual(path: CharacteristicPath, datum: InitialDatum) -> float:
    """Distance from eta(0) to the subdifferential of u0 at xi(0); inf if that set is empty."""
    return datum.subgradient_set(path.xi[0]).distance(path.eta[0])
