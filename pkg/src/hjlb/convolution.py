"""Time-weighted inf/sup-convolutions of 1D grid fields and the checks built on them.

The spatial inf-convolution at time t is

    u_eps(x, t) = min_{y in [x0 - r, x0 + r]} u(y, t) + e^{-gamma t} |x - y|^2 / eps^2

where u(., t) is the piecewise-linear interpolant of the grid values.  On each
cell the minimand is a convex quadratic, so its cellwise minimum is found in
closed form; the result is the exact minimum of the interpolant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._report import Report, leq
from .hamiltonians import HamiltonianModel, StructuralConstants
from .initial_data import InitialDatum, theta_on_ball

CHUNK = 256


@dataclass(frozen=True)
class ConvolutionParams:
    epsilon: float
    gamma: float
    x0: float = 0.0
    r: float = 1.0
    alpha: Optional[float] = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.r > 0:
            raise ValueError("ball radius must be positive")
        if self.alpha is not None and not self.alpha > 0:
            raise ValueError("alpha must be positive")


@dataclass(frozen=True)
class FieldSlice:
    x: np.ndarray
    values: np.ndarray
    time: float = 0.0
    argmin: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.x.size == 0:
            raise ValueError("empty grid")
        if self.x.shape != self.values.shape:
            raise ValueError("grid and values differ in shape")


@dataclass(frozen=True)
class SpaceTimeBlock:
    x: np.ndarray
    times: np.ndarray
    values: np.ndarray  # (len(times), len(x))
    argmin_s: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.x.size == 0 or self.times.size == 0:
            raise ValueError("empty grid")
        if self.values.shape != (self.times.size, self.x.size):
            raise ValueError("values must have shape (len(times), len(x))")


def gamma_min(constants: StructuralConstants) -> float:
    return (constants.beta / 2.0 + 2.0) * constants.c1 + constants.k3


def _ball_restriction(x: np.ndarray, u: np.ndarray, lo: float, hi: float):
    """Nodes of the interpolant on [lo, hi], with the ball endpoints added when they fall between nodes."""
    inside = (x >= lo - 1e-12) & (x <= hi + 1e-12)
    ys, us = x[inside], u[inside]
    if ys.size == 0 or ys[0] > lo + 1e-12:
        ys = np.concatenate([[lo], ys])
        us = np.concatenate([[np.interp(lo, x, u)], us])
    if ys[-1] < hi - 1e-12:
        ys = np.concatenate([ys, [hi]])
        us = np.concatenate([us, [np.interp(hi, x, u)]])
    return ys, us


def _pl_quadratic_min(targets: np.ndarray, ys: np.ndarray, us: np.ndarray, w: float):
    """min over y in [ys[0], ys[-1]] of PL(y) + w |x - y|^2 for each target x, with the minimizer.

    Ties go to the smaller y.
    """
    if ys.size == 1:
        return us[0] + w * (targets - ys[0]) ** 2, np.full(targets.shape, ys[0])
    a, b = ys[:-1], ys[1:]
    s = np.diff(us) / np.diff(ys)
    val = np.empty(targets.size)
    arg = np.empty(targets.size)
    for k in range(0, targets.size, CHUNK):
        xt = targets[k:k + CHUNK, None]
        y = np.clip(xt - s / (2.0 * w), a, b)
        f = us[:-1] + s * (y - a) + w * (xt - y) ** 2
        j = np.argmin(f, axis=1)
        rows = np.arange(xt.shape[0])
        val[k:k + CHUNK] = f[rows, j]
        arg[k:k + CHUNK] = y[rows, j]
    return val, arg


def _weight(params: ConvolutionParams, t: float, sign: float) -> float:
    return math.exp(-sign * params.gamma * t) / params.epsilon ** 2


def inf_convolution_spatial(field: FieldSlice, params: ConvolutionParams) -> FieldSlice:
    """u_eps at every node of the field inside the closed ball."""
    lo, hi = params.x0 - params.r, params.x0 + params.r
    ys, us = _ball_restriction(field.x, field.values, lo, hi)
    targets = field.x[(field.x >= lo - 1e-12) & (field.x <= hi + 1e-12)]
    val, arg = _pl_quadratic_min(targets, ys, us, _weight(params, field.time, 1.0))
    return FieldSlice(targets, val, field.time, arg)


def sup_convolution_spatial(field: FieldSlice, params: ConvolutionParams) -> FieldSlice:
    """u^eps(x) = max_y u(y) - e^{gamma t} |x - y|^2 / eps^2."""
    lo, hi = params.x0 - params.r, params.x0 + params.r
    ys, us = _ball_restriction(field.x, -field.values, lo, hi)
    targets = field.x[(field.x >= lo - 1e-12) & (field.x <= hi + 1e-12)]
    val, arg = _pl_quadratic_min(targets, ys, us, _weight(params, field.time, -1.0))
    return FieldSlice(targets, -val, field.time, arg)


def _spacetime(block: SpaceTimeBlock, params: ConvolutionParams, sign: float) -> SpaceTimeBlock:
    if params.alpha is None:
        raise ValueError("alpha required for the space-time convolution")
    lo, hi = params.x0 - params.r, params.x0 + params.r
    mask = (block.x >= lo - 1e-12) & (block.x <= hi + 1e-12)
    targets = block.x[mask]
    rows = [_ball_restriction(block.x, sign * block.values[k], lo, hi) for k in range(block.times.size)]
    out = np.empty((block.times.size, targets.size))
    arg = np.empty_like(out)
    for i, t in enumerate(block.times):
        w = _weight(params, t, sign)
        best = np.full(targets.size, math.inf)
        best_s = np.zeros(targets.size)
        for k, s in enumerate(block.times):
            v, _ = _pl_quadratic_min(targets, rows[k][0], rows[k][1], w)
            v = v + (t - s) ** 2 / params.alpha ** 2
            better = v < best
            best = np.where(better, v, best)
            best_s = np.where(better, s, best_s)
        out[i] = sign * best
        arg[i] = best_s
    return SpaceTimeBlock(targets, block.times, out, arg)


def inf_convolution_spacetime(block: SpaceTimeBlock, params: ConvolutionParams) -> SpaceTimeBlock:
    """min over (y, s) of u(y, s) + e^{-gamma t}|x - y|^2/eps^2 + |t - s|^2/alpha^2 (s over the stored levels)."""
    return _spacetime(block, params, 1.0)


def sup_convolution_spacetime(block: SpaceTimeBlock, params: ConvolutionParams) -> SpaceTimeBlock:
    """max over (y, s) of u(y, s) - e^{gamma t}|x - y|^2/eps^2 - |t - s|^2/alpha^2."""
    return _spacetime(block, params, -1.0)


def inf_convolution_block(block: SpaceTimeBlock, params: ConvolutionParams) -> SpaceTimeBlock:
    """Spatial inf-convolution applied at each stored time."""
    rows = [inf_convolution_spatial(FieldSlice(block.x, block.values[k], t), params)
            for k, t in enumerate(block.times)]
    return SpaceTimeBlock(rows[0].x, block.times, np.array([r.values for r in rows]))


def boundary_margin(M: float, params: ConvolutionParams, t: float) -> float:
    """Bound on |x - y*|: the minimizer stays within e^{gamma t/2} M eps of x."""
    return math.exp(0.5 * params.gamma * t) * M * params.epsilon


def sup_abs_constant(values) -> float:
    """M = (2 max |u|)^{1/2}."""
    return math.sqrt(2.0 * float(np.max(np.abs(values))))


def interior_mask(x: np.ndarray, params: ConvolutionParams, M: float, t: float) -> np.ndarray:
    m = boundary_margin(M, params, t)
    return np.abs(np.asarray(x) - params.x0) < params.r - m


def admissible_epsilon(M: float, rho: float, gamma: float, T: float) -> float:
    """Upper end of the admissible eps range, e^{gamma T/2} rho / (2 M)."""
    return math.inf if M == 0 else math.exp(0.5 * gamma * T) * rho / (2.0 * M)


def check_initial_gap(datum: InitialDatum, theta: Optional[float], epsilon: float, x0: float = 0.0,
                      r: float = 1.0, points: int = 2001) -> Report:
    """u_eps(., 0) - u0 <= -theta^2 eps^2 / 4 on the ball, away from its boundary."""
    if theta is None or not theta > 0:
        raise ValueError("a positive theta is required")
    actual = theta_on_ball(datum, x0, r)
    if actual is None or theta > actual * (1 + 1e-12):
        raise ValueError(f"theta = {theta} is not a lower bound for |Du0| on the ball (got {actual})")
    params = ConvolutionParams(epsilon, 0.0, x0, r)
    x = np.linspace(x0 - r, x0 + r, int(points))
    u = np.asarray(datum(x), dtype=float)
    ue = inf_convolution_spatial(FieldSlice(x, u, 0.0), params)
    M = sup_abs_constant(u)
    mask = interior_mask(ue.x, params, M, 0.0)
    rep = Report()
    if not np.any(mask):
        rep.notes.append("no points left after the boundary margin")
        return rep
    gap = ue.values[mask] - u[mask]
    rep.add(leq("initial_gap", float(np.max(gap)), -theta ** 2 * epsilon ** 2 / 4.0, 1e-12))
    rep.notes.append(f"points checked: {int(mask.sum())}")
    return rep


def subsolution_residual(block: SpaceTimeBlock, model: HamiltonianModel, params: ConvolutionParams,
                         M: Optional[float] = None, kink_factor: float = 10.0) -> Report:
    """u_t + H(x, t, u, u_x) <= (beta C1 / 2) e^{gamma t} eps^2 for an inf-convolved field.

    ``block`` holds u_eps on a uniform (x, t) grid.  Only interior nodes where the
    one-sided x-slopes agree within kink_factor * dx and the one-sided t-slopes
    within kink_factor * dt are tested, and the tolerance is 10 (dx + dt).
    """
    c = model.constants
    rep = Report()
    if params.gamma < gamma_min(c) - 1e-12:
        rep.notes.append(f"parameter violation: gamma = {params.gamma} < gamma_min = {gamma_min(c)}")
        return rep
    x, ts, u = block.x, block.times, block.values
    if x.size < 3 or ts.size < 3:
        raise ValueError("need at least 3 nodes in x and t")
    dx = float(x[1] - x[0])
    dt = float(ts[1] - ts[0])
    if M is None:
        M = sup_abs_constant(u)
    tol = 10.0 * (dx + dt)
    worst, count = -math.inf, 0
    for k in range(1, ts.size - 1):
        t = float(ts[k])
        tl = (u[k, 1:-1] - u[k - 1, 1:-1]) / (ts[k] - ts[k - 1])
        tr = (u[k + 1, 1:-1] - u[k, 1:-1]) / (ts[k + 1] - ts[k])
        ut = 0.5 * (tl + tr)
        sl = (u[k, 1:-1] - u[k, :-2]) / dx
        sr = (u[k, 2:] - u[k, 1:-1]) / dx
        ux = 0.5 * (sl + sr)
        xi = x[1:-1]
        ok = (np.abs(sr - sl) <= kink_factor * dx) & (np.abs(tr - tl) <= kink_factor * dt) & interior_mask(xi, params, M, float(ts[-1]))
        if not np.any(ok):
            continue
        h = np.asarray(model.eval(xi[ok, None], t, u[k, 1:-1][ok], ux[ok, None]), dtype=float)
        bound = 0.5 * c.beta * c.c1 * math.exp(params.gamma * t) * params.epsilon ** 2
        worst = max(worst, float(np.max(ut[ok] + h - bound)))
        count += int(ok.sum())
    if count == 0:
        raise ValueError("no differentiable interior points found")
    rep.add(leq("subsolution", worst, 0.0, tol))
    rep.notes.append(f"points checked: {count}")
    return rep
