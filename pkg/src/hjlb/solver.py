"""Monotone Lax-Friedrichs solver on 1D grids, closed-form solutions and gradient extraction.

One step of the scheme at node i reads

    u_i <- u_i - dt * [H(x_i, t, u_i, D0 u_i) - sigma * (u_{i+1} - 2 u_i + u_{i-1}) / (2 dx)]

with D0 the central slope.  When H = lam * u + H0(x, t, p) the linear u-term is
integrated exactly (exponential integrating factor), so spatially constant data
decay at exactly the ODE rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .hamiltonians import HamiltonianModel, normalize_kind
from .initial_data import InitialDatum, SubgradientSet, numeric_subgradient_1d


class CFLViolation(RuntimeError):
    """The explicit step left the monotone regime."""


@dataclass(frozen=True)
class GridSpec:
    xmin: float
    xmax: float
    cells: int
    t_end: float
    cfl: float = 0.5

    def __post_init__(self):
        if not self.xmin < self.xmax:
            raise ValueError("need xmin < xmax")
        if int(self.cells) < 16:
            raise ValueError("need at least 16 cells")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if not 0 < self.cfl < 1:
            raise ValueError("cfl must lie in (0, 1)")

    @property
    def dx(self) -> float:
        return (self.xmax - self.xmin) / self.cells

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.xmin, self.xmax, int(self.cells) + 1)


@dataclass
class NumericalSolution:
    grid: GridSpec
    times: np.ndarray
    values: np.ndarray  # (levels, cells + 1)
    dissipation: float
    steps: int = 0

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    def level(self, t: float) -> int:
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > 1e-12 * max(1.0, abs(t)):
            raise KeyError(f"time {t} is not a stored level")
        return k

    def at(self, t: float) -> np.ndarray:
        return self.values[self.level(t)]

    def interp(self, x, t: float):
        return np.interp(x, self.x, self.at(t))


def _as_col(x):
    return np.asarray(x, dtype=float)[:, None]


def _slope_stencil(u: np.ndarray, dx: float):
    """Central slope and second difference with linear-extrapolation ghost nodes."""
    ghost_l = 2.0 * u[0] - u[1]
    ghost_r = 2.0 * u[-1] - u[-2]
    ext = np.concatenate([[ghost_l], u, [ghost_r]])
    d0 = (ext[2:] - ext[:-2]) / (2.0 * dx)
    lap = ext[2:] - 2.0 * u + ext[:-2]
    return d0, lap


def _split_linear(model: HamiltonianModel):
    lam = model.constants.lam
    if model.h0 is not None and lam is not None:
        return float(lam), model.h0
    return None, None


def lf_step(model: HamiltonianModel, x: np.ndarray, t: float, u: np.ndarray, dt: float, dx: float,
            sigma: float) -> np.ndarray:
    """One Lax-Friedrichs step (nodes x, values u) from t to t + dt."""
    d0, lap = _slope_stencil(u, dx)
    diss = sigma * lap / (2.0 * dx)
    lam, h0 = _split_linear(model)
    if lam is None:
        h = np.asarray(model.eval(_as_col(x), t, u, _as_col(d0)), dtype=float)
        return u - dt * (h - diss)
    hv = np.asarray(h0(_as_col(x), t, _as_col(d0)), dtype=float)
    decay = math.exp(-lam * dt)
    phi = dt if lam == 0 else -math.expm1(-lam * dt) / lam
    return decay * u - phi * (hv - diss)


def dissipation(model: HamiltonianModel, grid: GridSpec, lipschitz: float) -> float:
    """LF coefficient sigma, a bound for |D_p H| over the grid and the reachable slopes."""
    c = model.constants
    xmax = max(abs(grid.xmin), abs(grid.xmax))
    if math.isfinite(c.b2):
        return c.a2 * xmax + c.b2
    # H not globally Lipschitz in p: bound |D_p H| over the a-priori slope range
    g = lipschitz * math.exp((c.c1 + c.k3) * grid.t_end) + 2.0
    ps = np.linspace(-g, g, 401)
    xs = np.linspace(grid.xmin, grid.xmax, 41)
    X, P = np.meshgrid(xs, ps)
    gp = np.asarray(model.grad_p(X.reshape(-1, 1), 0.0, 0.0, P.reshape(-1, 1)), dtype=float)
    return float(np.max(np.abs(gp)))


def _envelope(model, x, t, lo, hi, dt, dx, sigma):
    # monotone schemes map [lo, hi]-valued data into [step(lo), step(hi)]
    n = x.size
    top = lf_step(model, x, t, np.full(n, hi), dt, dx, sigma)
    bot = lf_step(model, x, t, np.full(n, lo), dt, dx, sigma)
    return float(np.min(bot)), float(np.max(top))


def solve(model: HamiltonianModel, datum: InitialDatum, grid: GridSpec,
          save_times: Optional[Sequence[float]] = None, check: bool = True) -> NumericalSolution:
    """March from t = 0 to grid.t_end.

    Every level is stored unless ``save_times`` is given; listed times are hit exactly.
    """
    if model.dimension != 1:
        raise ValueError("the grid solver is 1D")
    x = grid.nodes
    dx = grid.dx
    u = np.asarray(datum(x), dtype=float).reshape(-1)
    sigma = dissipation(model, grid, datum.lipschitz)
    k3 = model.constants.k3
    dt_max = grid.cfl * dx / (sigma + k3 * dx + 1e-12)
    stops = sorted({float(s) for s in (save_times or []) if 0 < s < grid.t_end} | {float(grid.t_end)})
    keep_all = save_times is None
    times, levels = [0.0], [u.copy()]
    t, steps = 0.0, 0
    for stop in stops:
        while t < stop - 1e-14 * max(1.0, stop):
            dt = min(dt_max, stop - t)
            if check:
                d0, _ = _slope_stencil(u, dx)
                gp = np.abs(np.asarray(model.grad_p(_as_col(x), t, u, _as_col(d0)), dtype=float)).reshape(-1)
                if gp.size and float(np.max(gp)) > sigma * (1 + 1e-9) + 1e-12:
                    i = int(np.argmax(gp))
                    raise CFLViolation(f"|D_p H| = {gp[i]:.6g} > sigma = {sigma:.6g} at x = {x[i]:.6g}, t = {t:.6g}")
                lo, hi = _envelope(model, x, t, float(np.min(u)), float(np.max(u)), dt, dx, sigma)
            new = lf_step(model, x, t, u, dt, dx, sigma)
            if not np.all(np.isfinite(new)):
                raise CFLViolation(f"non-finite values at t = {t:.6g}")
            if check:
                slack = 1e-9 * (1.0 + max(abs(lo), abs(hi)))
                if float(np.max(new)) > hi + slack or float(np.min(new)) < lo - slack:
                    raise CFLViolation(f"new extremum outside the monotone envelope [{lo:.6g}, {hi:.6g}] at t = {t:.6g}")
            u = new
            t = stop if stop - (t + dt) <= 1e-14 * max(1.0, stop) else t + dt
            steps += 1
            if keep_all and t != stop:
                times.append(t)
                levels.append(u.copy())
        times.append(t)
        levels.append(u.copy())
    return NumericalSolution(grid, np.array(times), np.array(levels), sigma, steps)


# ---------------------------------------------------------------------------
# closed-form solutions for the built-in examples


@dataclass(frozen=True)
class ClosedFormOracle:
    kind: str
    datum: InitialDatum
    c: float = 1.0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        k = normalize_kind(self.kind)
        if k not in ("transport_plus", "transport_minus", "transport_neg_u", "eikonal"):
            raise ValueError(f"no closed form for {self.kind!r}")
        object.__setattr__(self, "kind", k)

    def __call__(self, x, t):
        return oracle_eval(self, x, t)


def _datum_kinks(datum: InitialDatum) -> np.ndarray:
    if datum.radial:
        r = np.asarray(datum.breakpoints, dtype=float)
        return np.unique(np.concatenate([-r, r]))
    if datum.grid is not None:
        return np.asarray(datum.grid, dtype=float)
    return np.zeros(0)


def _min_on_interval(datum: InitialDatum, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Exact minimum of a piecewise-linear 1D datum over [lo, hi] (endpoints and kinks)."""
    kinks = _datum_kinks(datum)
    best = np.minimum(np.asarray(datum(lo), dtype=float), np.asarray(datum(hi), dtype=float))
    for k in kinks:
        inside = (lo <= k) & (k <= hi)
        if np.any(inside):
            best = np.where(inside, np.minimum(best, float(datum(k))), best)
    return best


def _min_on_ball_radial(datum: InitialDatum, rho: np.ndarray, radius: float) -> np.ndarray:
    lo = np.maximum(rho - radius, 0.0)
    hi = rho + radius
    r = np.asarray(datum.breakpoints, dtype=float)
    best = np.minimum(datum.profile(lo), datum.profile(hi))
    for k in r:
        inside = (lo <= k) & (k <= hi)
        best = np.where(inside, np.minimum(best, float(datum.profile(k))), best)
    return best


def _min_by_scan(datum: InitialDatum, x: np.ndarray, radius: float, pts: int = 4001) -> np.ndarray:
    offs = np.linspace(-radius, radius, pts)
    return np.array([np.min(datum(xi + offs)) for xi in np.ravel(x)]).reshape(np.shape(x))


def oracle_eval(oracle: ClosedFormOracle, x, t: float):
    """Exact solution of the built-in example at (x, t); x is a scalar or 1D array (or (..., n) for radial data)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    d = oracle.datum
    x = np.asarray(x, dtype=float)
    k = oracle.kind
    if k == "transport_plus":
        return math.exp(-t) * np.asarray(d(x * math.exp(-t)), dtype=float)
    if k == "transport_minus":
        return math.exp(-t) * np.asarray(d(x * math.exp(t)), dtype=float)
    if k == "transport_neg_u":
        return math.exp(t) * np.asarray(d(x * math.exp(-t)), dtype=float)
    ct = oracle.c * t
    if d.radial:
        if d.dimension == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            rho = np.abs(x)
        else:
            rho = np.linalg.norm(x, axis=-1)
        return math.exp(-t) * _min_on_ball_radial(d, rho, ct)
    if d.grid is not None:
        return math.exp(-t) * _min_on_interval(d, x - ct, x + ct)
    return math.exp(-t) * _min_by_scan(d, x, ct)


def oracle_kinks(oracle: ClosedFormOracle, t: float) -> np.ndarray:
    """Points (1D) where the closed-form solution may fail to be differentiable."""
    base = _datum_kinks(oracle.datum)
    k = oracle.kind
    if k in ("transport_plus", "transport_neg_u"):
        return base * math.exp(t)
    if k == "transport_minus":
        return base * math.exp(-t)
    ct = oracle.c * t
    pts = np.concatenate([base - ct, base + ct, [0.0, -ct, ct]])
    return np.unique(np.concatenate([pts, -pts]))


def measured_subgradient(source, x: float, t: float, h: float = 1e-6) -> SubgradientSet:
    """One-sided-slope subdifferential in x of a numerical solution or a closed form."""
    if isinstance(source, NumericalSolution):
        u = source.at(t)
        i = int(np.argmin(np.abs(source.x - x)))
        return numeric_subgradient_1d(u, i, source.grid.dx)
    vals = np.asarray(source(np.array([x - h, x, x + h]), t), dtype=float)
    return numeric_subgradient_1d(vals, 1, h)


def error_norms(solution: NumericalSolution, oracle, t: float, kink_margin: int = 20) -> tuple[float, float]:
    """(L1 over the grid, max error away from kinks of the reference).

    ``oracle`` is a ClosedFormOracle or another NumericalSolution on the same grid.
    """
    x = solution.x
    u = solution.at(t)
    if isinstance(oracle, NumericalSolution):
        ref = oracle.at(t)
        kinks = np.zeros(0)
    else:
        ref = np.asarray(oracle_eval(oracle, x, t), dtype=float)
        kinks = oracle_kinks(oracle, t)
    err = np.abs(u - ref)
    l1 = float(np.sum(err) * solution.grid.dx)
    mask = np.ones(x.size, dtype=bool)
    for k in kinks:
        mask &= np.abs(x - k) > kink_margin * solution.grid.dx
    linf = float(np.max(err[mask])) if np.any(mask) else 0.0
    return l1, linf
