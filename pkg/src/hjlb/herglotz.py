"""Herglotz-type variational representation of the solution.

Along a curve xi the value u_xi solves u_xi' = L(xi, s, u_xi, xi') and the
solution is the infimum of u_xi(t) over curves ending at x with
u_xi(0) = u0(xi(0)).  Curves here are piecewise linear on a uniform partition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from ._report import Report, leq
from .hamiltonians import HamiltonianModel, legendre_transform
from .initial_data import InitialDatum

SEED = 0x48454A


@dataclass(frozen=True)
class Curve:
    times: np.ndarray
    nodes: np.ndarray  # (m+1, n)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing with at least 2 entries")
        if nodes.shape[0] != times.size:
            raise ValueError("one node per time required")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, t: float, nodes) -> "Curve":
        nodes = np.asarray(nodes, dtype=float)
        return cls(np.linspace(0.0, t, nodes.shape[0]), nodes)

    @property
    def velocities(self) -> np.ndarray:
        return np.diff(self.nodes, axis=0) / np.diff(self.times)[:, None]

    def at(self, s: float) -> np.ndarray:
        return np.array([np.interp(s, self.times, self.nodes[:, d]) for d in range(self.nodes.shape[1])])

    def restrict(self, tau: float) -> "Curve":
        """The part of the curve on [tau, t] (tau < t)."""
        if not self.times[0] <= tau < self.times[-1]:
            raise ValueError("tau outside the curve's time range")
        keep = self.times > tau
        return Curve(np.concatenate([[tau], self.times[keep]]), np.vstack([self.at(tau), self.nodes[keep]]))


@dataclass(frozen=True)
class ActionResult:
    action: float
    u_trajectory: Optional[np.ndarray]
    feasible: bool
    u_end: float = math.nan


class InfeasibleCurve(ValueError):
    pass


def _lagrangian(model: HamiltonianModel, x, s, u, q) -> float:
    if model.running_cost is not None and model.constants.lam is not None:
        return float(model.running_cost(q)) - model.constants.lam * float(u)
    return legendre_transform(model, x, s, u, q).value


def _segment_feasible(model: HamiltonianModel, x, s, q) -> bool:
    return math.isfinite(_lagrangian(model, x, s, 0.0, q))


def is_feasible(model: HamiltonianModel, curve: Curve) -> bool:
    v = curve.velocities
    return all(_segment_feasible(model, curve.nodes[k], curve.times[k], v[k]) for k in range(v.shape[0]))


def _integrate_segment(model, a, q, s0, ds, u, substeps, record=None):
    h = ds / substeps
    f = lambda s, uu: _lagrangian(model, a + (s - s0) * q, s, uu, q)
    for j in range(substeps):
        s = s0 + j * h
        k1 = f(s, u)
        k2 = f(s + 0.5 * h, u + 0.5 * h * k1)
        k3 = f(s + 0.5 * h, u + 0.5 * h * k2)
        k4 = f(s + h, u + h * k3)
        u = u + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if record is not None:
            record.append((s + h, u))
    return u


def caratheodory_solve(model: HamiltonianModel, curve: Curve, u_start: float, h_max: float = 0.01) -> np.ndarray:
    """u_xi at the curve nodes, by RK4 with piecewise-constant velocity per segment."""
    if not is_feasible(model, curve):
        raise InfeasibleCurve("a segment velocity leaves the domain of L")
    v = curve.velocities
    out = np.empty(curve.times.size)
    out[0] = u = float(u_start)
    for k in range(v.shape[0]):
        ds = curve.times[k + 1] - curve.times[k]
        u = _integrate_segment(model, curve.nodes[k], v[k], curve.times[k], ds, u, max(1, math.ceil(ds / h_max)))
        out[k + 1] = u
    return out


def action(model: HamiltonianModel, datum: InitialDatum, curve: Curve, h_max: float = 2e-4) -> ActionResult:
    """J = u0(xi(0)) + int_0^t L ds by the trapezoid rule on the Caratheodory trajectory."""
    if not is_feasible(model, curve):
        return ActionResult(math.inf, None, False)
    v = curve.velocities
    u0 = float(np.asarray(datum(curve.nodes[0])).reshape(-1)[0])
    u = u0
    integral = 0.0
    nodes_u = [u0]
    for k in range(v.shape[0]):
        s0 = curve.times[k]
        ds = curve.times[k + 1] - s0
        sub = max(1, math.ceil(ds / h_max))
        rec = [(s0, u)]
        u = _integrate_segment(model, curve.nodes[k], v[k], s0, ds, u, sub, rec)
        ss = np.array([r[0] for r in rec])
        ls = np.array([_lagrangian(model, curve.nodes[k] + (s - s0) * v[k], s, uu, v[k]) for s, uu in rec])
        integral += float(np.sum(0.5 * (ls[1:] + ls[:-1]) * np.diff(ss)))
        nodes_u.append(u)
    return ActionResult(u0 + integral, np.array(nodes_u), True, u)


# ---------------------------------------------------------------------------
# minimization over curves


def _fast_value(model: HamiltonianModel, datum: InitialDatum, times, nodes) -> float:
    """u_xi(t) for u_xi(0) = u0(xi(0)); exact per segment when L = l(q) - lam u."""
    dt = np.diff(times)
    v = np.diff(nodes, axis=0) / dt[:, None]
    u = float(np.asarray(datum(nodes[0])).reshape(-1)[0])
    if model.running_cost is not None and model.constants.lam is not None:
        lam = model.constants.lam
        for k in range(v.shape[0]):
            cost = float(model.running_cost(v[k]))
            if not math.isfinite(cost):
                return math.inf
            if lam == 0:
                u = u + cost * dt[k]
            else:
                e = math.exp(-lam * dt[k])
                u = e * u + cost * (1.0 - e) / lam
        return u
    try:
        return float(caratheodory_solve(model, Curve(times, nodes), u, h_max=0.05)[-1])
    except InfeasibleCurve:
        return math.inf


def _reach(model: HamiltonianModel, datum: InitialDatum, t: float) -> float:
    if model.velocity_bound is not None:
        return model.velocity_bound * t
    return 2.0 * (datum.lipschitz + 1.0) * t + 0.5


def _datum_argmin(datum: InitialDatum, x: np.ndarray, radius: float) -> np.ndarray:
    """Global minimizer of u0 over the closed ball B_radius(x) (dense scan)."""
    n = x.size
    if radius == 0:
        return x.copy()
    if n == 1:
        ys = x[0] + np.linspace(-radius, radius, 4001)
        return np.array([ys[int(np.argmin(np.asarray(datum(ys), dtype=float)))]])
    if datum.radial:
        rho = float(np.linalg.norm(x))
        e = x / rho if rho > 0 else np.eye(n)[0]
        rs = np.linspace(max(0.0, rho - radius), rho + radius, 4001)
        r_best = rs[int(np.argmin(datum.profile(rs)))]
        if rho > 0 and abs(r_best - rho) > radius:
            r_best = rho + math.copysign(radius, r_best - rho)
        # point at distance r_best from the origin nearest to x
        return e * r_best
    raise NotImplementedError("argmin over balls only for 1D or radial data")


def _coordinate_bounds(model, nodes, k, d, dt, span):
    """Interval for nodes[k, d] keeping adjacent segment speeds within the velocity bound."""
    cur = nodes[k, d]
    lo, hi = cur - span, cur + span
    c = model.velocity_bound
    if c is None:
        return lo, hi
    for j in (k - 1, k + 1):
        if 0 <= j < nodes.shape[0]:
            other = np.delete(nodes[k] - nodes[j], d)
            room = (c * dt) ** 2 * (1 - 1e-12) - float(other @ other)
            if room < 0:
                return cur, cur
            w = math.sqrt(room)
            lo, hi = max(lo, nodes[j, d] - w), min(hi, nodes[j, d] + w)
    if lo > hi:
        return cur, cur
    return lo, hi


def _descend(model, datum, times, nodes, span, tol=1e-10, max_sweeps=300):
    nodes = nodes.copy()
    dt = times[1] - times[0]
    best = _fast_value(model, datum, times, nodes)
    m, n = nodes.shape[0] - 1, nodes.shape[1]
    for _ in range(max_sweeps):
        before = best
        for k in range(m):  # node m is pinned at x
            for d in range(n):
                lo, hi = _coordinate_bounds(model, nodes, k, d, dt, span)
                if hi - lo <= 1e-14:
                    continue
                trial = nodes.copy()

                def f(z):
                    trial[k, d] = z
                    return _fast_value(model, datum, times, trial)

                res = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
                for z, val in ((res.x, res.fun), (lo, f(lo)), (hi, f(hi))):
                    if val < best - 1e-15:
                        best = val
                        nodes[k, d] = z
        if before - best < tol:
            break
    return best, nodes


def _joint_pass(model, datum, times, nodes):
    """Quasi-Newton pass over all free nodes at once (unconstrained velocities only)."""
    m, n = nodes.shape[0] - 1, nodes.shape[1]
    last = nodes[m:]

    def f(z):
        return _fast_value(model, datum, times, np.vstack([z.reshape(m, n), last]))

    res = minimize(f, nodes[:m].ravel(), method="L-BFGS-B", options={"maxiter": 500})
    if res.fun <= f(nodes[:m].ravel()):
        return np.vstack([res.x.reshape(m, n), last])
    return nodes


def value_function(model: HamiltonianModel, datum: InitialDatum, x, t: float, nodes: int = 8,
                   restarts: int = 4, seed: int = SEED, seed_curves=None) -> tuple[float, Curve]:
    """Minimize u_xi(t) over piecewise-linear curves with ``nodes`` interior nodes and a free start.

    Starts: the constant curve, the straight line to the minimizer of u0 within
    reach, ``restarts - 2`` random curves and any ``seed_curves`` given (node
    arrays on the same partition).  Each start is polished by coordinate descent.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    if not model.convex_in_p:
        raise ValueError("the representation needs H convex in p")
    if model.running_cost is None and model.lagrangian is not None and model.kind.startswith("transport"):
        raise NotImplementedError("the Lagrangian of a transport Hamiltonian is finite only on a single velocity")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = x.size
    m = int(nodes) + 1
    times = np.linspace(0.0, float(t), m + 1)
    reach = _reach(model, datum, t)
    span = reach if model.velocity_bound is None else reach + 1e-12
    frac = (times / t)[:, None]

    seeds = [np.tile(x, (m + 1, 1))]
    y = _datum_argmin(datum, x, reach)
    seeds.append(y + frac * (x - y))
    rng = np.random.default_rng(seed)
    c = model.velocity_bound
    for _ in range(max(0, int(restarts) - 2)):
        pts = np.empty((m + 1, n))
        pts[m] = x
        step = (c * (t / m)) if c is not None else reach / m
        for k in range(m - 1, -1, -1):
            d = rng.normal(size=n)
            d /= np.linalg.norm(d)
            pts[k] = pts[k + 1] + d * step * rng.uniform(0.0, 1.0) * (1 - 1e-9)
        seeds.append(pts)

    for extra in seed_curves or ():
        seeds.append(np.asarray(extra.nodes if isinstance(extra, Curve) else extra, dtype=float).reshape(m + 1, n))

    results = []
    for s0 in seeds:
        if not math.isfinite(_fast_value(model, datum, times, s0)):
            continue
        if c is None:
            s0 = _joint_pass(model, datum, times, s0)
        val, pts = _descend(model, datum, times, s0, span)
        results.append((val, tuple(pts.ravel()), pts))
    if not results:
        raise InfeasibleCurve("no feasible starting curve")
    results.sort(key=lambda r: (r[0], r[1]))
    val, _, pts = results[0]
    return float(val), Curve(times, pts)


def dpp_check(model: HamiltonianModel, datum: InitialDatum, x, t: float, curve: Curve, tau: float,
              minimizer: bool = False, nodes: int = 8, restarts: int = 4) -> Report:
    """u(x, t) <= u_xi(t) where u_xi' = L along the curve on [tau, t] and u_xi(tau) = u(xi(tau), tau)."""
    if not 0 <= tau <= t:
        raise ValueError("need 0 <= tau <= t")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.allclose(curve.nodes[-1], x, atol=1e-12):
        raise ValueError("curve must end at x")
    rep = Report()
    if tau == t:
        rep.add(leq("dpp", 0.0, 0.0, 1e-6))
        return rep
    u_xt, _ = value_function(model, datum, x, t, nodes, restarts)
    y = curve.at(tau)
    if tau == 0:
        u_tau = float(np.asarray(datum(y)).reshape(-1)[0])
    else:
        u_tau, _ = value_function(model, datum, y, tau, nodes, restarts)
    u_end = float(caratheodory_solve(model, curve.restrict(tau), u_tau)[-1])
    rep.add(leq("dpp", u_xt, u_end, 1e-6))
    if minimizer:
        rep.add(leq("dpp_equality", u_end - u_xt, 0.0, 1e-4))
    rep.notes.append(f"slack {u_end - u_xt:.3e}")
    return rep


def check_semiconcavity(values, dx: float, t: float, factor: float = 10.0) -> Report:
    """Discrete second differences of a value-function slice against factor * (2/t) dx^2."""
    v = np.asarray(values, dtype=float)
    d2 = v[2:] - 2.0 * v[1:-1] + v[:-2]
    rep = Report()
    rep.add(leq("semiconcavity", float(np.max(d2)), factor * 2.0 / t * dx * dx, 1e-12))
    return rep
