"""Lipschitz initial data with exact subgradient sets.

Radial piecewise-linear data (tent, |x|, constants) carry their profile
g(rho), rho = |x|, so subdifferentials and the gradient statistics over balls
are computed exactly from the breakpoints.  Sampled 1D data are treated as
their piecewise-linear interpolant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .hamiltonians import as_point


@dataclass(frozen=True)
class SubgradientSet:
    """Empty set, closed segment [a, b] (possibly a point) or closed ball."""

    kind: str  # "empty" | "segment" | "ball"
    a: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    radius: float = 0.0

    @classmethod
    def empty(cls) -> "SubgradientSet":
        return cls("empty")

    @classmethod
    def point(cls, p) -> "SubgradientSet":
        p = np.atleast_1d(np.asarray(p, dtype=float))
        return cls("segment", p, p.copy())

    @classmethod
    def segment(cls, a, b) -> "SubgradientSet":
        return cls("segment", np.atleast_1d(np.asarray(a, dtype=float)), np.atleast_1d(np.asarray(b, dtype=float)))

    @classmethod
    def ball(cls, center, radius: float) -> "SubgradientSet":
        return cls("ball", np.atleast_1d(np.asarray(center, dtype=float)), None, float(radius))

    @property
    def is_empty(self) -> bool:
        return self.kind == "empty"

    @property
    def is_singleton(self) -> bool:
        if self.kind == "segment":
            return bool(np.array_equal(self.a, self.b))
        return self.kind == "ball" and self.radius == 0.0

    def min_norm_element(self) -> Optional[np.ndarray]:
        if self.kind == "empty":
            return None
        if self.kind == "ball":
            c = self.a
            nc = float(np.linalg.norm(c))
            if nc <= self.radius:
                return np.zeros_like(c)
            return c * (1.0 - self.radius / nc)
        d = self.b - self.a
        dd = float(d @ d)
        s = 0.0 if dd == 0 else min(1.0, max(0.0, -float(self.a @ d) / dd))
        return self.a + s * d

    @property
    def min_norm(self) -> float:
        e = self.min_norm_element()
        return math.inf if e is None else float(np.linalg.norm(e))

    @property
    def max_norm(self) -> float:
        if self.kind == "empty":
            return 0.0
        if self.kind == "ball":
            return float(np.linalg.norm(self.a)) + self.radius
        return max(float(np.linalg.norm(self.a)), float(np.linalg.norm(self.b)))

    def distance(self, p) -> float:
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if self.kind == "empty":
            return math.inf
        if self.kind == "ball":
            return max(0.0, float(np.linalg.norm(p - self.a)) - self.radius)
        d = self.b - self.a
        dd = float(d @ d)
        s = 0.0 if dd == 0 else min(1.0, max(0.0, float((p - self.a) @ d) / dd))
        return float(np.linalg.norm(p - (self.a + s * d)))


@dataclass(frozen=True)
class GradientStats:
    inf_norm: float
    sup_norm: float
    radius_used: float
    delta: float
    empty: bool = False


@dataclass(frozen=True)
class InitialDatum:
    dimension: int
    eval: Callable
    subgradient_set: Callable
    lipschitz: float
    kind: str = "custom"
    # radial piecewise-linear profile: breakpoints 0 = r_0 < r_1 < ... and slopes per piece
    breakpoints: Optional[tuple] = None
    slopes: Optional[tuple] = None
    value_at_origin: float = 0.0
    # sampled 1D data
    grid: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None

    def __call__(self, x):
        return self.eval(x)

    @property
    def radial(self) -> bool:
        return self.breakpoints is not None

    def profile(self, rho):
        """Radial profile g(rho) for radial data."""
        return _eval_profile(self, np.asarray(rho, dtype=float))


def _profile_knots(datum):
    r = np.asarray(datum.breakpoints, dtype=float)
    s = np.asarray(datum.slopes, dtype=float)
    vals = datum.value_at_origin + np.concatenate([[0.0], np.cumsum(np.diff(r) * s[:-1])])
    return r, vals


def _eval_profile(datum, rho):
    r, vals = _profile_knots(datum)
    s = np.asarray(datum.slopes, dtype=float)
    k = np.clip(np.searchsorted(r, rho, side="right") - 1, 0, len(r) - 1)
    return vals[k] + s[k] * (rho - r[k])


def _radial_datum(kind: str, dimension: int, breakpoints, slopes, value_at_origin: float) -> InitialDatum:
    n = int(dimension)
    r = tuple(float(v) for v in breakpoints)
    s = tuple(float(v) for v in slopes)
    if r[0] != 0.0 or len(s) != len(r) or any(b <= a for a, b in zip(r, r[1:])):
        raise ValueError("breakpoints must start at 0 and increase; one slope per piece")
    proto = InitialDatum(n, None, None, 0.0, kind, r, s, float(value_at_origin))

    def ev(x):
        x = np.asarray(x, dtype=float)
        if n == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            return _eval_profile(proto, np.abs(x))
        return _eval_profile(proto, np.linalg.norm(as_point(x, n), axis=-1))

    def sub(x):
        x = as_point(x, n)
        rho = float(np.linalg.norm(x))
        if rho == 0.0:
            s0 = s[0]
            if s0 >= 0:
                return SubgradientSet.ball(np.zeros(n), s0)
            return SubgradientSet.empty()
        e = x / rho
        if rho in r:
            k = r.index(rho)
            left, right = s[k - 1], s[k]
            if left > right:
                return SubgradientSet.empty()
            return SubgradientSet.segment(left * e, right * e)
        k = int(np.searchsorted(r, rho, side="right") - 1)
        return SubgradientSet.point(s[k] * e)

    return InitialDatum(n, ev, sub, max(abs(v) for v in s), kind, r, s, float(value_at_origin))


def make_cone_datum(dimension: int = 1) -> InitialDatum:
    """Tent u0(x) = max{1 - |x|, 0}."""
    if int(dimension) < 1:
        raise ValueError("dimension must be >= 1")
    return _radial_datum("cone", dimension, (0.0, 1.0), (-1.0, 0.0), 1.0)


def make_abs_datum(dimension: int = 1) -> InitialDatum:
    return _radial_datum("abs", dimension, (0.0,), (1.0,), 0.0)


def make_constant_datum(k: float = 0.0, dimension: int = 1) -> InitialDatum:
    return _radial_datum("constant" if k else "zero", dimension, (0.0,), (0.0,), float(k))


def make_sampled_datum(grid: Sequence[float], values: Sequence[float]) -> InitialDatum:
    """1D datum from values on a uniform grid, extended by its piecewise-linear interpolant.

    Outside the grid the end slopes continue linearly.
    """
    g = np.asarray(grid, dtype=float)
    v = np.asarray(values, dtype=float)
    if g.ndim != 1 or g.shape != v.shape or g.size < 3:
        raise ValueError("need matching 1D grid and values with at least 3 points")
    dx = np.diff(g)
    if not np.allclose(dx, dx[0], rtol=1e-9, atol=0):
        raise ValueError("sampled datum requires a uniform grid")
    slopes = np.diff(v) / dx

    def ev(x):
        x = np.asarray(x, dtype=float)
        if x.ndim > 0 and x.shape[-1] == 1:
            x = x[..., 0]
        out = np.interp(x, g, v)
        lo, hi = x < g[0], x > g[-1]
        out = np.where(lo, v[0] + slopes[0] * (x - g[0]), out)
        return np.where(hi, v[-1] + slopes[-1] * (x - g[-1]), out)

    def sub(x):
        x = float(np.asarray(x, dtype=float).reshape(-1)[0])
        if x <= g[0]:
            return SubgradientSet.point(slopes[0]) if x < g[0] else _node_set(slopes[0], slopes[0])
        if x >= g[-1]:
            return SubgradientSet.point(slopes[-1])
        i = int(np.searchsorted(g, x, side="right") - 1)
        if x == g[i]:
            return _node_set(slopes[i - 1], slopes[i])
        return SubgradientSet.point(slopes[i])

    return InitialDatum(1, ev, sub, float(np.max(np.abs(slopes))), "samples", grid=g, values=v)


def make_datum(kind: str, dimension: int = 1, **params) -> InitialDatum:
    """Config-level constructor: cone, zero, constant(k), abs, samples."""
    if kind == "cone":
        return make_cone_datum(dimension)
    if kind == "zero":
        return make_constant_datum(0.0, dimension)
    if kind == "constant":
        return make_constant_datum(float(params.get("k", 0.0)), dimension)
    if kind == "abs":
        return make_abs_datum(dimension)
    if kind == "samples":
        return make_sampled_datum(params["grid"], params["values"])
    raise ValueError(f"unknown datum kind {kind!r}")


def _node_set(left: float, right: float, tol: float = 1e-9) -> SubgradientSet:
    if left <= right:
        return SubgradientSet.segment(left, right)
    if left - right <= tol * (1.0 + abs(left) + abs(right)):
        # round-off on data that is linear through the node
        mid = 0.5 * (left + right)
        return SubgradientSet.point(mid)
    return SubgradientSet.empty()


def numeric_subgradient_1d(values, index: int, dx: float) -> SubgradientSet:
    """One-sided-slope subdifferential [sL, sR] at an interior grid node, empty if sL > sR."""
    f = np.asarray(values, dtype=float)
    if not 0 < index < f.size - 1:
        raise IndexError(f"index {index} is not an interior node")
    s_left = (f[index] - f[index - 1]) / dx
    s_right = (f[index + 1] - f[index]) / dx
    return _node_set(s_left, s_right)


# ---------------------------------------------------------------------------
# norms of subgradients over balls


class _NormCollector:
    def __init__(self):
        self.lo = math.inf
        self.hi = 0.0
        self.seen = False

    def add(self, lo, hi):
        self.seen = True
        self.lo = min(self.lo, lo)
        self.hi = max(self.hi, hi)


def _interval_norms(a: float, b: float):
    lo = 0.0 if a <= 0.0 <= b else min(abs(a), abs(b))
    return lo, max(abs(a), abs(b))


def _radial_norms(datum: InitialDatum, rho_lo: float, rho_hi: float, lo_open: bool, hi_open: bool,
                  origin: bool) -> _NormCollector:
    r, s = datum.breakpoints, datum.slopes
    out = _NormCollector()
    if origin and s[0] >= 0:
        out.add(0.0, s[0])

    def inside(v):
        above = v > rho_lo if lo_open else v >= rho_lo
        below = v < rho_hi if hi_open else v <= rho_hi
        return above and below

    for k in range(1, len(r)):
        if r[k] > 0 and inside(r[k]) and s[k - 1] <= s[k]:
            out.add(*_interval_norms(s[k - 1], s[k]))
    for k in range(len(s)):
        a = r[k]
        b = r[k + 1] if k + 1 < len(r) else math.inf
        if max(a, rho_lo) < min(b, rho_hi):
            out.add(abs(s[k]), abs(s[k]))
        elif rho_lo == rho_hi and a < rho_lo < b:
            out.add(abs(s[k]), abs(s[k]))
    return out


def _sampled_norms(datum: InitialDatum, lo: float, hi: float, lo_open: bool, hi_open: bool) -> _NormCollector:
    g = datum.grid
    slopes = np.diff(datum.values) / np.diff(g)
    ext_s = np.concatenate([[slopes[0]], slopes, [slopes[-1]]])
    ext_k = np.concatenate([[-math.inf], g, [math.inf]])
    out = _NormCollector()
    for k in range(1, len(ext_k) - 1):
        node = ext_k[k]
        ok = (node > lo if lo_open else node >= lo) and (node < hi if hi_open else node <= hi)
        if ok and ext_s[k - 1] <= ext_s[k] + 1e-9 * (1 + abs(ext_s[k - 1]) + abs(ext_s[k])):
            out.add(*_interval_norms(min(ext_s[k - 1], ext_s[k]), max(ext_s[k - 1], ext_s[k])))
    for k in range(len(ext_s)):
        a, b = ext_k[k], ext_k[k + 1]
        if max(a, lo) < min(b, hi) or (lo == hi and a < lo < b):
            out.add(abs(ext_s[k]), abs(ext_s[k]))
    return out


def _sampled_by_scan(datum: InitialDatum, center: float, radius: float) -> _NormCollector:
    n_pts = max(3, int(math.ceil(2.0 / 1e-3)) + 1)
    xs = np.linspace(center - radius, center + radius, n_pts) if radius > 0 else np.array([center])
    out = _NormCollector()
    for x in xs:
        d = datum.subgradient_set(x)
        if not d.is_empty:
            out.add(d.min_norm, d.max_norm)
    return out


def _collect(datum: InitialDatum, center, radius: float, closed: bool) -> _NormCollector:
    c = as_point(center, datum.dimension)
    if datum.radial:
        dc = float(np.linalg.norm(c))
        if closed:
            origin = dc <= radius
            return _radial_norms(datum, max(0.0, dc - radius), dc + radius, False, False, origin)
        origin = dc < radius
        lo = max(0.0, dc - radius)
        return _radial_norms(datum, lo, dc + radius, not origin, True, origin)
    if datum.grid is not None:
        x = float(c[0])
        return _sampled_norms(datum, x - radius, x + radius, not closed, not closed)
    if datum.dimension != 1:
        raise NotImplementedError("only radial data are supported in dimension > 1")
    return _sampled_by_scan(datum, float(c[0]), radius)


def theta_on_ball(datum: InitialDatum, x0, r: float) -> Optional[float]:
    """Largest theta with |p| >= theta for all p in D^-u0(x), x in the open ball B_r(x0).

    Points with empty subdifferential impose nothing.  Returns None when theta = 0.
    """
    if not r > 0:
        raise ValueError("r must be positive")
    col = _collect(datum, x0, r, closed=False)
    if not col.seen or col.lo <= 0.0:
        return None
    return float(col.lo)


def gradient_stats_on_ball(datum: InitialDatum, center, radius: float, delta: float = 0.0) -> GradientStats:
    """inf and sup of |p| over D^-u0(y), y in the closed ball of radius ``radius + delta``."""
    if radius < 0 or delta < 0:
        raise ValueError("radius and delta must be nonnegative")
    col = _collect(datum, center, radius + delta, closed=True)
    if not col.seen:
        return GradientStats(math.inf, 0.0, radius, delta, empty=True)
    return GradientStats(float(col.lo), float(col.hi), radius, delta)
