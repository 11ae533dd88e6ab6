"""Closed-form gradient lower/upper bounds, dependence domains and vanish times.

All functions take a :class:`StructuralConstants` (directly or through
:class:`BoundInputs`).  Negative bound values are returned unclamped;
``None`` marks a bound that is undefined (negative radicand, or no vanish time).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .hamiltonians import StructuralConstants
from .initial_data import GradientStats


@dataclass(frozen=True)
class BoundInputs:
    constants: StructuralConstants
    theta: float
    horizon_T: float = 1.0
    t0: Optional[float] = None

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError("theta must be positive")
        if not self.horizon_T > 0:
            raise ValueError("horizon_T must be positive")
        if self.t0 is not None and not 0 < self.t0 <= self.horizon_T:
            raise ValueError("t0 must lie in (0, horizon_T]")


@dataclass(frozen=True)
class DependenceDomain:
    x0: np.ndarray
    r: float
    constants: StructuralConstants

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("r must be positive")
        object.__setattr__(self, "x0", np.atleast_1d(np.asarray(self.x0, dtype=float)))


def _check_t(t: float) -> float:
    t = float(t)
    if t < 0 or math.isnan(t):
        raise ValueError("t must be nonnegative")
    return t


def _norm(x) -> float:
    return float(np.linalg.norm(np.atleast_1d(np.asarray(x, dtype=float))))


def _radius(a2: float, b2: float, x, t: float) -> float:
    t = _check_t(t)
    if t == 0:
        return 0.0
    z = a2 * t
    if z == 0:
        return b2 * t
    # b2 t expm1(z)/z avoids b2/a2 overflowing for tiny a2
    return b2 * t * (math.expm1(z) / z) + _norm(x) * math.expm1(z)


def radius_R(constants: StructuralConstants, x, t: float) -> float:
    """Propagation radius: (B2/A2 + |x|)(e^{A2 t} - 1), or B2 t when A2 = 0."""
    return _radius(constants.a2, constants.b2, x, t)


def radius_R_eps(constants: StructuralConstants, epsilon: float, x, t: float) -> float:
    """Propagation radius of the mollified Hamiltonian (B2 replaced by B2 + eps)."""
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    return _radius(constants.a2, constants.b2 + epsilon, x, t)


def in_domain_E(domain: DependenceDomain, x, t: float) -> bool:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return radius_R(domain.constants, x, t) + _norm(x - domain.x0) < domain.r


def in_domain_D(domain: DependenceDomain, x, t: float) -> bool:
    c = domain.constants
    t = _check_t(t)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    rate = c.a2 + c.b2 + c.a2 * _norm(domain.x0)
    return math.exp(rate * t) * (1.0 + _norm(x - domain.x0)) < domain.r + 1.0


def _kappa(c: StructuralConstants) -> float:
    return (c.beta / 2.0 + 2.0) * c.c1 + 2.0 * c.k3


def lower_l_radicand(inputs: BoundInputs, t: float) -> float:
    c = inputs.constants
    t = _check_t(t)
    return inputs.theta ** 2 * math.exp(-_kappa(c) * t) - 2.0 * c.c1 * c.beta * t


def lower_l(inputs: BoundInputs, t: float) -> Optional[float]:
    c = inputs.constants
    t = _check_t(t)
    if c.degenerate:
        return inputs.theta
    rad = lower_l_radicand(inputs, t)
    return math.sqrt(rad) if rad >= 0 else None


def _decay(c1: float, k: float, beta: float, theta: float, t: float) -> float:
    # theta e^{-(c1+k)t} - (c1 beta/(c1+k)) (1 - e^{-(c1+k)t})
    a = c1 + k
    if a == 0:
        return theta - c1 * beta * t
    return theta * math.exp(-a * t) + (c1 * beta / a) * math.expm1(-a * t)


def lower_L(inputs: BoundInputs, t: float) -> float:
    c = inputs.constants
    t = _check_t(t)
    if c.degenerate:
        return inputs.theta
    return _decay(c.c1, c.k3, c.beta, inputs.theta, t)


def lower_ley(inputs: BoundInputs, t: float, t0: Optional[float] = None) -> Optional[float]:
    """Bound for u-independent Hamiltonians, valid for t < t0."""
    c = inputs.constants
    t = _check_t(t)
    t0 = inputs.t0 if t0 is None else float(t0)
    if t0 is None:
        raise ValueError("t0 required")
    rad = inputs.theta ** 2 - 2.0 * c.beta * c.c1 * math.exp(2.5 * c.c1 * inputs.horizon_T) * t0
    if rad <= 0:
        return None
    return math.exp(-1.25 * c.c1 * t) * math.sqrt(rad)


def lower_sharpened(inputs: BoundInputs, t: float) -> Optional[float]:
    """Like lower_l, with the linear-in-t loss replaced by its exact exponential integral."""
    c = inputs.constants
    t = _check_t(t)
    kap = _kappa(c)
    if kap == 0:
        return inputs.theta
    coef = 4.0 * c.beta * c.c1 / ((c.beta + 4.0) * c.c1 + 4.0 * c.k3)
    rad = inputs.theta ** 2 * math.exp(-kap * t) + coef * math.expm1(-kap * t)
    return math.sqrt(rad) if rad >= 0 else None


def two_sided_bounds(stats: GradientStats, constants: StructuralConstants, t: float) -> tuple[float, float]:
    """Lower/upper envelope for |p| given inf/sup of |D u0| over the backward ball."""
    c = constants
    t = _check_t(t)
    if c.degenerate:
        return stats.inf_norm, stats.sup_norm
    a = c.c1 + c.k3
    w = c.c1 * c.beta / a
    lower = stats.inf_norm * math.exp(-a * t) + w * math.expm1(-a * t)
    upper = stats.sup_norm * math.exp(a * t) + w * math.expm1(a * t)
    return lower, upper


def _lam(c: StructuralConstants) -> float:
    if c.lam is None:
        raise ValueError("constants carry no lambda")
    return float(c.lam)


def special_M(inputs: BoundInputs, t: float) -> float:
    """Bound for H = lambda u + H0(x, p)."""
    c = inputs.constants
    t = _check_t(t)
    return _decay(c.c1, _lam(c), c.beta, inputs.theta, t)


def special_m(inputs: BoundInputs, t: float) -> float:
    """Bound for H = lambda u + H0 with H0 positively homogeneous in p."""
    c = inputs.constants
    t = _check_t(t)
    lam = _lam(c)
    return inputs.theta * math.exp(-(c.c1 + lam) * t) - c.beta * (math.exp(-lam * t) - math.exp(-(c.c1 + lam) * t))


def vanish_time_L(inputs: BoundInputs) -> Optional[float]:
    c = inputs.constants
    if c.beta == 0 or c.c1 == 0:
        return None
    a = c.c1 + c.k3
    return math.log1p(inputs.theta * a / (c.c1 * c.beta)) / a


def vanish_time_l(inputs: BoundInputs, tol: float = 1e-12) -> Optional[float]:
    """First zero of the radicand of lower_l, by bisection (the radicand is decreasing)."""
    c = inputs.constants
    if c.beta == 0 or c.c1 == 0:
        return None
    f = lambda s: lower_l_radicand(inputs, s)
    hi = min(10.0 / (c.c1 + c.k3 + 1.0), 1e3)
    while f(hi) > 0:
        if hi >= 1e3:
            raise RuntimeError("no sign change of the lower_l radicand below t = 1e3")
        hi = min(2.0 * hi, 1e3)
    lo = 0.0
    # bisect to float resolution (well below tol) and keep the side where l is defined
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) >= 0:
            lo = mid
        else:
            hi = mid
    assert hi - lo <= tol
    return lo


def compare_F(inputs: BoundInputs, t: float) -> float:
    """L(t)^2 - l(t)^2 (using the radicand for l^2, so it is defined past t_l too)."""
    c = inputs.constants
    if c.degenerate:
        return 0.0
    return lower_L(inputs, t) ** 2 - lower_l_radicand(inputs, t)


def bounds_table(inputs: BoundInputs, ts) -> list[dict]:
    """Rows of every applicable bound at the times ``ts`` (None where undefined)."""
    c = inputs.constants
    rows = []
    for t in ts:
        t = float(t)
        row = {
            "t": t,
            "l": lower_l(inputs, t),
            "L": lower_L(inputs, t),
            "sharpened": lower_sharpened(inputs, t),
            "ley": None,
            "M": None,
            "m": None,
            "F": compare_F(inputs, t),
        }
        if inputs.t0 is not None and c.k3 == 0:
            row["ley"] = lower_ley(inputs, t)
        if c.lam is not None:
            row["M"] = special_M(inputs, t)
            row["m"] = special_m(inputs, t)
        rows.append(row)
    return rows
