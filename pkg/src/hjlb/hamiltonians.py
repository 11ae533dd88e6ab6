"""Hamiltonians H(x, t, u, p), their structural constants and Legendre transforms.

Points ``x`` and covectors ``p`` carry the space dimension on their last axis;
``t`` and ``u`` broadcast against the leading axes.  Every built-in evaluator is
vectorised this way, so the grid solver can call it on whole arrays.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar

Array = np.ndarray

KINDS = ("transport_plus", "transport_minus", "transport_neg_u", "eikonal", "quadratic", "zero")

_ALIASES = {
    "transport+": "transport_plus",
    "transport-": "transport_minus",
    "transport-negu": "transport_neg_u",
    "transport_negu": "transport_neg_u",
}


@dataclass(frozen=True)
class StructuralConstants:
    """Constants of the Lipschitz-type hypotheses on H.

    ``|H(x,.)-H(y,.)| <= c1 (beta + |p|) |x-y|``,
    ``|H(.,p)-H(.,q)| <= (a2 |x| + b2) |p-q|``,
    ``|H(.,u,.)-H(.,v,.)| <= k3 |u-v|``.
    ``lam`` is set when H = lam * u + H0(x, t, p).
    """

    c1: float = 0.0
    beta: int = 0
    a2: float = 0.0
    b2: float = 0.0
    k3: float = 0.0
    lam: Optional[float] = None

    def __post_init__(self):
        for name in ("c1", "a2", "b2", "k3"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")
        if self.beta not in (0, 1):
            raise ValueError(f"beta must be 0 or 1, got {self.beta}")
        if self.lam is not None and not math.isclose(self.k3, abs(self.lam)):
            raise ValueError("k3 must equal |lam| when lam is given")

    @property
    def degenerate(self) -> bool:
        """True in the (C1, K3) = (0, 0) case."""
        return self.c1 == 0 and self.k3 == 0


@dataclass(frozen=True)
class LagrangianValue:
    value: float
    maximizer_p: Optional[Array] = None
    approximate: bool = False

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)


@dataclass(frozen=True)
class HamiltonianModel:
    dimension: int
    eval: Callable
    grad_x: Callable
    grad_p: Callable
    grad_u: Callable
    constants: StructuralConstants
    convex_in_p: bool = True
    positively_homogeneous: bool = False
    kind: str = "custom"
    params: dict = field(default_factory=dict)
    # u-free part H0(x, t, p) when H = lam * u + H0
    h0: Optional[Callable] = None
    # closed-form Legendre transform (x, t, u, q) -> LagrangianValue
    lagrangian: Optional[Callable] = None
    # L = running_cost(q) - lam * u with a running cost independent of (x, t)
    running_cost: Optional[Callable] = None
    # |q| bound of the effective domain of L (eikonal)
    velocity_bound: Optional[float] = None
    # D_p H undefined at p = 0
    kink_at_zero: bool = False
    # H affine in (x, u, p) jointly; mollification leaves it unchanged
    affine: bool = False

    def __call__(self, x, t, u, p):
        n = self.dimension
        return self.eval(as_point(x, n), t, u, as_point(p, n))

    def is_singular(self, p) -> bool:
        """Whether ``p`` sits on the kink where D_p H is undefined."""
        if not self.kink_at_zero:
            return False
        return bool(np.any(np.linalg.norm(np.atleast_1d(p), axis=-1) == 0.0))


def as_point(a, dimension: int) -> Array:
    a = np.asarray(a, dtype=float)
    if a.ndim == 0:
        if dimension != 1:
            raise ValueError("scalar given for a point in dimension > 1")
        a = a.reshape(1)
    if a.shape[-1] != dimension:
        raise ValueError(f"expected trailing dimension {dimension}, got shape {a.shape}")
    return a


def _dot(a, b):
    prod = np.asarray(a, dtype=float) * np.asarray(b, dtype=float)
    return prod if prod.ndim == 0 else np.sum(prod, axis=-1)


def _norm(a):
    a = np.asarray(a, dtype=float)
    return np.abs(a) if a.ndim == 0 else np.linalg.norm(a, axis=-1)


def _full_like_u(value, t, u, p):
    shape = np.broadcast_shapes(np.shape(t), np.shape(u), np.shape(p)[:-1])
    return np.full(shape, float(value)) if shape else float(value)


def _transport(sign: float, lam: float, n: int, kind: str) -> HamiltonianModel:
    def h(x, t, u, p):
        return lam * np.asarray(u, dtype=float) + sign * _dot(x, p)

    def h0(x, t, p):
        return sign * _dot(x, p)

    def gx(x, t, u, p):
        return sign * np.broadcast_to(np.asarray(p, dtype=float), np.broadcast_shapes(np.shape(x), np.shape(p))).copy()

    def gp(x, t, u, p):
        return sign * np.broadcast_to(np.asarray(x, dtype=float), np.broadcast_shapes(np.shape(x), np.shape(p))).copy()

    def gu(x, t, u, p):
        return _full_like_u(lam, t, u, p)

    def lag(x, t, u, q):
        x = as_point(x, n)
        q = as_point(q, n)
        if np.allclose(q, sign * x, rtol=0.0, atol=1e-12):
            # every p attains the sup when q = D_p H
            return LagrangianValue(-lam * float(u), np.zeros(n))
        return LagrangianValue(math.inf, None)

    return HamiltonianModel(
        dimension=n, eval=h, grad_x=gx, grad_p=gp, grad_u=gu,
        constants=StructuralConstants(c1=1.0, beta=0, a2=1.0, b2=0.0, k3=abs(lam), lam=lam),
        convex_in_p=True, positively_homogeneous=True, kind=kind, params={"lam": lam},
        h0=h0, lagrangian=lag, affine=True,
    )


def _eikonal(c: float, n: int) -> HamiltonianModel:
    def h(x, t, u, p):
        return np.asarray(u, dtype=float) + c * _norm(p)

    def h0(x, t, p):
        return c * _norm(p)

    def gx(x, t, u, p):
        return np.zeros(np.broadcast_shapes(np.shape(x), np.shape(p)))

    def gp(x, t, u, p):
        p = np.asarray(p, dtype=float)
        r = _norm(p)[..., None]
        with np.errstate(invalid="ignore", divide="ignore"):
            g = np.where(r > 0, c * p / np.where(r > 0, r, 1.0), 0.0)
        return np.broadcast_to(g, np.broadcast_shapes(np.shape(x), p.shape)).copy()

    def gu(x, t, u, p):
        return _full_like_u(1.0, t, u, p)

    def cost(q):
        return 0.0 if _norm(q) <= c * (1 + 1e-12) else math.inf

    def lag(x, t, u, q):
        q = as_point(q, n)
        if _norm(q) <= c * (1 + 1e-12):
            return LagrangianValue(-float(u), np.zeros(n))
        return LagrangianValue(math.inf, None)

    return HamiltonianModel(
        dimension=n, eval=h, grad_x=gx, grad_p=gp, grad_u=gu,
        constants=StructuralConstants(c1=0.0, beta=0, a2=0.0, b2=c, k3=1.0, lam=1.0),
        convex_in_p=True, positively_homogeneous=True, kind="eikonal", params={"c": c, "lam": 1.0},
        h0=h0, lagrangian=lag, running_cost=cost, velocity_bound=c, kink_at_zero=True,
    )


def _quadratic(lam: float, n: int) -> HamiltonianModel:
    def h(x, t, u, p):
        return lam * np.asarray(u, dtype=float) + 0.5 * _dot(p, p)

    def h0(x, t, p):
        return 0.5 * _dot(p, p)

    def gx(x, t, u, p):
        return np.zeros(np.broadcast_shapes(np.shape(x), np.shape(p)))

    def gp(x, t, u, p):
        return np.broadcast_to(np.asarray(p, dtype=float), np.broadcast_shapes(np.shape(x), np.shape(p))).copy()

    def gu(x, t, u, p):
        return _full_like_u(lam, t, u, p)

    def cost(q):
        return 0.5 * float(_dot(q, q))

    def lag(x, t, u, q):
        q = as_point(q, n)
        return LagrangianValue(0.5 * float(_dot(q, q)) - lam * float(u), q.copy())

    # |p|^2/2 is not globally Lipschitz in p: b2 = inf
    return HamiltonianModel(
        dimension=n, eval=h, grad_x=gx, grad_p=gp, grad_u=gu,
        constants=StructuralConstants(c1=0.0, beta=0, a2=0.0, b2=math.inf, k3=abs(lam), lam=lam),
        convex_in_p=True, positively_homogeneous=False, kind="quadratic", params={"lam": lam},
        h0=h0, lagrangian=lag, running_cost=cost,
    )


def _zero(n: int) -> HamiltonianModel:
    def h(x, t, u, p):
        return _full_like_u(0.0, t, u, p)

    def gvec(x, t, u, p):
        return np.zeros(np.broadcast_shapes(np.shape(x), np.shape(p)))

    def gu(x, t, u, p):
        return _full_like_u(0.0, t, u, p)

    def lag(x, t, u, q):
        q = as_point(q, n)
        if np.all(q == 0):
            return LagrangianValue(0.0, np.zeros(n))
        return LagrangianValue(math.inf, None)

    return HamiltonianModel(
        dimension=n, eval=h, grad_x=gvec, grad_p=gvec, grad_u=gu,
        constants=StructuralConstants(lam=0.0), convex_in_p=True, positively_homogeneous=True,
        kind="zero", params={"lam": 0.0}, h0=lambda x, t, p: 0.0 * _dot(x, p), lagrangian=lag,
        velocity_bound=0.0, affine=True,
    )


def normalize_kind(kind: str) -> str:
    k = _ALIASES.get(kind, kind)
    if k not in KINDS:
        raise ValueError(f"unknown Hamiltonian kind {kind!r}")
    return k


def make_builtin(kind: str, dimension: int = 1, c: float = 1.0, lam: float = 1.0) -> HamiltonianModel:
    """Built-in Hamiltonians.

    ``transport_plus``  H = u + <x, p>
    ``transport_minus`` H = u - <x, p>
    ``transport_neg_u`` H = -u + <x, p>
    ``eikonal``         H = u + c |p|
    ``quadratic``       H = lam u + |p|^2 / 2
    ``zero``            H = 0
    """
    kind = normalize_kind(kind)
    if int(dimension) < 1:
        raise ValueError("dimension must be >= 1")
    n = int(dimension)
    if kind == "transport_plus":
        return _transport(1.0, 1.0, n, kind)
    if kind == "transport_minus":
        return _transport(-1.0, 1.0, n, kind)
    if kind == "transport_neg_u":
        return _transport(1.0, -1.0, n, kind)
    if kind == "eikonal":
        if not c > 0:
            raise ValueError(f"eikonal speed c must be positive, got {c}")
        return _eikonal(float(c), n)
    if kind == "quadratic":
        return _quadratic(float(lam), n)
    return _zero(n)


# ---------------------------------------------------------------------------
# Legendre transform


def _golden_max(f, lo, hi, xatol):
    res = minimize_scalar(lambda s: -f(s), bounds=(lo, hi), method="bounded",
                          options={"xatol": xatol, "maxiter": 500})
    return float(res.x), -float(res.fun)


def _coordinate_ascent(phi, center, half, tol=1e-10, max_sweeps=200):
    n = center.size
    p = center.copy()
    val = phi(p)
    for _ in range(max_sweeps):
        prev = val
        for j in range(n):
            lo, hi = center[j] - half[j], center[j] + half[j]

            def f(s, j=j):
                trial = p.copy()
                trial[j] = s
                return phi(trial)

            s, v = _golden_max(f, lo, hi, xatol=1e-10 * max(1.0, half[j]))
            # the bounded search never probes the endpoints; compare explicitly
            for edge in (lo, hi):
                ve = f(edge)
                if ve > v:
                    s, v = edge, ve
            if v >= val:
                p[j], val = s, v
        if val - prev <= tol * (1.0 + abs(val)):
            break
    return p, val


def legendre_transform(model: HamiltonianModel, x, t, u, q, box=None) -> LagrangianValue:
    """L(x, t, u, q) = sup_p {<p, q> - H(x, t, u, p)}.

    Built-ins use their closed forms.  Other models need ``box`` = (center,
    half_width) for a coordinate-wise golden-section search; a maximiser that
    keeps sitting on the box boundary while the objective keeps growing under
    box doubling is reported as +inf.
    """
    if not model.convex_in_p:
        raise ValueError("Legendre transform requires a Hamiltonian convex in p")
    n = model.dimension
    if model.lagrangian is not None and box is None:
        return model.lagrangian(x, t, u, q)
    if box is None:
        raise ValueError("a search box is required for a generic Hamiltonian")
    x = as_point(x, n)
    q = as_point(q, n)
    center = np.broadcast_to(np.asarray(box[0], dtype=float), (n,)).copy()
    half = np.broadcast_to(np.asarray(box[1], dtype=float), (n,)).copy()

    def phi(p):
        return float(_dot(p, q)) - float(model.eval(x, t, u, p))

    prev_val = None
    for _ in range(8):
        p, val = _coordinate_ascent(phi, center, half)
        on_edge = np.any(np.abs(np.abs(p - center) - half) <= 1e-6 * np.maximum(half, 1.0))
        if not on_edge:
            return LagrangianValue(val, p, approximate=True)
        if prev_val is not None and val - prev_val <= 1e-9 * (1.0 + abs(prev_val)):
            # flat direction: the sup is attained, just not uniquely
            return LagrangianValue(prev_val, p, approximate=True)
        prev_val = val
        half = 2.0 * half
    return LagrangianValue(math.inf, None, approximate=True)


# ---------------------------------------------------------------------------
# Mollification


def _friedrichs_nodes(dim: int, epsilon: float, points: int):
    h = 2.0 * epsilon / points
    axis = -epsilon + h * (np.arange(points) + 0.5)
    grid = np.array(list(itertools.product(axis, repeat=dim)))
    r2 = np.sum(grid ** 2, axis=1) / epsilon ** 2
    inside = r2 < 1.0
    grid = grid[inside]
    w = np.exp(-1.0 / (1.0 - r2[inside]))
    return grid, w / w.sum()


def mollify(model: HamiltonianModel, epsilon: float, quadrature_points: int = 5) -> HamiltonianModel:
    """Smooth, strictly convex approximation (H * rho_eps) + eps sqrt(|p|^2 + 1).

    The convolution runs over (x, t, u, p) with a Friedrichs kernel on the ball of
    radius ``epsilon``, discretised by a midpoint tensor rule.  Times below 0 use
    H(x, 0, u, p).  Affine Hamiltonians are left unchanged by any symmetric kernel,
    so the quadrature is skipped for them.
    """
    if not (0 < epsilon <= 1):
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon}")
    if quadrature_points < 1:
        raise ValueError("quadrature_points must be positive")
    n = model.dimension
    eps = float(epsilon)

    def smooth_term(p):
        return eps * np.sqrt(_dot(p, p) + 1.0)

    def smooth_grad(p):
        p = np.asarray(p, dtype=float)
        return eps * p / np.sqrt(_dot(p, p) + 1.0)[..., None]

    if model.affine:
        def h(x, t, u, p):
            return model.eval(x, t, u, p) + smooth_term(p)

        def gx(x, t, u, p):
            return model.grad_x(x, t, u, p)

        def gu(x, t, u, p):
            return model.grad_u(x, t, u, p)

        def gp(x, t, u, p):
            return model.grad_p(x, t, u, p) + smooth_grad(p)
    else:
        nodes, weights = _friedrichs_nodes(2 * n + 2, eps, quadrature_points)
        wx, wt, wu, wp = nodes[:, :n], nodes[:, n], nodes[:, n + 1], nodes[:, n + 2:]

        def shifted(x, t, u, p):
            x = np.asarray(x, dtype=float)[..., None, :] - wx
            p = np.asarray(p, dtype=float)[..., None, :] - wp
            t = np.maximum(np.asarray(t, dtype=float)[..., None] - wt, 0.0)
            u = np.asarray(u, dtype=float)[..., None] - wu
            return x, t, u, p

        def average(f, x, t, u, p, vector):
            vals = np.asarray(f(*shifted(x, t, u, p)), dtype=float)
            if vector:
                return np.einsum("...kj,k->...j", vals, weights)
            return vals @ weights

        def h(x, t, u, p):
            return average(model.eval, x, t, u, p, False) + smooth_term(p)

        def gx(x, t, u, p):
            return average(model.grad_x, x, t, u, p, True)

        def gu(x, t, u, p):
            return average(model.grad_u, x, t, u, p, False)

        def gp(x, t, u, p):
            return average(model.grad_p, x, t, u, p, True) + smooth_grad(p)

    k = model.constants
    constants = replace(k, b2=k.b2 + eps)
    return HamiltonianModel(
        dimension=n, eval=h, grad_x=gx, grad_p=gp, grad_u=gu, constants=constants,
        convex_in_p=True, positively_homogeneous=False, kind=f"mollified:{model.kind}",
        params={**model.params, "epsilon": eps},
    )


# ---------------------------------------------------------------------------
# Sampled falsification of the declared Lipschitz constants


@dataclass(frozen=True)
class SampleBox:
    x_radius: float = 2.0
    p_radius: float = 2.0
    u_radius: float = 2.0
    t_max: float = 1.0


def verify_structural_constants(model: HamiltonianModel, sample_box: SampleBox = SampleBox(),
                                samples: int = 2000, seed: int = 0, constants: Optional[StructuralConstants] = None):
    """Largest observed ratio for each hypothesis against the declared constant.

    x: ratio |H(x)-H(y)| / ((beta+|p|)|x-y|) vs c1; u: |H(u)-H(v)|/|u-v| vs k3;
    p is normalised pointwise, |H(p)-H(q)| / ((a2|x|+b2)|p-q|) vs 1.
    """
    from ._report import Report, leq

    if samples < 1:
        raise ValueError("samples must be >= 1")
    k = constants or model.constants
    n = model.dimension
    rng = np.random.default_rng(seed)
    b = sample_box

    def ball(radius, size):
        return rng.uniform(-radius, radius, size=(size, n))

    x, y = ball(b.x_radius, samples), ball(b.x_radius, samples)
    p, q = ball(b.p_radius, samples), ball(b.p_radius, samples)
    u, v = rng.uniform(-b.u_radius, b.u_radius, (2, samples))
    t = rng.uniform(0.0, b.t_max, samples)

    def ratio(num, den):
        num = np.abs(num)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.where(num > 1e-14, np.inf, 0.0))
        return float(np.max(r))

    h = model.eval
    r1 = ratio(h(x, t, u, p) - h(y, t, u, p), (k.beta + _norm(p)) * _norm(x - y))
    r2 = ratio(h(x, t, u, p) - h(x, t, u, q), (k.a2 * _norm(x) + k.b2) * _norm(p - q))
    r3 = ratio(h(x, t, u, p) - h(x, t, v, p), np.abs(u - v))

    rep = Report()
    rep.add(leq("x_lipschitz", r1, k.c1, 1e-9 * k.c1))
    rep.add(leq("p_lipschitz", r2, 1.0, 1e-9))
    rep.add(leq("u_lipschitz", r3, k.k3, 1e-9 * k.k3))
    return rep
