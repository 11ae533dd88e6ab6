"""Scenario-driven verification of the gradient bounds.

Each check reads a :class:`ScenarioConfig`, evaluates solutions (closed form
or grid solver), compares measured subgradients and auxiliary inequalities
against the closed-form bounds, and writes CSV tables (plus optional SVG plots).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ._report import Report, leq
from .bounds import (BoundInputs, DependenceDomain, bounds_table, compare_F, in_domain_D, in_domain_E,
                     lower_L, lower_l, lower_sharpened, special_M, special_m, vanish_time_l)
from .characteristics import (TerminalCondition, check_propagation, check_spatial, check_special_propagation,
                              endpoint_subgradient_residual, integrate_backward,
                              integrate_backward_many)
from .config import ConfigError, ScenarioConfig
from .convolution import (ConvolutionParams, FieldSlice, SpaceTimeBlock, check_initial_gap, gamma_min,
                          inf_convolution_block, inf_convolution_spatial, subsolution_residual,
                          sup_convolution_spatial)
from .hamiltonians import HamiltonianModel, StructuralConstants, make_builtin
from .herglotz import value_function
from .initial_data import InitialDatum, make_datum, theta_on_ball
from .plots import line_plot
from .solver import ClosedFormOracle, GridSpec, NumericalSolution, measured_subgradient, oracle_eval, solve

ORACLE_KINDS = ("transport_plus", "transport_minus", "transport_neg_u", "eikonal")
TOL_ORACLE = 1e-9
TOL_SCHEME = 5e-2


class ScenarioSkipped(RuntimeError):
    """A precondition of the requested check does not hold."""


@dataclass
class VerificationRow:
    x: float
    t: float
    p_min_measured: float
    bound_l: Optional[float]
    bound_L: Optional[float]
    bound_sharpened: Optional[float]
    bound_special: Optional[float]
    in_E: bool
    in_D: bool
    passed: bool

    FIELDS = ("x", "t", "p_min_measured", "bound_l", "bound_L", "bound_sharpened", "bound_special",
              "in_E", "in_D", "pass")

    @property
    def applicable(self) -> Optional[float]:
        vals = [v for v in (self.bound_l, self.bound_L, self.bound_sharpened, self.bound_special) if v is not None]
        return max(vals) if vals else None

    def as_list(self) -> list:
        return [self.x, self.t, self.p_min_measured, self.bound_l, self.bound_L, self.bound_sharpened,
                self.bound_special, self.in_E, self.in_D, self.passed]


@dataclass
class ComparisonReport:
    points: list = field(default_factory=list)  # (x, t, lhs, rhs)
    max_violation: float = -math.inf
    tol: float = 0.0
    order_ok: bool = True

    @property
    def passed(self) -> bool:
        return self.order_ok and self.max_violation <= self.tol


# ---------------------------------------------------------------------------
# building blocks from a config


def build_model(cfg: ScenarioConfig) -> HamiltonianModel:
    h = cfg.hamiltonian
    try:
        return make_builtin(h["kind"], int(h.get("dimension", 1)), c=float(h.get("c", 1.0)),
                            lam=float(h.get("lam", 1.0)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad hamiltonian parameters: {exc}") from exc


def build_datum(cfg: ScenarioConfig) -> InitialDatum:
    try:
        return _build_datum(cfg)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad datum parameters: {exc}") from exc


def _build_datum(cfg: ScenarioConfig) -> InitialDatum:
    d = dict(cfg.datum)
    kind = d.pop("kind")
    dim = int(cfg.hamiltonian.get("dimension", 1))
    if kind == "samples":
        if "file" in d:
            path = Path(d["file"])
            if not path.is_absolute() and cfg.source is not None:
                path = cfg.source.parent / path
            try:
                values = np.loadtxt(path, delimiter=",", ndmin=1)
            except OSError as exc:
                raise ConfigError(f"cannot read samples file {path}: {exc}") from exc
        else:
            values = np.asarray(d["values"], dtype=float)
        grid = np.linspace(float(d.get("xmin", cfg.grid["xmin"])), float(d.get("xmax", cfg.grid["xmax"])),
                           values.size)
        return make_datum("samples", grid=grid, values=values)
    return make_datum(kind, dim, **d)


def build_grid(cfg: ScenarioConfig) -> GridSpec:
    g = cfg.grid
    return GridSpec(float(g["xmin"]), float(g["xmax"]), int(g["cells"]), float(g["t_end"]), float(g["cfl"]))


def build_oracle(cfg: ScenarioConfig, datum: InitialDatum) -> Optional[ClosedFormOracle]:
    if cfg.hamiltonian["kind"] not in ORACLE_KINDS:
        return None
    return ClosedFormOracle(cfg.hamiltonian["kind"], datum, float(cfg.hamiltonian.get("c", 1.0)))


def resolve_theta(cfg: ScenarioConfig, datum: InitialDatum) -> float:
    theta = cfg.theta if cfg.theta is not None else theta_on_ball(datum, cfg.x0, cfg.r)
    if theta is None or not theta > 0:
        raise ScenarioSkipped("no positive theta: the datum's subgradients are not bounded away from 0 on the ball")
    return float(theta)


def _mode(cfg: ScenarioConfig, oracle) -> str:
    mode = str(cfg.verify.get("mode", "oracle" if oracle is not None else "scheme"))
    if mode not in ("oracle", "scheme"):
        raise ConfigError("verify.mode must be 'oracle' or 'scheme'")
    if mode == "oracle" and oracle is None:
        raise ConfigError(f"no closed form for {cfg.hamiltonian['kind']!r}; use verify.mode = 'scheme'")
    return mode


def _times(cfg: ScenarioConfig) -> list[float]:
    return [float(t) for t in cfg.verify.get("times", [0.1, 0.2, 0.3, 0.5])]


def _source(cfg, model, datum, oracle, mode, times):
    if mode == "oracle":
        return oracle
    grid = build_grid(cfg)
    if max(times) > grid.t_end:
        grid = GridSpec(grid.xmin, grid.xmax, grid.cells, max(times), grid.cfl)
    return solve(model, datum, grid, save_times=times)


def _special(inputs: BoundInputs, model: HamiltonianModel, t: float) -> Optional[float]:
    if model.constants.lam is None:
        return None
    vals = [special_M(inputs, t)]
    if model.positively_homogeneous:
        vals.append(special_m(inputs, t))
    return max(vals)


# ---------------------------------------------------------------------------
# checks


def verify_lower_bound(cfg: ScenarioConfig, source=None) -> list[VerificationRow]:
    """Measured min-norm subgradient against the applicable lower bound on a grid of the ball."""
    model, datum = build_model(cfg), build_datum(cfg)
    theta = resolve_theta(cfg, datum)
    oracle = build_oracle(cfg, datum)
    mode = _mode(cfg, oracle)
    times = _times(cfg)
    tol = float(cfg.verify.get("tol", TOL_ORACLE if mode == "oracle" else TOL_SCHEME))
    c = model.constants
    t0 = cfg.verify.get("t0")
    inputs = BoundInputs(c, theta, horizon_T=max(times), t0=None if t0 is None else float(t0))
    domain = DependenceDomain(cfg.x0, cfg.r, c)
    npts = int(cfg.verify.get("points", 41))
    xs = cfg.x0 + cfg.r * np.linspace(-1.0, 1.0, npts + 2)[1:-1]
    if source is None:
        source = _source(cfg, model, datum, oracle, mode, times)
    rows = []
    for t in times:
        bl = lower_l(inputs, t)
        if t0 is not None and t >= float(t0):
            bl = None
        bL = lower_L(inputs, t)
        bs = lower_sharpened(inputs, t)
        bsp = _special(inputs, model, t)
        for x in xs:
            x = float(x)
            inE = in_domain_E(domain, x, t)
            inD = in_domain_D(domain, x, t)
            s = measured_subgradient(source, x, t)
            p = s.min_norm if not s.is_empty else math.nan
            row = VerificationRow(x, t, p, bl, bL, bs, bsp, inE, inD, True)
            if inE and not s.is_empty and row.applicable is not None:
                row.passed = bool(p >= max(0.0, row.applicable) - tol)
            rows.append(row)
    return rows


def barrier_h(constants: StructuralConstants, x0, epsilon: float, x, t):
    """Smooth barrier whose sublevel sets shrink at the propagation speed A2|x| + B2."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    t = np.asarray(t, dtype=float)
    d0 = np.sqrt(np.sum((x - x0) ** 2, axis=-1) + epsilon ** 2)
    a2, b2 = constants.a2, constants.b2
    if a2 == 0:
        return b2 * t + d0
    return (b2 / a2 + np.sqrt(np.sum(x ** 2, axis=-1) + epsilon ** 2)) * np.expm1(a2 * t) + d0


def barrier_residual(constants: StructuralConstants, x0, epsilon: float, x, t):
    """h_t - (A2|x| + B2)|D_x h| evaluated analytically."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    t = np.asarray(t, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    a2, b2 = constants.a2, constants.b2
    d0 = np.sqrt(np.sum((x - x0) ** 2, axis=-1) + epsilon ** 2)
    grad = (x - x0) / d0[:, None]
    if a2 == 0:
        ht = np.full(x.shape[0], b2, dtype=float) + 0.0 * t
    else:
        dx = np.sqrt(np.sum(x ** 2, axis=-1) + epsilon ** 2)
        ht = a2 * np.exp(a2 * t) * (b2 / a2 + dx)
        grad = grad + (x / dx[:, None]) * np.expm1(a2 * t)[..., None]
    speed = a2 * np.linalg.norm(x, axis=-1) + b2
    return ht - speed * np.linalg.norm(grad, axis=-1)


def check_barrier(constants: StructuralConstants, x0, r: float, epsilon: float, samples: int = 10_000,
                  seed: int = 0, t_max: float = 1.0) -> Report:
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    n = x0.size
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(samples, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    x = x0 + d * (r * rng.uniform(0.0, 1.0, size=(samples, 1)) ** (1.0 / n))
    t = rng.uniform(0.0, t_max, size=samples)
    res = barrier_residual(constants, x0, epsilon, x, t)
    rep = Report()
    rep.add(leq("barrier", 0.0, float(np.min(res)), 1e-12))
    return rep


def comparison_rhs(gap0_sup: float, constants: StructuralConstants, gamma: float, epsilon: float, t: float) -> float:
    """sup-term plus the exact time integral of the subsolution defect (beta C1 / 2) e^{gamma s} eps^2."""
    k3 = constants.k3
    rhs = math.exp(-k3 * t) * gap0_sup
    w = 0.5 * constants.beta * constants.c1 * epsilon ** 2
    if w:
        rhs += w * (math.exp(gamma * t) - math.exp(-k3 * t)) / (gamma + k3)
    return rhs


def verify_comparison(cfg: ScenarioConfig, epsilon: Optional[float] = None, source=None) -> ComparisonReport:
    """Local comparison between u_eps (subsolution up to the defect) and u on the dependence domain."""
    model, datum = build_model(cfg), build_datum(cfg)
    oracle = build_oracle(cfg, datum)
    mode = _mode(cfg, oracle)
    times = _times(cfg)
    c = model.constants
    eps = float(epsilon if epsilon is not None else cfg.convolution.get("epsilon", 0.1))
    gamma = float(cfg.convolution.get("gamma", gamma_min(c)))
    params = ConvolutionParams(eps, gamma, cfg.x0, cfg.r)
    domain = DependenceDomain(cfg.x0, cfg.r, c)
    rep = ComparisonReport(tol=float(cfg.convolution.get("tol", 1e-6 if mode == "oracle" else TOL_SCHEME)))
    if source is None:
        source = _source(cfg, model, datum, oracle, mode, times)
    if mode == "oracle":
        npts = int(cfg.convolution.get("points", 1201))
        xs = np.linspace(cfg.x0 - cfg.r, cfg.x0 + cfg.r, npts)
        field_at = lambda t: np.asarray(oracle_eval(source, xs, t), dtype=float)
    else:
        xs = source.x
        field_at = lambda t: source.at(t) if t > 0 else source.values[0]
    u0 = field_at(0.0)
    g0 = inf_convolution_spatial(FieldSlice(xs, u0, 0.0), params)
    ball = (xs >= cfg.x0 - cfg.r - 1e-12) & (xs <= cfg.x0 + cfg.r + 1e-12)
    gap0 = float(np.max(g0.values - u0[ball]))
    for t in times:
        u = field_at(t)
        ue = inf_convolution_spatial(FieldSlice(xs, u, t), params)
        gap = ue.values - u[ball]
        if float(np.max(gap)) > 1e-12:
            rep.order_ok = False
        rhs = comparison_rhs(gap0, c, gamma, eps, t)
        for x, g in zip(ue.x, gap):
            if abs(x - cfg.x0) < cfg.r and in_domain_E(domain, float(x), t):
                rep.points.append((float(x), t, float(g), rhs))
                rep.max_violation = max(rep.max_violation, float(g) - rhs)
    return rep


def characteristic_reports(cfg: ScenarioConfig, paths: int = 20, steps: int = 1000, seed: int = 0):
    """Random terminal points in E, gradients from the closed form, backward characteristics and their checks."""
    model, datum = build_model(cfg), build_datum(cfg)
    oracle = build_oracle(cfg, datum)
    if oracle is None:
        raise ScenarioSkipped("terminal gradients need a closed-form solution")
    c = model.constants
    domain = DependenceDomain(cfg.x0, cfg.r, c)
    rng = np.random.default_rng(seed)
    t_hi = float(cfg.chars.get("t_max", max(_times(cfg))))
    picked = []
    tries = 0
    while len(picked) < paths and tries < 100 * paths:
        tries += 1
        t = float(rng.uniform(0.0, t_hi))
        x = float(cfg.x0 + cfg.r * rng.uniform(-1.0, 1.0))
        if t <= 0 or not in_domain_E(domain, x, t):
            continue
        s = measured_subgradient(oracle, x, t)
        if s.is_empty or not s.is_singleton:
            continue
        p = s.min_norm_element()
        if model.kink_at_zero and np.linalg.norm(p) == 0:
            continue
        picked.append(TerminalCondition(x, t, p, float(oracle_eval(oracle, x, t))))
    out = []
    for tc, path in zip(picked, integrate_backward_many(model, picked, steps)):
        rep = Report()
        for sub in (check_propagation(path, c), check_spatial(path, c)):
            rep.checks.extend(sub.checks)
        if c.lam is not None:
            h0c = StructuralConstants(c1=c.c1, beta=c.beta, a2=c.a2, b2=c.b2)
            rep.checks.extend(check_special_propagation(path, c.lam, h0c).checks)
        rep.add(leq("endpoint_residual", endpoint_subgradient_residual(path, datum), 0.0, 1e-8))
        out.append((float(tc.x[0]), tc.t, path, rep))
    return out


# ---------------------------------------------------------------------------
# CSV helpers


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".15g")
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v) for v in r])
    return path


# ---------------------------------------------------------------------------
# scenario runner


@dataclass
class CheckOutcome:
    name: str
    passed: bool
    detail: str
    skipped: bool = False


def _bound_inputs_from(cfg: ScenarioConfig, model: HamiltonianModel, datum: InitialDatum) -> BoundInputs:
    b = cfg.bounds
    c = model.constants
    if any(k in b for k in ("c1", "beta", "a2", "b2", "k3", "lam")):
        lam = b.get("lam", None)
        k3 = abs(float(lam)) if lam is not None else float(b.get("k3", 0.0))
        c = StructuralConstants(c1=float(b.get("c1", 0.0)), beta=int(b.get("beta", 0)), a2=float(b.get("a2", 0.0)),
                                b2=float(b.get("b2", 0.0)), k3=k3, lam=None if lam is None else float(lam))
    theta = float(b["theta"]) if "theta" in b else resolve_theta(cfg, datum)
    t_max = float(b.get("t_max", cfg.grid["t_end"]))
    t0 = b.get("t0")
    return BoundInputs(c, theta, horizon_T=float(b.get("horizon", t_max)), t0=None if t0 is None else float(t0))


def bound_gap_sweep(samples: int = 200):
    """F(t) = L^2 - l^2 on (0, t_l] over the standard (theta, C1, K3) grid with beta = 1."""
    rows = []
    for theta in (0.5, 1.0, 2.0):
        for c1 in (0.1, 1.0, 10.0):
            for k3 in (0.0, 0.1, 1.0, 10.0):
                inputs = BoundInputs(StructuralConstants(c1=c1, beta=1, k3=k3), theta)
                tl = vanish_time_l(inputs)
                ts = np.linspace(0.0, tl, samples + 1)[1:]
                fs = np.array([compare_F(inputs, t) for t in ts])
                rows.append((theta, c1, k3, tl, float(fs.min()), bool(np.all(fs > 0))))
    return rows


def _run_check(name: str, cfg: ScenarioConfig, out: Path, plots: bool, cache: dict) -> CheckOutcome:
    model, datum = cache["model"], cache["datum"]
    if name == "lower_bound":
        rows = verify_lower_bound(cfg)
        write_csv(out / "verification.csv", VerificationRow.FIELDS, [r.as_list() for r in rows])
        checked = [r for r in rows if r.in_E and not math.isnan(r.p_min_measured)]
        bad = [r for r in rows if not r.passed]
        if plots:
            ts = sorted({r.t for r in rows})
            meas = [min((r.p_min_measured for r in checked if r.t == t), default=math.nan) for t in ts]
            series = [("min measured |p|", ts, meas)]
            for label, attr in (("l", "bound_l"), ("L", "bound_L"), ("sharpened", "bound_sharpened"),
                                ("special", "bound_special")):
                vals = [next((getattr(r, attr) for r in rows if r.t == t), None) for t in ts]
                if any(v is not None for v in vals):
                    series.append((label, ts, [math.nan if v is None else v for v in vals]))
            line_plot(out / "bounds_vs_measured.svg", series, title=cfg.name, xlabel="t", ylabel="|p|")
        slack = min((r.p_min_measured - max(0.0, r.applicable) for r in checked if r.applicable is not None),
                    default=math.nan)
        return CheckOutcome(name, not bad, f"{len(checked)} points checked, {len(bad)} violations, min slack {slack:.3e}")
    if name == "characteristics":
        reps = characteristic_reports(cfg, int(cfg.chars.get("paths", 20)), int(cfg.chars.get("steps", 1000)))
        rows = []
        for i, (x, t, _, rep) in enumerate(reps):
            for ch in rep.checks:
                rows.append((i, x, t, ch.name, ch.lhs, ch.rhs, ch.passed))
        write_csv(out / "characteristics_checks.csv", ("path", "x", "t", "check", "lhs", "rhs", "pass"), rows)
        bad = sum(1 for r in rows if not r[-1])
        return CheckOutcome(name, bad == 0 and bool(reps), f"{len(reps)} paths, {len(rows)} inequalities, {bad} failed")
    if name == "initial_gap":
        theta = resolve_theta(cfg, datum)
        eps_list = [float(e) for e in cfg.convolution.get("epsilons", [0.05, 0.1, 0.2])]
        rows, ok = [], True
        for e in eps_list:
            rep = check_initial_gap(datum, theta, e, cfg.x0, cfg.r)
            ch = rep["initial_gap"]
            rows.append((e, ch.lhs, ch.rhs, ch.passed))
            ok &= ch.passed
        write_csv(out / "initial_gap.csv", ("epsilon", "max_gap", "bound", "pass"), rows)
        return CheckOutcome(name, ok, f"{len(rows)} epsilons")
    if name == "subsolution":
        oracle = build_oracle(cfg, datum)
        if oracle is None:
            raise ScenarioSkipped("subsolution check uses the closed-form solution")
        eps = float(cfg.convolution.get("epsilon", 0.1))
        gamma = float(cfg.convolution.get("gamma", gamma_min(model.constants)))
        params = ConvolutionParams(eps, gamma, cfg.x0, cfg.r)
        n = int(cfg.convolution.get("cells", 1200))
        xs = np.linspace(cfg.x0 - cfg.r, cfg.x0 + cfg.r, n + 1)
        ts = np.linspace(0.0, max(_times(cfg)), int(cfg.convolution.get("levels", 201)))
        vals = np.array([oracle_eval(oracle, xs, t) for t in ts])
        blk = inf_convolution_block(SpaceTimeBlock(xs, ts, vals), params)
        rep = subsolution_residual(blk, model, params)
        rows = [(ch.name, ch.lhs, ch.rhs, ch.passed) for ch in rep.checks]
        write_csv(out / "subsolution.csv", ("check", "max_excess", "bound", "pass"), rows)
        return CheckOutcome(name, rep.passed and bool(rep.checks), "; ".join(rep.notes))
    if name == "comparison":
        rep = verify_comparison(cfg)
        write_csv(out / "comparison.csv", ("x", "t", "lhs", "rhs"), rep.points)
        return CheckOutcome(name, rep.passed, f"{len(rep.points)} points, max violation {rep.max_violation:.3e}")
    if name == "barrier":
        eps_list = [float(e) for e in cfg.convolution.get("barrier_epsilons", [0.05, 0.2])]
        rows, ok = [], True
        for e in eps_list:
            ch = check_barrier(model.constants, cfg.x0, cfg.r, e, int(cfg.verify.get("barrier_samples", 10_000)))["barrier"]
            rows.append((e, ch.rhs, ch.passed))
            ok &= ch.passed
        write_csv(out / "barrier.csv", ("epsilon", "min_residual", "pass"), rows)
        return CheckOutcome(name, ok, f"{len(rows)} epsilons")
    if name == "bounds_table":
        ok = True
        detail = []
        if cfg.bounds.get("sweep", False):
            rows = bound_gap_sweep(int(cfg.bounds.get("samples", 200)))
            write_csv(out / "gap_sweep.csv", ("theta", "c1", "k3", "t_l", "min_F", "all_positive"), rows)
            ok &= all(r[-1] for r in rows)
            detail.append(f"{len(rows)} parameter sets, min F {min(r[4] for r in rows):.3e}")
        inputs = _bound_inputs_from(cfg, model, datum)
        ts = np.linspace(0.0, float(cfg.bounds.get("t_max", cfg.grid["t_end"])), int(cfg.bounds.get("points", 101)))
        table = bounds_table(inputs, ts)
        cols = ("t", "l", "L", "sharpened", "ley", "M", "m", "F")
        write_csv(out / "bounds.csv", cols, [[r[k] for k in cols] for r in table])
        for r in table:
            if r["l"] is not None and r["t"] > 0:
                ok &= r["L"] >= r["l"] - 1e-12 or inputs.constants.beta == 0
                if r["sharpened"] is not None:
                    ok &= r["sharpened"] >= r["l"] - 1e-12
        detail.append(f"{len(table)} rows")
        return CheckOutcome(name, bool(ok), ", ".join(detail))
    if name == "profiles":
        oracle = build_oracle(cfg, datum)
        times = [float(t) for t in cfg.output.get("profile_times", [0.0, 0.35, 0.7])]
        lo, hi, n = cfg.output.get("profile_x", [cfg.grid["xmin"], cfg.grid["xmax"], 241])
        xs = np.linspace(float(lo), float(hi), int(n))
        cols, header = [xs], ["x"]
        if oracle is not None:
            for t in times:
                cols.append(np.asarray(oracle_eval(oracle, xs, t), dtype=float))
                header.append(f"u_t={t:g}")
        if cfg.verify.get("mode") == "scheme" or oracle is None:
            grid = build_grid(cfg)
            grid = GridSpec(grid.xmin, grid.xmax, grid.cells, max(max(times), 1e-9), grid.cfl)
            sol = solve(model, datum, grid, save_times=[t for t in times if t > 0])
            for t in times:
                cols.append(np.interp(xs, sol.x, sol.at(t) if t > 0 else sol.values[0]))
                header.append(f"scheme_t={t:g}")
        write_csv(out / "profiles.csv", header, list(zip(*cols)))
        if plots:
            line_plot(out / "profiles.svg", [(h, xs, c) for h, c in zip(header[1:], cols[1:])],
                      title=cfg.name, xlabel="x", ylabel="u")
        return CheckOutcome(name, True, f"{len(times)} profiles")
    raise ConfigError(f"unknown check {name!r}")


def run_scenario(cfg: ScenarioConfig, out_dir=None) -> tuple[int, list[CheckOutcome]]:
    """Run the configured checks in order; exit status 0 if all pass, 1 otherwise."""
    out = Path(out_dir or cfg.output.get("dir", f"hjlb-out/{cfg.name}"))
    out.mkdir(parents=True, exist_ok=True)
    plots = bool(cfg.output.get("plots", False))
    cache = {"model": build_model(cfg), "datum": build_datum(cfg)}
    outcomes = []
    for name in cfg.checks:
        try:
            outcomes.append(_run_check(name, cfg, out, plots, cache))
        except ScenarioSkipped as exc:
            outcomes.append(CheckOutcome(name, True, f"skipped: {exc}", skipped=True))
    write_csv(out / "summary.csv", ("check", "pass", "detail"), [(o.name, o.passed, o.detail) for o in outcomes])
    return (0 if all(o.passed for o in outcomes) else 1), outcomes


# ---------------------------------------------------------------------------
# single-purpose commands


def cmd_solve(cfg: ScenarioConfig, out: Path) -> tuple[int, list[str]]:
    model, datum = build_model(cfg), build_datum(cfg)
    grid = build_grid(cfg)
    times = [float(t) for t in cfg.output.get("times", [grid.t_end])]
    sol = solve(model, datum, grid, save_times=[t for t in times if 0 < t < grid.t_end])
    out.mkdir(parents=True, exist_ok=True)
    path = out / "solution.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["xmin", "xmax", "cells", "times"])
        w.writerow([_cell(grid.xmin), _cell(grid.xmax), grid.cells, " ".join(_cell(t) for t in sol.times)])
        w.writerow(["t"] + [f"u_{i}" for i in range(grid.cells + 1)])
        for t, row in zip(sol.times, sol.values):
            w.writerow([_cell(t)] + [_cell(v) for v in row])
    lines = [f"solved {cfg.hamiltonian['kind']} on {grid.cells} cells to t={grid.t_end:g} "
             f"({sol.steps} steps, sigma={sol.dissipation:g})"]
    oracle = build_oracle(cfg, datum)
    if oracle is not None:
        from .solver import error_norms
        l1, linf = error_norms(sol, oracle, grid.t_end)
        lines.append(f"error vs closed form at t={grid.t_end:g}: l1={l1:.3e} linf_interior={linf:.3e}")
    return 0, lines


def cmd_chars(cfg: ScenarioConfig, out: Path) -> tuple[int, list[str]]:
    model, datum = build_model(cfg), build_datum(cfg)
    steps = int(cfg.chars.get("steps", 1000))
    out.mkdir(parents=True, exist_ok=True)
    reps = []
    if "points" in cfg.chars:
        oracle = build_oracle(cfg, datum)
        c = model.constants
        for x, t in cfg.chars["points"]:
            if oracle is None:
                raise ConfigError("chars.points needs a closed-form solution for terminal data")
            s = measured_subgradient(oracle, float(x), float(t))
            if s.is_empty:
                raise ConfigError(f"no subgradient at x={x}, t={t}")
            path = integrate_backward(model, TerminalCondition(float(x), float(t), s.min_norm_element(),
                                                                float(oracle_eval(oracle, float(x), float(t)))), steps)
            rep = Report()
            rep.checks.extend(check_propagation(path, c).checks)
            rep.checks.extend(check_spatial(path, c).checks)
            rep.add(leq("endpoint_residual", endpoint_subgradient_residual(path, datum), 0.0, 1e-8))
            reps.append((float(x), float(t), path, rep))
    else:
        reps = characteristic_reports(cfg, int(cfg.chars.get("paths", 20)), steps)
    rows = []
    for i, (x, t, path, rep) in enumerate(reps):
        n = path.xi.shape[1]
        header = ["s"] + [f"xi_{d}" for d in range(n)] + [f"eta_{d}" for d in range(n)] + ["u_xi"]
        body = [[s, *xi, *eta, u] for s, xi, eta, u in zip(path.times, path.xi, path.eta, path.u_xi)]
        write_csv(out / f"path_{i:03d}.csv", header, body)
        rows.extend((i, x, t, ch.name, ch.lhs, ch.rhs, ch.passed) for ch in rep.checks)
    write_csv(out / "checks.csv", ("path", "x", "t", "check", "lhs", "rhs", "pass"), rows)
    bad = sum(1 for r in rows if not r[-1])
    return (0 if bad == 0 else 1), [f"{len(reps)} characteristics, {len(rows)} inequalities, {bad} failed"]


def cmd_bounds(cfg: ScenarioConfig, out: Path) -> tuple[int, list[str]]:
    model, datum = build_model(cfg), build_datum(cfg)
    inputs = _bound_inputs_from(cfg, model, datum)
    ts = np.linspace(0.0, float(cfg.bounds.get("t_max", cfg.grid["t_end"])), int(cfg.bounds.get("points", 101)))
    table = bounds_table(inputs, ts)
    cols = ("t", "l", "L", "sharpened", "ley", "M", "m", "F")
    write_csv(out / "bounds.csv", cols, [[r[k] for k in cols] for r in table])
    return 0, [f"{len(table)} rows written to {out / 'bounds.csv'}"]


def cmd_convolve(cfg: ScenarioConfig, out: Path) -> tuple[int, list[str]]:
    model, datum = build_model(cfg), build_datum(cfg)
    cv = cfg.convolution
    t = float(cv.get("time", 0.0))
    if "input" in cv:
        path = Path(cv["input"])
        if not path.is_absolute() and cfg.source is not None:
            path = cfg.source.parent / path
        try:
            data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        except OSError as exc:
            raise ConfigError(f"cannot read convolution input {path}: {exc}") from exc
        xs, u = data[:, 0], data[:, 1]
    else:
        xs = np.linspace(cfg.x0 - cfg.r, cfg.x0 + cfg.r, int(cv.get("points", 1201)))
        oracle = build_oracle(cfg, datum)
        if t > 0 and oracle is None:
            raise ConfigError("convolution at t > 0 without an input file needs a closed-form solution")
        u = np.asarray(datum(xs) if t == 0 else oracle_eval(oracle, xs, t), dtype=float)
    params = ConvolutionParams(float(cv.get("epsilon", 0.1)), float(cv.get("gamma", gamma_min(model.constants))),
                               cfg.x0, cfg.r)
    kind = str(cv.get("kind", "inf"))
    if kind not in ("inf", "sup"):
        raise ConfigError("convolution.kind must be 'inf' or 'sup'")
    f = FieldSlice(xs, u, t)
    res = inf_convolution_spatial(f, params) if kind == "inf" else sup_convolution_spatial(f, params)
    mask = (xs >= cfg.x0 - cfg.r - 1e-12) & (xs <= cfg.x0 + cfg.r + 1e-12)
    gap = res.values - u[mask]
    write_csv(out / "convolution.csv", ("x", "u", "u_conv", "gap"), zip(res.x, u[mask], res.values, gap))
    stats = [("min_gap", float(gap.min())), ("max_gap", float(gap.max())), ("epsilon", params.epsilon),
             ("gamma", params.gamma), ("time", t)]
    write_csv(out / "convolution_stats.csv", ("stat", "value"), stats)
    return 0, [f"{kind}-convolution: gap in [{gap.min():.6g}, {gap.max():.6g}]"]


def cmd_herglotz(cfg: ScenarioConfig, out: Path) -> tuple[int, list[str]]:
    model, datum = build_model(cfg), build_datum(cfg)
    hz = cfg.herglotz
    xs = hz.get("x", [0.25])
    xs = xs if isinstance(xs, list) else [xs]
    t = float(hz.get("t", 0.25))
    tol = float(hz.get("tol", 1e-3))
    oracle = build_oracle(cfg, datum)
    lines, rows, code = [], [], 0
    for i, x in enumerate(xs):
        val, curve = value_function(model, datum, float(x), t, int(hz.get("nodes", 8)), int(hz.get("restarts", 4)))
        write_csv(out / f"curve_{i:03d}.csv", ("s", "xi"), zip(curve.times, curve.nodes[:, 0]))
        ref = float(oracle_eval(oracle, float(x), t)) if oracle is not None else math.nan
        ok = math.isnan(ref) or abs(val - ref) <= tol
        code = code or (0 if ok else 1)
        rows.append((float(x), t, val, ref, ok))
        lines.append(f"x={float(x):g} t={t:g}: value={val:.9f} closed_form={ref:.9f} diff={val - ref:.3e}")
    write_csv(out / "values.csv", ("x", "t", "value", "closed_form", "pass"), rows)
    return code, lines
