import csv
import math

import numpy as np
import pytest

from hjlb import harness
from hjlb.cli import main
from hjlb.config import ConfigError, apply_override, bundled_scenarios, load_config, validate
from hjlb.hamiltonians import StructuralConstants as SC

BASE = {"hamiltonian": {"kind": "transport_plus"}, "datum": {"kind": "cone"}, "checks": ["lower_bound"]}


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_bundled():
    assert set(bundled_scenarios()) >= {"fig-transport", "thm52-grid", "transport-tight", "transport-minus-slack",
                                        "transport-negu-tight", "eikonal-tight"}


def test_override_parsing():
    d = {}
    apply_override(d, "verify.times=[0.1, 0.2]")
    apply_override(d, "hamiltonian.kind=eikonal")
    apply_override(d, "grid.cells=400")
    assert d == {"verify": {"times": [0.1, 0.2]}, "hamiltonian": {"kind": "eikonal"}, "grid": {"cells": 400}}
    with pytest.raises(ConfigError):
        apply_override(d, "novalue")


@pytest.mark.parametrize("patch", [
    {"checks": []},
    {"checks": ["nope"]},
    {"hamiltonian": {"kind": "nope"}},
    {"domain": {"r": -1.0}},
    {"datum": {"kind": "nope"}},
    {"extra": 1},
])
def test_validation_errors(patch):
    with pytest.raises(ConfigError):
        validate({**BASE, **patch})


def test_constant_datum_spelling():
    cfg = validate({**BASE, "datum": {"kind": "constant(2.5)"}})
    assert cfg.datum == {"kind": "constant", "k": 2.5}


def test_load_file(tmp_path):
    f = tmp_path / "s.toml"
    f.write_text('checks = ["barrier"]\n[hamiltonian]\nkind = "eikonal"\n[domain]\nr = 0.5\n')
    cfg = load_config(str(f), ["domain.x0=0.25"])
    assert (cfg.name, cfg.x0, cfg.r) == ("s", 0.25, 0.5)
    f.write_text("checks = [")
    with pytest.raises(ConfigError):
        load_config(str(f))


def test_barrier_a2_zero_closed_form():
    c = SC(b2=1.0)
    x = np.array([[0.0], [0.3], [-2.0]])
    eps = 0.2
    res = harness.barrier_residual(c, np.array([0.1]), eps, x, np.array([0.5, 0.5, 0.5]))
    d = np.abs(x[:, 0] - 0.1)
    assert res == pytest.approx(1.0 - d / np.sqrt(d ** 2 + eps ** 2), abs=1e-15)
    assert harness.barrier_residual(c, np.array([0.1]), eps, np.array([[0.1]]), np.array([0.3]))[0] == 1.0


def test_barrier_value():
    c = SC(a2=1.0, b2=0.5)
    h = harness.barrier_h(c, np.array([0.0]), 0.1, np.array([[1.0]]), np.array([math.log(2)]))
    assert h[0] == pytest.approx((0.5 + math.sqrt(1.01)) + math.sqrt(1.01))


@pytest.mark.parametrize("a2, b2", [(0.0, 1.0), (1.0, 0.5)])
@pytest.mark.parametrize("eps", [0.05, 0.2])
def test_barrier_samples(a2, b2, eps):
    rep = harness.check_barrier(SC(a2=a2, b2=b2), 0.0, 1.0, eps, 10_000)
    assert rep.passed


def test_barrier_residual_matches_differences():
    c = SC(a2=0.8, b2=0.3)
    x0 = np.array([0.2])
    x, t, h = np.array([[0.7]]), 0.4, 1e-6
    f = lambda xx, tt: harness.barrier_h(c, x0, 0.1, xx, np.array([tt]))[0]
    ht = (f(x, t + h) - f(x, t - h)) / (2 * h)
    hx = (f(x + h, t) - f(x - h, t)) / (2 * h)
    ref = ht - (0.8 * 0.7 + 0.3) * abs(hx)
    assert harness.barrier_residual(c, x0, 0.1, x, np.array([t]))[0] == pytest.approx(ref, abs=1e-7)


def test_comparison_rhs_trivial():
    assert harness.comparison_rhs(0.0, SC(), 0.0, 0.1, 0.5) == 0.0
    c = SC(c1=1.0, beta=1, k3=0.5)
    # beta C1 eps^2 / 2 * int_0^t e^{-K3 (t-s)} e^{gamma s} ds
    from scipy.integrate import quad
    ref = quad(lambda s: 0.5 * 0.01 * math.exp(-0.5 * (0.7 - s)) * math.exp(3.0 * s), 0, 0.7)[0]
    assert harness.comparison_rhs(0.0, c, 3.0, 0.1, 0.7) == pytest.approx(ref, rel=1e-12)


def _cfg(kind, **extra):
    data = {"hamiltonian": {"kind": kind}, "datum": {"kind": "cone"}, "domain": {"x0": 0.0, "r": 1.0},
            "checks": ["lower_bound"], "verify": {"mode": "oracle", "times": [0.1, 0.2, 0.3, 0.5]}}
    data.update(extra)
    return validate(data)


def test_lower_bound_transport_tight():
    rows = harness.verify_lower_bound(_cfg("transport_plus"))
    checked = [r for r in rows if r.in_E and not math.isnan(r.p_min_measured)]
    assert checked and all(r.passed for r in rows)
    for r in checked:
        assert r.p_min_measured == pytest.approx(math.exp(-2 * r.t), abs=1e-9)
        assert r.bound_L == pytest.approx(math.exp(-2 * r.t), abs=1e-15)


def test_lower_bound_minus_slack():
    rows = harness.verify_lower_bound(_cfg("transport_minus"))
    checked = [r for r in rows if r.in_E and not math.isnan(r.p_min_measured)]
    assert all(r.passed for r in rows)
    assert all(r.p_min_measured - r.applicable >= 1 - math.exp(-2 * r.t) - 1e-9 for r in checked)


def test_lower_bound_negu_special():
    rows = harness.verify_lower_bound(_cfg("transport_neg_u"))
    checked = [r for r in rows if r.in_E and not math.isnan(r.p_min_measured)]
    assert all(r.passed for r in rows)
    for r in checked:
        assert r.bound_special == pytest.approx(1.0, abs=1e-12)
        assert r.p_min_measured == pytest.approx(1.0, abs=1e-9)


def test_lower_bound_skips_without_theta():
    with pytest.raises(harness.ScenarioSkipped):
        harness.verify_lower_bound(_cfg("transport_plus", domain={"r": 1.5}))


def test_lower_bound_scheme_mode():
    cfg = _cfg("transport_plus", verify={"mode": "scheme", "times": [0.2, 0.5]})
    rows = harness.verify_lower_bound(cfg)
    assert all(r.passed for r in rows)


def test_comparison_oracle():
    cfg = _cfg("eikonal", domain={"x0": 0.0, "r": 0.9}, convolution={"epsilon": 0.1})
    rep = harness.verify_comparison(cfg)
    assert rep.points and rep.passed


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["verify", "--config", "fig-transport", "--out", str(tmp_path / "a")]) == 0
    assert main(["verify", "--config", "fig-transport", "--override", "checks=[]"]) == 2
    assert main(["bounds", "--config", str(tmp_path / "missing.toml")]) == 2
    bad = tmp_path / "bad.toml"
    bad.write_text('checks = ["lower_bound"]\n[hamiltonian]\nkind = "transport_plus"\n[verify]\ntol = -1.0\n')
    assert main(["verify", "--config", str(bad), "--out", str(tmp_path / "b")]) == 1


def test_fig_transport_profiles(tmp_path):
    assert main(["verify", "--config", "fig-transport", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "profiles.csv")
    assert list(rows[0]) == ["x", "u_t=0", "u_t=0.35", "u_t=0.7"]
    for r in rows:
        x = float(r["x"])
        for t in (0.0, 0.35, 0.7):
            ref = math.exp(-t) * max(0.0, 1 - abs(x) * math.exp(-t))
            assert float(r[f"u_t={t:g}"]) == pytest.approx(ref, abs=1e-14)
    assert (tmp_path / "profiles.svg").read_text().startswith("<svg")


def test_gap_grid_scenario(tmp_path):
    assert main(["verify", "--config", "thm52-grid", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "gap_sweep.csv")
    assert len(rows) == 36 and all(r["all_positive"] == "true" for r in rows)


@pytest.mark.parametrize("cmd", ["solve", "chars", "bounds", "convolve"])
def test_subcommands(cmd, tmp_path):
    assert main([cmd, "--config", "transport-tight", "--out", str(tmp_path)]) == 0
    assert any(tmp_path.glob("*.csv"))


def test_herglotz_command(tmp_path):
    assert main(["herglotz", "--config", "eikonal-tight", "--out", str(tmp_path)]) == 0
    row = read_csv(tmp_path / "values.csv")[0]
    assert float(row["value"]) == pytest.approx(float(row["closed_form"]), abs=1e-3)


def test_csv_format():
    assert harness._cell(0.1) == "0.1"
    assert harness._cell(None) == ""
    assert harness._cell(True) == "true"
    assert harness._cell(1 / 3) == "0.333333333333333"
