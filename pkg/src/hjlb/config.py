"""Scenario configuration: TOML files, dotted overrides and validation."""

from __future__ import annotations

import copy
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .hamiltonians import KINDS, normalize_kind

CHECKS = (
    "lower_bound",
    "characteristics",
    "initial_gap",
    "subsolution",
    "comparison",
    "barrier",
    "bounds_table",
    "profiles",
)
DATUM_KINDS = ("cone", "zero", "constant", "abs", "samples")


class ConfigError(ValueError):
    """Invalid or unreadable scenario configuration."""


@dataclass
class ScenarioConfig:
    name: str
    hamiltonian: dict
    datum: dict
    grid: dict
    domain: dict
    checks: list
    verify: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)
    chars: dict = field(default_factory=dict)
    convolution: dict = field(default_factory=dict)
    herglotz: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)
    source: Optional[Path] = None

    @property
    def x0(self) -> float:
        return float(self.domain.get("x0", 0.0))

    @property
    def r(self) -> float:
        return float(self.domain["r"])

    @property
    def theta(self) -> Optional[float]:
        v = self.domain.get("theta")
        return None if v is None else float(v)


def bundled_scenarios() -> list[str]:
    root = resources.files("hjlb") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def _read(path: str) -> tuple[dict, Optional[Path]]:
    p = Path(path)
    if p.is_file():
        try:
            return tomllib.loads(p.read_text()), p
        except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    name = p.name[:-5] if p.name.endswith(".toml") else p.name
    if p.parent == Path(".") and name in bundled_scenarios():
        text = (resources.files("hjlb") / "scenarios" / f"{name}.toml").read_text()
        return tomllib.loads(text), None
    raise ConfigError(f"config file not found: {path}")


def _parse_value(text: str) -> Any:
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_override(data: dict, item: str) -> None:
    """Set ``a.b.c=value``; the value is parsed as a TOML literal, falling back to a string."""
    if "=" not in item:
        raise ConfigError(f"override must look like key=value: {item!r}")
    key, text = item.split("=", 1)
    parts = [k.strip() for k in key.strip().split(".")]
    if not all(parts):
        raise ConfigError(f"bad override key: {key!r}")
    node = data
    for k in parts[:-1]:
        nxt = node.setdefault(k, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"override {key!r} descends into a non-table")
        node = nxt
    node[parts[-1]] = _parse_value(text.strip())


def _need(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigError(f"missing key {where}.{key}")
    return table[key]


def validate(data: dict, source: Optional[Path] = None) -> ScenarioConfig:
    data = copy.deepcopy(data)
    for k in data:
        if k != k.lower():
            raise ConfigError(f"keys must be lowercase: {k!r}")
    ham = dict(data.get("hamiltonian", {}))
    try:
        ham["kind"] = normalize_kind(str(_need(ham, "kind", "hamiltonian")))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    datum = dict(data.get("datum", {"kind": "cone"}))
    kind = str(datum.get("kind", "cone"))
    if kind.startswith("constant(") and kind.endswith(")"):
        datum["k"] = float(kind[len("constant("):-1])
        kind = "constant"
    if kind not in DATUM_KINDS:
        raise ConfigError(f"unknown datum kind {kind!r}")
    datum["kind"] = kind
    if kind == "samples" and "file" not in datum and "values" not in datum:
        raise ConfigError("samples datum needs datum.file or datum.values")
    grid = dict(data.get("grid", {}))
    grid.setdefault("xmin", -3.0)
    grid.setdefault("xmax", 3.0)
    grid.setdefault("cells", 1200)
    grid.setdefault("t_end", 1.0)
    grid.setdefault("cfl", 0.5)
    if not float(grid["xmin"]) < float(grid["xmax"]) or int(grid["cells"]) < 16:
        raise ConfigError("grid needs xmin < xmax and at least 16 cells")
    if not float(grid["t_end"]) > 0 or not 0 < float(grid["cfl"]) < 1:
        raise ConfigError("grid needs t_end > 0 and cfl in (0, 1)")
    domain = dict(data.get("domain", {}))
    domain.setdefault("x0", 0.0)
    domain.setdefault("r", 1.0)
    if not float(domain["r"]) > 0:
        raise ConfigError("domain.r must be positive")
    checks = data.get("checks", [])
    if not isinstance(checks, list) or not checks:
        raise ConfigError("checks must be a nonempty list")
    bad = [c for c in checks if c not in CHECKS]
    if bad:
        raise ConfigError(f"unknown checks {bad}; known: {list(CHECKS)}")
    known = {"name", "hamiltonian", "datum", "grid", "domain", "checks", "verify", "output", "bounds",
             "chars", "convolution", "herglotz"}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown top-level keys {sorted(extra)}")
    return ScenarioConfig(
        name=str(data.get("name", source.stem if source else "scenario")),
        hamiltonian=ham, datum=datum, grid=grid, domain=domain, checks=list(checks),
        verify=dict(data.get("verify", {})), output=dict(data.get("output", {})),
        bounds=dict(data.get("bounds", {})), chars=dict(data.get("chars", {})),
        convolution=dict(data.get("convolution", {})), herglotz=dict(data.get("herglotz", {})),
        raw=data, source=source,
    )


def load_config(path: str, overrides: Optional[list] = None) -> ScenarioConfig:
    data, source = _read(path)
    for item in overrides or []:
        apply_override(data, item)
    if source is None and "name" not in data:
        data["name"] = Path(path).name.removesuffix(".toml")
    return validate(data, source)


__all__ = ["ScenarioConfig", "ConfigError", "load_config", "apply_override", "validate", "bundled_scenarios",
           "CHECKS", "KINDS"]
