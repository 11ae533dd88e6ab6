"""Small pass/fail containers shared by the inequality checkers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Check:
    name: str
    lhs: float
    rhs: float
    passed: bool

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


def leq(name: str, lhs: float, rhs: float, tol: float) -> Check:
    """Record ``lhs <= rhs + tol``."""
    lhs = float(lhs)
    rhs = float(rhs)
    ok = (lhs <= rhs + tol) if not (math.isnan(lhs) or math.isnan(rhs)) else False
    return Check(name, lhs, rhs, bool(ok))


@dataclass
class Report:
    checks: list[Check] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def add(self, check: Check) -> Check:
        self.checks.append(check)
        return check

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def names(self) -> list[str]:
        return [c.name for c in self.checks]

    def rows(self) -> list[tuple[str, float, float, bool]]:
        return [(c.name, c.lhs, c.rhs, c.passed) for c in self.checks]
