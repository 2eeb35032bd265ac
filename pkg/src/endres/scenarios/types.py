"""Scenario types: ScenarioDescriptor, Assertion, ScenarioResult."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Callable

if TYPE_CHECKING:
    from endres.config import RunConfig
    from endres.context import RunContext

__all__ = [
    "Assertion",
    "ScenarioDescriptor",
    "ScenarioFunc",
    "ScenarioResult",
]

ScenarioFunc = Callable[["RunConfig", "RunContext"], "ScenarioResult"]


@dataclass(frozen=True)
class Assertion:
    """One pass/fail comparison of a measured value against its target."""

    name: str
    target: str
    measured: float
    tolerance: float
    passed: bool

    @classmethod
    def at_most(cls, name: str, measured: float, bound: float) -> Assertion:
        """measured ≤ bound."""
        return cls(name, f"<= {bound:g}", float(measured), float(bound), bool(measured <= bound))

    @classmethod
    def at_least(cls, name: str, measured: float, bound: float) -> Assertion:
        """measured ≥ bound."""
        return cls(name, f">= {bound:g}", float(measured), float(bound), bool(measured >= bound))

    @classmethod
    def near(cls, name: str, measured: float, expected: float, tolerance: float) -> Assertion:
        """|measured - expected| ≤ tolerance."""
        ok = math.isfinite(measured) and abs(measured - expected) <= tolerance
        return cls(name, f"{expected:g}", float(measured), float(tolerance), bool(ok))

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "target": self.target,
            "measured": self.measured,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


@dataclass
class ScenarioResult:
    """Assertions and CSV tables produced by one scenario run."""

    name: str
    assertions: list[Assertion] = field(default_factory=list)
    tables: dict[str, list[dict[str, Any]]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    @property
    def failures(self) -> list[Assertion]:
        return [a for a in self.assertions if not a.passed]

    def check(self, assertion: Assertion) -> Assertion:
        self.assertions.append(assertion)
        return assertion

    def summary(self) -> dict[str, Any]:
        """The JSON summary ``{scenario, assertions: [...]}``."""
        return {"scenario": self.name, "assertions": [a.to_dict() for a in self.assertions]}


@dataclass
class ScenarioDescriptor:
    """Registered scenario: its name, description, tags and entry function."""

    name: str
    description: str
    func: ScenarioFunc
    tags: list[str] = field(default_factory=list)
    randomized: bool = False
