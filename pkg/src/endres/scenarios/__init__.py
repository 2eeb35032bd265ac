"""Named scenarios: registry, decorator, result types and the built-in checks."""

from __future__ import annotations

from endres.scenarios.decorator import scenario
from endres.scenarios.registry import SCENARIO_NAME_PATTERN, ScenarioRegistry, default_registry
from endres.scenarios.types import Assertion, ScenarioDescriptor, ScenarioFunc, ScenarioResult

# registers the built-in scenarios on default_registry
from endres.scenarios import builtin  # noqa: E402,F401

__all__ = [
    "Assertion",
    "SCENARIO_NAME_PATTERN",
    "ScenarioDescriptor",
    "ScenarioFunc",
    "ScenarioRegistry",
    "ScenarioResult",
    "default_registry",
    "scenario",
]
