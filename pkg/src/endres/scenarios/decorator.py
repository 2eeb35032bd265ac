"""The @scenario decorator."""

from __future__ import annotations

from typing import Callable

from endres.scenarios.registry import ScenarioRegistry, default_registry
from endres.scenarios.types import ScenarioDescriptor, ScenarioFunc

__all__ = ["scenario"]


def scenario(
    name: str,
    *,
    description: str | None = None,
    tags: list[str] | None = None,
    randomized: bool = False,
    registry: ScenarioRegistry | None = None,
) -> Callable[[ScenarioFunc], ScenarioFunc]:
    """Register the decorated function as scenario ``name``.

    The description defaults to the first line of the docstring. The function
    is returned unchanged, with its descriptor attached as ``endres_scenario``.
    """

    def decorator(func: ScenarioFunc) -> ScenarioFunc:
        if description is not None:
            text = description
        elif func.__doc__:
            text = func.__doc__.strip().split("\n")[0].strip()
        else:
            text = f"Scenario {name}"
        descriptor = ScenarioDescriptor(
            name=name, description=text, func=func, tags=list(tags or []), randomized=randomized
        )
        (registry if registry is not None else default_registry).register(descriptor)
        func.endres_scenario = descriptor  # type: ignore[attr-defined]
        return func

    return decorator
