"""Central scenario registry for registering and querying named scenarios."""

from __future__ import annotations

import logging
import re
import threading
from typing import Iterator

from endres.errors import DomainError, ScenarioNotFoundError
from endres.scenarios.types import ScenarioDescriptor

logger = logging.getLogger(__name__)

SCENARIO_NAME_PATTERN = re.compile(r"^[a-z][a-z0-9-]*$")

__all__ = ["ScenarioRegistry", "SCENARIO_NAME_PATTERN", "default_registry"]


class ScenarioRegistry:
    """Thread-safe mapping from scenario names to descriptors."""

    def __init__(self) -> None:
        self._scenarios: dict[str, ScenarioDescriptor] = {}
        self._lock = threading.RLock()

    # ----- Registration -----

    def register(self, descriptor: ScenarioDescriptor) -> None:
        """Register a scenario.

        Raises:
            DomainError: If the name is malformed or already registered.
        """
        name = descriptor.name
        if not name:
            raise DomainError("scenario name must be a non-empty string", parameter="name", value=name)
        if not SCENARIO_NAME_PATTERN.match(name):
            raise DomainError(
                f"Invalid scenario name: '{name}'. Must match pattern: {SCENARIO_NAME_PATTERN.pattern}",
                parameter="name",
                value=name,
            )
        with self._lock:
            if name in self._scenarios:
                raise DomainError(f"Scenario already exists: {name}", parameter="name", value=name)
            self._scenarios[name] = descriptor
        logger.debug("Registered scenario %s", name)

    # ----- Query Methods -----

    def get(self, name: str) -> ScenarioDescriptor | None:
        """Look up a scenario by name. Returns None if not found.

        Raises:
            ScenarioNotFoundError: If name is empty.
        """
        if name == "":
            raise ScenarioNotFoundError(name="")
        with self._lock:
            return self._scenarios.get(name)

    def resolve(self, name: str) -> ScenarioDescriptor:
        """Like ``get`` but raises ScenarioNotFoundError for unknown names."""
        descriptor = self.get(name)
        if descriptor is None:
            raise ScenarioNotFoundError(name=name)
        return descriptor

    def has(self, name: str) -> bool:
        with self._lock:
            return name in self._scenarios

    def list(self, tags: list[str] | None = None) -> list[str]:
        """Sorted scenario names, optionally filtered to those carrying all ``tags``."""
        with self._lock:
            snapshot = dict(self._scenarios)
        names = list(snapshot)
        if tags is not None:
            wanted = set(tags)
            names = [n for n in names if wanted.issubset(snapshot[n].tags)]
        return sorted(names)

    def iter(self) -> Iterator[tuple[str, ScenarioDescriptor]]:
        """Iterator over (name, descriptor) pairs (snapshot-based)."""
        with self._lock:
            items = sorted(self._scenarios.items())
        return iter(items)

    @property
    def count(self) -> int:
        with self._lock:
            return len(self._scenarios)


default_registry = ScenarioRegistry()
