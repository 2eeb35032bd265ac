"""Run context: identity of a run and its deterministic random streams."""

from __future__ import annotations

import uuid
from dataclasses import dataclass

import numpy as np

from endres.errors import ConfigError

__all__ = ["RunContext", "derive_rng"]


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator determined only by (seed, key), independent of call order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


@dataclass
class RunContext:
    """Execution context of one scenario run."""

    run_id: str
    scenario: str | None = None
    seed: int | None = None

    @classmethod
    def create(cls, scenario: str | None = None, seed: int | None = None) -> RunContext:
        """Create a top-level context with a generated UUID v4 run_id."""
        return cls(run_id=str(uuid.uuid4()), scenario=scenario, seed=seed)

    def rng(self, *key: int) -> np.random.Generator:
        if self.seed is None:
            raise ConfigError(
                message="randomized steps require an explicit seed",
                details={"errors": [{"field": "seed", "message": "required for randomized scenarios"}]},
            )
        return derive_rng(self.seed, *key)
