"""endres - resolvent calculus on discretized manifolds with ends."""

from __future__ import annotations

# Context
from endres.context import RunContext, derive_rng

# Config
from endres.config import DEFAULT_TOLERANCES, RunConfig, Tolerances, load_config, validate_config

# Errors
from endres.errors import (
    AssertionFailedError,
    ConfigError,
    ConfigNotFoundError,
    DomainError,
    EndresError,
    ErrorCodes,
    KernelRangeError,
    ScenarioNotFoundError,
    SolverError,
)

# Geometry
from endres.mesh import CENTER, EndSpec, ManifoldMesh, build_mesh

# Kernels
from endres.resolvent import KernelMatrix, SpectralCalculus, horizontal_matrix, resolvent_matrix, vertical_matrix

# Scenarios
from endres.scenarios import Assertion, ScenarioRegistry, ScenarioResult, default_registry, scenario
from endres.runner import ScenarioRunner

# Observability
from endres.observability import ContextLogger

__version__ = "0.1.0"

__all__ = [
    # Context
    "RunContext",
    "derive_rng",
    # Config
    "RunConfig",
    "Tolerances",
    "DEFAULT_TOLERANCES",
    "load_config",
    "validate_config",
    # Errors
    "ErrorCodes",
    "EndresError",
    "ConfigError",
    "ConfigNotFoundError",
    "DomainError",
    "KernelRangeError",
    "SolverError",
    "ScenarioNotFoundError",
    "AssertionFailedError",
    # Geometry
    "CENTER",
    "EndSpec",
    "ManifoldMesh",
    "build_mesh",
    # Kernels
    "KernelMatrix",
    "SpectralCalculus",
    "resolvent_matrix",
    "vertical_matrix",
    "horizontal_matrix",
    # Scenarios
    "Assertion",
    "ScenarioRegistry",
    "ScenarioResult",
    "ScenarioRunner",
    "default_registry",
    "scenario",
    # Observability
    "ContextLogger",
]
