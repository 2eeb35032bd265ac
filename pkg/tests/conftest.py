"""Shared test fixtures: small meshes and run configurations."""

from __future__ import annotations

from typing import Any

import numpy as np
import pytest

from endres.config import RunConfig, validate_config
from endres.mesh import EndSpec, ManifoldMesh, build_mesh


# === Mesh Fixtures ===


@pytest.fixture
def equal_mesh() -> ManifoldMesh:
    """Two ℝ³ ends, 33 radii each, plus one hub vertex."""
    return build_mesh([EndSpec(n=3, r_max=64.0, cells=32), EndSpec(n=3, r_max=64.0, cells=32)])


@pytest.fixture
def mixed_mesh() -> ManifoldMesh:
    """Ends of dimensions 3 and 4 (n* = 3)."""
    return build_mesh([EndSpec(n=3, r_max=64.0, cells=32), EndSpec(n=4, r_max=64.0, cells=32)])


@pytest.fixture
def moded_mesh() -> ManifoldMesh:
    """Ends carrying three cross states per radius, two hub vertices."""
    return build_mesh(
        [EndSpec(n=3, r_max=32.0, cells=16, cross_modes=3), EndSpec(n=4, r_max=32.0, cells=16, cross_modes=3)],
        center_size=2,
    )


@pytest.fixture
def probe_mesh() -> ManifoldMesh:
    """Single ℝ³ end reflecting at r_min = 0.25."""
    return build_mesh([EndSpec(n=3, r_max=128.0, cells=1024, r_min=0.25)], probe=True)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


# === Config Fixtures ===


def small_config_data(**overrides: Any) -> dict[str, Any]:
    """Raw config mapping for a cheap run on two short ℝ³ ends."""
    data: dict[str, Any] = {
        "seed": 3,
        "output_dir": "out",
        "mesh": {
            "center_size": 1,
            "ends": [
                {"n": 3, "r_max": 64.0, "cells": 32},
                {"n": 3, "r_max": 64.0, "cells": 32},
            ],
        },
        "grids": {"t_min": 4.0, "t_max": 64.0, "t_ratio": 2.0},
        "operator": {"bump_radii": [4.0, 8.0], "family_sizes": [1, 4], "t_count": 2, "trials": 2},
    }
    data.update(overrides)
    return data


@pytest.fixture
def small_config(tmp_path: Any) -> RunConfig:
    return validate_config(small_config_data(output_dir=str(tmp_path / "out")))


@pytest.fixture
def make_config_data() -> Any:
    """Factory for raw config mappings, see small_config_data."""
    return small_config_data
