"""Configuration loading and validation."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Literal

import pydantic
import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from endres.errors import ConfigError, ConfigNotFoundError

__all__ = [
    "EndConfig",
    "MeshConfig",
    "GridConfig",
    "OperatorConfig",
    "Tolerances",
    "RunConfig",
    "DEFAULT_TOLERANCES",
    "load_config",
    "validate_config",
]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Tolerances(_Strict):
    """Every numeric tolerance, threshold and numerical default in one place."""

    # exact identities
    identity: float = Field(1e-12, gt=0)
    semigroup: float = Field(1e-8, gt=0)
    stein: float = Field(1e-10, gt=0)
    residual: float = Field(1e-10, gt=0)
    symmetry: float = Field(1e-12, gt=0)
    # integer-valued and reproducibility checks
    exact: float = Field(0.0, ge=0)

    # closed-form comparisons
    kernel_rel: float = Field(0.02, gt=0)
    g1_rel: float = Field(0.05, gt=0)
    vertical_rel: float = Field(0.05, gt=0)

    # exponent fits
    slope_growth: float = Field(0.15, gt=0)
    slope_bounded: float = Field(0.1, gt=0)
    decay_exponent: float = Field(0.2, gt=0)
    # u_i decays at least like e^{-rate k r} for large k
    decay_rate: float = Field(0.5, gt=0)

    # stability / growth factors
    envelope_variation: float = Field(5.0, gt=1)
    weak11_variation: float = Field(3.0, gt=1)
    weak11_bound: float = Field(10.0, gt=0)
    maximal_stability: float = Field(3.0, gt=1)
    maximal_growth: float = Field(1.5, gt=1)
    fs_stability: float = Field(2.0, gt=1)
    fs_growth: float = Field(2.0, gt=1)
    square_stability: float = Field(2.0, gt=1)
    rbound_stability: float = Field(2.0, gt=1)
    rbound_growth: float = Field(1.5, gt=1)
    rbound_consistency: float = Field(0.1, gt=0)
    ressf_constant: float = Field(8.0, gt=0)
    doubling_growth: float = Field(1.5, gt=1)
    doubling_stability: float = Field(1.25, gt=1)

    # numerical defaults
    power_rtol: float = Field(1e-8, gt=0)
    power_restarts: int = Field(5, ge=0)
    power_max_iter: int = Field(200, ge=1)
    quad_points: int = Field(128, ge=32)
    gamma_points: int = Field(64, ge=32)
    sign_samples: int = Field(256, ge=1)
    decay_constants: tuple[float, ...] = (0.5, 0.4, 0.3, 0.25, 0.2)

    @field_validator("decay_constants")
    @classmethod
    def _check_decay_constants(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if not value or any(not (0.0 < c <= 1.0) for c in value):
            raise ValueError("decay constants must lie in (0, 1]")
        return value


DEFAULT_TOLERANCES = Tolerances()


class EndConfig(_Strict):
    n: int = Field(..., ge=1)
    cross_modes: int = Field(1, ge=1)
    r_min: float = Field(1.0, gt=0)
    r_max: float = Field(..., gt=0)
    cells: int = Field(..., ge=16)

    @model_validator(mode="after")
    def _check_radii(self) -> EndConfig:
        if not self.r_max > self.r_min:
            raise ValueError(f"r_max ({self.r_max}) must exceed r_min ({self.r_min})")
        return self


class MeshConfig(_Strict):
    center_size: int = Field(1, ge=1)
    ends: list[EndConfig] = Field(
        default_factory=lambda: [
            EndConfig(n=3, r_max=800.0, cells=160),
            EndConfig(n=4, r_max=800.0, cells=160),
        ],
        min_length=2,
    )


class GridConfig(_Strict):
    t_min: float = Field(100.0, gt=0)
    t_max: float = Field(1.0e4, gt=0)
    t_ratio: float = Field(math.sqrt(2.0), gt=1)
    # lower end of the maximal-function grids; below the squared cell size of every bump
    t_floor: float = Field(0.01, gt=0)
    s_factor: float = Field(1000.0, gt=1)
    key_lemma_small_k: float = Field(0.01, gt=0)
    key_lemma_large_k: float = Field(1.0, gt=0)
    key_lemma_r_lo: float = Field(8.0, gt=0)
    # the decay fits stop at k·r = power_kr (power law) and k·r = decay_kr (exponential)
    key_lemma_power_kr: float = Field(0.2, gt=0)
    key_lemma_decay_kr: float = Field(40.0, gt=0)
    k_grid: list[float] = Field(default_factory=lambda: [0.4, 0.2, 0.1, 0.05], min_length=1)
    p_grid: list[float] = Field(default_factory=lambda: [1.5, 2.0, 3.0, 4.0, 6.0, math.inf], min_length=1)

    @field_validator("k_grid")
    @classmethod
    def _check_k(cls, value: list[float]) -> list[float]:
        for k in value:
            if not (0.0 < k <= 1.0):
                raise ValueError(f"k must lie in (0, 1], got {k}")
        return value

    @field_validator("p_grid")
    @classmethod
    def _check_p(cls, value: list[float]) -> list[float]:
        for p in value:
            if math.isnan(p) or p < 1.0:
                raise ValueError(f"p must be >= 1, got {p}")
        return value

    @model_validator(mode="after")
    def _check_t_range(self) -> GridConfig:
        if not self.t_max > self.t_min:
            raise ValueError(f"t_max ({self.t_max}) must exceed t_min ({self.t_min})")
        if not self.t_floor < self.t_min:
            raise ValueError(f"t_floor ({self.t_floor}) must lie below t_min ({self.t_min})")
        if not self.key_lemma_small_k < self.key_lemma_large_k:
            raise ValueError("key_lemma_small_k must lie below key_lemma_large_k")
        return self


class OperatorConfig(_Strict):
    m: int = Field(1, ge=1)
    bump_radii: list[float] = Field(default_factory=lambda: [4.0, 8.0, 16.0, 32.0], min_length=1)
    family_sizes: list[int] = Field(default_factory=lambda: [1, 4, 16, 64], min_length=1)
    t_count: int = Field(4, ge=1)
    trials: int = Field(6, ge=1)


class RunConfig(_Strict):
    scenario: str | None = None
    seed: int | None = Field(None, ge=0)
    output_dir: str = "out"
    threads: int = Field(1, ge=1)
    log_format: Literal["json", "text"] = "text"
    log_level: Literal["trace", "debug", "info", "warn", "error", "fatal"] = "info"
    mesh: MeshConfig = Field(default_factory=MeshConfig)
    grids: GridConfig = Field(default_factory=GridConfig)
    operator: OperatorConfig = Field(default_factory=OperatorConfig)
    tolerances: Tolerances = Field(default_factory=Tolerances)


def _read_yaml(path: Path) -> dict[str, Any]:
    if not path.exists():
        raise ConfigNotFoundError(config_path=str(path))
    try:
        parsed = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise ConfigError(message=f"Invalid YAML in configuration file: {path}", cause=e) from e
    if parsed is None:
        return {}
    if not isinstance(parsed, dict):
        raise ConfigError(message=f"Configuration file must be a YAML mapping: {path}")
    return parsed


def _convert_validation_errors(error: pydantic.ValidationError) -> list[dict[str, Any]]:
    return [
        {
            "field": ".".join(str(loc) for loc in err["loc"]),
            "code": err["type"],
            "message": err["msg"],
        }
        for err in error.errors()
    ]


def validate_config(data: dict[str, Any]) -> RunConfig:
    """Validate a raw mapping into a RunConfig, raising ConfigError naming the offending fields."""
    try:
        return RunConfig.model_validate(data)
    except pydantic.ValidationError as e:
        errors = _convert_validation_errors(e)
        summary = "; ".join(f"{err['field']}: {err['message']}" for err in errors)
        raise ConfigError(message=f"Invalid configuration: {summary}", details={"errors": errors}, cause=e) from e


def load_config(path: str | Path | None = None, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Load, merge command-line overrides into, and validate a run configuration."""
    data: dict[str, Any] = _read_yaml(Path(path)) if path is not None else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    return validate_config(data)
