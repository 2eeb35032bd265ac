"""Error hierarchy for endres."""

from __future__ import annotations

from datetime import datetime, timezone
from typing import Any

__all__ = [
    "EndresError",
    "ConfigNotFoundError",
    "ConfigError",
    "DomainError",
    "KernelRangeError",
    "SolverError",
    "ScenarioNotFoundError",
    "AssertionFailedError",
    "ErrorCodes",
]


class EndresError(Exception):
    """Base error for all endres errors."""

    def __init__(
        self,
        code: str,
        message: str,
        details: dict[str, Any] | None = None,
        cause: Exception | None = None,
    ) -> None:
        super().__init__(message)
        self.code = code
        self.message = message
        self.details: dict[str, Any] = details or {}
        self.cause = cause
        self.timestamp = datetime.now(timezone.utc).isoformat()

    def __str__(self) -> str:
        return f"[{self.code}] {self.message}"


class ConfigNotFoundError(EndresError):
    """Raised when a configuration file cannot be found."""

    def __init__(self, config_path: str, **kwargs: Any) -> None:
        super().__init__(
            code="CONFIG_NOT_FOUND",
            message=f"Configuration file not found: {config_path}",
            details={"config_path": config_path},
            **kwargs,
        )


class ConfigError(EndresError):
    """Raised when configuration is invalid."""

    def __init__(self, message: str, **kwargs: Any) -> None:
        super().__init__(code="CONFIG_INVALID", message=message, **kwargs)

    @property
    def fields(self) -> list[str]:
        return [str(err.get("field", "")) for err in self.details.get("errors", [])]


class DomainError(EndresError):
    """Raised when an argument lies outside the domain of an operation."""

    def __init__(self, message: str, *, parameter: str | None = None, value: Any = None, **kwargs: Any) -> None:
        details = kwargs.pop("details", None) or {}
        if parameter is not None:
            details.setdefault("parameter", parameter)
            details.setdefault("value", value)
        super().__init__(code="DOMAIN_ERROR", message=message, details=details, **kwargs)

    @property
    def parameter(self) -> str | None:
        return self.details.get("parameter")


class KernelRangeError(EndresError):
    """Raised when a special-function evaluation overflows or turns non-finite."""

    def __init__(self, message: str, **kwargs: Any) -> None:
        super().__init__(code="RANGE_ERROR", message=message, **kwargs)


class SolverError(EndresError):
    """Raised when a factorization fails or a solve misses its residual target."""

    def __init__(self, message: str, *, residual: float | None = None, **kwargs: Any) -> None:
        details = kwargs.pop("details", None) or {}
        if residual is not None:
            details["residual"] = residual
        super().__init__(code="SOLVER_ERROR", message=message, details=details, **kwargs)


class ScenarioNotFoundError(EndresError):
    """Raised when a scenario name is not registered."""

    def __init__(self, name: str, **kwargs: Any) -> None:
        super().__init__(
            code="SCENARIO_NOT_FOUND",
            message=f"Scenario not found: {name}",
            details={"scenario": name},
            **kwargs,
        )


class AssertionFailedError(EndresError):
    """Raised when a scenario assertion is enforced and fails."""

    def __init__(self, name: str, target: str, measured: float, tolerance: float, **kwargs: Any) -> None:
        super().__init__(
            code="ASSERTION_FAILED",
            message=f"Assertion '{name}' failed: measured {measured:.6g}, target {target} (tolerance {tolerance:g})",
            details={"name": name, "target": target, "measured": measured, "tolerance": tolerance},
            **kwargs,
        )

    @property
    def measured(self) -> float:
        return float(self.details["measured"])


class ErrorCodes:
    """All endres error codes as constants.

    Example:
        if error.code == ErrorCodes.DOMAIN_ERROR:
            report_bad_argument(error.details["parameter"])
    """

    CONFIG_NOT_FOUND = "CONFIG_NOT_FOUND"
    CONFIG_INVALID = "CONFIG_INVALID"
    DOMAIN_ERROR = "DOMAIN_ERROR"
    RANGE_ERROR = "RANGE_ERROR"
    SOLVER_ERROR = "SOLVER_ERROR"
    SCENARIO_NOT_FOUND = "SCENARIO_NOT_FOUND"
    ASSERTION_FAILED = "ASSERTION_FAILED"

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("ErrorCodes is immutable")

    def __delattr__(self, name: str) -> None:
        raise AttributeError("ErrorCodes is immutable")
