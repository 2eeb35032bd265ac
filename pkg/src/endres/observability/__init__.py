"""Observability: structured logging for scenario runs."""

from __future__ import annotations

from endres.observability.context_logger import ContextLogger

__all__ = ["ContextLogger"]
