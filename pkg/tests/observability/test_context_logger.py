"""Tests for ContextLogger."""

from __future__ import annotations

import io
import json

from endres.context import RunContext
from endres.observability import ContextLogger


def _lines(buf: io.StringIO) -> list[str]:
    return [line for line in buf.getvalue().splitlines() if line]


class TestContextLoggerJson:
    """JSON output."""

    def test_entry_fields(self):
        """Each entry carries level, message, logger and extra."""
        buf = io.StringIO()
        ContextLogger("endres.test", output=buf).info("solved", {"residual": 1e-12})
        entry = json.loads(_lines(buf)[0])
        assert entry["level"] == "info"
        assert entry["message"] == "solved"
        assert entry["logger"] == "endres.test"
        assert entry["extra"] == {"residual": 1e-12}
        assert entry["run_id"] is None

    def test_from_context(self):
        """run_id and scenario are injected."""
        buf = io.StringIO()
        context = RunContext.create(scenario="doubling", seed=1)
        ContextLogger.from_context(context, "endres.test", output=buf).warn("slow")
        entry = json.loads(_lines(buf)[0])
        assert entry["run_id"] == context.run_id
        assert entry["scenario"] == "doubling"
        assert "step" not in entry


class TestContextLoggerText:
    """Text output and level filtering."""

    def test_text_format(self):
        """Text lines show level, scenario and extras."""
        buf = io.StringIO()
        context = RunContext.create(scenario="gp-exponent")
        ContextLogger.from_context(context, "endres.test", output_format="text", output=buf).error(
            "assertion failed", {"measured": 0.7}
        )
        line = _lines(buf)[0]
        assert "[ERROR]" in line
        assert "[scenario=gp-exponent]" in line
        assert line.endswith("assertion failed measured=0.7")

    def test_level_filter(self):
        """Messages below the level are dropped."""
        buf = io.StringIO()
        logger = ContextLogger("endres.test", level="warn", output=buf)
        logger.debug("hidden")
        logger.info("hidden")
        logger.warn("shown")
        logger.fatal("shown")
        assert len(_lines(buf)) == 2
