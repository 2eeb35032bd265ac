"""End-to-end runs of cheap built-in scenarios on a small configuration."""

from __future__ import annotations

import csv
import json

import pytest

from endres.reports import aggregate_summaries
from endres.runner import ScenarioRunner


@pytest.mark.parametrize("name", ["case-calculus", "identity-suite", "doubling"])
def test_builtin_scenario_passes(small_config, name):
    """The scenario passes and leaves a summary plus at least one table."""
    runner = ScenarioRunner(small_config)
    [result] = runner.run([name])
    assert result.passed, [a.to_dict() for a in result.failures]
    directory = runner.output_dir / name
    summary = json.loads((directory / "summary.json").read_text())
    assert summary["scenario"] == name
    assert len(summary["assertions"]) == len(result.assertions)
    tables = list(directory.glob("*.csv"))
    assert tables
    with tables[0].open() as f:
        assert len(list(csv.DictReader(f))) > 0


def test_parallel_run_and_report(small_config):
    """Two scenarios in parallel aggregate into a passing report."""
    config = small_config.model_copy(update={"threads": 2})
    runner = ScenarioRunner(config)
    results = runner.run(["case-calculus", "doubling"])
    assert all(r.passed for r in results)
    report = aggregate_summaries(runner.output_dir)
    assert [s["scenario"] for s in report["scenarios"]] == ["case-calculus", "doubling"]
    assert report["pass"] is True
