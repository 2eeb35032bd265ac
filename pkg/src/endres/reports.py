"""CSV and JSON report files.

Every write goes to a temporary file in the destination directory and is then
moved into place with ``os.replace``, so a reader never sees a partial file and
concurrent scenarios never share a file.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Callable, Iterable, TextIO

from endres.errors import ConfigError

logger = logging.getLogger(__name__)

__all__ = ["SUMMARY_FILE", "aggregate_summaries", "read_summary", "write_csv", "write_json"]

SUMMARY_FILE = "summary.json"


def _atomic_write(path: Path, prefix: str, newline: str | None, write: Callable[[TextIO], None]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(prefix=prefix, suffix=".tmp", dir=path.parent, text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline=newline) as f:
            write(f)
        os.replace(tmp_path, path)
    except BaseException:
        try:
            os.remove(tmp_path)
        except OSError:
            pass
        raise
    return path


def _fieldnames(rows: list[dict[str, Any]]) -> list[str]:
    # first-seen order, so rows with extra keys still fit one header
    names: dict[str, None] = {}
    for row in rows:
        for key in row:
            names.setdefault(key, None)
    return list(names)


def write_csv(path: str | Path, rows: Iterable[dict[str, Any]]) -> Path:
    """Write ``rows`` as CSV with a header; missing cells are left empty."""
    materialized = list(rows)
    fieldnames = _fieldnames(materialized)

    def write(f: TextIO) -> None:
        writer = csv.DictWriter(f, fieldnames=fieldnames, restval="", lineterminator="\n")
        writer.writeheader()
        writer.writerows(materialized)

    target = _atomic_write(Path(path), f"{Path(path).stem}_", "", write)
    logger.debug("Wrote %d rows to %s", len(materialized), target)
    return target


def write_json(path: str | Path, payload: Any) -> Path:
    """Write ``payload`` as indented JSON with sorted keys and a trailing newline."""

    def write(f: TextIO) -> None:
        json.dump(payload, f, indent=2, sort_keys=True, allow_nan=True)
        f.write("\n")

    return _atomic_write(Path(path), f"{Path(path).stem}_", "\n", write)


def read_summary(path: str | Path) -> dict[str, Any]:
    """Read one scenario summary, rejecting files that are not ``{scenario, assertions}`` objects."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(message=f"Invalid summary file: {path}", cause=e) from e
    if not isinstance(data, dict) or "scenario" not in data or "assertions" not in data:
        raise ConfigError(message=f"Not a scenario summary: {path}", details={"path": str(path)})
    return data


def aggregate_summaries(directory: str | Path) -> dict[str, Any]:
    """Collect every ``<scenario>/summary.json`` below ``directory`` into one report.

    Scenarios are ordered by name. The report lists the scenarios, their
    assertions, the total number of failed assertions and an overall ``pass``.
    """
    root = Path(directory)
    if not root.is_dir():
        raise ConfigError(message=f"Report directory not found: {root}", details={"field": "output_dir"})
    scenarios = [read_summary(p) for p in sorted(root.glob(f"*/{SUMMARY_FILE}"))]
    scenarios.sort(key=lambda s: str(s["scenario"]))
    failed = sum(1 for s in scenarios for a in s["assertions"] if not a.get("pass", False))
    return {
        "scenarios": scenarios,
        "failed": failed,
        "pass": failed == 0,
    }
