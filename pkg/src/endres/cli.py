"""Command-line entry point: ``endres <command> [--config PATH] [--scenario NAME] ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from endres.config import load_config
from endres.errors import AssertionFailedError, ConfigError, ConfigNotFoundError, ScenarioNotFoundError
from endres.reports import aggregate_summaries, write_json
from endres.runner import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, ScenarioRunner
from endres.scenarios import default_registry

__all__ = ["COMMAND_SCENARIOS", "build_parser", "main"]

logger = logging.getLogger(__name__)

COMMAND_SCENARIOS: dict[str, tuple[str, ...]] = {
    "kernel": ("kernel-closed-form", "identity-suite", "key-lemma", "remainder-envelopes", "doubling"),
    "norms": ("gp-exponent", "case-calculus"),
    "maximal": ("maximal-weak11", "maximal-growth", "exp-vertical"),
    "fefferman-stein": ("fefferman-stein",),
    "square": ("square-rbound",),
    "rbound": ("square-rbound",),
}

REPORT_FILE = "report.json"


def _run_options() -> argparse.ArgumentParser:
    options = argparse.ArgumentParser(add_help=False)
    options.add_argument("--config", type=Path, default=None, help="YAML run configuration")
    options.add_argument("--scenario", default=None, help="Run only this scenario")
    options.add_argument("--out", dest="output_dir", default=None, help="Output directory")
    options.add_argument("--seed", type=int, default=None, help="Seed of every randomized step")
    options.add_argument("--threads", type=int, default=None, help="Scenarios run in parallel")
    options.add_argument("-v", "--verbose", action="store_true", help="Debug logging from library modules")
    return options


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="endres",
        description="Resolvent calculus on discretized manifolds with ends.",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    options = _run_options()
    for command, names in COMMAND_SCENARIOS.items():
        commands.add_parser(command, parents=[options], help=f"Scenarios: {', '.join(names)}")
    commands.add_parser("run", parents=[options], help="The configured scenario, or all of them")
    report = commands.add_parser("report", help="Aggregate scenario summaries into one JSON report")
    report.add_argument("--out", dest="output_dir", default="out", help="Directory holding scenario outputs")
    commands.add_parser("list", help="List registered scenarios")
    return parser


def _config_diagnostic(error: ConfigError) -> str:
    lines = [f"configuration error: {error.message}"]
    for entry in error.details.get("errors", []):
        lines.append(f"  field {entry.get('field')}: {entry.get('message')}")
    return "\n".join(lines)


def _run(args: argparse.Namespace) -> int:
    overrides: dict[str, Any] = {
        "scenario": args.scenario,
        "seed": args.seed,
        "output_dir": args.output_dir,
        "threads": args.threads,
    }
    config = load_config(args.config, overrides)
    runner = ScenarioRunner(config)
    if args.command == "run" or args.scenario:
        names = None
    else:
        names = list(dict.fromkeys(COMMAND_SCENARIOS[args.command]))
    results = runner.run(names)
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        print(f"{status} {result.name} ({len(result.assertions)} assertions)")
        for failure in result.failures:
            print(f"  {failure.name}: measured {failure.measured:.6g}, target {failure.target}")
    runner.raise_for_failures(results)
    return EXIT_OK


def _report(args: argparse.Namespace) -> int:
    report = aggregate_summaries(args.output_dir)
    path = write_json(Path(args.output_dir) / REPORT_FILE, report)
    print(f"{len(report['scenarios'])} scenarios, {report['failed']} failed assertions -> {path}")
    return EXIT_OK if report["pass"] else EXIT_FAILED


def _list() -> int:
    for name, descriptor in default_registry.iter():
        tags = ",".join(descriptor.tags)
        print(f"{name:<22} [{tags}] {descriptor.description}")
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    """Parse ``argv`` and run the command; returns the process exit code."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "list":
            return _list()
        if args.command == "report":
            return _report(args)
        return _run(args)
    except AssertionFailedError as e:
        print(f"assertion failed: {e.message}", file=sys.stderr)
        return EXIT_FAILED
    except ConfigError as e:
        print(_config_diagnostic(e), file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigNotFoundError, ScenarioNotFoundError) as e:
        print(f"configuration error: {e.message}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
