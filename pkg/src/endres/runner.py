"""ScenarioRunner: resolves, runs and reports named scenarios."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Sequence

from endres.config import RunConfig
from endres.context import RunContext
from endres.errors import AssertionFailedError, ConfigError, EndresError
from endres.observability import ContextLogger
from endres.reports import SUMMARY_FILE, write_csv, write_json
from endres.scenarios import Assertion, ScenarioDescriptor, ScenarioRegistry, ScenarioResult, default_registry

__all__ = ["ScenarioRunner", "EXIT_OK", "EXIT_FAILED", "EXIT_CONFIG"]

_logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


class ScenarioRunner:
    """Runs scenarios of a registry against one validated RunConfig.

    Each scenario writes ``<output_dir>/<scenario>/<table>.csv`` and
    ``<output_dir>/<scenario>/summary.json``. Library errors raised inside a
    scenario become a failed ``error`` assertion; configuration errors propagate.
    """

    def __init__(
        self,
        config: RunConfig,
        registry: ScenarioRegistry | None = None,
        logger: ContextLogger | None = None,
    ) -> None:
        self._config = config
        self._registry = registry if registry is not None else default_registry
        self._logger = logger

    @property
    def config(self) -> RunConfig:
        return self._config

    @property
    def output_dir(self) -> Path:
        return Path(self._config.output_dir)

    def select(self, names: Sequence[str] | None = None) -> list[ScenarioDescriptor]:
        """Descriptors to run: ``names``, else the configured scenario, else every registered one.

        Raises:
            ScenarioNotFoundError: If a name is not registered.
            ConfigError: If a randomized scenario is selected without a seed.
        """
        if names is None:
            names = [self._config.scenario] if self._config.scenario else self._registry.list()
        descriptors = [self._registry.resolve(name) for name in names]
        if self._config.seed is None:
            randomized = [d.name for d in descriptors if d.randomized]
            if randomized:
                raise ConfigError(
                    message=f"seed: randomized scenarios require an explicit seed ({', '.join(randomized)})",
                    details={"errors": [{"field": "seed", "code": "missing", "message": "required"}]},
                )
        return descriptors

    def run(self, names: Sequence[str] | None = None) -> list[ScenarioResult]:
        """Run the selected scenarios and write their reports; results keep selection order."""
        descriptors = self.select(names)
        threads = min(self._config.threads, len(descriptors))
        if threads <= 1:
            return [self.run_one(d) for d in descriptors]
        with ThreadPoolExecutor(max_workers=threads, thread_name_prefix="endres") as pool:
            return list(pool.map(self.run_one, descriptors))

    def run_one(self, descriptor: ScenarioDescriptor) -> ScenarioResult:
        context = RunContext.create(scenario=descriptor.name, seed=self._config.seed)
        log = self._logger or ContextLogger.from_context(
            context,
            "endres.runner",
            output_format=self._config.log_format,
            level=self._config.log_level,
        )
        log.info(f"Running scenario {descriptor.name}", {"seed": self._config.seed, "tags": ",".join(descriptor.tags)})
        try:
            result = descriptor.func(self._config, context)
        except ConfigError:
            raise
        except EndresError as e:
            _logger.debug("Scenario %s raised %s", descriptor.name, e, exc_info=True)
            result = ScenarioResult(descriptor.name)
            result.check(Assertion(name="error", target=e.code, measured=math.nan, tolerance=0.0, passed=False))
            log.error(f"Scenario {descriptor.name} raised {e}", {"code": e.code})

        for failure in result.failures:
            log.error(
                f"Assertion failed: {failure.name}",
                {"measured": failure.measured, "target": failure.target, "tolerance": failure.tolerance},
            )
        self.write(result)
        log.info(
            f"Scenario {descriptor.name} {'passed' if result.passed else 'failed'}",
            {"assertions": len(result.assertions), "failed": len(result.failures)},
        )
        return result

    def write(self, result: ScenarioResult) -> Path:
        """Write the tables and summary of ``result``; returns the scenario directory."""
        directory = self.output_dir / result.name
        for table, rows in sorted(result.tables.items()):
            write_csv(directory / f"{table}.csv", rows)
        write_json(directory / SUMMARY_FILE, result.summary())
        return directory

    @staticmethod
    def raise_for_failures(results: Sequence[ScenarioResult]) -> None:
        """Raise AssertionFailedError for the first failed assertion, if any."""
        for result in results:
            for failure in result.failures:
                raise AssertionFailedError(
                    name=f"{result.name}: {failure.name}",
                    target=failure.target,
                    measured=failure.measured,
                    tolerance=failure.tolerance,
                )
