"""Tests for the ScenarioRegistry class."""

from __future__ import annotations

import threading

import pytest

from endres.errors import DomainError, ScenarioNotFoundError
from endres.scenarios import ScenarioDescriptor, ScenarioRegistry, ScenarioResult, default_registry


# === Fixtures ===


def _noop(config, context):
    return ScenarioResult(name="noop")


def _descriptor(name: str, tags: list[str] | None = None, randomized: bool = False) -> ScenarioDescriptor:
    return ScenarioDescriptor(name=name, description=name, func=_noop, tags=tags or [], randomized=randomized)


@pytest.fixture
def registry():
    return ScenarioRegistry()


class TestRegistration:
    """register."""

    def test_register_and_get(self, registry):
        """A registered descriptor is returned by get and resolve."""
        d = _descriptor("kernel-check")
        registry.register(d)
        assert registry.get("kernel-check") is d
        assert registry.resolve("kernel-check") is d
        assert registry.has("kernel-check")
        assert registry.count == 1

    def test_duplicate(self, registry):
        """Names are unique."""
        registry.register(_descriptor("a"))
        with pytest.raises(DomainError):
            registry.register(_descriptor("a"))

    @pytest.mark.parametrize("name", ["", "Upper", "1abc", "has space", "under_score"])
    def test_invalid_name(self, registry, name):
        """Names are lowercase kebab-case starting with a letter."""
        with pytest.raises(DomainError):
            registry.register(_descriptor(name))


class TestQueries:
    """get, resolve, list and iter."""

    def test_resolve_unknown(self, registry):
        """Unknown names raise ScenarioNotFoundError."""
        with pytest.raises(ScenarioNotFoundError) as exc_info:
            registry.resolve("missing")
        assert exc_info.value.details["scenario"] == "missing"

    def test_get_empty_name(self, registry):
        """An empty name is never a lookup."""
        with pytest.raises(ScenarioNotFoundError):
            registry.get("")

    def test_list_sorted_and_filtered(self, registry):
        """list is sorted and keeps entries carrying every tag."""
        registry.register(_descriptor("b", ["kernel", "fast"]))
        registry.register(_descriptor("a", ["kernel"]))
        registry.register(_descriptor("c", ["norms"]))
        assert registry.list() == ["a", "b", "c"]
        assert registry.list(tags=["kernel"]) == ["a", "b"]
        assert registry.list(tags=["kernel", "fast"]) == ["b"]

    def test_iter_snapshot(self, registry):
        """iter yields (name, descriptor) pairs in name order."""
        registry.register(_descriptor("z"))
        registry.register(_descriptor("y"))
        assert [name for name, _ in registry.iter()] == ["y", "z"]

    def test_concurrent_registration(self, registry):
        """Parallel registration loses nothing."""
        threads = [threading.Thread(target=registry.register, args=(_descriptor(f"s{i}"),)) for i in range(20)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert registry.count == 20


class TestDefaultRegistry:
    """Built-in scenarios."""

    def test_builtin_scenarios(self):
        """Every scenario the CLI exposes is registered."""
        expected = {
            "kernel-closed-form",
            "identity-suite",
            "key-lemma",
            "remainder-envelopes",
            "doubling",
            "gp-exponent",
            "case-calculus",
            "maximal-weak11",
            "maximal-growth",
            "exp-vertical",
            "fefferman-stein",
            "square-rbound",
        }
        assert expected <= set(default_registry.list())

    def test_square_rbound_is_randomized(self):
        """Randomized scenarios are flagged."""
        assert default_registry.resolve("square-rbound").randomized
        assert not default_registry.resolve("case-calculus").randomized
