"""Tests for RunContext and derived random streams."""

from __future__ import annotations

import numpy as np
import pytest

from endres.context import RunContext, derive_rng
from endres.errors import ConfigError


class TestRunContext:
    """Run identity and seeds."""

    def test_create(self):
        """Each top-level context gets a fresh run_id."""
        a = RunContext.create("doubling", seed=1)
        b = RunContext.create("doubling", seed=1)
        assert a.run_id != b.run_id

    def test_rng_needs_seed(self):
        """Unseeded contexts refuse random streams."""
        with pytest.raises(ConfigError) as exc_info:
            RunContext.create("x").rng(0)
        assert exc_info.value.fields == ["seed"]


class TestDeriveRng:
    """Streams keyed by (seed, key)."""

    def test_independent_of_call_order(self):
        """The same key yields the same stream whatever was drawn before."""
        first = derive_rng(5, 1, 2).standard_normal(4)
        derive_rng(5, 3).standard_normal(100)
        again = RunContext.create("x", seed=5).rng(1, 2).standard_normal(4)
        assert np.array_equal(first, again)

    def test_keys_differ(self):
        """Different keys give different streams."""
        assert not np.array_equal(derive_rng(5, 1).random(4), derive_rng(5, 2).random(4))
