"""Tests for randomized ℓ²-ratio estimates."""

from __future__ import annotations

import math

import numpy as np
import pytest

from endres.errors import DomainError
from endres.maximal import bump, fixed_witness_ratio, l2_ratio, rbound_estimate, rbound_table
from endres.maximal.rbound import _Family
from endres.norms import pnorm_bounds, pnorm_ratio
from endres.resolvent import vertical_matrix


class TestL2Ratio:
    """ℓ²-valued ratios."""

    def test_single_operator(self, equal_mesh):
        """With one t the ratio is the ordinary p-norm ratio."""
        family = _Family(equal_mesh, 1, [16.0])
        f = bump(equal_mesh, 0, 4.0, 3.0)
        expected = pnorm_ratio(vertical_matrix(equal_mesh, 16.0, 1), f, 3.0)
        assert l2_ratio(family, f[:, None], 3.0) == pytest.approx(expected, rel=1e-10)

    def test_zero_input(self, equal_mesh):
        """Zero data has ratio 0."""
        family = _Family(equal_mesh, 1, [4.0, 8.0])
        assert l2_ratio(family, np.zeros((equal_mesh.n_vertices, 2)), 2.0) == 0.0


class TestRBoundEstimate:
    """Random draws refined by block power iteration."""

    def test_reproducible(self, equal_mesh):
        """Identical seeds give identical trials."""
        a = rbound_estimate(equal_mesh, 1, 2.0, 2, 2, seed=11, t_range=(4.0, 64.0), sign_samples=16)
        b = rbound_estimate(equal_mesh, 1, 2.0, 2, 2, seed=11, t_range=(4.0, 64.0), sign_samples=16)
        assert a.trial_ratios == b.trial_ratios
        assert a.trial_times == b.trial_times
        assert a.rademacher_ratio == b.rademacher_ratio

    def test_times_in_range(self, equal_mesh):
        """Log-uniform draws stay inside t_range."""
        est = rbound_estimate(equal_mesh, 1, 2.0, 3, 2, seed=4, t_range=(4.0, 64.0), sign_samples=8)
        times = np.array(est.trial_times)
        assert times.shape == (2, 3)
        assert np.all((times >= 4.0) & (times <= 64.0))
        assert est.best_ratio == max(est.trial_ratios)

    def test_single_operator_matches_pnorm(self, mixed_mesh):
        """t_count = 1 recovers the p-norm lower bound of one vertical operator."""
        est = rbound_estimate(mixed_mesh, 1, 2.0, 1, 2, seed=5, t_values=[32.0], sign_samples=8)
        lower = pnorm_bounds(vertical_matrix(mixed_mesh, 32.0, 1), 2.0, seed=5).lower
        assert est.best_ratio == pytest.approx(lower, rel=0.1)

    def test_table(self, equal_mesh):
        """One row per trial."""
        est = rbound_estimate(equal_mesh, 1, 3.0, 2, 3, seed=1, t_range=(4.0, 64.0), sign_samples=8)
        rows = rbound_table(est)
        assert [row["trial"] for row in rows] == [0, 1, 2]

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"p": 1.0},
            {"p": math.inf},
            {"trials": 0},
            {"t_values": [1.0, 2.0, 3.0]},
        ],
    )
    def test_domain(self, equal_mesh, kwargs):
        """p outside (1, ∞), no trials, or mismatched t_values are rejected."""
        args = {"p": 2.0, "trials": 1, "t_values": None} | kwargs
        with pytest.raises(DomainError):
            rbound_estimate(equal_mesh, 1, args["p"], 2, args["trials"], seed=0, t_values=args["t_values"])


class TestFixedWitnessRatio:
    """A fixed datum compared across time ranges."""

    def test_single_time_matches_pnorm(self, equal_mesh):
        """One time gives the p-norm ratio of that vertical operator."""
        f = bump(equal_mesh, 0, 8.0, 2.0)
        expected = pnorm_ratio(vertical_matrix(equal_mesh, 16.0, 1), f, 2.0)
        assert fixed_witness_ratio(equal_mesh, 1, 2.0, f, [16.0]) == pytest.approx(expected, rel=1e-10)

    def test_two_norm_averages_single_times(self, mixed_mesh):
        """At p = 2 the squared ratio is the mean of the single-time squared ratios."""
        f = bump(mixed_mesh, 0, 8.0, 2.0)
        times = np.array([1.0, 4.0, 16.0, 64.0])
        singles = [fixed_witness_ratio(mixed_mesh, 1, 2.0, f, [t]) ** 2 for t in times]
        value = fixed_witness_ratio(mixed_mesh, 1, 2.0, f, times)
        assert value**2 == pytest.approx(np.mean(singles), rel=1e-10)

    @pytest.mark.parametrize("p, times", [(0.5, [1.0]), (math.nan, [1.0]), (2.0, [])])
    def test_domain(self, equal_mesh, p, times):
        """p below 1 or no times are rejected."""
        f = bump(equal_mesh, 0, 4.0)
        with pytest.raises(DomainError):
            fixed_witness_ratio(equal_mesh, 1, p, f, times)
