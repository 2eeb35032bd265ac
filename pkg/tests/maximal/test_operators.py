"""Tests for maximal operators and their constants."""

from __future__ import annotations

import math

import numpy as np
import pytest

from endres.errors import DomainError
from endres.maximal import (
    bump,
    dyadic_grid,
    fefferman_stein_ratio,
    horizontal_maximal,
    maximal,
    maximal_ratio,
    maximal_table,
    stein_domination_check,
    translate_family,
    vertical_maximal,
    weak11_constant,
    weak11_values,
    weak_type_quotient,
    window_family,
)
from endres.mesh import CENTER, EndSpec, build_mesh, lp_norm
from endres.resolvent import resolvent_matrix


# === Fixtures ===


@pytest.fixture
def grid():
    return dyadic_grid(1.0, 256.0, 2.0)


class TestDyadicGrid:
    """Geometric t-grids."""

    def test_endpoints_and_ratio(self):
        """Both ends are included and steps never exceed the ratio."""
        t = dyadic_grid(3.0, 500.0, math.sqrt(2.0))
        assert t[0] == pytest.approx(3.0)
        assert t[-1] == pytest.approx(500.0)
        assert np.all(t[1:] / t[:-1] <= math.sqrt(2.0) * (1 + 1e-12))

    def test_exact_powers(self):
        """4 to 64 with ratio 2 has five points."""
        assert len(dyadic_grid(4.0, 64.0, 2.0)) == 5

    @pytest.mark.parametrize("args", [(0.0, 1.0, 2.0), (5.0, 1.0, 2.0), (1.0, 10.0, 1.0)])
    def test_rejects(self, args):
        """Non-positive or reversed ranges and ratios ≤ 1 are rejected."""
        with pytest.raises(DomainError):
            dyadic_grid(*args)


class TestFamilies:
    """Bumps and their translates."""

    def test_bump_normalization(self, mixed_mesh):
        """‖bump‖_p = 1."""
        for p in (1.0, 2.0, 5.0):
            assert lp_norm(mixed_mesh, bump(mixed_mesh, 1, 8.0, p), p) == pytest.approx(1.0)

    def test_center_bump_needs_center(self):
        """Probe meshes have no hub."""
        probe = build_mesh([EndSpec(n=3, r_max=16.0, cells=16)], probe=True)
        with pytest.raises(DomainError):
            bump(probe, CENTER)

    def test_translate_labels(self, equal_mesh):
        """Center first, then end:r for every end."""
        labels = [label for label, _ in translate_family(equal_mesh, [4.0, 8.0])]
        assert labels == ["center", "0:4", "0:8", "1:4", "1:8"]

    def test_translate_without_center(self, equal_mesh):
        """center=False keeps only the end bumps."""
        labels = [label for label, _ in translate_family(equal_mesh, [4.0, 8.0], center=False)]
        assert labels == ["0:4", "0:8", "1:4", "1:8"]

    def test_window_is_consecutive(self, equal_mesh):
        """Window bumps sit on consecutive radii of one end."""
        family = window_family(equal_mesh, 0, 4.0, 3, 2.0)
        support = [int(np.flatnonzero(f)[0]) for f in family]
        assert np.all(np.diff(support) == 1)

    def test_window_too_long(self, equal_mesh):
        """Windows cannot run past r_max."""
        with pytest.raises(DomainError):
            window_family(equal_mesh, 0, 32.0, 100, 2.0)


class TestMaximal:
    """Pointwise sups over the t-grid."""

    def test_resolvent_sup_bounded_by_data(self, mixed_mesh, grid):
        """Markov kernels do not amplify non-negative data."""
        f = bump(mixed_mesh, 0, 4.0, math.inf)
        result = maximal(mixed_mesh, "stein_res", 1, f, grid)
        assert np.all(result.values <= 1.0 + 1e-12)
        assert set(np.unique(result.argmax_t)) <= set(grid)

    def test_horizontal_is_resolvent_difference(self, equal_mesh, grid):
        """Horizontal values equal |K_{m-1} f - K_m f| maximized over t."""
        f = bump(equal_mesh, CENTER)
        result = horizontal_maximal(equal_mesh, 2, f, grid)
        expected = np.max(
            [
                np.abs(resolvent_matrix(equal_mesh, t, 1).apply(f) - resolvent_matrix(equal_mesh, t, 2).apply(f))
                for t in grid
            ],
            axis=0,
        )
        assert np.allclose(result.values, expected, rtol=1e-9, atol=1e-14)

    def test_vertical_is_non_negative(self, mixed_mesh, grid):
        """|√t ∇ ...| ≥ 0 and vanishes for constants."""
        assert np.all(vertical_maximal(mixed_mesh, 1, bump(mixed_mesh, 1, 8.0), grid).values >= 0.0)
        constant = vertical_maximal(mixed_mesh, 1, np.ones(mixed_mesh.n_vertices), grid)
        assert np.max(constant.values) < 1e-10

    def test_heat_kinds_run(self, equal_mesh, grid):
        """Spectral kinds return one value per vertex."""
        f = bump(equal_mesh, 0, 4.0)
        for kind in ("stein_exp", "exp_vertical"):
            result = maximal(equal_mesh, kind, 1, f, grid)
            assert result.values.shape == (equal_mesh.n_vertices,)

    def test_unknown_kind(self, equal_mesh, grid):
        """Only the five kinds exist."""
        with pytest.raises(DomainError):
            maximal(equal_mesh, "diagonal", 1, np.ones(equal_mesh.n_vertices), grid)  # type: ignore[arg-type]

    def test_empty_grid(self, equal_mesh):
        """An empty t-grid is rejected."""
        with pytest.raises(DomainError):
            maximal(equal_mesh, "vertical", 1, np.ones(equal_mesh.n_vertices), [])

    def test_table(self, equal_mesh, grid):
        """One CSV row per vertex."""
        result = vertical_maximal(equal_mesh, 1, bump(equal_mesh, CENTER), grid)
        rows = maximal_table(equal_mesh, result)
        assert len(rows) == equal_mesh.n_vertices
        assert set(rows[0]) == {"vertex", "r", "end", "value", "argmax_t"}


class TestSteinDomination:
    """sup_t |(I + tL)^{-m} f| ≤ sup_s |e^{-sL} f| for f ≥ 0."""

    @pytest.mark.parametrize("m", [1, 3])
    def test_bumps(self, mixed_mesh, grid, m):
        """Center and end bumps are dominated to roundoff."""
        for _, f in translate_family(mixed_mesh, [8.0]):
            assert stein_domination_check(mixed_mesh, m, f, grid) <= 1e-10

    def test_signed_data(self, equal_mesh, grid):
        """Signed f is outside the domain."""
        f = np.ones(equal_mesh.n_vertices)
        f[0] = -1.0
        with pytest.raises(DomainError):
            stein_domination_check(equal_mesh, 1, f, grid)


class TestConstants:
    """Weak-type quotients and L^p ratios."""

    def test_weak_type_quotient(self):
        """max_j v_(j) Σ_{i≤j} μ_(i)."""
        assert weak_type_quotient([1.0, 3.0, 2.0], [1.0, 1.0, 1.0]) == pytest.approx(4.0)

    def test_weak11_needs_unit_mass(self, equal_mesh, grid):
        """Family functions must have ‖f‖₁ = 1."""
        with pytest.raises(DomainError):
            weak11_values(equal_mesh, "vertical", 1, [2.0 * bump(equal_mesh, CENTER)], grid)

    def test_weak11_constant_is_max(self, equal_mesh, grid):
        """The constant is the largest quotient of the family."""
        family = [f for _, f in translate_family(equal_mesh, [4.0])]
        values = weak11_values(equal_mesh, "vertical", 1, family, grid)
        assert weak11_constant(equal_mesh, "vertical", 1, family, grid) == max(values)

    def test_single_function_fefferman_stein(self, mixed_mesh, grid):
        """A one-term sequence reduces to the maximal ratio."""
        f = bump(mixed_mesh, 0, 8.0, 2.0)
        fs = fefferman_stein_ratio(mixed_mesh, 1, [f], 2.0, grid)
        assert fs == pytest.approx(maximal_ratio(mixed_mesh, "vertical", 1, f, 2.0, grid), rel=1e-12)

    @pytest.mark.parametrize("p", [1.0, math.inf])
    def test_fefferman_stein_domain(self, equal_mesh, grid, p):
        """p must lie strictly between 1 and ∞."""
        with pytest.raises(DomainError):
            fefferman_stein_ratio(equal_mesh, 1, [bump(equal_mesh, CENTER)], p, grid)
