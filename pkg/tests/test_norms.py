"""Tests for operator-norm estimates and the exponent calculus."""

from __future__ import annotations

import logging
import math
import warnings

import numpy as np
import pytest

from endres.errors import DomainError
from endres.maximal import dyadic_grid
from endres.mesh import lp_norm
from endres.norms import (
    build_norm_report,
    case_analysis,
    dual_exponent,
    exponent_fit,
    lower_bound_family,
    mixed_norm,
    offdiagonal_bounds,
    pnorm_bounds,
    pnorm_ratio,
    target_slope,
)
from endres.resolvent import KernelMatrix, resolvent_matrix, vertical_matrix
from endres.specfun import japanese_bracket


class TestDualExponent:
    """Hölder conjugates."""

    @pytest.mark.parametrize("p,q", [(2.0, 2.0), (1.0, math.inf), (math.inf, 1.0), (3.0, 1.5)])
    def test_values(self, p, q):
        """1/p + 1/p' = 1."""
        assert dual_exponent(p) == q

    def test_below_one(self):
        """p < 1 has no conjugate."""
        with pytest.raises(DomainError):
            dual_exponent(0.9)


class TestSchurNorms:
    """Mixed norms of kernel operators."""

    def test_markov_kernel(self, mixed_mesh):
        """Both Schur sums of a symmetric Markov kernel are 1."""
        T = resolvent_matrix(mixed_mesh, 30.0, 2)
        assert mixed_norm(T, "L1x_LinfY") == pytest.approx(1.0, rel=1e-9)
        assert mixed_norm(T, "LinfX_L1y") == pytest.approx(1.0, rel=1e-9)

    def test_matches_coordinate_oracle(self, rng):
        """Both Schur sums equal the L¹ and L^∞ operator norms found by extremal vectors."""
        values = rng.standard_normal((50, 50))
        mu_x, mu_y = rng.uniform(0.5, 2.0, 50), rng.uniform(0.5, 2.0, 50)
        T = KernelMatrix(values, mu_x, mu_y, "resolvent", 1)
        one = max(float(np.sum(np.abs(T.apply(np.eye(50)[y] / mu_y[y])) * mu_x)) for y in range(50))
        inf = max(abs(float(T.apply(np.sign(values[x]))[x])) for x in range(50))
        assert mixed_norm(T, "L1x_LinfY") == pytest.approx(one, rel=1e-12)
        assert mixed_norm(T, "LinfX_L1y") == pytest.approx(inf, rel=1e-12)

    def test_rank_one(self, rng):
        """For T = a bᵀ the sums factor into ‖a‖_1 max b and max a ‖b‖_1."""
        a, b = rng.uniform(0.0, 1.0, 30), rng.uniform(0.0, 1.0, 40)
        mu_x, mu_y = rng.uniform(0.5, 2.0, 30), rng.uniform(0.5, 2.0, 40)
        T = KernelMatrix(np.outer(a, b), mu_x, mu_y, "resolvent", 1)
        assert mixed_norm(T, "L1x_LinfY") == pytest.approx(float(a @ mu_x) * b.max(), rel=1e-12)
        assert mixed_norm(T, "LinfX_L1y") == pytest.approx(a.max() * float(b @ mu_y), rel=1e-12)

    def test_unknown_mode(self, equal_mesh):
        """Only the two mixed modes exist."""
        with pytest.raises(DomainError):
            mixed_norm(resolvent_matrix(equal_mesh, 1.0, 1), "L2")  # type: ignore[arg-type]

    def test_offdiagonal_at_infinity(self, equal_mesh):
        """q = ∞ gives the largest kernel entry twice."""
        T = resolvent_matrix(equal_mesh, 1.0, 1)
        a, b = offdiagonal_bounds(T, math.inf)
        assert a == b == pytest.approx(float(T.values.max()))


class TestPNormBounds:
    """Power-iteration lower bounds and interpolation upper bounds."""

    def test_resolvent_is_contractive_on_l2(self, equal_mesh):
        """‖(I + tL)^{-1}‖_{2→2} = 1, attained by constants."""
        bounds = pnorm_bounds(resolvent_matrix(equal_mesh, 10.0, 1), 2.0)
        assert bounds.upper == pytest.approx(1.0, rel=1e-9)
        assert bounds.lower == pytest.approx(1.0, rel=1e-9)

    def test_l2_matches_singular_value(self, rng):
        """At p = 2 the lower bound reaches the largest singular value of D^{1/2} T D^{1/2}."""
        values = rng.uniform(0.0, 1.0, (50, 50))
        mu = rng.uniform(0.5, 2.0, 50)
        T = KernelMatrix(values, mu, mu, "resolvent", 1)
        sigma = float(np.linalg.svd(np.sqrt(mu)[:, None] * values * np.sqrt(mu)[None, :], compute_uv=False)[0])
        bounds = pnorm_bounds(T, 2.0, seed=4)
        assert bounds.lower == pytest.approx(sigma, rel=1e-6)
        assert bounds.upper >= sigma * (1.0 - 1e-12)

    def test_diagonal_kernel(self, rng):
        """A multiplication operator has norm max|c| for every p."""
        c = rng.uniform(0.1, 3.0, 40)
        mu = rng.uniform(0.5, 2.0, 40)
        T = KernelMatrix(np.diag(c / mu), mu, mu, "resolvent", 1)
        bounds = pnorm_bounds(T, 4.0, seed=2)
        assert bounds.lower == pytest.approx(c.max(), rel=1e-12)
        assert bounds.upper == pytest.approx(c.max(), rel=1e-12)

    @pytest.mark.parametrize("p", [1.0, math.inf])
    @pytest.mark.parametrize("t,m", [(3.0, 1), (40.0, 2)])
    def test_resolvent_contracts_at_endpoints(self, mixed_mesh, p, t, m):
        """‖(I + tL)^{-m}‖_{p→p} ≤ 1 for p = 1 and p = ∞."""
        assert pnorm_bounds(resolvent_matrix(mixed_mesh, t, m), p).upper <= 1.0 + 1e-10

    def test_endpoint_exponents(self, equal_mesh):
        """p = 1 and p = ∞ are exact Schur sums."""
        T = resolvent_matrix(equal_mesh, 10.0, 1)
        one = pnorm_bounds(T, 1.0)
        assert one.lower == one.upper == mixed_norm(T)
        inf = pnorm_bounds(T, math.inf)
        assert inf.lower == pytest.approx(inf.upper, rel=1e-9)

    def test_lower_never_exceeds_upper(self, mixed_mesh):
        """lower ≤ upper for the vertical operator."""
        V = vertical_matrix(mixed_mesh, 50.0, 1)
        for p in (1.5, 3.0, 6.0):
            bounds = pnorm_bounds(V, p, seed=1)
            assert 0.0 < bounds.lower <= bounds.upper

    def test_reproducible_from_seed(self, mixed_mesh):
        """Identical seeds give identical bounds."""
        V = vertical_matrix(mixed_mesh, 50.0, 1)
        first = pnorm_bounds(V, 4.0, seed=9, key=(2,))
        second = pnorm_bounds(V, 4.0, seed=9, key=(2,))
        assert first.lower == second.lower
        assert np.array_equal(first.witness, second.witness)

    def test_ratio_of_zero_function(self, equal_mesh):
        """The zero function has ratio 0."""
        V = vertical_matrix(equal_mesh, 4.0, 1)
        assert pnorm_ratio(V, np.zeros(equal_mesh.n_vertices), 2.0) == 0.0


class TestLowerBoundFamily:
    """Explicit test functions for p > n*."""

    def test_normalized_and_supported_on_end(self, mixed_mesh):
        """‖f‖_p = 1 and f vanishes off end i."""
        f = lower_bound_family(mixed_mesh, 4.0, 0.1, 1)
        assert lp_norm(mixed_mesh, f, 4.0) == pytest.approx(1.0, rel=1e-12)
        assert np.all(f[~mixed_mesh.end_mask(1)] == 0.0)

    def test_profile_from_anchor(self, mixed_mesh):
        """f^{p-1} is proportional to ⟨d⟩^{2-n} e^{-ckd} in the distance from the anchor."""
        p, k, c = 4.0, 0.1, 0.5
        mask = mixed_mesh.end_mask(1)
        d = mixed_mesh.anchor_distance[mask]
        g = japanese_bracket(d) ** (2.0 - 4) * np.exp(-c * k * d)
        f = lower_bound_family(mixed_mesh, p, k, 1, c)
        quotient = f[mask] ** (p - 1.0) / g
        assert np.allclose(quotient, quotient[0], rtol=1e-10)

    def test_no_floating_point_warnings(self, mixed_mesh):
        """The hub at r = 0 never enters the power law."""
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            f = lower_bound_family(mixed_mesh, 4.0, 0.1, 0)
        assert np.all(np.isfinite(f))

    @pytest.mark.parametrize("p", [3.5, 4.0, 6.0])
    def test_holder_equality(self, mixed_mesh, p):
        """⟨f, g⟩ = ‖f‖_p ‖g‖_{p'} for the generating g."""
        k, c = 0.2, 0.5
        mask = mixed_mesh.end_mask(0)
        g = np.zeros(mixed_mesh.n_vertices)
        d = mixed_mesh.anchor_distance[mask]
        g[mask] = japanese_bracket(d) ** (2.0 - 3) * np.exp(-c * k * d)
        f = lower_bound_family(mixed_mesh, p, k, 0, c)
        q = p / (p - 1.0)
        assert mixed_mesh.inner(f, g) == pytest.approx(lp_norm(mixed_mesh, f, p) * lp_norm(mixed_mesh, g, q), rel=1e-10)

    @pytest.mark.parametrize("p,k", [(1.0, 0.1), (4.0, 0.0), (4.0, 2.0)])
    def test_domain(self, mixed_mesh, p, k):
        """p = 1 and k outside (0, 1] are rejected."""
        with pytest.raises(DomainError):
            lower_bound_family(mixed_mesh, p, k, 0)

    def test_warns_below_n_star(self, mixed_mesh, caplog):
        """p < n* is flagged as non-extremal."""
        with caplog.at_level(logging.WARNING, logger="endres.norms"):
            lower_bound_family(mixed_mesh, 2.0, 0.1, 0)
        assert "not extremal" in caplog.text


class TestCaseAnalysis:
    """α/β cases of the separable term."""

    @pytest.mark.parametrize("p,exponent", [(2.0, 0.5), (3.0, 0.0), (6.0, -0.5)])
    def test_equal_dimensions(self, p, exponent):
        """Ends (3, 3) sit in case 2 with exponent 3/p - 1."""
        analysis = case_analysis(3, 3, p)
        assert analysis.case == 2
        assert analysis.k_exponent == pytest.approx(exponent, abs=1e-12)

    def test_case_three(self):
        """p close to 1 makes α positive."""
        analysis = case_analysis(3, 3, 1.2)
        assert analysis.case == 3
        assert analysis.k_exponent == pytest.approx(0.5)

    def test_case_four(self):
        """α, β ≤ 0 leaves a single power of k."""
        analysis = case_analysis(3, 6, 2.0)
        assert analysis.case == 4
        assert analysis.k_exponent == 1.0

    def test_case_one_never_occurs(self):
        """No (n_i, n_j, p) with n ≥ 3 lands in case 1."""
        for n_i in range(3, 8):
            for n_j in range(3, 8):
                for p in np.linspace(1.0, 12.0, 45):
                    assert not case_analysis(n_i, n_j, float(p)).impossible

    def test_low_dimension(self):
        """n < 3 is outside the calculus."""
        with pytest.raises(DomainError):
            case_analysis(2, 3, 2.0)


class TestExponentFit:
    """Log-log slopes against √t."""

    def test_exact_power(self):
        """v = (√t)^{0.6} has slope 0.6."""
        t = np.geomspace(1.0, 1e4, 9)
        fit = exponent_fit(t, t**0.3)
        assert fit.slope == pytest.approx(0.6, abs=1e-12)

    def test_needs_two_decades(self):
        """A one-decade grid is rejected."""
        with pytest.raises(DomainError):
            exponent_fit(np.geomspace(1.0, 10.0, 6), np.ones(6))

    def test_needs_five_points(self):
        """Four points are too few."""
        with pytest.raises(DomainError):
            exponent_fit(np.geomspace(1.0, 1e4, 4), np.ones(4))

    @pytest.mark.parametrize("p,slope", [(2.0, 0.0), (3.0, 0.0), (6.0, 0.5), (math.inf, 1.0)])
    def test_target_slope(self, p, slope):
        """max(0, 1 - n*/p) for n* = 3."""
        assert target_slope(3, p) == pytest.approx(slope)


class TestNormReport:
    """Norm reports over a t-grid."""

    def test_report_shape(self, mixed_mesh):
        """One row per t, with the test family above n*."""
        grid = dyadic_grid(4.0, 400.0, 2.0)
        report = build_norm_report(mixed_mesh, 1, 4.0, grid, seed=2, family_end=0)
        rows = report.rows()
        assert len(rows) == len(grid)
        assert np.all(report.lower <= report.upper)
        assert report.family is not None and report.family_fit is not None
        assert report.target_slope == pytest.approx(0.25)
        assert rows[0]["fitted_slope"] == report.fit.slope
