"""Tests for solve-based resolvent kernels."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from endres.errors import DomainError
from endres.mesh import gradient_magnitude
from endres.resolvent import (
    FACTOR_CACHE_SIZE,
    SpectralCalculus,
    horizontal_matrix,
    k_resolvent_matrix,
    kernel_slice_table,
    point_kernel_comparison,
    resolvent_matrix,
    resolvent_powers,
    resolvent_solver,
    vertical_matrix,
)


class TestResolventMatrix:
    """Kernels of (I + tL)^{-m}."""

    def test_identity_at_zero_time(self, equal_mesh):
        """t = 0 gives δ_xy / μ_y."""
        T = resolvent_matrix(equal_mesh, 0.0, 2)
        assert np.array_equal(T.values, np.diag(1.0 / equal_mesh.measure))

    @pytest.mark.parametrize("t,m", [(1.0, 1), (50.0, 2), (400.0, 3)])
    def test_markov_rows(self, mixed_mesh, t, m):
        """(I + tL)^{-m} 1 = 1 and the kernel is non-negative."""
        T = resolvent_matrix(mixed_mesh, t, m)
        assert np.max(np.abs(T.apply(np.ones(mixed_mesh.n_vertices)) - 1.0)) < 1e-10
        assert np.all(T.values >= 0.0)

    def test_symmetric_kernel(self, moded_mesh):
        """T(x, y) = T(y, x)."""
        T = resolvent_matrix(moded_mesh, 10.0, 2)
        assert np.array_equal(T.values, T.values.T)

    def test_matches_spectral_calculus(self, mixed_mesh):
        """Sparse solves agree with the eigen-decomposition."""
        calc = SpectralCalculus(mixed_mesh)
        exact = calc.resolvent_kernel(25.0, 3)
        values = resolvent_matrix(mixed_mesh, 25.0, 3).values
        assert np.max(np.abs(values - exact)) <= 1e-9 * np.max(np.abs(exact))

    def test_solver_matches_kernel(self, equal_mesh, rng):
        """resolvent_solver f equals the kernel applied to f."""
        f = rng.standard_normal(equal_mesh.n_vertices)
        solve = resolvent_solver(equal_mesh, 7.0)
        assert np.allclose(solve(f), resolvent_matrix(equal_mesh, 7.0, 1).apply(f), rtol=1e-9, atol=1e-12)

    def test_factorization_is_cached(self, equal_mesh):
        """The LU factors of D + tW are kept on the mesh."""
        resolvent_powers(equal_mesh, 3.0, 1)
        assert 3.0 in equal_mesh._cache["lu"]

    def test_factor_cache_is_bounded(self, equal_mesh):
        """Sweeping many t keeps at most FACTOR_CACHE_SIZE factorizations, newest last."""
        times = [1.0 + 0.5 * j for j in range(FACTOR_CACHE_SIZE + 8)]
        for t in times:
            resolvent_solver(equal_mesh, t)
        factors = equal_mesh._cache["lu"]
        assert len(factors) == FACTOR_CACHE_SIZE
        assert times[0] not in factors
        assert list(factors)[-1] == times[-1]

    def test_recent_use_survives_eviction(self, equal_mesh):
        """A factorization used again moves to the back of the queue."""
        resolvent_solver(equal_mesh, 2.0)
        for j in range(FACTOR_CACHE_SIZE - 1):
            resolvent_solver(equal_mesh, 10.0 + j)
        resolvent_solver(equal_mesh, 2.0)
        resolvent_solver(equal_mesh, 99.0)
        assert 2.0 in equal_mesh._cache["lu"]
        assert 10.0 not in equal_mesh._cache["lu"]

    def test_threads_share_factor_cache(self, equal_mesh, rng):
        """Concurrent solves over a shared mesh agree with serial ones."""
        f = rng.standard_normal(equal_mesh.n_vertices)
        times = [1.0 + j for j in range(2 * FACTOR_CACHE_SIZE)]
        expected = [resolvent_matrix(equal_mesh, t, 1).apply(f) for t in times]
        with ThreadPoolExecutor(max_workers=8) as pool:
            got = list(pool.map(lambda t: resolvent_solver(equal_mesh, t)(f), times))
        for a, b in zip(got, expected):
            assert np.allclose(a, b, rtol=1e-9, atol=1e-12)
        assert len(equal_mesh._cache["lu"]) <= FACTOR_CACHE_SIZE

    @pytest.mark.parametrize("t,m", [(-1.0, 1), (math.nan, 1), (1.0, 0)])
    def test_rejects_bad_arguments(self, equal_mesh, t, m):
        """Negative or NaN t and m < 1 raise DomainError."""
        with pytest.raises(DomainError):
            resolvent_matrix(equal_mesh, t, m)

    def test_kernel_values_are_read_only(self, equal_mesh):
        """KernelMatrix values are frozen."""
        T = resolvent_matrix(equal_mesh, 1.0, 1)
        with pytest.raises(ValueError):
            T.values[0, 0] = 0.0


class TestDerivedKernels:
    """k-form, vertical and horizontal kernels."""

    def test_k_form(self, equal_mesh):
        """(L + k²)^{-m} = t^m (I + tL)^{-m} with t = 1/k²."""
        K = k_resolvent_matrix(equal_mesh, 0.5, 2)
        T = resolvent_matrix(equal_mesh, 4.0, 2)
        assert np.allclose(K.values, 16.0 * T.values, rtol=1e-12, atol=0.0)
        assert K.k == 0.5

    def test_horizontal_rows_sum_to_zero(self, mixed_mesh):
        """tL(I + tL)^{-m} annihilates constants."""
        H = horizontal_matrix(mixed_mesh, 20.0, 2)
        assert np.max(np.abs(H.apply(np.ones(mixed_mesh.n_vertices)))) < 1e-10

    def test_vertical_is_scaled_gradient(self, equal_mesh, rng):
        """|V f| = √t |∇ (I + tL)^{-m} f| for signed f."""
        t, m = 9.0, 2
        f = rng.standard_normal(equal_mesh.n_vertices)
        V = vertical_matrix(equal_mesh, t, m)
        expected = math.sqrt(t) * gradient_magnitude(equal_mesh, resolvent_matrix(equal_mesh, t, m).apply(f))
        assert np.allclose(V.apply_signed(f), expected, rtol=1e-9, atol=1e-12)

    def test_vertical_needs_positive_time(self, equal_mesh):
        """t = 0 has no vertical kernel."""
        with pytest.raises(DomainError):
            vertical_matrix(equal_mesh, 0.0, 1)

    def test_apply_edges_only_on_vertical(self, equal_mesh):
        """Non-vertical kernels carry no edge rows."""
        with pytest.raises(DomainError):
            resolvent_matrix(equal_mesh, 1.0, 1).apply_edges(np.ones(equal_mesh.n_vertices))

    def test_slice_table(self, equal_mesh):
        """One row per vertex, with radii when given."""
        T = resolvent_matrix(equal_mesh, 1.0, 1)
        rows = kernel_slice_table(T, 0, equal_mesh.radius)
        assert len(rows) == equal_mesh.n_vertices
        assert rows[3]["value"] == pytest.approx(T.values[3, 0])
        assert "r" in rows[0]


class TestPointKernelComparison:
    """Probe-mesh columns against the Euclidean point kernel."""

    def test_resolvent_column(self, probe_mesh):
        """k = 0.1 within 2% on 2 ≤ r ≤ 32."""
        comparison = point_kernel_comparison(probe_mesh, 0.1)
        assert comparison.max_relative_gap <= 0.02
        assert comparison.r.min() >= 2.0
        assert comparison.r.max() <= 32.0

    def test_vertical_column(self, probe_mesh):
        """√t ∇(I + tL)^{-1} column at k = 0.1 within 5%."""
        comparison = point_kernel_comparison(probe_mesh, 0.1, vertical=True)
        assert comparison.vertical
        assert comparison.max_relative_gap <= 0.05

    def test_rows(self, probe_mesh):
        """CSV rows carry n, k and both values."""
        rows = point_kernel_comparison(probe_mesh, 0.5, r_lo=4.0, r_hi=8.0).rows()
        assert rows
        assert set(rows[0]) == {"n", "k", "vertical", "r", "discrete", "closed_form"}

    def test_needs_probe_mesh(self, equal_mesh):
        """Meshes with a hub are rejected."""
        with pytest.raises(DomainError):
            point_kernel_comparison(equal_mesh, 0.1)

    def test_empty_range(self, probe_mesh):
        """A radial window without vertices is a domain error."""
        with pytest.raises(DomainError):
            point_kernel_comparison(probe_mesh, 0.1, r_lo=500.0, r_hi=600.0)
