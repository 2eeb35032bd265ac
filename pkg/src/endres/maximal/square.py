"""Vertical square function S f = (∫ |√t ∇ (I + tL)^{-m} f|² dt/t)^{1/2} on a t-grid."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from endres.errors import DomainError
from endres.maximal.operators import dyadic_grid, resolvent_iterates
from endres.mesh import ManifoldMesh, gradient_magnitude, lp_norm

__all__ = [
    "SquareResult",
    "log_cell_weights",
    "square_function",
    "scalar_square_function",
    "square_ratio",
    "square_refinement",
]


@dataclass(frozen=True, eq=False)
class SquareResult:
    m: int
    values: NDArray[np.float64]
    t_grid: NDArray[np.float64]
    weights: NDArray[np.float64]


def log_cell_weights(t_grid: ArrayLike) -> NDArray[np.float64]:
    """Widths in log t of the cells around each grid point (midpoint rule for dt/t).

    Interior cells end at the geometric midpoints; the outer cells are symmetric
    about their grid point.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0) or t[0] <= 0:
        raise DomainError("t_grid must be positive, increasing and of length >= 2", parameter="t_grid")
    u = np.log(t)
    mid = 0.5 * (u[1:] + u[:-1])
    lo = np.concatenate([[u[0] - (mid[0] - u[0])], mid])
    hi = np.concatenate([mid, [u[-1] + (u[-1] - mid[-1])]])
    return hi - lo


def square_function(mesh: ManifoldMesh, m: int, f: ArrayLike, t_grid: ArrayLike) -> SquareResult:
    """(Σ_j w_j |√t_j ∇ (I + t_j L)^{-m} f|²)^{1/2} with log-cell weights w_j."""
    if m < 1:
        raise DomainError(f"order must be >= 1, got {m}", parameter="m", value=m)
    grid = np.asarray(t_grid, dtype=float)
    weights = log_cell_weights(grid)
    total = np.zeros(mesh.n_vertices)
    for t, w in zip(grid, weights):
        u = resolvent_iterates(mesh, float(t), m, f)[m]
        total += w * t * gradient_magnitude(mesh, u) ** 2
    return SquareResult(m, np.sqrt(total), grid, weights)


def scalar_square_function(lam: float, gradient_weight: float, m: int, t_grid: ArrayLike) -> float:
    """Same quadrature for one eigenmode: (Σ_j w_j t_j g² (1 + t_j λ)^{-2m})^{1/2}.

    For m = 1 the integral it approximates is g²/λ.
    """
    grid = np.asarray(t_grid, dtype=float)
    weights = log_cell_weights(grid)
    integrand = grid * gradient_weight**2 * (1.0 + grid * lam) ** (-2.0 * m)
    return math.sqrt(float(np.sum(weights * integrand)))


def square_ratio(mesh: ManifoldMesh, m: int, f: ArrayLike, p: float, t_grid: ArrayLike) -> float:
    """‖S f‖_p / ‖f‖_p."""
    arr = np.asarray(f, dtype=float)
    return lp_norm(mesh, square_function(mesh, m, arr, t_grid).values, p) / lp_norm(mesh, arr, p)


def square_refinement(
    mesh: ManifoldMesh,
    m: int,
    f: ArrayLike,
    t_min: float,
    t_max: float,
    levels: int = 3,
) -> list[float]:
    """‖S f‖₂ on grids with ratio √2, 2^{1/4}, ... (one value per level)."""
    norms = []
    for level in range(levels):
        grid = dyadic_grid(t_min, t_max, 2.0 ** (0.5 ** (level + 1)))
        norms.append(lp_norm(mesh, square_function(mesh, m, f, grid).values, 2.0))
    return norms
