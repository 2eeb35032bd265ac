"""Maximal operators over a t-grid.

Each kind takes the pointwise sup over the grid of one family of operators
applied to f:

* ``vertical``: |√t ∇ (I + tL)^{-m} f|
* ``horizontal``: |tL (I + tL)^{-m} f| = |(I + tL)^{-(m-1)} f - (I + tL)^{-m} f|
* ``stein_res``: |(I + tL)^{-m} f|
* ``stein_exp``: |e^{-sL} f|, sup over s ≥ 0 refined between grid points
* ``exp_vertical``: |√s ∇ e^{-sL} f|

Resolvent kinds use sparse solves per t; heat kinds use the spectral calculus.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import minimize_scalar

from endres.errors import DomainError
from endres.mesh import CENTER, ManifoldMesh, gradient_magnitude, lp_norm, weighted_lp_norm
from endres.resolvent import SpectralCalculus, resolvent_solver

logger = logging.getLogger(__name__)

__all__ = [
    "MaximalKind",
    "MaximalResult",
    "dyadic_grid",
    "bump",
    "translate_family",
    "window_family",
    "resolvent_iterates",
    "maximal",
    "vertical_maximal",
    "horizontal_maximal",
    "stein_domination_check",
    "weak_type_quotient",
    "weak11_values",
    "weak11_constant",
    "maximal_ratio",
    "fefferman_stein_ratio",
    "maximal_table",
]

MaximalKind = Literal["vertical", "horizontal", "stein_res", "stein_exp", "exp_vertical"]

_KINDS: tuple[str, ...] = ("vertical", "horizontal", "stein_res", "stein_exp", "exp_vertical")


def dyadic_grid(t_min: float, t_max: float, ratio: float = math.sqrt(2.0)) -> NDArray[np.float64]:
    """Geometric grid from t_min to t_max inclusive with step at most ``ratio``."""
    if not (0 < t_min < t_max) or not math.isfinite(t_max):
        raise DomainError(f"need 0 < t_min < t_max, got {t_min}, {t_max}", parameter="t_min", value=t_min)
    if ratio <= 1:
        raise DomainError(f"grid ratio must exceed 1, got {ratio}", parameter="ratio", value=ratio)
    count = int(math.ceil(math.log(t_max / t_min) / math.log(ratio) - 1e-9)) + 1
    return np.geomspace(t_min, t_max, count)


@dataclass(frozen=True, eq=False)
class MaximalResult:
    """Pointwise sup over the grid and the t attaining it."""

    kind: MaximalKind
    m: int
    values: NDArray[np.float64]
    argmax_t: NDArray[np.float64]
    t_grid: NDArray[np.float64]


# -----------------------------------------------------------------------------
# Test functions
# -----------------------------------------------------------------------------


def bump(mesh: ManifoldMesh, end: int, r: float = 0.0, p: float = 1.0) -> NDArray[np.float64]:
    """δ-like bump at the vertex of ``end`` nearest to r (the hub for CENTER), ‖f‖_p = 1."""
    if end == CENTER:
        if not mesh.center:
            raise DomainError("mesh has no center", parameter="end", value=end)
        vertex = mesh.center[0]
    else:
        if not 0 <= end < len(mesh.ends):
            raise DomainError(f"mesh has no end {end}", parameter="end", value=end)
        vertex = mesh.nearest_vertex(end, r)
    f = np.zeros(mesh.n_vertices)
    f[vertex] = 1.0
    return f / lp_norm(mesh, f, p)


def translate_family(
    mesh: ManifoldMesh, radii: Sequence[float], p: float = 1.0, *, center: bool = True
) -> list[tuple[str, NDArray[np.float64]]]:
    """Bumps at each radius on every end, labelled ``end:r``, after the center bump when ``center`` is set."""
    family: list[tuple[str, NDArray[np.float64]]] = []
    if center and mesh.center:
        family.append(("center", bump(mesh, CENTER, p=p)))
    for i in range(len(mesh.ends)):
        for r in radii:
            family.append((f"{i}:{r:g}", bump(mesh, i, r, p)))
    return family


def window_family(mesh: ManifoldMesh, end: int, r_start: float, count: int, p: float) -> list[NDArray[np.float64]]:
    """``count`` bumps on consecutive vertices of ``end`` starting nearest to r_start."""
    verts = mesh.end_vertices(end)
    first = int(np.argmin(np.abs(mesh.radius[verts] - r_start)))
    if first + count > len(verts):
        raise DomainError(f"end {end} has fewer than {count} vertices beyond r={r_start}", parameter="count")
    family = []
    for v in verts[first : first + count]:
        f = np.zeros(mesh.n_vertices)
        f[v] = 1.0
        family.append(f / lp_norm(mesh, f, p))
    return family


# -----------------------------------------------------------------------------
# Operator families
# -----------------------------------------------------------------------------


def resolvent_iterates(mesh: ManifoldMesh, t: float, m: int, f: ArrayLike) -> list[NDArray[np.float64]]:
    """[(I + tL)^{-j} f for j = 0..m]."""
    solve = resolvent_solver(mesh, t)
    iterates = [np.asarray(f, dtype=float)]
    for _ in range(m):
        iterates.append(solve(iterates[-1]))
    return iterates


def _resolvent_values(mesh: ManifoldMesh, kind: str, m: int, t: float, f: NDArray[np.float64]) -> NDArray[np.float64]:
    iterates = resolvent_iterates(mesh, t, m, f)
    if kind == "vertical":
        return math.sqrt(t) * gradient_magnitude(mesh, iterates[m])
    if kind == "horizontal":
        return np.abs(iterates[m - 1] - iterates[m])
    return np.abs(iterates[m])


def _heat_sup(calc: SpectralCalculus, f: NDArray[np.float64], t_grid: NDArray[np.float64]) -> MaximalResult:
    """sup_{s ≥ 0} |e^{-sL} f| with s = 0, s = ∞, the grid, and a bounded refinement in log s."""
    mesh = calc.mesh
    lam = calc.eigenvalues
    phi = calc.eigenfunctions
    coeffs = phi.T @ (mesh.measure * f)
    s_grid = np.concatenate([[0.0], t_grid])
    decay = np.exp(-np.outer(lam, s_grid))
    values = np.abs(phi @ (coeffs[:, None] * decay))
    mean = float(np.sum(mesh.measure * f) / np.sum(mesh.measure))

    best_idx = np.argmax(values, axis=1)
    best = values[np.arange(len(f)), best_idx]
    argmax = s_grid[best_idx]

    log_grid = np.log(t_grid)
    for x in range(len(f)):
        row = phi[x] * coeffs

        def negative(u: float, row: NDArray[np.float64] = row) -> float:
            return -abs(float(row @ np.exp(-lam * math.exp(u))))

        j = int(best_idx[x]) - 1
        if j < 0:
            continue
        lo = log_grid[max(j - 1, 0)] - (math.log(2.0) if j == 0 else 0.0)
        hi = log_grid[min(j + 1, len(log_grid) - 1)]
        res = minimize_scalar(negative, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
        if -res.fun > best[x]:
            best[x] = -res.fun
            argmax[x] = math.exp(res.x)
    at_infinity = abs(mean) > best
    best = np.where(at_infinity, abs(mean), best)
    argmax = np.where(at_infinity, math.inf, argmax)
    return MaximalResult("stein_exp", 0, best, argmax, t_grid)


def maximal(
    mesh: ManifoldMesh,
    kind: MaximalKind,
    m: int,
    f: ArrayLike,
    t_grid: ArrayLike,
    calculus: SpectralCalculus | None = None,
) -> MaximalResult:
    """sup over t_grid of the operator family of ``kind`` applied to f."""
    if kind not in _KINDS:
        raise DomainError(f"unknown maximal kind {kind!r}", parameter="kind", value=kind)
    grid = np.asarray(t_grid, dtype=float)
    if grid.size == 0:
        raise DomainError("t_grid is empty", parameter="t_grid")
    if np.any(grid <= 0):
        raise DomainError("t_grid must be positive", parameter="t_grid")
    if m < 1:
        raise DomainError(f"order must be >= 1, got {m}", parameter="m", value=m)
    arr = np.asarray(f, dtype=float)

    if kind == "stein_exp":
        result = _heat_sup(calculus or SpectralCalculus(mesh), arr, grid)
        return MaximalResult("stein_exp", m, result.values, result.argmax_t, grid)

    if kind == "exp_vertical":
        calc = calculus or SpectralCalculus(mesh)
        per_t = np.stack(
            [math.sqrt(s) * gradient_magnitude(mesh, calc.apply(np.exp(-s * calc.eigenvalues), arr)) for s in grid]
        )
    else:
        per_t = np.stack([_resolvent_values(mesh, kind, m, float(t), arr) for t in grid])
    idx = np.argmax(per_t, axis=0)
    values = per_t[idx, np.arange(per_t.shape[1])]
    return MaximalResult(kind, m, values, grid[idx], grid)


def vertical_maximal(mesh: ManifoldMesh, m: int, f: ArrayLike, t_grid: ArrayLike) -> MaximalResult:
    """M f(x) = sup_t |√t ∇ (I + tL)^{-m} f|(x)."""
    return maximal(mesh, "vertical", m, f, t_grid)


def horizontal_maximal(mesh: ManifoldMesh, m: int, f: ArrayLike, t_grid: ArrayLike) -> MaximalResult:
    """M f(x) = sup_t |tL (I + tL)^{-m} f|(x) via the resolvent-difference identity."""
    return maximal(mesh, "horizontal", m, f, t_grid)


def stein_domination_check(
    mesh: ManifoldMesh,
    m: int,
    f: ArrayLike,
    t_grid: ArrayLike,
    s_grid: ArrayLike | None = None,
    calculus: SpectralCalculus | None = None,
) -> float:
    """max_x (sup_t |(I + tL)^{-m} f| - sup_s |e^{-sL} f|); ≤ 0 up to roundoff for f ≥ 0."""
    arr = np.asarray(f, dtype=float)
    if np.any(arr < 0):
        raise DomainError("domination is checked for non-negative f only", parameter="f")
    grid = np.asarray(t_grid, dtype=float)
    if s_grid is None:
        s_grid = dyadic_grid(float(grid.min()) / 1e3, float(grid.max()) * 1e3)
    heat_grid = np.unique(np.concatenate([grid, np.asarray(s_grid, dtype=float)]))
    res = maximal(mesh, "stein_res", m, arr, grid)
    heat = maximal(mesh, "stein_exp", m, arr, heat_grid, calculus)
    return float(np.max(res.values - heat.values))


# -----------------------------------------------------------------------------
# Constants and ratios
# -----------------------------------------------------------------------------


def weak_type_quotient(values: ArrayLike, measure: ArrayLike) -> float:
    """sup_λ λ μ{v > λ}: with v sorted decreasingly, max_j v_(j) Σ_{i≤j} μ_(i)."""
    v = np.asarray(values, dtype=float)
    mu = np.asarray(measure, dtype=float)
    order = np.argsort(-v, kind="stable")
    return float(np.max(v[order] * np.cumsum(mu[order]), initial=0.0))


def weak11_values(
    mesh: ManifoldMesh,
    kind: MaximalKind,
    m: int,
    f_family: Sequence[ArrayLike],
    t_grid: ArrayLike,
) -> list[float]:
    """Weak-(1,1) quotient of M f for every unit-mass f of the family."""
    out = []
    for f in f_family:
        arr = np.asarray(f, dtype=float)
        mass = lp_norm(mesh, arr, 1.0)
        if abs(mass - 1.0) > 1e-9:
            raise DomainError(f"family functions need ‖f‖₁ = 1, got {mass:.6g}", parameter="f_family", value=mass)
        out.append(weak_type_quotient(maximal(mesh, kind, m, arr, t_grid).values, mesh.measure))
    return out


def weak11_constant(
    mesh: ManifoldMesh,
    kind: MaximalKind,
    m: int,
    f_family: Sequence[ArrayLike],
    t_grid: ArrayLike,
) -> float:
    """max over the family of sup_λ λ μ{M f > λ}."""
    return max(weak11_values(mesh, kind, m, f_family, t_grid))


def maximal_ratio(mesh: ManifoldMesh, kind: MaximalKind, m: int, f: ArrayLike, p: float, t_grid: ArrayLike) -> float:
    """‖M f‖_p / ‖f‖_p."""
    arr = np.asarray(f, dtype=float)
    return lp_norm(mesh, maximal(mesh, kind, m, arr, t_grid).values, p) / lp_norm(mesh, arr, p)


def fefferman_stein_ratio(
    mesh: ManifoldMesh,
    m: int,
    f_sequence: Sequence[ArrayLike],
    p: float,
    t_grid: ArrayLike,
    kind: MaximalKind = "vertical",
) -> float:
    """‖(Σ_i (M f_i)²)^{1/2}‖_p / ‖(Σ_i |f_i|²)^{1/2}‖_p."""
    if not f_sequence:
        raise DomainError("the sequence is empty", parameter="f_sequence")
    if math.isnan(p) or p <= 1 or math.isinf(p):
        raise DomainError(f"p must lie in (1, ∞), got {p}", parameter="p", value=p)
    num = np.zeros(mesh.n_vertices)
    den = np.zeros(mesh.n_vertices)
    for f in f_sequence:
        arr = np.asarray(f, dtype=float)
        num += maximal(mesh, kind, m, arr, t_grid).values ** 2
        den += arr**2
    return weighted_lp_norm(np.sqrt(num), mesh.measure, p) / weighted_lp_norm(np.sqrt(den), mesh.measure, p)


def maximal_table(mesh: ManifoldMesh, result: MaximalResult) -> list[dict[str, float | int]]:
    """Rows (vertex, r, end, value, argmax_t) for CSV export."""
    return [
        {
            "vertex": v,
            "r": float(mesh.radius[v]),
            "end": int(mesh.end_id[v]),
            "value": float(result.values[v]),
            "argmax_t": float(result.argmax_t[v]),
        }
        for v in range(mesh.n_vertices)
    ]
