"""Kernel matrices of resolvent operators on a mesh.

A kernel acts by ``(Tf)(x) = Σ_y T(x, y) f(y) μ_y``. With ``S = D + tW`` the
kernel of ``(I + tL)^{-1}`` is ``S^{-1}``, and higher orders follow from
``K_m = S^{-1} D K_{m-1}``; ``K_0 = D^{-1}`` is the identity kernel.
"""

from __future__ import annotations

import logging
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Any, Callable, Literal

import numpy as np
import scipy.sparse as sp
from numpy.typing import ArrayLike, NDArray
from scipy.sparse.linalg import splu

from endres.config import DEFAULT_TOLERANCES
from endres.errors import DomainError, SolverError
from endres.mesh import ManifoldMesh, slot_differences
from endres.specfun import point_resolvent_gradient, point_resolvent_kernel, sphere_area

logger = logging.getLogger(__name__)

__all__ = [
    "FACTOR_CACHE_SIZE",
    "KernelKind",
    "KernelMatrix",
    "resolvent_powers",
    "resolvent_solver",
    "resolvent_matrix",
    "k_resolvent_matrix",
    "vertical_matrix",
    "horizontal_matrix",
    "kernel_slice_table",
    "PointKernelComparison",
    "point_kernel_comparison",
]

KernelKind = Literal["resolvent", "vertical", "horizontal", "heat", "remainder"]


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """Dense kernel T(x, y) with the measures it integrates against.

    Vertical kernels also carry the signed edge rows ``edge_rows[(x, e), y]`` and
    the owner vertex of every row, so the exact gradient of ``Tf`` is available
    for signed f.
    """

    values: NDArray[np.float64]
    row_measure: NDArray[np.float64]
    col_measure: NDArray[np.float64]
    kind: KernelKind
    m: int
    t: float | None = None
    k: float | None = None
    edge_rows: NDArray[np.float64] | None = None
    slot_owner: NDArray[np.int64] | None = None

    def __post_init__(self) -> None:
        self.values.setflags(write=False)
        if self.edge_rows is not None:
            self.edge_rows.setflags(write=False)

    @property
    def shape(self) -> tuple[int, int]:
        rows, cols = self.values.shape
        return int(rows), int(cols)

    @property
    def has_edges(self) -> bool:
        return self.edge_rows is not None and self.slot_owner is not None

    def apply(self, f: ArrayLike) -> NDArray[np.float64]:
        """Σ_y T(x, y) f(y) μ_y (column-wise for 2-d f)."""
        arr = np.asarray(f, dtype=float)
        weighted = arr * self.col_measure.reshape((-1,) + (1,) * (arr.ndim - 1))
        out: NDArray[np.float64] = self.values @ weighted
        return out

    def apply_edges(self, f: ArrayLike) -> NDArray[np.float64]:
        """Signed edge values of the vertical operator applied to f."""
        if self.edge_rows is None:
            raise DomainError(f"{self.kind} kernel carries no edge rows", parameter="kind", value=self.kind)
        arr = np.asarray(f, dtype=float)
        weighted = arr * self.col_measure.reshape((-1,) + (1,) * (arr.ndim - 1))
        out: NDArray[np.float64] = self.edge_rows @ weighted
        return out

    def apply_signed(self, f: ArrayLike) -> NDArray[np.float64]:
        """|√t ∇ (I + tL)^{-m} f| exactly for signed f; ``apply`` otherwise."""
        if not self.has_edges:
            return np.abs(self.apply(f))
        assert self.slot_owner is not None
        g = self.apply_edges(f)
        n_rows = self.values.shape[0]
        if g.ndim == 1:
            return np.sqrt(np.bincount(self.slot_owner, weights=g * g, minlength=n_rows))
        out = np.zeros((n_rows,) + g.shape[1:])
        np.add.at(out, self.slot_owner, g * g)
        return np.sqrt(out)

    def metadata(self) -> dict[str, Any]:
        return {"kind": self.kind, "m": self.m, "t": self.t, "k": self.k, "shape": list(self.shape)}


# factorizations kept per mesh, least recently used evicted first
FACTOR_CACHE_SIZE = 32
_factor_lock = threading.Lock()


def _factor(mesh: ManifoldMesh, t: float) -> Any:
    with _factor_lock:
        factors: OrderedDict[float, Any] = mesh._cache.setdefault("lu", OrderedDict())
        lu = factors.get(float(t))
        if lu is not None:
            factors.move_to_end(float(t))
            return lu
    system = (sp.diags(mesh.measure) + t * mesh.graph_laplacian).tocsc()
    try:
        lu = splu(system)
    except RuntimeError as e:
        raise SolverError(f"factorization of D + tW failed at t={t}", cause=e) from e
    with _factor_lock:
        factors[float(t)] = lu
        while len(factors) > FACTOR_CACHE_SIZE:
            factors.popitem(last=False)
    return lu


def resolvent_solver(mesh: ManifoldMesh, t: float) -> Callable[[NDArray[np.float64]], NDArray[np.float64]]:
    """f ↦ (I + tL)^{-1} f through the cached factorization of D + tW (column-wise)."""
    if not math.isfinite(t) or t <= 0:
        raise DomainError(f"t must be finite and > 0, got {t}", parameter="t", value=t)
    lu = _factor(mesh, t)
    mu = mesh.measure

    def solve(f: NDArray[np.float64]) -> NDArray[np.float64]:
        arr = np.asarray(f, dtype=float)
        return np.asarray(lu.solve(mu.reshape((-1,) + (1,) * (arr.ndim - 1)) * arr))

    return solve


def resolvent_powers(mesh: ManifoldMesh, t: float, m: int, *, check: bool = True) -> list[NDArray[np.float64]]:
    """Kernels [K_0, K_1, ..., K_m] of (I + tL)^{-j}, j = 0..m, as dense arrays."""
    if m < 0:
        raise DomainError(f"order must be >= 0, got {m}", parameter="m", value=m)
    if not math.isfinite(t) or t < 0:
        raise DomainError(f"t must be finite and >= 0, got {t}", parameter="t", value=t)
    mu = mesh.measure
    identity = np.diag(1.0 / mu)
    kernels = [identity]
    if m == 0:
        return kernels
    if t == 0:
        return kernels * (m + 1)

    lu = _factor(mesh, t)
    n = mesh.n_vertices
    current = lu.solve(np.eye(n))
    if check:
        system = sp.diags(mu) + t * mesh.graph_laplacian
        scale = float(abs(system).sum(axis=1).max()) * float(np.max(np.abs(current)))
        residual = float(np.max(np.abs(system @ current - np.eye(n)))) / scale
        if not math.isfinite(residual) or residual > DEFAULT_TOLERANCES.residual:
            raise SolverError(f"resolvent solve residual {residual:.3g} at t={t}", residual=residual)
    for j in range(1, m + 1):
        if j > 1:
            current = lu.solve(mu[:, None] * current)
        sym = 0.5 * (current + current.T)
        kernels.append(np.maximum(sym, 0.0))
    return kernels


def resolvent_matrix(mesh: ManifoldMesh, t: float, m: int) -> KernelMatrix:
    """Kernel of (I + tL)^{-m}; t = 0 gives the identity kernel δ_xy / μ_y."""
    if m < 1:
        raise DomainError(f"order must be >= 1, got {m}", parameter="m", value=m)
    values = resolvent_powers(mesh, t, m)[m]
    return KernelMatrix(values, mesh.measure, mesh.measure, "resolvent", m, t=t)


def k_resolvent_matrix(mesh: ManifoldMesh, k: float, m: int) -> KernelMatrix:
    """Kernel of (L + k²)^{-m} = t^m (I + tL)^{-m} with t = 1/k²."""
    if not math.isfinite(k) or k <= 0:
        raise DomainError(f"k must be finite and > 0, got {k}", parameter="k", value=k)
    if m < 1:
        raise DomainError(f"order must be >= 1, got {m}", parameter="m", value=m)
    t = 1.0 / (k * k)
    values = t**m * resolvent_powers(mesh, t, m)[m]
    return KernelMatrix(values, mesh.measure, mesh.measure, "resolvent", m, t=t, k=k)


def vertical_matrix(mesh: ManifoldMesh, t: float, m: int) -> KernelMatrix:
    """Kernel of √t ∇ (I + tL)^{-m}: V(x, y) = √t |∇_x T_m(·, y)|(x), with signed edge rows."""
    if not math.isfinite(t) or t <= 0:
        raise DomainError(f"vertical kernels need t > 0, got {t}", parameter="t", value=t)
    if m < 1:
        raise DomainError(f"order must be >= 1, got {m}", parameter="m", value=m)
    kernel = resolvent_powers(mesh, t, m)[m]
    edges = math.sqrt(t) * slot_differences(mesh, kernel)
    owner = mesh.slots[0]
    squared = np.zeros_like(kernel)
    np.add.at(squared, owner, edges * edges)
    return KernelMatrix(
        np.sqrt(squared),
        mesh.measure,
        mesh.measure,
        "vertical",
        m,
        t=t,
        edge_rows=edges,
        slot_owner=owner,
    )


def horizontal_matrix(mesh: ManifoldMesh, t: float, m: int) -> KernelMatrix:
    """Kernel of tL (I + tL)^{-m} = (I + tL)^{-(m-1)} - (I + tL)^{-m}."""
    if m < 1:
        raise DomainError(f"order must be >= 1, got {m}", parameter="m", value=m)
    kernels = resolvent_powers(mesh, t, m)
    return KernelMatrix(kernels[m - 1] - kernels[m], mesh.measure, mesh.measure, "horizontal", m, t=t)


def kernel_slice_table(T: KernelMatrix, y: int, radius: ArrayLike | None = None) -> list[dict[str, Any]]:
    """Rows (x, y, value) of the column T(·, y), with r when radii are given."""
    column = T.values[:, y]
    radii = None if radius is None else np.asarray(radius, dtype=float)
    rows: list[dict[str, Any]] = []
    for x, value in enumerate(column):
        row: dict[str, Any] = {"x": x, "y": y, "value": float(value)}
        if radii is not None:
            row["r"] = float(radii[x])
        rows.append(row)
    return rows


@dataclass(frozen=True, eq=False)
class PointKernelComparison:
    """Anchor column of a probe mesh next to the Euclidean point kernel."""

    n: int
    k: float
    vertical: bool
    r: NDArray[np.float64]
    discrete: NDArray[np.float64]
    closed_form: NDArray[np.float64]

    @property
    def max_relative_gap(self) -> float:
        return float(np.max(np.abs(self.discrete - self.closed_form) / self.closed_form))

    def rows(self) -> list[dict[str, Any]]:
        return [
            {
                "n": self.n,
                "k": self.k,
                "vertical": int(self.vertical),
                "r": float(r),
                "discrete": float(d),
                "closed_form": float(c),
            }
            for r, d, c in zip(self.r, self.discrete, self.closed_form)
        ]


def point_kernel_comparison(
    mesh: ManifoldMesh,
    k: float,
    *,
    r_lo: float = 2.0,
    r_hi: float | None = None,
    vertical: bool = False,
) -> PointKernelComparison:
    """Compare the anchor column of (L + k²)^{-1} on a probe mesh with the point kernel G.

    The probe reflects at r = r_min, so the discrete column approximates
    G / F(r_min), F(a) = |S^{n-1}| a^{n-1} |∂_r G(a)| being the flux of G through
    the sphere of radius a. With ``vertical`` the column of √t ∇ (I + tL)^{-1},
    t = 1/k², is compared with k |∂_r G| / F(r_min).
    """
    if not mesh.probe:
        raise DomainError("point kernel comparisons need a probe mesh", parameter="mesh")
    end = mesh.ends[0]
    if end.cross_modes != 1:
        raise DomainError(
            "point kernel comparisons need cross_modes = 1", parameter="cross_modes", value=end.cross_modes
        )
    if not math.isfinite(k) or k <= 0:
        raise DomainError(f"k must be finite and > 0, got {k}", parameter="k", value=k)
    r_hi = 0.25 * end.r_max if r_hi is None else r_hi
    rows = np.flatnonzero((mesh.radius >= r_lo) & (mesh.radius <= r_hi))
    if rows.size == 0:
        raise DomainError(f"no vertices with {r_lo} <= r <= {r_hi}", parameter="r_lo", value=r_lo)
    anchor = mesh.anchors[0]
    a = end.r_min
    flux = sphere_area(end.n) * a ** (end.n - 1) * float(point_resolvent_gradient(end.n, 1, k, a))
    r = mesh.radius[rows]
    if vertical:
        discrete = vertical_matrix(mesh, 1.0 / (k * k), 1).values[rows, anchor]
        closed_form = k * point_resolvent_gradient(end.n, 1, k, r) / flux
    else:
        discrete = k_resolvent_matrix(mesh, k, 1).values[rows, anchor]
        closed_form = point_resolvent_kernel(end.n, 1, k, r) / flux
    return PointKernelComparison(end.n, k, vertical, r, discrete, closed_form)
