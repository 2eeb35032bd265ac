"""Discrete model of a manifold with ends.

Each end ``ℝ^{n_i} × 𝓜_i`` is reduced to its radial part: a chain of vertices on
a geometric radial grid ``r_j = r_min q^j``. A vertex carries the volume of its
dual shell ``|S^{n-1}| (b^n - a^n) / n``, and neighbouring vertices are joined by
the exact conductance of the radial fundamental solution, so ``r^{2-n}`` is
discrete harmonic along a chain. With ``cross_modes = q > 1`` every radius
carries ``q`` states on a ring of circumference 2π, a unit-circle cross-section.

The ends are glued at a compact center: ``center_size`` hub vertices of unit
measure joined to the first vertex (the anchor) of every end. The outer
boundary at ``r_max`` is reflecting.

The Laplacian is ``L = D^{-1} W`` with ``D = diag(μ)`` and ``W`` the weighted
graph Laplacian, so ``L`` is μ-symmetric, positive semidefinite and ``L1 = 0``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np
import scipy.sparse as sp
from numpy.typing import ArrayLike, NDArray
from scipy.sparse.csgraph import dijkstra

from endres.errors import ConfigError, DomainError
from endres.specfun import sphere_area

logger = logging.getLogger(__name__)

__all__ = [
    "CENTER",
    "EndSpec",
    "ManifoldMesh",
    "FreeEndModel",
    "build_mesh",
    "free_end_mesh",
    "gradient_magnitude",
    "slot_differences",
    "lp_norm",
    "weighted_lp_norm",
    "graph_distances",
    "ball_measure",
    "annulus_measure",
    "doubling_ratio",
    "mesh_table",
]

CENTER = -1

_HUB_GAP_FRACTION = 0.5


@dataclass(frozen=True)
class EndSpec:
    """One end ℝⁿ × 𝓜 of the manifold."""

    n: int
    r_max: float
    cells: int
    cross_modes: int = 1
    r_min: float = 1.0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ConfigError(f"end dimension must be >= 1, got {self.n}", details={"field": "n", "value": self.n})
        if self.cells < 16:
            raise ConfigError(f"an end needs >= 16 cells, got {self.cells}", details={"field": "cells"})
        if self.cross_modes < 1:
            raise ConfigError(f"cross_modes must be >= 1, got {self.cross_modes}", details={"field": "cross_modes"})
        if not (math.isfinite(self.r_min) and math.isfinite(self.r_max)) or not (self.r_max > self.r_min > 0):
            raise ConfigError(
                f"radial grid must increase: need r_max > r_min > 0, got r_min={self.r_min}, r_max={self.r_max}",
                details={"field": "r_max", "value": self.r_max},
            )

    @property
    def ratio(self) -> float:
        """Geometric growth factor q of the radial grid."""
        return float((self.r_max / self.r_min) ** (1.0 / self.cells))

    def radial_grid(self, inner: int = 0) -> NDArray[np.float64]:
        """Grid radii, continued ``inner`` cells below r_min with the same ratio."""
        return self.r_min * self.ratio ** np.arange(-inner, self.cells + 1)


@dataclass(frozen=True, eq=False)
class ManifoldMesh:
    """Measure-weighted graph of a manifold with ends; immutable after build."""

    ends: tuple[EndSpec, ...]
    end_id: NDArray[np.int64]
    radius: NDArray[np.float64]
    mode: NDArray[np.int64]
    measure: NDArray[np.float64]
    edges: NDArray[np.int64]
    edge_length: NDArray[np.float64]
    conductance: NDArray[np.float64]
    anchors: tuple[int, ...]
    center: tuple[int, ...]
    probe: bool = False
    _cache: dict[str, Any] = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_vertices(self) -> int:
        return int(self.measure.shape[0])

    @property
    def n_star(self) -> int:
        """n* = min_i n_i."""
        return min(end.n for end in self.ends)

    @property
    def anchor_distance(self) -> NDArray[np.float64]:
        """d(x_i°, x) = r - r_min along end i, clipped at 0; 0 on the center."""
        r_min = np.array([end.r_min for end in self.ends])
        d = self.radius - r_min[np.maximum(self.end_id, 0)]
        return np.where(self.end_id >= 0, np.maximum(d, 0.0), 0.0)

    def end_mask(self, i: int) -> NDArray[np.bool_]:
        return self.end_id == i

    def end_vertices(self, i: int, mode: int | None = 0) -> NDArray[np.int64]:
        """Vertices of end ``i`` ordered by radius (one cross state, or all when mode is None)."""
        mask = self.end_id == i
        if mode is not None:
            mask &= self.mode == mode
        return np.flatnonzero(mask)

    def nearest_vertex(self, i: int, r: float) -> int:
        """Vertex of end ``i`` (cross state 0) whose radius is closest to r."""
        verts = self.end_vertices(i)
        return int(verts[np.argmin(np.abs(self.radius[verts] - r))])

    @property
    def graph_laplacian(self) -> sp.csr_matrix:
        """Symmetric W with (Wf)_x = Σ_y w_xy (f_x - f_y)."""
        if "W" not in self._cache:
            n = self.n_vertices
            i, j = self.edges[:, 0], self.edges[:, 1]
            w = self.conductance
            rows = np.concatenate([i, j])
            cols = np.concatenate([j, i])
            adj = sp.coo_matrix((np.concatenate([w, w]), (rows, cols)), shape=(n, n))
            adj = adj.tocsr()
            degree = np.asarray(adj.sum(axis=1)).ravel()
            self._cache["W"] = (sp.diags(degree) - adj).tocsr()
        W: sp.csr_matrix = self._cache["W"]
        return W

    @property
    def laplacian(self) -> sp.csr_matrix:
        """L = D^{-1} W as a sparse matrix."""
        if "L" not in self._cache:
            self._cache["L"] = (sp.diags(1.0 / self.measure) @ self.graph_laplacian).tocsr()
        L: sp.csr_matrix = self._cache["L"]
        return L

    def apply_laplacian(self, f: ArrayLike) -> NDArray[np.float64]:
        """(Lf)_x = μ_x^{-1} Σ_y w_xy (f_x - f_y); exactly zero on constants."""
        arr = np.asarray(f, dtype=float)
        i, j = self.edges[:, 0], self.edges[:, 1]
        w = self.conductance.reshape((-1,) + (1,) * (arr.ndim - 1))
        flux = w * (arr[i] - arr[j])
        out = np.zeros_like(arr)
        np.add.at(out, i, flux)
        np.add.at(out, j, -flux)
        return out / self.measure.reshape((-1,) + (1,) * (arr.ndim - 1))

    def inner(self, f: ArrayLike, g: ArrayLike) -> float:
        """⟨f, g⟩_μ."""
        return float(np.sum(np.asarray(f, dtype=float) * np.asarray(g, dtype=float) * self.measure))

    @property
    def slots(self) -> tuple[NDArray[np.int64], NDArray[np.int64], NDArray[np.float64], NDArray[np.float64]]:
        """Directed neighbour slots: (owner, target, length, normalized weight)."""
        if "slots" not in self._cache:
            i, j = self.edges[:, 0], self.edges[:, 1]
            owner = np.concatenate([i, j])
            target = np.concatenate([j, i])
            length = np.concatenate([self.edge_length, self.edge_length])
            w = np.concatenate([self.conductance, self.conductance])
            total = np.bincount(owner, weights=w, minlength=self.n_vertices)
            self._cache["slots"] = (owner, target, length, w / total[owner])
        slots: tuple[NDArray[np.int64], NDArray[np.int64], NDArray[np.float64], NDArray[np.float64]]
        slots = self._cache["slots"]
        return slots


class FreeEndModel(NamedTuple):
    """Single-end probe mesh for the Euclidean factor of one end of ``parent``."""

    mesh: ManifoldMesh
    parent_vertices: NDArray[np.int64]
    local_vertices: NDArray[np.int64]


def _dual_boundaries(r: NDArray[np.float64]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    mid = 0.5 * (r[1:] + r[:-1])
    lo = np.concatenate([[r[0]], mid])
    hi = np.concatenate([mid, [r[-1]]])
    return lo, hi


def _radial_conductance(n: int, r: NDArray[np.float64]) -> NDArray[np.float64]:
    a, b = r[:-1], r[1:]
    if n == 2:
        resistance = np.log(b / a)
    else:
        resistance = (b ** (2.0 - n) - a ** (2.0 - n)) / (2.0 - n)
    return sphere_area(n) / resistance


def _build(ends: tuple[EndSpec, ...], center_size: int, probe: bool, inner: int = 0) -> ManifoldMesh:
    end_id: list[NDArray[np.int64]] = []
    radius: list[NDArray[np.float64]] = []
    mode: list[NDArray[np.int64]] = []
    measure: list[NDArray[np.float64]] = []
    edges: list[NDArray[np.int64]] = []
    lengths: list[NDArray[np.float64]] = []
    conds: list[NDArray[np.float64]] = []

    n_center = 0 if probe else center_size
    offset = n_center
    center = tuple(range(n_center))
    if n_center:
        end_id.append(np.full(n_center, CENTER, dtype=np.int64))
        radius.append(np.zeros(n_center))
        mode.append(np.zeros(n_center, dtype=np.int64))
        measure.append(np.ones(n_center))
        if n_center > 1:
            pairs = np.array([(a, b) for a in range(n_center) for b in range(a + 1, n_center)], dtype=np.int64)
            edges.append(pairs)
            lengths.append(np.ones(len(pairs)))
            conds.append(np.ones(len(pairs)))

    anchors: list[int] = []
    for e, end in enumerate(ends):
        r = end.radial_grid(inner)
        q = end.cross_modes
        nr = r.shape[0]
        lo, hi = _dual_boundaries(r)
        shell = sphere_area(end.n) * (hi**end.n - lo**end.n) / end.n
        idx = offset + np.arange(nr * q, dtype=np.int64).reshape(nr, q)

        end_id.append(np.full(nr * q, e, dtype=np.int64))
        radius.append(np.repeat(r, q))
        mode.append(np.tile(np.arange(q, dtype=np.int64), nr))
        measure.append(np.repeat(shell / q, q))

        cond = _radial_conductance(end.n, r) / q
        for s in range(q):
            edges.append(np.stack([idx[:-1, s], idx[1:, s]], axis=1))
            lengths.append(np.diff(r))
            conds.append(cond)

        if q > 1:
            h = 2.0 * math.pi / q
            ring_cond = (shell / q) / h**2
            ring_pairs = [(s, (s + 1) % q) for s in range(q if q > 2 else 1)]
            factor = 2.0 if q == 2 else 1.0
            for s, t in ring_pairs:
                edges.append(np.stack([idx[:, s], idx[:, t]], axis=1))
                lengths.append(np.full(nr, h))
                conds.append(factor * ring_cond)

        anchors.append(int(idx[inner, 0]))
        if n_center:
            gap = _HUB_GAP_FRACTION * end.r_min
            hub_cond = sphere_area(end.n) * end.r_min ** (end.n - 1) / gap / (q * n_center)
            for c in center:
                edges.append(np.stack([np.full(q, c, dtype=np.int64), idx[0, :]], axis=1))
                lengths.append(np.full(q, gap))
                conds.append(np.full(q, hub_cond))
        offset += nr * q

    mesh = ManifoldMesh(
        ends=ends,
        end_id=np.concatenate(end_id),
        radius=np.concatenate(radius),
        mode=np.concatenate(mode),
        measure=np.concatenate(measure),
        edges=np.concatenate(edges).astype(np.int64),
        edge_length=np.concatenate(lengths),
        conductance=np.concatenate(conds),
        anchors=tuple(anchors),
        center=center,
        probe=probe,
    )
    for arr in (mesh.end_id, mesh.radius, mesh.mode, mesh.measure, mesh.edges, mesh.edge_length, mesh.conductance):
        arr.setflags(write=False)
    return mesh


def build_mesh(ends: list[EndSpec] | tuple[EndSpec, ...], center_size: int = 1, *, probe: bool = False) -> ManifoldMesh:
    """Build the discrete manifold.

    ``probe=True`` is the single-end testing mode: one end, no hub, reflecting
    boundary at r_min, anchor at the first vertex.
    """
    ends = tuple(ends)
    if probe:
        if len(ends) != 1:
            raise ConfigError(f"probe meshes have exactly one end, got {len(ends)}", details={"field": "ends"})
    elif len(ends) < 2:
        raise ConfigError(f"a manifold with ends needs >= 2 ends, got {len(ends)}", details={"field": "ends"})
    if center_size < 1:
        raise ConfigError(f"center_size must be >= 1, got {center_size}", details={"field": "center_size"})
    for end in ends:
        if end.n < 3:
            logger.warning("End of dimension %d is outside the n >= 3 regime; no reference behaviour applies", end.n)
    mesh = _build(ends, center_size, probe)
    logger.debug(
        "Built mesh with %d vertices, %d edges, ends=%s",
        mesh.n_vertices,
        mesh.edges.shape[0],
        [e.n for e in ends],
    )
    return mesh


def free_end_mesh(parent: ManifoldMesh, i: int, inner_cells: int | None = None) -> FreeEndModel:
    """Probe mesh of end ``i`` continued inward towards the origin on the same radial grid.

    The grid is extended with the same ratio until r falls below r_min / 50, so
    the model discretizes the Euclidean factor ℝⁿ of the end.
    """
    end = parent.ends[i]
    if inner_cells is None:
        inner_cells = int(math.ceil(math.log(50.0) / math.log(end.ratio)))
    mesh = _build((end,), 1, probe=True, inner=inner_cells)
    parent_vertices = np.flatnonzero(parent.end_id == i)
    local_vertices = parent_vertices - parent_vertices[0] + inner_cells * end.cross_modes
    return FreeEndModel(mesh=mesh, parent_vertices=parent_vertices, local_vertices=local_vertices)


def slot_differences(mesh: ManifoldMesh, f: ArrayLike) -> NDArray[np.float64]:
    """Signed weighted slot values √w^{norm}·(f(target) - f(owner))/len; works column-wise."""
    owner, target, length, weight = mesh.slots
    arr = np.asarray(f, dtype=float)
    scale = (np.sqrt(weight) / length).reshape((-1,) + (1,) * (arr.ndim - 1))
    return scale * (arr[target] - arr[owner])


def gradient_magnitude(mesh: ManifoldMesh, f: ArrayLike) -> NDArray[np.float64]:
    """|∇f|(x) = (Σ_{y~x} w^{norm}_{xy} ((f(y) - f(x))/len(x,y))²)^{1/2}."""
    owner = mesh.slots[0]
    d = slot_differences(mesh, f)
    arr = np.asarray(f, dtype=float)
    if arr.ndim == 1:
        return np.sqrt(np.bincount(owner, weights=d * d, minlength=mesh.n_vertices))
    out = np.zeros((mesh.n_vertices,) + arr.shape[1:])
    np.add.at(out, owner, d * d)
    return np.sqrt(out)


def weighted_lp_norm(values: ArrayLike, measure: ArrayLike, p: float) -> float:
    """(Σ |v|^p μ)^{1/p}, or max |v| for p = ∞."""
    if math.isnan(p) or p < 1:
        raise DomainError(f"p must be >= 1, got {p}", parameter="p", value=p)
    v = np.abs(np.asarray(values, dtype=float))
    if math.isinf(p):
        return float(v.max(initial=0.0))
    mu = np.asarray(measure, dtype=float)
    scale = float(v.max(initial=0.0))
    if scale == 0.0:
        return 0.0
    return scale * float(np.sum((v / scale) ** p * mu)) ** (1.0 / p)


def lp_norm(mesh: ManifoldMesh, f: ArrayLike, p: float) -> float:
    """L^p(μ) norm of a vertex function."""
    return weighted_lp_norm(f, mesh.measure, p)


def graph_distances(mesh: ManifoldMesh, sources: ArrayLike | None = None) -> NDArray[np.float64]:
    """Shortest-path distances with edge lengths, one row per source vertex."""
    if "adjacency_len" not in mesh._cache:
        n = mesh.n_vertices
        i, j = mesh.edges[:, 0], mesh.edges[:, 1]
        mesh._cache["adjacency_len"] = sp.coo_matrix((mesh.edge_length, (i, j)), shape=(n, n)).tocsr()
    idx = None if sources is None else np.atleast_1d(np.asarray(sources, dtype=np.int64))
    dist: NDArray[np.float64] = dijkstra(mesh._cache["adjacency_len"], directed=False, indices=idx)
    return np.atleast_2d(dist)


def ball_measure(mesh: ManifoldMesh, x: int, radius: float | ArrayLike, end: int | None = None) -> NDArray[np.float64]:
    """μ(B(x, radius)) for closed graph-metric balls, optionally restricted to one end."""
    d = graph_distances(mesh, [x])[0]
    mu = mesh.measure if end is None else np.where(mesh.end_id == end, mesh.measure, 0.0)
    order = np.argsort(d, kind="stable")
    cum = np.cumsum(mu[order])
    pos = np.searchsorted(d[order], np.asarray(radius, dtype=float), side="right")
    return np.where(pos > 0, cum[np.maximum(pos - 1, 0)], 0.0)


def annulus_measure(mesh: ManifoldMesh, i: int, a: float, b: float) -> float:
    """Measure of {a ≤ r ≤ b} on end ``i``; partially covered dual shells count by volume."""
    end = mesh.ends[i]
    verts = np.flatnonzero(mesh.end_id == i)
    r = mesh.radius[verts]
    grid = np.unique(r)
    lo, hi = _dual_boundaries(grid)
    lo_v = lo[np.searchsorted(grid, r)]
    hi_v = hi[np.searchsorted(grid, r)]
    top = np.minimum(hi_v, b)
    bottom = np.maximum(lo_v, a)
    frac = np.clip(top**end.n - bottom**end.n, 0.0, None) / (hi_v**end.n - lo_v**end.n)
    return float(np.sum(frac * mesh.measure[verts]))


def doubling_ratio(mesh: ManifoldMesh, max_sources: int = 400, t_points: int = 64) -> float:
    """sup over sampled (x, t) of μ(B(x, 2t)) / μ(B(x, t)) for graph-metric balls."""
    n = mesh.n_vertices
    stride = max(1, int(math.ceil(n / max_sources)))
    sources = np.arange(0, n, stride)
    dist = graph_distances(mesh, sources)
    finite = dist[np.isfinite(dist)]
    t_lo = float(mesh.edge_length.min())
    t_hi = float(finite.max())
    t = np.geomspace(t_lo, t_hi, t_points)
    best = 1.0
    for row in dist:
        order = np.argsort(row, kind="stable")
        sorted_d = row[order]
        cum = np.cumsum(mesh.measure[order])
        small = cum[np.searchsorted(sorted_d, t, side="right") - 1]
        large = cum[np.searchsorted(sorted_d, 2.0 * t, side="right") - 1]
        best = max(best, float(np.max(large / small)))
    return best


def mesh_table(mesh: ManifoldMesh) -> list[dict[str, Any]]:
    """Rows (vertex, end, r, mode, measure) for CSV export."""
    return [
        {
            "vertex": v,
            "end": int(mesh.end_id[v]),
            "r": float(mesh.radius[v]),
            "mode": int(mesh.mode[v]),
            "measure": float(mesh.measure[v]),
        }
        for v in range(mesh.n_vertices)
    ]
