"""Randomized lower bounds for ℓ²- and R-bounds of {√t ∇ (I + tL)^{-m}}."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from endres.config import DEFAULT_TOLERANCES
from endres.context import derive_rng
from endres.errors import DomainError
from endres.mesh import ManifoldMesh, weighted_lp_norm
from endres.resolvent import vertical_matrix

logger = logging.getLogger(__name__)

__all__ = ["RBoundEstimate", "fixed_witness_ratio", "l2_ratio", "rbound_estimate", "rbound_table"]


@dataclass(frozen=True)
class RBoundEstimate:
    """Best observed ℓ²-ratio and the Rademacher-average ratio of its witness."""

    p: float
    t_count: int
    trials: int
    sign_samples: int
    best_ratio: float
    rademacher_ratio: float
    trial_ratios: tuple[float, ...]
    trial_times: tuple[tuple[float, ...], ...]
    seed: int


class _Family:
    """Edge rows of the vertical operators at t_1..t_J."""

    def __init__(self, mesh: ManifoldMesh, m: int, times: Sequence[float]) -> None:
        self.mesh = mesh
        kernels = [vertical_matrix(mesh, t, m) for t in times]
        self.rows = [k.edge_rows for k in kernels]
        self.owner = mesh.slots[0]

    def edges(self, F: NDArray[np.float64]) -> list[NDArray[np.float64]]:
        mu = self.mesh.measure
        return [rows @ (mu * F[:, j]) for j, rows in enumerate(self.rows)]  # type: ignore[operator]

    def magnitude(self, edges: Sequence[NDArray[np.float64]]) -> NDArray[np.float64]:
        total = np.zeros(self.mesh.n_vertices)
        for g in edges:
            total += np.bincount(self.owner, weights=g * g, minlength=self.mesh.n_vertices)
        return np.sqrt(total)


def l2_ratio(family: _Family, F: NDArray[np.float64], p: float) -> float:
    """‖(Σ_j |T_j f_j|²)^{1/2}‖_p / ‖(Σ_j |f_j|²)^{1/2}‖_p."""
    mu = family.mesh.measure
    den = weighted_lp_norm(np.sqrt(np.sum(F * F, axis=1)), mu, p)
    if den == 0:
        return 0.0
    return weighted_lp_norm(family.magnitude(family.edges(F)), mu, p) / den


def fixed_witness_ratio(mesh: ManifoldMesh, m: int, p: float, f: ArrayLike, times: Sequence[float]) -> float:
    """ℓ²-ratio of the constant sequence f_j = f at the given times, without refinement.

    Keeping f fixed across time ranges isolates the growth that comes from the
    range itself.
    """
    if math.isnan(p) or p < 1:
        raise DomainError(f"p must be >= 1, got {p}", parameter="p", value=p)
    if len(times) == 0:
        raise DomainError("need at least one time", parameter="times")
    column = np.asarray(f, dtype=float)
    F = np.repeat(column[:, None], len(times), axis=1)
    return l2_ratio(_Family(mesh, m, times), F, p)


def _refine(family: _Family, F: NDArray[np.float64], p: float) -> tuple[float, NDArray[np.float64]]:
    """Block nonlinear power iteration for the ℓ²-valued operator (F ↦ (T_j f_j)_j)."""
    mu = family.mesh.measure
    q = p / (p - 1.0)
    tol = DEFAULT_TOLERANCES.power_rtol
    F = F / weighted_lp_norm(np.sqrt(np.sum(F * F, axis=1)), mu, p)
    best, best_F = l2_ratio(family, F, p), F
    previous = 0.0
    for _ in range(DEFAULT_TOLERANCES.power_max_iter):
        edges = family.edges(F)
        G = family.magnitude(edges)
        value = weighted_lp_norm(G, mu, p)
        if value > best:
            best, best_F = value, F
        if value == 0 or abs(value - previous) <= tol * value:
            break
        previous = value
        with np.errstate(divide="ignore", invalid="ignore"):
            weight = np.where(G > 0, mu * G ** (p - 2.0), 0.0)[family.owner]
        Z = np.stack([rows.T @ (weight * g) for rows, g in zip(family.rows, edges)], axis=1)  # type: ignore[union-attr]
        size = np.sqrt(np.sum(Z * Z, axis=1))
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(size > 0, size ** (q - 2.0), 0.0)
        F = Z * scale[:, None]
        norm = weighted_lp_norm(np.sqrt(np.sum(F * F, axis=1)), mu, p)
        if norm == 0:
            break
        F = F / norm
    return best, best_F


def _draw(mesh: ManifoldMesh, rng: np.random.Generator, t_count: int, bumps: bool) -> NDArray[np.float64]:
    n = mesh.n_vertices
    if bumps:
        F = np.zeros((n, t_count))
        end_vertices = np.flatnonzero(mesh.end_id >= 0)
        F[rng.choice(end_vertices, size=t_count), np.arange(t_count)] = 1.0
        return F
    return rng.standard_normal((n, t_count))


def rbound_estimate(
    mesh: ManifoldMesh,
    m: int,
    p: float,
    t_count: int,
    trials: int,
    seed: int,
    *,
    t_range: tuple[float, float] = (100.0, 1.0e4),
    t_values: Sequence[float] | None = None,
    sign_samples: int | None = None,
) -> RBoundEstimate:
    """Max ℓ²-ratio over random draws of {t_j} and {f_j}, each refined by block power iteration.

    Trial i draws from the stream (seed, i): log-uniform t_j in ``t_range`` (or the
    fixed ``t_values``) and either bump translates (even i) or Gaussian fields
    (odd i). The Rademacher ratio 𝔼‖Σ ε_j T_j f_j‖_p / 𝔼‖Σ ε_j f_j‖_p is sampled
    for the best trial from the stream (seed, trials).
    """
    if trials < 1 or t_count < 1:
        raise DomainError("trials and t_count must be >= 1", parameter="trials", value=trials)
    if math.isnan(p) or p <= 1 or math.isinf(p):
        raise DomainError(f"p must lie in (1, ∞), got {p}", parameter="p", value=p)
    if t_values is not None and len(t_values) != t_count:
        raise DomainError("t_values must have t_count entries", parameter="t_values")
    samples = DEFAULT_TOLERANCES.sign_samples if sign_samples is None else sign_samples
    log_lo, log_hi = math.log(t_range[0]), math.log(t_range[1])

    ratios: list[float] = []
    times: list[tuple[float, ...]] = []
    best: tuple[float, _Family, NDArray[np.float64]] | None = None
    for i in range(trials):
        rng = derive_rng(seed, i)
        if t_values is None:
            ts = tuple(float(t) for t in np.exp(rng.uniform(log_lo, log_hi, size=t_count)))
        else:
            ts = tuple(float(t) for t in t_values)
        family = _Family(mesh, m, ts)
        ratio, F = _refine(family, _draw(mesh, rng, t_count, bumps=(i % 2 == 0)), p)
        ratios.append(ratio)
        times.append(ts)
        if best is None or ratio > best[0]:
            best = (ratio, family, F)
        logger.debug("R-bound trial %d: t=%s ratio=%.6g", i, ts, ratio)
    assert best is not None

    _, family, F = best
    rng = derive_rng(seed, trials)
    signs = rng.choice(np.array([-1.0, 1.0]), size=(samples, t_count))
    edges = family.edges(F)
    mu = mesh.measure
    num = den = 0.0
    for eps in signs:
        combined = sum(e * g for e, g in zip(eps, edges))
        num += weighted_lp_norm(family.magnitude([np.asarray(combined)]), mu, p)
        den += weighted_lp_norm(F @ eps, mu, p)
    rademacher = num / den if den > 0 else 0.0

    return RBoundEstimate(
        p=p,
        t_count=t_count,
        trials=trials,
        sign_samples=samples,
        best_ratio=max(ratios),
        rademacher_ratio=rademacher,
        trial_ratios=tuple(ratios),
        trial_times=tuple(times),
        seed=seed,
    )


def rbound_table(estimate: RBoundEstimate) -> list[dict[str, float | int]]:
    """Rows (trial, ratio) for CSV export."""
    return [{"trial": i, "ratio": r} for i, r in enumerate(estimate.trial_ratios)]
