"""Operator-norm estimates for kernel operators.

Every kernel is treated as a map ``f ↦ G(f)`` with ``G_x(f) = (Σ_{e∈x} (E μf)_e²)^{1/2}``
over rows ``E`` owned by vertices: for scalar kernels each vertex owns one row,
for vertical kernels a vertex owns the signed rows of its neighbour slots.
Norms at p ∈ {1, ∞} are exact Schur sums; in between the lower bound comes
from a nonlinear power iteration and the upper bound from interpolating the
endpoints.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Literal, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import stats

from endres.config import DEFAULT_TOLERANCES
from endres.context import derive_rng
from endres.errors import DomainError
from endres.mesh import ManifoldMesh, weighted_lp_norm
from endres.resolvent import KernelMatrix, vertical_matrix
from endres.specfun import japanese_bracket

logger = logging.getLogger(__name__)

__all__ = [
    "MixedMode",
    "PNormBounds",
    "CaseAnalysis",
    "ExponentFit",
    "NormReport",
    "mixed_norm",
    "offdiagonal_bounds",
    "pnorm_ratio",
    "pnorm_bounds",
    "lower_bound_family",
    "dual_exponent",
    "case_analysis",
    "exponent_fit",
    "target_slope",
    "build_norm_report",
]

MixedMode = Literal["L1x_LinfY", "LinfX_L1y"]


def dual_exponent(p: float) -> float:
    """p' with 1/p + 1/p' = 1."""
    if math.isnan(p) or p < 1:
        raise DomainError(f"p must be >= 1, got {p}", parameter="p", value=p)
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def _check_p(p: float) -> None:
    if math.isnan(p) or p < 1:
        raise DomainError(f"p must be >= 1, got {p}", parameter="p", value=p)


def mixed_norm(T: KernelMatrix, mode: MixedMode = "L1x_LinfY") -> float:
    """Schur mixed norm: sup_y Σ_x |T(x,y)| μ_x, or sup_x Σ_y |T(x,y)| μ_y."""
    a = np.abs(T.values)
    if mode == "L1x_LinfY":
        return float(np.max(T.row_measure @ a))
    if mode == "LinfX_L1y":
        return float(np.max(a @ T.col_measure))
    raise DomainError(f"unknown mixed-norm mode {mode!r}", parameter="mode", value=mode)


def offdiagonal_bounds(T: KernelMatrix, q: float) -> tuple[float, float]:
    """(‖T‖_{L¹→L^q}, ‖T‖_{L^{q'}→L^∞}) through the mixed L^q(x);L^∞(y) and L^∞(x);L^q(y) norms."""
    _check_p(q)
    a = np.abs(T.values)
    if math.isinf(q):
        return float(a.max()), float(a.max())
    scale = float(a.max()) or 1.0
    b = (a / scale) ** q
    one_to_q = scale * float(np.max(T.row_measure @ b)) ** (1.0 / q)
    q_to_inf = scale * float(np.max(b @ T.col_measure)) ** (1.0 / q)
    return one_to_q, q_to_inf


# -----------------------------------------------------------------------------
# p-norm bounds
# -----------------------------------------------------------------------------


def _rows(T: KernelMatrix) -> tuple[NDArray[np.float64], NDArray[np.int64]]:
    if T.edge_rows is not None and T.slot_owner is not None:
        return T.edge_rows, T.slot_owner
    return np.asarray(T.values), np.arange(T.shape[0], dtype=np.int64)


def _image(
    rows: NDArray[np.float64],
    owner: NDArray[np.int64],
    n_out: int,
    f: NDArray[np.float64],
    mu: NDArray[np.float64],
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    g = rows @ (mu * f)
    G = np.sqrt(np.bincount(owner, weights=g * g, minlength=n_out))
    return g, G


def pnorm_ratio(T: KernelMatrix, f: ArrayLike, p: float) -> float:
    """‖G(f)‖_p / ‖f‖_p for the operator of T (exact gradient norm for vertical kernels)."""
    _check_p(p)
    arr = np.asarray(f, dtype=float)
    rows, owner = _rows(T)
    _, G = _image(rows, owner, T.shape[0], arr, T.col_measure)
    denominator = weighted_lp_norm(arr, T.col_measure, p)
    if denominator == 0:
        return 0.0
    return weighted_lp_norm(G, T.row_measure, p) / denominator


@dataclass(frozen=True, eq=False)
class PNormBounds:
    """Lower and upper bounds for ‖T‖_{p→p} and the function attaining the lower bound."""

    p: float
    lower: float
    upper: float
    witness: NDArray[np.float64] | None = field(default=None, repr=False)
    iterations: int = 0


def _boyd(
    rows: NDArray[np.float64],
    owner: NDArray[np.int64],
    n_out: int,
    mu_out: NDArray[np.float64],
    mu_in: NDArray[np.float64],
    p: float,
    start: NDArray[np.float64],
    rtol: float,
    max_iter: int,
) -> tuple[float, NDArray[np.float64], int]:
    """Nonlinear power iteration for max ‖G(f)‖_p / ‖f‖_p, 1 < p < ∞."""
    tiny = np.finfo(float).tiny
    f = start / max(weighted_lp_norm(start, mu_in, p), tiny)
    ratio = 0.0
    best, best_f = 0.0, f
    for iteration in range(1, max_iter + 1):
        g, G = _image(rows, owner, n_out, f, mu_in)
        value = weighted_lp_norm(G, mu_out, p)
        if value > best:
            best, best_f = value, f
        if value == 0:
            return best, best_f, iteration
        if iteration > 1 and abs(value - ratio) <= rtol * value:
            return best, best_f, iteration
        ratio = value
        with np.errstate(divide="ignore", invalid="ignore"):
            weight = np.where(G > 0, mu_out * G ** (p - 2.0), 0.0)
        z = rows.T @ (weight[owner] * g)
        f = np.sign(z) * np.abs(z) ** (1.0 / (p - 1.0))
        norm = weighted_lp_norm(f, mu_in, p)
        if norm == 0:
            return best, best_f, iteration
        f = f / norm
    return best, best_f, max_iter


def pnorm_bounds(
    T: KernelMatrix,
    p: float,
    *,
    candidates: Sequence[ArrayLike] = (),
    seed: int = 0,
    key: Sequence[int] = (),
    restarts: int | None = None,
    rtol: float | None = None,
    max_iter: int | None = None,
) -> PNormBounds:
    """Bounds for ‖T‖_{p→p}.

    upper is the interpolant N₁^{1/p} N_∞^{1-1/p} of the Schur norms of |T| (or of
    the vertical majorant). lower is the best of the coordinate vectors, the
    supplied candidates, random functions, and nonlinear power iteration started
    from each of them; random draws come from the stream (seed, *key, restart).
    """
    _check_p(p)
    restarts = DEFAULT_TOLERANCES.power_restarts if restarts is None else restarts
    rtol = DEFAULT_TOLERANCES.power_rtol if rtol is None else rtol
    max_iter = DEFAULT_TOLERANCES.power_max_iter if max_iter is None else max_iter

    n1 = mixed_norm(T, "L1x_LinfY")
    n_inf = mixed_norm(T, "LinfX_L1y")
    rows, owner = _rows(T)
    n_out = T.shape[0]
    mu_out, mu_in = T.row_measure, T.col_measure

    if p == 1:
        return PNormBounds(p, n1, n1)
    if math.isinf(p):
        row_sums = np.abs(rows) @ mu_in
        e = int(np.argmax(row_sums))
        witness = np.sign(rows[e])
        lower = max(float(row_sums[e]), pnorm_ratio(T, witness, p))
        return PNormBounds(p, min(lower, n_inf), n_inf, witness)

    upper = n1 ** (1.0 / p) * n_inf ** (1.0 - 1.0 / p)

    # coordinate vectors: μ_y^{1-1/p} ‖V(·, y)‖_p
    V = np.abs(T.values)
    scale = float(V.max()) or 1.0
    col_norms = scale * ((mu_out @ (V / scale) ** p) ** (1.0 / p))
    coord = mu_in ** (1.0 - 1.0 / p) * col_norms
    y_best = int(np.argmax(coord))
    best = float(coord[y_best])
    witness = np.zeros(T.shape[1])
    witness[y_best] = 1.0

    starts: list[NDArray[np.float64]] = [np.ones(T.shape[1]), witness.copy()]
    starts.extend(np.asarray(c, dtype=float) for c in candidates)
    for r in range(restarts):
        rng = derive_rng(seed, *key, r)
        starts.append(rng.standard_normal(T.shape[1]))

    total_iterations = 0
    for start in starts:
        ratio = pnorm_ratio(T, start, p)
        if ratio > best:
            best, witness = ratio, start
        value, f, iterations = _boyd(rows, owner, n_out, mu_out, mu_in, p, start, rtol, max_iter)
        total_iterations += iterations
        if value > best:
            best, witness = value, f

    if best > upper * (1.0 + 1e-9):
        logger.warning("p-norm lower bound %.6g exceeds interpolation bound %.6g at p=%g", best, upper, p)
    return PNormBounds(p, min(best, upper), upper, witness, total_iterations)


def lower_bound_family(mesh: ManifoldMesh, p: float, k: float, i: int, c: float = 0.5) -> NDArray[np.float64]:
    """f = g^{p'/p} on end i, 0 elsewhere, ‖f‖_p = 1, with g(y) = ⟨d⟩^{2-n_i} e^{-ckd}.

    d = d(x_i°, y) is the distance from the anchor of end i; the bracket keeps g
    finite at the anchor. |f|^p is proportional to g^{p'}, so f attains Hölder
    equality against g.
    """
    _check_p(p)
    if p == 1:
        raise DomainError("the test family needs p > 1", parameter="p", value=p)
    if not math.isfinite(k) or not (0 < k <= 1):
        raise DomainError(f"k must lie in (0, 1], got {k}", parameter="k", value=k)
    if not 0 <= i < len(mesh.ends):
        raise DomainError(f"mesh has no end {i}", parameter="i", value=i)
    n_star = mesh.n_star
    if p < n_star:
        logger.warning("Test family at p=%g < n*=%d is not extremal", p, n_star)
    mask = mesh.end_id == i
    f = np.zeros(mesh.n_vertices)
    if math.isinf(p):
        f[mask] = 1.0
    else:
        d = mesh.anchor_distance[mask]
        g = japanese_bracket(d) ** (2.0 - mesh.ends[i].n) * np.exp(-c * k * d)
        f[mask] = g ** (1.0 / (p - 1.0))
    return f / weighted_lp_norm(f, mesh.measure, p)


# -----------------------------------------------------------------------------
# Exponent calculus
# -----------------------------------------------------------------------------


@dataclass(frozen=True)
class CaseAnalysis:
    """α/β case of the separable term and its total power of k.

    Boundary values α = 0 or β = 0 fall on the non-positive side; the exponent
    is continuous across both boundaries.
    """

    n_i: int
    n_j: int
    p: float
    alpha: float
    beta: float
    case: int
    k_exponent: float

    @property
    def impossible(self) -> bool:
        return self.case == 1


def case_analysis(n_i: int, n_j: int, p: float) -> CaseAnalysis:
    """α = -(n_i-1)p + n_i, β = -(n_j-2)p' + n_j and the k-exponent of the case they select.

    case 2 (α ≤ 0 < β): n_j/p - 1; case 3 (β ≤ 0 < α): n_i/p' with the leading k
    kept explicit; case 4 (α, β ≤ 0): 1. Case 1 (α, β > 0) cannot occur for
    n_i, n_j ≥ 3 and is reported with n_i/p' + n_j/p - 2.
    """
    _check_p(p)
    for name, value in (("n_i", n_i), ("n_j", n_j)):
        if value < 3:
            raise DomainError(f"{name} must be >= 3, got {value}", parameter=name, value=value)
    q = dual_exponent(p)
    alpha = -math.inf if math.isinf(p) else -(n_i - 1) * p + n_i
    beta = -math.inf if math.isinf(q) else -(n_j - 2) * q + n_j
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    inv_q = 0.0 if math.isinf(q) else 1.0 / q
    if alpha > 0 and beta > 0:
        case, exponent = 1, n_i * inv_q + n_j * inv_p - 2.0
        logger.warning("Case 1 reached for n_i=%d, n_j=%d, p=%g", n_i, n_j, p)
    elif beta > 0:
        case, exponent = 2, n_j * inv_p - 1.0
    elif alpha > 0:
        case, exponent = 3, n_i * inv_q
    else:
        case, exponent = 4, 1.0
    return CaseAnalysis(n_i, n_j, p, alpha, beta, case, exponent)


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    stderr: float
    intercept: float


def exponent_fit(t_grid: ArrayLike, values: ArrayLike) -> ExponentFit:
    """Least-squares slope of log(value) against log √t."""
    t = np.asarray(t_grid, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape or t.ndim != 1:
        raise DomainError("t_grid and values must be 1-d and of equal length", parameter="values")
    if t.size < 5:
        raise DomainError(f"need >= 5 grid points, got {t.size}", parameter="t_grid", value=int(t.size))
    if np.any(t <= 0) or t.max() / t.min() < 100.0 * (1.0 - 1e-12):
        raise DomainError("t_grid must be positive and span >= 2 decades", parameter="t_grid")
    if np.any(~np.isfinite(v)) or np.any(v <= 0):
        raise DomainError("values must be finite and > 0", parameter="values")
    x = 0.5 * np.log(t)
    y = np.log(v)
    if np.ptp(y) == 0:
        return ExponentFit(0.0, 0.0, float(y[0]))
    fit = stats.linregress(x, y)
    return ExponentFit(float(fit.slope), float(fit.stderr), float(fit.intercept))


def target_slope(n_star: int, p: float) -> float:
    """max(0, 1 - n*/p)."""
    return max(0.0, 1.0 - (0.0 if math.isinf(p) else n_star / p))


@dataclass(frozen=True, eq=False)
class NormReport:
    """p→p bounds of √t∇(I + tL)^{-m} over a t-grid with fitted slopes against √t."""

    p: float
    m: int
    n_star: int
    t_grid: NDArray[np.float64]
    lower: NDArray[np.float64]
    upper: NDArray[np.float64]
    fit: ExponentFit
    upper_fit: ExponentFit
    family: NDArray[np.float64] | None = None
    family_fit: ExponentFit | None = None

    @property
    def target_slope(self) -> float:
        return target_slope(self.n_star, self.p)

    def rows(self) -> list[dict[str, Any]]:
        return [
            {
                "t": float(t),
                "p": self.p,
                "lower": float(lo),
                "upper": float(up),
                "target_slope": self.target_slope,
                "fitted_slope": self.fit.slope,
                "stderr": self.fit.stderr,
            }
            for t, lo, up in zip(self.t_grid, self.lower, self.upper)
        ]


def build_norm_report(
    mesh: ManifoldMesh,
    m: int,
    p: float,
    t_grid: ArrayLike,
    *,
    seed: int = 0,
    family_end: int | None = None,
    decay_constant: float = 0.5,
) -> NormReport:
    """NormReport for one p; the slope is fitted on the lower bounds.

    With ``family_end`` the explicit test family on that end (k = 1/√t) is also
    applied at every t and its ratios are fitted separately.
    """
    t_values = np.asarray(t_grid, dtype=float)
    lower = np.zeros_like(t_values)
    upper = np.zeros_like(t_values)
    family = None if family_end is None or p == 1 else np.zeros_like(t_values)
    p_key = 0 if math.isinf(p) else int(round(1000 * p))
    for index, t in enumerate(t_values):
        V = vertical_matrix(mesh, float(t), m)
        candidates = []
        if family is not None and family_end is not None:
            k = min(1.0, 1.0 / math.sqrt(t))
            f = lower_bound_family(mesh, p, k, family_end, decay_constant)
            family[index] = pnorm_ratio(V, f, p)
            candidates.append(f)
        bounds = pnorm_bounds(V, p, candidates=candidates, seed=seed, key=(index, p_key))
        lower[index], upper[index] = bounds.lower, bounds.upper
        logger.debug("t=%g p=%g lower=%.6g upper=%.6g", t, p, bounds.lower, bounds.upper)
    return NormReport(
        p=p,
        m=m,
        n_star=mesh.n_star,
        t_grid=t_values,
        lower=lower,
        upper=upper,
        fit=exponent_fit(t_values, lower),
        upper_fit=exponent_fit(t_values, upper),
        family=family,
        family_fit=None if family is None else exponent_fit(t_values, family),
    )
