"""Parametrix ingredients of the resolvent on a manifold with ends.

On each end the resolvent is approximated by the Euclidean kernel cut off by
``φ_i(x) φ_i(y)`` (the G₁ term) plus a rank-one correction
``u_i(x) φ_i(y) G(x_i°, y)`` (the G₃ term) where ``u_i`` solves
``(L + k²) u_i = -L φ_i``. What is left of the exact discrete resolvent after
subtracting both terms is checked against products of the weight profiles
``ω_a(x, k) = ⟨d⟩^{-(n_i - a)} e^{-c k d}``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.sparse as sp
from numpy.typing import ArrayLike, NDArray
from scipy import stats
from scipy.sparse.linalg import splu

from endres.config import DEFAULT_TOLERANCES
from endres.errors import DomainError, SolverError
from endres.mesh import ManifoldMesh, free_end_mesh, gradient_magnitude, lp_norm, slot_differences
from endres.resolvent import KernelMatrix, k_resolvent_matrix, resolvent_powers
from endres.specfun import japanese_bracket, radial_resolvent_kernel

logger = logging.getLogger(__name__)

__all__ = [
    "CutoffProfile",
    "WeightProfile",
    "KeyLemmaSolution",
    "ParametrixTerms",
    "RemainderRow",
    "RemainderReport",
    "EnvelopeDomination",
    "key_lemma_solve",
    "key_lemma_exponents",
    "omega",
    "omega_value",
    "omega_tilde",
    "omega_n",
    "envelope_domination_check",
    "tilde_functional_norm",
    "parametrix_terms",
    "assemble_G1_G3",
    "remainder_bound_check",
    "closed_form_control",
]

EndKernel = Literal["discrete", "closed-form"]


def _check_k(k: float, *, allow_zero: bool = False) -> None:
    lower_ok = k >= 0 if allow_zero else k > 0
    if not math.isfinite(k) or not lower_ok or k > 1:
        raise DomainError(f"k must lie in (0, 1], got {k}", parameter="k", value=k)


@dataclass(frozen=True)
class CutoffProfile:
    """C² ramp φ(r): 0 for r ≤ a, 1 for r ≥ b, quintic smoothstep in between."""

    a: float = 2.0
    b: float = 4.0

    def __post_init__(self) -> None:
        if not (0 < self.a < self.b):
            raise DomainError(f"cutoff ramp needs 0 < a < b, got a={self.a}, b={self.b}", parameter="a", value=self.a)

    def __call__(self, r: ArrayLike) -> NDArray[np.float64]:
        x = np.clip((np.asarray(r, dtype=float) - self.a) / (self.b - self.a), 0.0, 1.0)
        return x**3 * (10.0 - 15.0 * x + 6.0 * x * x)

    def on_mesh(self, mesh: ManifoldMesh, i: int) -> NDArray[np.float64]:
        """φ_i as a vertex function: the ramp on end i, 0 on the center and other ends."""
        return np.where(mesh.end_id == i, self(mesh.radius), 0.0)

    def source(self, mesh: ManifoldMesh, i: int) -> NDArray[np.float64]:
        """v_i = -L φ_i."""
        return -mesh.apply_laplacian(self.on_mesh(mesh, i))


def omega_value(n: int, a: int, k: float, d: ArrayLike, c: float = 0.5) -> NDArray[np.float64]:
    """⟨d⟩^{-(n - a)} e^{-c k d} for points at distance d from the anchor of an end of dimension n."""
    dd = np.asarray(d, dtype=float)
    return japanese_bracket(dd) ** (-(n - a)) * np.exp(-c * k * dd)


@dataclass(frozen=True)
class WeightProfile:
    """Weight ω_a(x, k) with decay constant c."""

    a: int
    c: float = 0.5

    def __post_init__(self) -> None:
        if self.a not in (1, 2):
            raise DomainError(f"weight index must be 1 or 2, got {self.a}", parameter="a", value=self.a)
        if not (0 < self.c <= 1):
            raise DomainError(f"decay constant must lie in (0, 1], got {self.c}", parameter="c", value=self.c)

    def evaluate(self, mesh: ManifoldMesh, k: float) -> NDArray[np.float64]:
        _check_k(k, allow_zero=True)
        out = np.ones(mesh.n_vertices)
        d = mesh.anchor_distance
        for i, end in enumerate(mesh.ends):
            mask = mesh.end_id == i
            out[mask] = omega_value(end.n, self.a, k, d[mask], self.c)
        return out


def omega(mesh: ManifoldMesh, a: int, k: float, c: float = 0.5) -> NDArray[np.float64]:
    """ω_a(·, k) on every vertex; 1 on the center. k = 0 is the limiting profile."""
    return WeightProfile(a, c).evaluate(mesh, k)


def _bracket_power(mesh: ManifoldMesh, shift: int) -> NDArray[np.float64]:
    out = np.ones(mesh.n_vertices)
    d = mesh.anchor_distance
    for i, end in enumerate(mesh.ends):
        mask = mesh.end_id == i
        out[mask] = japanese_bracket(d[mask]) ** (shift - end.n)
    return out


def omega_tilde(mesh: ManifoldMesh) -> NDArray[np.float64]:
    """ω̃ = ⟨d⟩^{1 - n_i} on end i, 1 on the center."""
    return _bracket_power(mesh, 1)


def omega_n(mesh: ManifoldMesh) -> NDArray[np.float64]:
    """⟨d⟩^{-n_i} on end i, 1 on the center."""
    return _bracket_power(mesh, 0)


@dataclass(frozen=True)
class EnvelopeDomination:
    """Suprema over vertices and k of the three k-uniform envelope bounds."""

    omega1_over_tilde: float
    k_omega2_over_tilde: float
    k_decay_over_n: float
    bound: float

    @property
    def passed(self) -> bool:
        return max(self.omega1_over_tilde, self.k_omega2_over_tilde, self.k_decay_over_n) <= self.bound


def envelope_domination_check(mesh: ManifoldMesh, k_grid: ArrayLike, c: float = 0.5) -> EnvelopeDomination:
    """Check ω₁ ≤ Cω̃, k ω₂ ≤ Cω̃ and k⟨d⟩^{1-n}e^{-kd} ≤ C⟨d⟩^{-n} uniformly over k_grid.

    The bound reported is 1 + 1/(c e), the sup of k⟨d⟩e^{-ckd} over k ≤ 1.
    """
    tilde = omega_tilde(mesh)
    w_n = omega_n(mesh)
    d = mesh.anchor_distance
    r1 = r2 = r3 = 0.0
    for k in np.asarray(k_grid, dtype=float):
        r1 = max(r1, float(np.max(omega(mesh, 1, k, c) / tilde)))
        r2 = max(r2, float(np.max(k * omega(mesh, 2, k, c) / tilde)))
        decay = np.where(mesh.end_id >= 0, k * tilde * np.exp(-k * d), 0.0)
        r3 = max(r3, float(np.max(decay / w_n)))
    return EnvelopeDomination(r1, r2, r3, bound=1.0 + 1.0 / (c * math.e))


def tilde_functional_norm(mesh: ManifoldMesh, p: float) -> float:
    """‖ω̃‖_p ‖ω̃‖_{p'}: finite uniformly in r_max exactly when (n*)' < p < n*."""
    if math.isnan(p) or p <= 1 or math.isinf(p):
        raise DomainError(f"p must lie in (1, ∞), got {p}", parameter="p", value=p)
    q = p / (p - 1.0)
    tilde = omega_tilde(mesh)
    return lp_norm(mesh, tilde, p) * lp_norm(mesh, tilde, q)


@dataclass(frozen=True, eq=False)
class KeyLemmaSolution:
    """u_i solving (L + k²) u_i = v_i, its gradient and its k²-derivatives.

    ``orders[j] = (L + k²)^{-(j+1)} v_i`` equals ((-1)^j / j!) ∂^j_{k²} u_i.
    """

    end: int
    k: float
    u: NDArray[np.float64]
    gradient: NDArray[np.float64]
    source: NDArray[np.float64]
    residual: float
    orders: tuple[NDArray[np.float64], ...] = field(default=())


def key_lemma_solve(
    mesh: ManifoldMesh,
    i: int,
    k: float,
    cutoff: CutoffProfile | None = None,
    orders: int = 1,
) -> KeyLemmaSolution:
    """Solve (L + k²) u = -L φ_i with one step of iterative refinement."""
    _check_k(k)
    if not 0 <= i < len(mesh.ends):
        raise DomainError(f"mesh has no end {i}", parameter="i", value=i)
    cutoff = cutoff or CutoffProfile()
    v = cutoff.source(mesh, i)
    mu = mesh.measure
    system = (mesh.graph_laplacian + (k * k) * sp.diags(mu)).tocsc()
    try:
        lu = splu(system)
    except RuntimeError as e:
        raise SolverError(f"factorization of W + k²D failed at k={k}", cause=e) from e

    def solve(rhs: NDArray[np.float64]) -> NDArray[np.float64]:
        x = lu.solve(mu * rhs)
        correction = rhs - (mesh.apply_laplacian(x) + k * k * x)
        return np.asarray(x + lu.solve(mu * correction))

    solutions = [solve(v)]
    for _ in range(1, orders):
        solutions.append(solve(solutions[-1]))
    u = solutions[0]
    scale = max(float(np.max(np.abs(v))), np.finfo(float).tiny)
    residual = float(np.max(np.abs(mesh.apply_laplacian(u) + k * k * u - v))) / scale
    if not math.isfinite(residual) or residual > DEFAULT_TOLERANCES.residual:
        raise SolverError(f"key lemma residual {residual:.3g} at k={k}", residual=residual)
    logger.debug("Key lemma solve on end %d at k=%g: residual %.3g", i, k, residual)
    return KeyLemmaSolution(
        end=i,
        k=k,
        u=u,
        gradient=gradient_magnitude(mesh, u),
        source=v,
        residual=residual,
        orders=tuple(solutions),
    )


def key_lemma_exponents(
    mesh: ManifoldMesh,
    solution: KeyLemmaSolution,
    r_lo: float,
    r_hi: float,
) -> tuple[float, float, float]:
    """Fitted decay of u_i on its own end over [r_lo, r_hi].

    Returns (power slope of |u| vs r, power slope of |∇u| vs r, exponential
    rate: slope of log|u| vs r), r being the radius of the end.
    """
    verts = mesh.end_vertices(solution.end)
    r = mesh.radius[verts]
    u = np.abs(solution.u[verts])
    g = solution.gradient[verts]
    mask = (r >= r_lo) & (r <= r_hi) & (u > 1e-250) & (g > 1e-250)
    if np.count_nonzero(mask) < 5:
        raise DomainError(f"fewer than 5 vertices in [{r_lo}, {r_hi}]", parameter="r_lo", value=r_lo)
    log_r = np.log(r[mask])
    u_slope = stats.linregress(log_r, np.log(u[mask])).slope
    g_slope = stats.linregress(log_r, np.log(g[mask])).slope
    rate = stats.linregress(r[mask], np.log(u[mask])).slope
    return float(u_slope), float(g_slope), float(rate)


# -----------------------------------------------------------------------------
# G₁ and G₃
# -----------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ParametrixTerms:
    g1: KernelMatrix
    g3: KernelMatrix
    solutions: tuple[KeyLemmaSolution, ...]

    @property
    def total(self) -> NDArray[np.float64]:
        return np.asarray(self.g1.values + self.g3.values)


def _ring_eigenvalues(q: int) -> NDArray[np.float64]:
    h = 2.0 * math.pi / q
    return (2.0 - 2.0 * np.cos(2.0 * math.pi * np.arange(q) / q)) / h**2


def _closed_form_blocks(
    mesh: ManifoldMesh, i: int, k: float, m: int, verts: NDArray[np.int64]
) -> tuple[NDArray[np.float64], list[NDArray[np.float64]]]:
    """Radial Euclidean kernel of order m on end i and its columns of orders 1..m at the anchor x_i°."""
    end = mesh.ends[i]
    q = end.cross_modes
    r = mesh.radius[verts]
    s = mesh.mode[verts]
    block = np.zeros((len(verts), len(verts)))
    points = [np.zeros(len(verts)) for _ in range(m)]
    for mode_index, lam in enumerate(_ring_eigenvalues(q)):
        k_l = math.sqrt(k * k + lam)
        phase = np.cos(2.0 * math.pi * mode_index * (s[:, None] - s[None, :]) / q)
        block += phase * radial_resolvent_kernel(end.n, m, k_l, r[:, None], r[None, :])
        for j in range(m):
            points[j] += np.cos(2.0 * math.pi * mode_index * s / q) * radial_resolvent_kernel(
                end.n, j + 1, k_l, r, end.r_min
            )
    return block, points


def _discrete_blocks(
    mesh: ManifoldMesh, i: int, k: float, m: int
) -> tuple[NDArray[np.float64], list[NDArray[np.float64]]]:
    """Free-end discrete kernel of order m and its columns of orders 1..m at the anchor x_i°."""
    model = free_end_mesh(mesh, i)
    t = 1.0 / (k * k)
    powers = resolvent_powers(model.mesh, t, m)
    local = model.local_vertices
    block = t**m * powers[m][np.ix_(local, local)]
    points = [t ** (j + 1) * powers[j + 1][local, local[0]] for j in range(m)]
    return block, points


def parametrix_terms(
    mesh: ManifoldMesh,
    k: float,
    m: int,
    cutoff: CutoffProfile | None = None,
    end_kernel: EndKernel = "closed-form",
) -> ParametrixTerms:
    """G₁ and G₃ differentiated to order m.

    G₃ is the k²-derivative of the product u_i(x) G(x_i°, y) by the Leibniz rule,
    Σ_j G_{j+1}(x_i°, y) · (L + k²)^{-(m-j)} v_i(x).
    """
    _check_k(k)
    if m < 1:
        raise DomainError(f"order must be >= 1, got {m}", parameter="m", value=m)
    cutoff = cutoff or CutoffProfile()
    n = mesh.n_vertices
    g1 = np.zeros((n, n))
    g3 = np.zeros((n, n))
    solutions = []
    for i in range(len(mesh.ends)):
        verts = np.flatnonzero(mesh.end_id == i)
        phi = cutoff.on_mesh(mesh, i)[verts]
        if end_kernel == "discrete":
            block, points = _discrete_blocks(mesh, i, k, m)
        elif end_kernel == "closed-form":
            block, points = _closed_form_blocks(mesh, i, k, m, verts)
        else:
            raise DomainError(f"unknown end kernel {end_kernel!r}", parameter="end_kernel", value=end_kernel)
        g1[np.ix_(verts, verts)] = phi[:, None] * block * phi[None, :]

        solution = key_lemma_solve(mesh, i, k, cutoff, orders=m)
        solutions.append(solution)
        for j in range(m):
            u_part = solution.orders[m - 1 - j]
            g3[:, verts] += np.outer(u_part, phi * points[j])

    return ParametrixTerms(
        g1=KernelMatrix(g1, mesh.measure, mesh.measure, "remainder", m, t=1.0 / (k * k), k=k),
        g3=KernelMatrix(g3, mesh.measure, mesh.measure, "remainder", m, t=1.0 / (k * k), k=k),
        solutions=tuple(solutions),
    )


def assemble_G1_G3(
    mesh: ManifoldMesh,
    k: float,
    m: int,
    cutoff: CutoffProfile | None = None,
    end_kernel: EndKernel = "closed-form",
) -> KernelMatrix:
    """Kernel of G₁ + G₃ at order m."""
    terms = parametrix_terms(mesh, k, m, cutoff, end_kernel)
    return KernelMatrix(terms.total, mesh.measure, mesh.measure, "remainder", m, t=1.0 / (k * k), k=k)


# -----------------------------------------------------------------------------
# Remainder envelopes
# -----------------------------------------------------------------------------


@dataclass(frozen=True)
class RemainderRow:
    k: float
    sup_ratio: float
    gradient_sup_ratio: float


@dataclass(frozen=True)
class RemainderReport:
    """Envelope sup-ratios per k for the fitted decay constant c."""

    m: int
    c: float
    rows: tuple[RemainderRow, ...]
    variation_limit: float

    @property
    def variation(self) -> float:
        """Largest max/min spread of either ratio sequence over k."""
        spreads = []
        for values in ([r.sup_ratio for r in self.rows], [r.gradient_sup_ratio for r in self.rows]):
            spreads.append(max(values) / min(values))
        return max(spreads)

    @property
    def passed(self) -> bool:
        return self.variation <= self.variation_limit

    def table(self) -> list[dict[str, float]]:
        return [
            {"k": row.k, "sup_ratio": row.sup_ratio, "gradient_sup_ratio": row.gradient_sup_ratio, "c": self.c}
            for row in self.rows
        ]


def _accurate_zone(mesh: ManifoldMesh, fraction: float) -> NDArray[np.bool_]:
    zone = mesh.end_id < 0
    for i, end in enumerate(mesh.ends):
        zone |= (mesh.end_id == i) & (mesh.radius <= fraction * end.r_max)
    return zone


def remainder_bound_check(
    mesh: ManifoldMesh,
    k_grid: ArrayLike,
    m: int,
    *,
    cutoff: CutoffProfile | None = None,
    end_kernel: EndKernel = "discrete",
    decay_constants: tuple[float, ...] | None = None,
    variation_limit: float | None = None,
    zone_fraction: float = 0.25,
) -> RemainderReport:
    """Envelope sup-ratios of H = (L + k²)^{-m} - G₁ - G₃ over k_grid.

    The value ratio is sup |H| / (k^{-2(m-1)} ω₂ ⊗ ω₂) and the gradient ratio
    sup |∇_x H| / (k^{-2(m-1)} ω₁ ⊗ ω₂), both over vertices with r ≤ r_max/4.
    The decay constant c is the first candidate whose ratios vary by at most
    ``variation_limit`` over k; if none does, the one with the smallest spread.
    """
    ks = [float(k) for k in np.asarray(k_grid, dtype=float)]
    if not ks:
        raise DomainError("k_grid is empty", parameter="k_grid")
    for k in ks:
        _check_k(k)
    candidates = decay_constants or DEFAULT_TOLERANCES.decay_constants
    limit = DEFAULT_TOLERANCES.envelope_variation if variation_limit is None else variation_limit
    zone = _accurate_zone(mesh, zone_fraction)

    remainders = []
    for k in ks:
        exact = k_resolvent_matrix(mesh, k, m).values
        terms = parametrix_terms(mesh, k, m, cutoff, end_kernel)
        h = exact - terms.total
        grad = np.sqrt(np.maximum(_gradient_rows(mesh, h), 0.0))
        remainders.append((k, np.abs(h)[np.ix_(zone, zone)], grad[np.ix_(zone, zone)]))

    best: RemainderReport | None = None
    for c in candidates:
        rows = []
        for k, h_abs, g_abs in remainders:
            scale = k ** (-2.0 * (m - 1))
            w2 = omega(mesh, 2, k, c)[zone]
            w1 = omega(mesh, 1, k, c)[zone]
            rows.append(
                RemainderRow(
                    k=k,
                    sup_ratio=float(np.max(h_abs / (scale * np.outer(w2, w2)))),
                    gradient_sup_ratio=float(np.max(g_abs / (scale * np.outer(w1, w2)))),
                )
            )
        report = RemainderReport(m=m, c=c, rows=tuple(rows), variation_limit=limit)
        if report.passed:
            logger.info("Remainder envelopes bounded with c=%g (spread %.3g)", c, report.variation)
            return report
        if best is None or report.variation < best.variation:
            best = report
    assert best is not None
    logger.warning("No decay constant keeps the remainder envelopes within %g; best c=%g", limit, best.c)
    return best


def _gradient_rows(mesh: ManifoldMesh, kernel: NDArray[np.float64]) -> NDArray[np.float64]:
    # |∇_x K(·, y)|² column by column
    edges = slot_differences(mesh, kernel)
    out = np.zeros_like(kernel)
    np.add.at(out, mesh.slots[0], edges * edges)
    return out


def closed_form_control(mesh: ManifoldMesh, i: int, k: float, m: int = 1, r_lo: float = 2.0) -> float:
    """Max relative gap between the free-end discrete kernel and the radial Euclidean kernel.

    Compared over pairs of cross-state-0 vertices with r_lo ≤ r ≤ r_max/4.
    """
    _check_k(k)
    end = mesh.ends[i]
    model = free_end_mesh(mesh, i)
    r = model.mesh.radius
    rows = np.flatnonzero((model.mesh.mode == 0) & (r >= r_lo) & (r <= 0.25 * end.r_max))
    t = 1.0 / (k * k)
    discrete = t**m * resolvent_powers(model.mesh, t, m)[m][np.ix_(rows, rows)]
    block, _ = _closed_form_blocks(model.mesh, 0, k, m, rows)
    return float(np.max(np.abs(discrete - block) / block))
