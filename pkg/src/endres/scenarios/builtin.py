"""Built-in scenarios: the acceptance checks of the library, one per concern.

Every scenario reads its thresholds from ``config.tolerances``; the constants
below only fix the geometry of auxiliary meshes.
"""

from __future__ import annotations

import logging
import math
from typing import Any

import numpy as np
from numpy.typing import NDArray

from endres.config import RunConfig
from endres.context import RunContext
from endres.maximal import (
    bump,
    dyadic_grid,
    fefferman_stein_ratio,
    fixed_witness_ratio,
    maximal,
    maximal_ratio,
    maximal_table,
    rbound_estimate,
    rbound_table,
    scalar_square_function,
    square_ratio,
    square_refinement,
    stein_domination_check,
    translate_family,
    weak11_values,
    window_family,
)
from endres.mesh import CENTER, EndSpec, ManifoldMesh, build_mesh, doubling_ratio
from endres.norms import build_norm_report, case_analysis, lower_bound_family, pnorm_bounds
from endres.parametrix import (
    closed_form_control,
    envelope_domination_check,
    key_lemma_exponents,
    key_lemma_solve,
    remainder_bound_check,
    tilde_functional_norm,
)
from endres.resolvent import (
    SpectralCalculus,
    horizontal_identity_check,
    point_kernel_comparison,
    resolvent_matrix,
    semigroup_representation_check,
    vertical_matrix,
)
from endres.scenarios.decorator import scenario
from endres.scenarios.types import Assertion, ScenarioResult

logger = logging.getLogger(__name__)

__all__ = ["config_mesh", "fit_grid", "full_grid", "end_of_min_dimension"]

# fine single-end meshes for the closed-form comparisons
_FINE_R_MIN = 0.25
_FINE_R_MAX = 128.0
_FINE_CELLS = 1024
_FINE_DIMENSIONS = (3, 4)
_FINE_KS = (0.05, 0.1, 0.5)
_FINE_VERTICAL_K = 0.1

_DOUBLING_R_MAX = 100.0
_DOUBLING_GRID_RATIO = 1.05


def config_mesh(config: RunConfig) -> ManifoldMesh:
    """The mesh described by ``config.mesh``."""
    ends = [
        EndSpec(n=e.n, r_max=e.r_max, cells=e.cells, cross_modes=e.cross_modes, r_min=e.r_min)
        for e in config.mesh.ends
    ]
    return build_mesh(ends, config.mesh.center_size)


def fit_grid(config: RunConfig, mesh: ManifoldMesh) -> NDArray[np.float64]:
    """Dyadic t-grid of the run, capped at (r_max/8)² of the shortest end."""
    grids = config.grids
    t_cap = (min(end.r_max for end in mesh.ends) / 8.0) ** 2
    return dyadic_grid(grids.t_min, min(grids.t_max, t_cap), grids.t_ratio)


def end_of_min_dimension(mesh: ManifoldMesh) -> int:
    return int(np.argmin([end.n for end in mesh.ends]))


def _fine_end(n: int) -> ManifoldMesh:
    return build_mesh([EndSpec(n=n, r_max=_FINE_R_MAX, cells=_FINE_CELLS, r_min=_FINE_R_MIN)], probe=True)


def _relative_gap(a: float, b: float) -> float:
    scale = max(abs(a), abs(b), np.finfo(float).tiny)
    return abs(a - b) / scale


# -----------------------------------------------------------------------------
# Kernels and identities
# -----------------------------------------------------------------------------


@scenario("kernel-closed-form", tags=["kernel"])
def kernel_closed_form(config: RunConfig, context: RunContext) -> ScenarioResult:
    """Discrete single-end kernels against the Euclidean point kernels."""
    tol = config.tolerances
    result = ScenarioResult("kernel-closed-form")
    rows: list[dict[str, Any]] = []
    for n in _FINE_DIMENSIONS:
        fine = _fine_end(n)
        for k in _FINE_KS:
            comparison = point_kernel_comparison(fine, k)
            result.check(Assertion.at_most(f"kernel n={n} k={k:g}", comparison.max_relative_gap, tol.kernel_rel))
            rows.extend(comparison.rows())
        comparison = point_kernel_comparison(fine, _FINE_VERTICAL_K, vertical=True)
        result.check(
            Assertion.at_most(
                f"vertical kernel n={n} k={_FINE_VERTICAL_K:g}", comparison.max_relative_gap, tol.vertical_rel
            )
        )
        rows.extend(comparison.rows())
    result.tables["kernel"] = rows
    return result


@scenario("identity-suite", tags=["kernel"])
def identity_suite(config: RunConfig, context: RunContext) -> ScenarioResult:
    """Horizontal identity, Gamma representation, row sums, symmetry and Stein domination."""
    tol = config.tolerances
    m = config.operator.m
    mesh = config_mesh(config)
    grid = fit_grid(config, mesh)
    calc = SpectralCalculus(mesh)
    result = ScenarioResult("identity-suite")
    rows: list[dict[str, Any]] = []

    for t, order in ((5.0, 1), (100.0, 3)):
        value = horizontal_identity_check(mesh, t, order)
        result.check(Assertion.at_most(f"horizontal identity t={t:g} m={order}", value, tol.identity))
        rows.append({"check": "horizontal_identity", "t": t, "m": order, "value": value})

    # m = 1 at the top of the spectrum needs the longer log rule
    for t, order, points in ((10.0, 3, tol.gamma_points), (float(grid[0]), 1, tol.quad_points)):
        value = semigroup_representation_check(mesh, t, order, points, calculus=calc)
        result.check(Assertion.at_most(f"gamma representation t={t:g} m={order} points={points}", value, tol.semigroup))
        rows.append({"check": "gamma_representation", "t": t, "m": order, "points": points, "value": value})

    t_top = float(grid[-1])
    row_sums = resolvent_matrix(mesh, t_top, m).apply(np.ones(mesh.n_vertices))
    value = float(np.max(np.abs(row_sums - 1.0)))
    result.check(Assertion.at_most(f"row sums t={t_top:g} m={m}", value, tol.residual))
    rows.append({"check": "row_sums", "t": t_top, "m": m, "value": value})

    f = 1.0 / (1.0 + mesh.radius)
    g = np.exp(-mesh.radius / 50.0)
    value = _relative_gap(mesh.inner(mesh.apply_laplacian(f), g), mesh.inner(f, mesh.apply_laplacian(g)))
    result.check(Assertion.at_most("laplacian symmetry", value, tol.symmetry))
    rows.append({"check": "laplacian_symmetry", "t": 0.0, "m": 0, "value": value})

    factor = config.grids.s_factor
    s_grid = dyadic_grid(float(grid[0]) / factor, float(grid[-1]) * factor)
    value = -math.inf
    for label, f_bump in translate_family(mesh, config.operator.bump_radii[:1]):
        gap = stein_domination_check(mesh, m, f_bump, grid, s_grid, calc)
        value = max(value, gap)
        rows.append({"check": f"stein {label}", "t": float(grid[-1]), "m": m, "value": gap})
    result.check(Assertion.at_most(f"stein domination m={m}", value, tol.stein))
    result.tables["identities"] = rows
    return result


# -----------------------------------------------------------------------------
# Norms
# -----------------------------------------------------------------------------


@scenario("gp-exponent", tags=["norms"], randomized=True)
def gp_exponent(config: RunConfig, context: RunContext) -> ScenarioResult:
    """Scaling slopes of ‖√t∇(I + tL)^{-m}‖_{p→p} against √t for every p of the grid."""
    tol = config.tolerances
    m = config.operator.m
    seed = context.seed or 0
    mesh = config_mesh(config)
    grid = fit_grid(config, mesh)
    n_star = mesh.n_star
    family_end = end_of_min_dimension(mesh)
    result = ScenarioResult("gp-exponent")
    rows: list[dict[str, Any]] = []
    for p in config.grids.p_grid:
        above = p > n_star
        with_family = above and math.isfinite(p)
        report = build_norm_report(mesh, m, p, grid, seed=seed, family_end=family_end if with_family else None)
        tolerance = tol.slope_growth if above else tol.slope_bounded
        result.check(Assertion.near(f"slope p={p:g}", report.fit.slope, report.target_slope, tolerance))
        if report.family_fit is not None:
            result.check(
                Assertion.near(f"family slope p={p:g}", report.family_fit.slope, report.target_slope, tol.slope_growth)
            )
        family = report.family if report.family is not None else np.full(len(grid), math.nan)
        for row, value in zip(report.rows(), family):
            row["family"] = float(value)
            rows.append(row)
    result.tables["norms"] = rows
    return result


@scenario("case-calculus", tags=["norms"])
def case_calculus(config: RunConfig, context: RunContext) -> ScenarioResult:
    """Case table of the separable term and an exhaustive scan for the impossible case."""
    tol = config.tolerances
    result = ScenarioResult("case-calculus")
    for p, expected in ((2.0, 0.5), (3.0, 0.0), (6.0, -0.5)):
        analysis = case_analysis(3, 3, p)
        result.check(Assertion.near(f"case (3,3,{p:g})", analysis.case, 2, tol.exact))
        result.check(Assertion.near(f"k exponent (3,3,{p:g})", analysis.k_exponent, expected, tol.identity))

    rows: list[dict[str, Any]] = []
    impossible = 0
    sign_errors = 0
    for n_i in range(3, 10):
        for n_j in range(3, 10):
            for p in np.linspace(1.0, 20.0, 200):
                analysis = case_analysis(n_i, n_j, float(p))
                impossible += analysis.impossible
                if analysis.case == 2 and (analysis.k_exponent >= 0) != (p <= n_j):
                    sign_errors += 1
            for p in (1.5, 2.0, 3.0, 4.0, 6.0):
                analysis = case_analysis(n_i, n_j, p)
                rows.append(
                    {
                        "n_i": n_i,
                        "n_j": n_j,
                        "p": p,
                        "alpha": analysis.alpha,
                        "beta": analysis.beta,
                        "case": analysis.case,
                        "k_exponent": analysis.k_exponent,
                    }
                )
    result.check(Assertion.at_most("case 1 occurrences", impossible, tol.exact))
    result.check(Assertion.at_most("case 2 sign flips away from p = n_j", sign_errors, tol.exact))
    result.tables["cases"] = rows
    return result


# -----------------------------------------------------------------------------
# Parametrix
# -----------------------------------------------------------------------------


@scenario("key-lemma", tags=["kernel", "parametrix"])
def key_lemma(config: RunConfig, context: RunContext) -> ScenarioResult:
    """Decay of u_i on each end and the k-uniform envelope dominations."""
    tol = config.tolerances
    grids = config.grids
    mesh = config_mesh(config)
    result = ScenarioResult("key-lemma")
    rows: list[dict[str, Any]] = []
    for i, end in enumerate(mesh.ends):
        k = grids.key_lemma_small_k
        r_hi = min(end.r_max / 4.0, grids.key_lemma_power_kr / k)
        u_slope, g_slope, _ = key_lemma_exponents(mesh, key_lemma_solve(mesh, i, k), grids.key_lemma_r_lo, r_hi)
        result.check(Assertion.near(f"|u| slope end {i}", u_slope, -(end.n - 2), tol.decay_exponent))
        result.check(Assertion.near(f"|grad u| slope end {i}", g_slope, -(end.n - 1), tol.decay_exponent))

        k = grids.key_lemma_large_k
        r_hi = min(end.r_max / 4.0, grids.key_lemma_decay_kr / k)
        _, _, rate = key_lemma_exponents(mesh, key_lemma_solve(mesh, i, k), grids.key_lemma_r_lo, r_hi)
        result.check(Assertion.at_most(f"exponential rate end {i} k={k:g}", rate, -tol.decay_rate * k))
        rows.append({"end": i, "n": end.n, "u_slope": u_slope, "gradient_slope": g_slope, "rate": rate})

    domination = envelope_domination_check(mesh, grids.k_grid)
    worst = max(domination.omega1_over_tilde, domination.k_omega2_over_tilde, domination.k_decay_over_n)
    result.check(Assertion.at_most("envelope domination", worst, domination.bound))
    result.tables["key_lemma"] = rows
    result.tables["functional"] = [
        {"p": p, "tilde_norm": tilde_functional_norm(mesh, p)} for p in grids.p_grid if math.isfinite(p) and p > 1
    ]
    return result


@scenario("remainder-envelopes", tags=["kernel", "parametrix"])
def remainder_envelopes(config: RunConfig, context: RunContext) -> ScenarioResult:
    """Envelope sup-ratios of the parametrix remainder over the k-grid for m = 1, 2."""
    tol = config.tolerances
    mesh = config_mesh(config)
    result = ScenarioResult("remainder-envelopes")
    rows: list[dict[str, Any]] = []
    for m in (1, 2):
        report = remainder_bound_check(
            mesh,
            config.grids.k_grid,
            m,
            decay_constants=tol.decay_constants,
            variation_limit=tol.envelope_variation,
        )
        result.check(Assertion.at_most(f"envelope spread m={m}", report.variation, tol.envelope_variation))
        for row in report.table():
            rows.append({"m": m, **row})

    # G₁ is compared on a fine free end of each dimension; the run mesh only sets which dimensions occur
    control = []
    for n in sorted({end.n for end in mesh.ends}):
        gap = closed_form_control(_fine_end(n), 0, _FINE_VERTICAL_K)
        result.check(Assertion.at_most(f"free-end control n={n}", gap, tol.g1_rel))
        control.append({"n": n, "k": _FINE_VERTICAL_K, "gap": gap})
    result.tables["remainder"] = rows
    result.tables["free_end_control"] = control
    return result


# -----------------------------------------------------------------------------
# Maximal operators
# -----------------------------------------------------------------------------


def full_grid(config: RunConfig, mesh: ManifoldMesh) -> NDArray[np.float64]:
    """Dyadic t-grid from ``grids.t_floor`` to the top of the fit grid.

    It reaches below the squared cell size of every bump, so single-vertex bumps
    on the geometric ends look alike at every radius.
    """
    grids = config.grids
    return dyadic_grid(grids.t_floor, float(fit_grid(config, mesh)[-1]), grids.t_ratio)


@scenario("maximal-weak11", tags=["maximal"])
def maximal_weak11(config: RunConfig, context: RunContext) -> ScenarioResult:
    """Weak-(1,1) quotients of the vertical and horizontal maximal functions over marching bumps."""
    tol = config.tolerances
    m = config.operator.m
    mesh = config_mesh(config)
    grid = fit_grid(config, mesh)
    family = translate_family(mesh, config.operator.bump_radii)
    labels = [label for label, _ in family]
    result = ScenarioResult("maximal-weak11")
    rows: list[dict[str, Any]] = []
    for kind in ("vertical", "horizontal"):
        values = weak11_values(mesh, kind, m, [f for _, f in family], grid)
        baseline = values[0]
        spread = max(max(values) / baseline, baseline / min(values))
        result.check(Assertion.at_most(f"{kind} weak-(1,1) spread", spread, tol.weak11_variation))
        if kind == "vertical":
            result.check(Assertion.at_most("vertical weak-(1,1) baseline", baseline, tol.weak11_bound))
        rows.extend({"kind": kind, "bump": label, "constant": value} for label, value in zip(labels, values))
    result.tables["weak11"] = rows
    return result


@scenario("maximal-growth", tags=["maximal"])
def maximal_growth(config: RunConfig, context: RunContext) -> ScenarioResult:
    """‖M f‖_p/‖f‖_p: stable under translation below n*, growing with the t-range above it."""
    tol = config.tolerances
    grids = config.grids
    m = config.operator.m
    mesh = config_mesh(config)
    grid = full_grid(config, mesh)
    t_hi = float(grid[-1])
    i_star = end_of_min_dimension(mesh)
    p_below, p_above = 2.0, mesh.n_star + 1.0
    result = ScenarioResult("maximal-growth")
    rows: list[dict[str, Any]] = []

    # the hub bump has a shape of its own; translation acts along the ends
    ratios = []
    for label, f in translate_family(mesh, config.operator.bump_radii, p_below, center=False):
        ratio = maximal_ratio(mesh, "vertical", m, f, p_below, grid)
        ratios.append(ratio)
        rows.append({"p": p_below, "bump": label, "t_max": t_hi, "ratio": ratio})
    spread = max(ratios) / min(ratios)
    result.check(Assertion.at_most(f"translation spread p={p_below:g}", spread, tol.maximal_stability))

    f = lower_bound_family(mesh, p_above, min(1.0, 1.0 / math.sqrt(t_hi)), i_star)
    by_range = []
    for t_max in (t_hi / 100.0, t_hi):
        ratio = maximal_ratio(mesh, "vertical", m, f, p_above, dyadic_grid(grids.t_floor, t_max, grids.t_ratio))
        by_range.append(ratio)
        rows.append({"p": p_above, "bump": f"family:{i_star}", "t_max": t_max, "ratio": ratio})
    growth = by_range[1] / by_range[0]
    result.check(Assertion.at_least(f"growth over two decades p={p_above:g}", growth, tol.maximal_growth))
    result.tables["maximal_growth"] = rows
    return result


@scenario("fefferman-stein", tags=["fefferman-stein"])
def fefferman_stein(config: RunConfig, context: RunContext) -> ScenarioResult:
    """Vector-valued maximal ratios over windows of J consecutive bumps."""
    tol = config.tolerances
    m = config.operator.m
    mesh = config_mesh(config)
    grid = fit_grid(config, mesh)
    i_star = end_of_min_dimension(mesh)
    r_start = config.operator.bump_radii[0]
    sizes = sorted(config.operator.family_sizes)
    result = ScenarioResult("fefferman-stein")
    rows: list[dict[str, Any]] = []
    for p in (2.0, mesh.n_star + 1.0):
        # below n* every bump must see its own scale; above it the large-t part carries the growth
        t_grid = full_grid(config, mesh) if p < mesh.n_star else grid
        ratios = []
        for size in sizes:
            ratio = fefferman_stein_ratio(mesh, m, window_family(mesh, i_star, r_start, size, p), p, t_grid)
            ratios.append(ratio)
            rows.append({"p": p, "J": size, "t_min": float(t_grid[0]), "ratio": ratio})
        if p < mesh.n_star:
            result.check(Assertion.at_most(f"J-stability p={p:g}", max(ratios) / ratios[0], tol.fs_stability))
        else:
            result.check(Assertion.at_least(f"J-growth p={p:g}", ratios[-1] / ratios[0], tol.fs_growth))

    single = window_family(mesh, i_star, r_start, 1, 2.0)
    gap = _relative_gap(
        fefferman_stein_ratio(mesh, m, single, 2.0, grid), maximal_ratio(mesh, "vertical", m, single[0], 2.0, grid)
    )
    result.check(Assertion.at_most("J=1 reduces to the maximal ratio", gap, tol.identity))
    result.tables["fefferman_stein"] = rows
    return result


@scenario("exp-vertical", tags=["maximal"])
def exp_vertical(config: RunConfig, context: RunContext) -> ScenarioResult:
    """Heat-semigroup vertical maximal function next to the resolvent one (reported only)."""
    m = config.operator.m
    mesh = config_mesh(config)
    grid = fit_grid(config, mesh)
    f = bump(mesh, CENTER)
    result = ScenarioResult("exp-vertical")
    for kind in ("vertical", "exp_vertical"):
        result.tables[kind] = maximal_table(mesh, maximal(mesh, kind, m, f, grid))
    return result


# -----------------------------------------------------------------------------
# Square functions and R-bounds
# -----------------------------------------------------------------------------


def _spectral_square_constant(calc: SpectralCalculus, m: int, grid: NDArray[np.float64]) -> float:
    """sup over nonzero eigenvalues of the grid quadrature of ∫ tλ(1 + tλ)^{-2m} dt/t, square-rooted."""
    lam = calc.eigenvalues
    positive = lam[lam > 1e-12 * lam[-1]]
    return max(scalar_square_function(float(v), math.sqrt(float(v)), m, grid) for v in positive)


@scenario("square-rbound", tags=["square", "rbound"], randomized=True)
def square_rbound(config: RunConfig, context: RunContext) -> ScenarioResult:
    """Square-function refinement, ℓ²-ratio stability at p = 2 and growth above n*."""
    tol = config.tolerances
    op = config.operator
    m = op.m
    seed = context.seed or 0
    mesh = config_mesh(config)
    grid = fit_grid(config, mesh)
    t_lo, t_hi = float(grid[0]), float(grid[-1])
    p_above = mesh.n_star + 1.0
    result = ScenarioResult("square-rbound")

    f = context.rng(0).standard_normal(mesh.n_vertices)
    norms = square_refinement(mesh, m, f, t_lo, t_hi)
    result.check(Assertion.at_most("square refinement spread", max(norms) / min(norms), tol.square_stability))
    calc = SpectralCalculus(mesh)
    constant_m = _spectral_square_constant(calc, m, grid)
    constant_next = _spectral_square_constant(calc, m + 1, grid)
    s_ratio = square_ratio(mesh, m, f, 2.0, grid)
    result.check(Assertion.at_most("square p=2 over spectral constant", s_ratio / constant_m, tol.square_stability))

    estimate = rbound_estimate(mesh, m, 2.0, op.t_count, op.trials, seed, t_range=(t_lo, t_hi))
    spread = max(estimate.trial_ratios) / min(estimate.trial_ratios)
    result.check(Assertion.at_most("l2-ratio spread p=2", spread, tol.rbound_stability))
    repeat = rbound_estimate(mesh, m, 2.0, op.t_count, op.trials, seed, t_range=(t_lo, t_hi))
    drift = float(np.max(np.abs(np.subtract(estimate.trial_ratios, repeat.trial_ratios))))
    result.check(Assertion.at_most("l2-ratio reproducible", drift, tol.exact))
    result.check(
        Assertion.at_most(
            "l2-ratio over square constants", estimate.best_ratio / (constant_m + constant_next), tol.ressf_constant
        )
    )

    # one witness for both ranges, so only the range of t changes
    witness = lower_bound_family(mesh, p_above, min(1.0, 1.0 / math.sqrt(t_hi)), end_of_min_dimension(mesh))
    growth_rows = []
    for t_max in (t_hi / 100.0, t_hi):
        times = [float(t) for t in np.geomspace(config.grids.t_floor, t_max, op.t_count)]
        ratio = fixed_witness_ratio(mesh, m, p_above, witness, times)
        growth_rows.append({"t_max": t_max, "ratio": ratio})
    growth = growth_rows[1]["ratio"] / growth_rows[0]["ratio"]
    result.check(Assertion.at_least(f"l2-ratio growth p={p_above:g}", growth, tol.rbound_growth))

    single = rbound_estimate(mesh, m, p_above, 1, 1, seed, t_values=[t_hi])
    lower = pnorm_bounds(vertical_matrix(mesh, t_hi, m), p_above, seed=seed).lower
    gap = _relative_gap(single.best_ratio, lower)
    result.check(Assertion.at_most("single-operator consistency", gap, tol.rbound_consistency))

    result.tables["square"] = [{"level": j, "norm": value} for j, value in enumerate(norms)]
    result.tables["rbound"] = rbound_table(estimate)
    result.tables["rbound_growth"] = growth_rows
    return result


# -----------------------------------------------------------------------------
# Geometry
# -----------------------------------------------------------------------------


def _doubling_mesh(n_second: int, r_max: float) -> ManifoldMesh:
    cells = int(math.ceil(math.log(r_max) / math.log(_DOUBLING_GRID_RATIO)))
    return build_mesh([EndSpec(n=3, r_max=r_max, cells=cells), EndSpec(n=n_second, r_max=r_max, cells=cells)])


@scenario("doubling", tags=["kernel"])
def doubling(config: RunConfig, context: RunContext) -> ScenarioResult:
    """Doubling ratio stable for equal end dimensions and growing with r_max otherwise."""
    tol = config.tolerances
    result = ScenarioResult("doubling")
    rows: list[dict[str, Any]] = []
    for n_second in (3, 4):
        values = []
        for r_max in (_DOUBLING_R_MAX, 2.0 * _DOUBLING_R_MAX):
            value = doubling_ratio(_doubling_mesh(n_second, r_max))
            values.append(value)
            rows.append({"ends": f"3,{n_second}", "r_max": r_max, "doubling_ratio": value})
        growth = values[1] / values[0]
        if n_second == 3:
            result.check(Assertion.at_most("doubling stability ends (3,3)", growth, tol.doubling_stability))
        else:
            result.check(Assertion.at_least("doubling growth ends (3,4)", growth, tol.doubling_growth))
    result.tables["doubling"] = rows
    return result
