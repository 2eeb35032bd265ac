"""Dense spectral calculus of the mesh Laplacian.

``L`` is self-adjoint in L²(μ): with ``A = D^{-1/2} W D^{-1/2} = Q Λ Qᵀ`` the
functions ``φ_j = D^{-1/2} q_j`` are μ-orthonormal eigenfunctions and the
kernel of ``g(L)`` is ``Φ g(Λ) Φᵀ``. Used for heat kernels and as an
independent oracle for the solve-based resolvents; small meshes only.
"""

from __future__ import annotations

import logging
import math
from typing import Callable, Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg, special

from endres.config import DEFAULT_TOLERANCES
from endres.errors import DomainError
from endres.mesh import ManifoldMesh
from endres.resolvent.kernels import KernelMatrix, horizontal_matrix, resolvent_powers

logger = logging.getLogger(__name__)

__all__ = [
    "QuadratureRule",
    "SpectralCalculus",
    "gamma_quadrature",
    "resolvent_symbol",
    "horizontal_symbol",
    "heat",
    "semigroup_representation_check",
    "horizontal_identity_check",
]

QuadratureRule = Literal["log-trapezoid", "laguerre"]

MAX_SPECTRAL_VERTICES = 6000

# relative size of the neglected tail at the small-s end of the log rule
_LOG_RULE_TAIL = 1e-12
# the log rule stops at s = m + 32, where the Gamma density is negligible


def resolvent_symbol(lam: ArrayLike, t: float, m: int) -> NDArray[np.float64]:
    """(1 + tλ)^{-m}."""
    return (1.0 + t * np.asarray(lam, dtype=float)) ** (-m)


def horizontal_symbol(lam: ArrayLike, t: float, m: int) -> NDArray[np.float64]:
    """tλ (1 + tλ)^{-m}."""
    a = t * np.asarray(lam, dtype=float)
    return a * (1.0 + a) ** (-m)


def gamma_quadrature(
    m: int,
    quad_points: int,
    rule: QuadratureRule = "log-trapezoid",
    a_max: float = 1.0,
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Nodes s_i and weights w_i with Σ w_i e^{-s_i a} ≈ (1 + a)^{-m} for 0 ≤ a ≤ a_max.

    The weights include the Gamma density s^{m-1} e^{-s} / Γ(m). The log rule is a
    trapezoid in u = log s over a window that covers every rescaled mode
    (1 + a) s with a ≤ a_max.
    """
    if m < 1:
        raise DomainError(f"order must be >= 1, got {m}", parameter="m", value=m)
    if quad_points < 2:
        raise DomainError(f"need >= 2 quadrature points, got {quad_points}", parameter="quad_points")
    if rule == "laguerre":
        nodes, weights = special.roots_genlaguerre(quad_points, m - 1)
        return np.asarray(nodes), np.asarray(weights) / math.gamma(m)
    if rule != "log-trapezoid":
        raise DomainError(f"unknown quadrature rule {rule!r}", parameter="rule", value=rule)
    u_lo = math.log(_LOG_RULE_TAIL) / m - math.log1p(max(a_max, 0.0))
    u_hi = math.log(m + 32.0)
    u = np.linspace(u_lo, u_hi, quad_points)
    h = u[1] - u[0]
    nodes = np.exp(u)
    weights = h * np.exp(m * u - nodes - math.lgamma(m))
    weights[0] *= 0.5
    weights[-1] *= 0.5
    return nodes, weights


class SpectralCalculus:
    """Eigen-decomposition of L on a mesh and kernels of functions of L."""

    def __init__(self, mesh: ManifoldMesh) -> None:
        n = mesh.n_vertices
        if n > MAX_SPECTRAL_VERTICES:
            raise DomainError(
                f"spectral calculus is limited to {MAX_SPECTRAL_VERTICES} vertices, mesh has {n}",
                parameter="n_vertices",
                value=n,
            )
        self._mesh = mesh
        scale = 1.0 / np.sqrt(mesh.measure)
        sym = mesh.graph_laplacian.toarray() * scale[:, None] * scale[None, :]
        lam, q = linalg.eigh(0.5 * (sym + sym.T))
        self._eigenvalues = np.maximum(lam, 0.0)
        self._phi = q * scale[:, None]
        logger.debug("Spectral decomposition of %d vertices, lambda_max=%.4g", n, float(lam[-1]))

    @property
    def mesh(self) -> ManifoldMesh:
        return self._mesh

    @property
    def eigenvalues(self) -> NDArray[np.float64]:
        """Eigenvalues of L in ascending order, clipped at 0."""
        return self._eigenvalues

    @property
    def eigenfunctions(self) -> NDArray[np.float64]:
        """μ-orthonormal eigenfunctions as columns."""
        return self._phi

    def kernel_values(self, symbol: ArrayLike) -> NDArray[np.float64]:
        """Kernel Φ diag(g(λ)) Φᵀ for symbol values g(λ_j)."""
        g = np.asarray(symbol, dtype=float)
        values: NDArray[np.float64] = (self._phi * g[None, :]) @ self._phi.T
        return values

    def kernel(self, func: Callable[[NDArray[np.float64]], NDArray[np.float64]]) -> NDArray[np.float64]:
        return self.kernel_values(func(self._eigenvalues))

    def apply(self, symbol: ArrayLike, f: ArrayLike) -> NDArray[np.float64]:
        """g(L) f for symbol values g(λ_j), column-wise for 2-d f."""
        g = np.asarray(symbol, dtype=float)
        arr = np.asarray(f, dtype=float)
        mu = self._mesh.measure.reshape((-1,) + (1,) * (arr.ndim - 1))
        coeffs = self._phi.T @ (mu * arr)
        out: NDArray[np.float64] = self._phi @ (g.reshape((-1,) + (1,) * (arr.ndim - 1)) * coeffs)
        return out

    def resolvent_kernel(self, t: float, m: int) -> NDArray[np.float64]:
        if m == 0:
            return np.diag(1.0 / self._mesh.measure)
        return self.kernel_values(resolvent_symbol(self._eigenvalues, t, m))

    def horizontal_kernel(self, t: float, m: int) -> NDArray[np.float64]:
        return self.kernel_values(horizontal_symbol(self._eigenvalues, t, m))

    def heat_kernel(self, s: float) -> KernelMatrix:
        """Kernel of e^{-sL}."""
        if not math.isfinite(s) or s < 0:
            raise DomainError(f"heat time must be finite and >= 0, got {s}", parameter="s", value=s)
        values = self.kernel_values(np.exp(-s * self._eigenvalues))
        return KernelMatrix(values, self._mesh.measure, self._mesh.measure, "heat", 0, t=s)


def heat(mesh: ManifoldMesh, s: float, f: ArrayLike) -> NDArray[np.float64]:
    """e^{-sL} f computed spectrally."""
    calc = SpectralCalculus(mesh)
    return calc.apply(np.exp(-s * calc.eigenvalues), f)


def semigroup_representation_check(
    mesh: ManifoldMesh,
    t: float,
    m: int,
    quad_points: int | None = None,
    rule: QuadratureRule = "log-trapezoid",
    calculus: SpectralCalculus | None = None,
) -> float:
    """Max relative entry error between (I + tL)^{-m} and Σ w_i e^{-s_i tL}.

    The resolvent comes from sparse solves, the heat operators from the
    spectral decomposition; the error is normalized by the largest kernel entry.
    """
    quad_points = DEFAULT_TOLERANCES.quad_points if quad_points is None else quad_points
    if quad_points < 32:
        raise DomainError(f"need >= 32 quadrature points, got {quad_points}", parameter="quad_points")
    if t == 0:
        # both sides are the identity
        return 0.0
    calc = calculus or SpectralCalculus(mesh)
    lam = calc.eigenvalues
    nodes, weights = gamma_quadrature(m, quad_points, rule, a_max=t * float(lam[-1]))
    symbol = np.exp(-np.outer(t * lam, nodes)) @ weights
    approx = calc.kernel_values(symbol)
    exact = resolvent_powers(mesh, t, m)[m]
    return float(np.max(np.abs(approx - exact)) / np.max(np.abs(exact)))


def horizontal_identity_check(mesh: ManifoldMesh, t: float, m: int) -> float:
    """Componentwise backward error of tL (I + tL)^{-m} = (I + tL)^{-(m-1)} - (I + tL)^{-m}.

    ``tL`` is applied to the solve-based kernel ``K_m`` and compared with
    ``K_{m-1} - K_m`` and with ``horizontal_matrix``. Each entry's deviation is
    divided by ``t |L| |K_m| + |K_{m-1}| + |K_m|``, the size of the terms it is
    computed from, so the result stays at rounding level however stiff tL is.
    """
    if m < 1:
        raise DomainError(f"order must be >= 1, got {m}", parameter="m", value=m)
    if not math.isfinite(t) or t <= 0:
        raise DomainError(f"t must be finite and > 0, got {t}", parameter="t", value=t)
    powers = resolvent_powers(mesh, t, m)
    current, previous = powers[m], powers[m - 1]
    lhs = t * mesh.apply_laplacian(current)
    rhs = previous - current
    scale = t * (abs(mesh.laplacian) @ np.abs(current)) + np.abs(previous) + np.abs(current)
    scale = np.where(scale > 0, scale, 1.0)
    horizontal = horizontal_matrix(mesh, t, m).values
    identity = float(np.max(np.abs(lhs - rhs) / scale))
    assembled = float(np.max(np.abs(horizontal - lhs) / scale))
    return max(identity, assembled)
