"""Discrete resolvent, horizontal, vertical and heat operators on a mesh."""

from __future__ import annotations

from endres.resolvent.kernels import (
    FACTOR_CACHE_SIZE,
    KernelKind,
    KernelMatrix,
    PointKernelComparison,
    horizontal_matrix,
    k_resolvent_matrix,
    kernel_slice_table,
    point_kernel_comparison,
    resolvent_matrix,
    resolvent_powers,
    resolvent_solver,
    vertical_matrix,
)
from endres.resolvent.spectral import (
    QuadratureRule,
    SpectralCalculus,
    gamma_quadrature,
    heat,
    horizontal_identity_check,
    horizontal_symbol,
    resolvent_symbol,
    semigroup_representation_check,
)

__all__ = [
    "FACTOR_CACHE_SIZE",
    "KernelKind",
    "KernelMatrix",
    "PointKernelComparison",
    "QuadratureRule",
    "SpectralCalculus",
    "gamma_quadrature",
    "heat",
    "horizontal_identity_check",
    "horizontal_matrix",
    "horizontal_symbol",
    "k_resolvent_matrix",
    "kernel_slice_table",
    "point_kernel_comparison",
    "resolvent_matrix",
    "resolvent_powers",
    "resolvent_solver",
    "resolvent_symbol",
    "semigroup_representation_check",
    "vertical_matrix",
]
