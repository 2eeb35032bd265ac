"""Maximal functions, square functions and R-bound estimates."""

from __future__ import annotations

from endres.maximal.operators import (
    MaximalKind,
    MaximalResult,
    bump,
    dyadic_grid,
    fefferman_stein_ratio,
    horizontal_maximal,
    maximal,
    maximal_ratio,
    maximal_table,
    resolvent_iterates,
    stein_domination_check,
    translate_family,
    vertical_maximal,
    weak11_constant,
    weak11_values,
    weak_type_quotient,
    window_family,
)
from endres.maximal.rbound import RBoundEstimate, fixed_witness_ratio, l2_ratio, rbound_estimate, rbound_table
from endres.maximal.square import (
    SquareResult,
    log_cell_weights,
    scalar_square_function,
    square_function,
    square_ratio,
    square_refinement,
)

__all__ = [
    "MaximalKind",
    "MaximalResult",
    "RBoundEstimate",
    "SquareResult",
    "bump",
    "dyadic_grid",
    "fefferman_stein_ratio",
    "fixed_witness_ratio",
    "horizontal_maximal",
    "l2_ratio",
    "log_cell_weights",
    "maximal",
    "maximal_ratio",
    "maximal_table",
    "rbound_estimate",
    "rbound_table",
    "resolvent_iterates",
    "scalar_square_function",
    "square_function",
    "square_ratio",
    "square_refinement",
    "stein_domination_check",
    "translate_family",
    "vertical_maximal",
    "weak11_constant",
    "weak11_values",
    "weak_type_quotient",
    "window_family",
]
