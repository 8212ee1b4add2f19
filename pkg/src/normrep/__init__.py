"""Frobenius-norm (FNR) and nuclear-norm (NNR) self-expressive representations."""

from .alm import AlmConfig, AlmTrace, alm_solve, equivalence_check_alm
from .closed_form import (exact_gaussian, fnr_exact, fnr_relaxed, nnr_relaxed,
                          relaxed_gaussian, select_k, shape_interaction,
                          solve_closed_form, solve_omega_fnr, solve_omega_nnr)
from .errors import (InfeasibleError, NormRepError, NumericalError, ValidationError,
                     ZeroMatrixError)
from .linalg import Tolerances, column_shrink, pinv, soft_threshold, svd
from .problem import ObjectiveSpec, Representation, objective_value

__all__ = [
    "AlmConfig", "AlmTrace", "alm_solve", "equivalence_check_alm",
    "exact_gaussian", "fnr_exact", "fnr_relaxed", "nnr_relaxed", "relaxed_gaussian",
    "select_k", "shape_interaction", "solve_closed_form", "solve_omega_fnr",
    "solve_omega_nnr", "InfeasibleError", "NormRepError", "NumericalError",
    "ValidationError", "ZeroMatrixError", "Tolerances", "column_shrink", "pinv",
    "soft_threshold", "svd", "ObjectiveSpec", "Representation", "objective_value",
]
