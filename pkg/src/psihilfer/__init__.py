"""Psi-Hilfer fractional calculus: operators on graded meshes, a hybrid FDE
solver, and numerical checks of comparison and extremal-solution results."""

__version__ = "0.1.0"

from psihilfer.errors import PsiHilferError
from psihilfer.expr import Expr, evaluate, parse
from psihilfer.extremal import (
    ExtremalConfig,
    comparison_bound,
    maximal_solution,
    minimal_solution,
    solve_perturbed,
    uniqueness_probe,
)
from psihilfer.grid import FractionalOrder, GradedMesh, GridFunction
from psihilfer.inequalities import (
    TouchpointCase,
    perturbed_super_solution,
    strict_comparison_check,
    touchpoint_derivative,
    verify_ml_identity,
)
from psihilfer.operators import (
    hilfer_derivative,
    integrate,
    psi_hilfer_derivative,
    psi_rl_integral,
    verify_inversion,
    verify_semigroup,
)
from psihilfer.psi import PsiFunction, make_custom, make_preset, parse_psi_spec
from psihilfer.solver import (
    ExistenceParams,
    HybridProblem,
    SolverConfig,
    estimate_params,
    existence_check,
    picard_step,
    residual,
    solve_picard,
)
from psihilfer.special import MittagLefflerParams, gamma_fn, mittag_leffler
from psihilfer.weighted import Order, weighted_compare, weighted_norm

__all__ = [
    "ExistenceParams",
    "Expr",
    "ExtremalConfig",
    "FractionalOrder",
    "GradedMesh",
    "GridFunction",
    "HybridProblem",
    "MittagLefflerParams",
    "Order",
    "PsiFunction",
    "PsiHilferError",
    "SolverConfig",
    "TouchpointCase",
    "comparison_bound",
    "estimate_params",
    "evaluate",
    "existence_check",
    "gamma_fn",
    "hilfer_derivative",
    "integrate",
    "make_custom",
    "make_preset",
    "maximal_solution",
    "minimal_solution",
    "mittag_leffler",
    "parse",
    "parse_psi_spec",
    "perturbed_super_solution",
    "picard_step",
    "psi_hilfer_derivative",
    "psi_rl_integral",
    "residual",
    "solve_perturbed",
    "solve_picard",
    "strict_comparison_check",
    "touchpoint_derivative",
    "uniqueness_probe",
    "verify_inversion",
    "verify_ml_identity",
    "verify_semigroup",
    "weighted_compare",
    "weighted_norm",
]
