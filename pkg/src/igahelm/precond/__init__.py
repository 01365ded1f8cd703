"""Preconditioners: deflation, complex shifted Laplacian, multigrid, composition."""
from .bezier import bernstein, bezier_stencil_weights, rational_bezier_eval
from .compose import ComposedOperator, SolveReport, compose, solve
from .cslp import CslpSpec, build_cslp, shifted_matrix
from .deflation import (
    DEFAULT_EPSILON, DeflationOperators, DeflationSpec, apply_Z_1d, apply_Zt_1d, build_deflation,
    deflation_matrix,
)
from .multigrid import (
    build_hierarchy, damped_jacobi, interpolation, mg_vcycle, two_grid_error, two_grid_proxy,
)
