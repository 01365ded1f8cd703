"""Isogeometric Helmholtz solvers with deflation and shifted-Laplace preconditioning."""
from .assembly import DiscreteSystem, build_system, export_matrix_market
from .problems import make_problem, mp1a, mp1b, mp2a, mp2b, resolution_for
from .spline import build_open_uniform_knots, tensor_space

__version__ = "0.1.0"
