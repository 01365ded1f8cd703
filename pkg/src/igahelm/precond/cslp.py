"""Complex shifted Laplace preconditioner.

The shifted operator is ``M = A + i beta2 K``, with ``K`` either the
k^2-weighted mass matrix (``shift="mass"``, the Galerkin image of k^2 u) or
``k^2 I`` (``shift="identity"``). Its inverse is applied exactly by sparse
LU or approximately by multigrid V-cycles.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..linalg import DirectSolver, LinearOperator
from .multigrid import build_hierarchy, mg_vcycle


@dataclass(frozen=True)
class CslpSpec:
    beta2: float = 1.0
    inversion: str = "exact"  # "exact" or "vcycles"
    cycles: int = 1
    nu: int = 1
    omega: float = 0.6
    shift: str = "mass"

    def __post_init__(self):
        if self.inversion not in ("exact", "vcycles"):
            raise ValueError(f"unknown CSLP inversion {self.inversion!r}")
        if self.shift not in ("mass", "identity"):
            raise ValueError(f"unknown CSLP shift {self.shift!r}")
        if self.inversion == "vcycles" and self.cycles < 1:
            raise ValueError("at least one V-cycle is required")


def shifted_matrix(system, spec: CslpSpec) -> sp.csr_matrix:
    """A + i beta2 K on the retained DOFs."""
    if spec.shift == "mass":
        K = system.K2_retained
    else:
        K = (system.k ** 2) * sp.identity(system.n, format="csr")
    return (system.A + 1j * spec.beta2 * K).tocsr()


def build_cslp(system, spec: CslpSpec, counters: Counter | None = None) -> LinearOperator:
    """Operator applying the (approximate) inverse of the shifted matrix."""
    counters = counters if counters is not None else Counter()
    M = shifted_matrix(system, spec)
    if spec.inversion == "exact":
        lu = DirectSolver(M, counters, tag="cslp")
        apply = lu.solve
    else:
        h = build_hierarchy(M, system.grid_shape, counters=counters)

        def apply(b: np.ndarray) -> np.ndarray:
            return mg_vcycle(h, b, nu=spec.nu, omega=spec.omega, cycles=spec.cycles)
    op = LinearOperator(system.n, apply, tag="M_inv", counters=counters)
    op.shifted = M
    return op
