"""Geometric multigrid for the shifted Laplacian.

Transfers use linear interpolation on coefficient indices with the same
fine/coarse pairing as the deflation operator (coarse m sits at fine 2m,
1-based). Coarse matrices are Galerkin products and the smoother is damped
Jacobi.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..linalg import DirectSolver
from .deflation import coarse_size

# stop coarsening once every direction has at most this many DOFs
COARSEST_SIZE = 32


def interpolation_1d(n_fine: int) -> sp.csr_matrix:
    """Linear interpolation from floor(n/2) coarse to n fine DOFs."""
    nc = coarse_size(n_fine)
    rows, cols, vals = [], [], []
    for c in range(nc):
        for off, w in ((-1, 0.5), (0, 1.0), (1, 0.5)):
            i = 2 * c + 1 + off
            if 0 <= i < n_fine:
                rows.append(i)
                cols.append(c)
                vals.append(w)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n_fine, nc))


def interpolation(grid_shape: tuple[int, ...]) -> sp.csr_matrix:
    if len(grid_shape) == 1:
        return interpolation_1d(grid_shape[0])
    nx, ny = grid_shape
    return sp.kron(interpolation_1d(ny), interpolation_1d(nx)).tocsr()


def damped_jacobi(M: sp.spmatrix, x: np.ndarray, b: np.ndarray, omega: float = 0.6,
                  steps: int = 1, diag: np.ndarray | None = None) -> np.ndarray:
    """``steps`` sweeps of x <- x + omega D^{-1} (b - M x)."""
    d = M.diagonal() if diag is None else diag
    if np.any(d == 0):
        raise ZeroDivisionError("Jacobi smoother needs a zero-free diagonal")
    for _ in range(steps):
        x = x + omega * (b - M @ x) / d
    return x


@dataclass
class Level:
    M: sp.csr_matrix
    grid_shape: tuple[int, ...]
    diag: np.ndarray
    Z: sp.csr_matrix | None = None  # interpolation from the next coarser level


@dataclass
class MGHierarchy:
    levels: list[Level]
    coarse_solver: DirectSolver = field(repr=False)

    @property
    def depth(self) -> int:
        return len(self.levels)


def build_hierarchy(M: sp.spmatrix, grid_shape: tuple[int, ...],
                    coarsest: int = COARSEST_SIZE, max_levels: int | None = None,
                    counters=None) -> MGHierarchy:
    """Galerkin hierarchy M_{l+1} = Z_l^T M_l Z_l down to the coarsest grid.

    ``max_levels=2`` gives a two-grid method.
    """
    M = sp.csr_matrix(M, dtype=complex)
    shape = tuple(grid_shape)
    levels = []
    while True:
        lev = Level(M, shape, M.diagonal())
        levels.append(lev)
        if max(shape) <= coarsest or (max_levels is not None and len(levels) >= max_levels):
            break
        if min(shape) < 3:
            break
        Z = interpolation(shape)
        lev.Z = Z
        M = (Z.T @ M @ Z).tocsr()
        shape = tuple(coarse_size(n) for n in shape)
    return MGHierarchy(levels, DirectSolver(levels[-1].M, counters, tag="mg_coarse"))


def _cycle(h: MGHierarchy, lvl: int, b: np.ndarray, x: np.ndarray, nu: int, omega: float):
    lev = h.levels[lvl]
    if lvl == h.depth - 1:
        return h.coarse_solver.solve(b)
    x = damped_jacobi(lev.M, x, b, omega, nu, lev.diag)
    r = b - lev.M @ x
    rc = lev.Z.T @ r
    ec = _cycle(h, lvl + 1, rc, np.zeros_like(rc), nu, omega)
    x = x + lev.Z @ ec
    return damped_jacobi(lev.M, x, b, omega, nu, lev.diag)


def mg_vcycle(h: MGHierarchy, b: np.ndarray, x0: np.ndarray | None = None, nu: int = 1,
              omega: float = 0.6, cycles: int = 1) -> np.ndarray:
    """Apply ``cycles`` V-cycles to M x = b with ``nu`` pre- and post-sweeps."""
    b = np.asarray(b, dtype=complex)
    x = np.zeros_like(b) if x0 is None else np.asarray(x0, dtype=complex).copy()
    for _ in range(cycles):
        x = _cycle(h, 0, b, x, nu, omega)
    return x


def two_grid_error(M: sp.spmatrix, Z: sp.spmatrix, nu: int = 1, omega: float = 0.6) -> np.ndarray:
    """Dense two-grid error propagation S^nu (I - Z M_c^{-1} Z^T M) S^nu.

    S = I - omega D^{-1} M is the damped Jacobi iteration matrix and
    M_c = Z^T M Z. Meant for small spectral studies.
    """
    Md = sp.csr_matrix(M, dtype=complex).toarray()
    Zd = sp.csr_matrix(Z).toarray()
    n = Md.shape[0]
    S = np.eye(n) - omega * Md / np.diag(Md)[:, None]
    C = np.eye(n) - Zd @ np.linalg.solve(Zd.T @ Md @ Zd, Zd.T @ Md)
    Sp = np.linalg.matrix_power(S, nu)
    return Sp @ C @ Sp


def two_grid_proxy(M: sp.spmatrix, grid_shape: tuple[int, ...], nu: int = 1,
                   omega: float = 0.6, counters=None):
    """Approximate inverse given by one two-grid cycle, ``(I - T) M^{-1}``.

    Returns a callable ``b -> x``; with ``nu = 0`` it reduces to
    ``Z M_c^{-1} Z^T``.
    """
    h = build_hierarchy(M, grid_shape, coarsest=0, max_levels=2, counters=counters)
    return lambda b: mg_vcycle(h, b, nu=nu, omega=omega)
