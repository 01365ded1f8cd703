"""Two-level deflation with the quadratic rational-Bezier transfer.

Fine DOFs are numbered j = 1..n and coarse DOFs m = 1..floor(n/2); coarse DOF
m sits at fine DOF 2m. The prolongation Z acts as

    even j:  (1/8) (c[(j-2)/2] + (6 - eps) c[j/2] + c[(j+2)/2])
    odd  j:  (1/2) (c[(j-1)/2] + c[(j+1)/2])

with coarse indices outside 1..floor(n/2) contributing zero. In 2D the
transfer is the Kronecker product of the 1D operators.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ..linalg import DirectSolver

# weight shift minimising GMRES iterations of D_eps on MP1B, k = 1e3, p = 2;
# see scripts/calibrate_epsilon.py
DEFAULT_EPSILON = 0.15


def coarse_size(n_fine: int) -> int:
    return n_fine // 2


def _check(n_coarse: int, n_fine: int) -> None:
    if n_coarse != coarse_size(n_fine):
        raise ValueError(f"coarse size {n_coarse} does not match fine size {n_fine}")


def apply_Z_1d(coarse: np.ndarray, epsilon: float = 0.0, n_fine: int | None = None,
               axis: int = -1) -> np.ndarray:
    """Prolongate along ``axis``; ``n_fine`` defaults to ``2 * n_coarse + 1``."""
    c = np.moveaxis(np.asarray(coarse), axis, -1)
    nc = c.shape[-1]
    n = 2 * nc + 1 if n_fine is None else n_fine
    _check(nc, n)
    pad = np.zeros(c.shape[:-1] + (nc + 3,), dtype=np.result_type(c, float))
    pad[..., 1:nc + 1] = c  # pad[t] = c[t - 1] (0-based coarse)
    out = np.empty(c.shape[:-1] + (n,), dtype=pad.dtype)
    n_even, n_odd = (n + 1) // 2, n // 2  # 0-based even / odd fine positions
    t = np.arange(n_even)
    out[..., 0::2] = 0.5 * (pad[..., t] + pad[..., t + 1])
    t = np.arange(n_odd)
    out[..., 1::2] = (pad[..., t] + (6.0 - epsilon) * pad[..., t + 1] + pad[..., t + 2]) / 8.0
    return np.moveaxis(out, -1, axis)


def apply_Zt_1d(fine: np.ndarray, epsilon: float = 0.0, axis: int = -1) -> np.ndarray:
    """Restrict along ``axis``: exact transpose of :func:`apply_Z_1d`."""
    f = np.moveaxis(np.asarray(fine), axis, -1)
    n = f.shape[-1]
    nc = coarse_size(n)
    pad = np.zeros(f.shape[:-1] + (n + 4,), dtype=np.result_type(f, float))
    pad[..., 1:n + 1] = f  # pad[i + 1] = f[i]
    c = np.arange(nc)
    # coarse c (0-based) gathers fine 2c-1 .. 2c+3 with weights 1, 4, 6-eps, 4, 1 (/8)
    out = (pad[..., 2 * c] + 4.0 * pad[..., 2 * c + 1] + (6.0 - epsilon) * pad[..., 2 * c + 2]
           + 4.0 * pad[..., 2 * c + 3] + pad[..., 2 * c + 4]) / 8.0
    return np.moveaxis(out, -1, axis)


def deflation_matrix_1d(n_fine: int, epsilon: float = 0.0) -> sp.csr_matrix:
    """Sparse n_fine x floor(n_fine/2) prolongation with the Bezier stencil."""
    nc = coarse_size(n_fine)
    rows, cols, vals = [], [], []
    for c in range(nc):
        centre = 2 * c + 1
        for off, w in ((-2, 0.125), (-1, 0.5), (0, (6.0 - epsilon) / 8.0), (1, 0.5), (2, 0.125)):
            i = centre + off
            if 0 <= i < n_fine:
                rows.append(i)
                cols.append(c)
                vals.append(w)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n_fine, nc))


def deflation_matrix(grid_shape: tuple[int, ...], epsilon: float = 0.0) -> sp.csr_matrix:
    """Prolongation for a tensor grid with x-fastest ordering."""
    if len(grid_shape) == 1:
        return deflation_matrix_1d(grid_shape[0], epsilon)
    nx, ny = grid_shape
    return sp.kron(deflation_matrix_1d(ny, epsilon), deflation_matrix_1d(nx, epsilon)).tocsr()


@dataclass(frozen=True)
class DeflationSpec:
    """Configuration of the deflation preconditioner."""

    epsilon: float = 0.0
    scheme: str = "quadratic-bezier"
    adjoint: str = "T"      # "H" swaps P^T for the conjugate transpose P^H

    def __post_init__(self):
        if self.adjoint not in ("T", "H"):
            raise ValueError(f"adjoint must be 'T' or 'H', got {self.adjoint!r}")


class DeflationOperators:
    """Z, the factorized coarse matrix E = Z^T A Z, and the projections.

    ``P = I - A Q`` with ``Q = Z E^{-1} Z^T``. The transpose is
    ``P^T = I - Q^T A^T``; coarse solves use the factorization of E.
    """

    def __init__(self, A: sp.spmatrix, grid_shape: tuple[int, ...], spec: DeflationSpec,
                 counters: Counter | None = None):
        if spec.scheme != "quadratic-bezier":
            raise ValueError(f"unsupported deflation scheme {spec.scheme!r}")
        n = A.shape[0]
        if int(np.prod(grid_shape)) != n:
            raise ValueError(f"grid {grid_shape} incompatible with operator size {n}")
        self.A = sp.csr_matrix(A)
        self.AT = self.A.T.tocsr() if spec.adjoint == "T" else self.A.conj().T.tocsr()
        self.grid_shape = tuple(grid_shape)
        self.spec = spec
        self.counters = counters if counters is not None else Counter()
        self.Z = deflation_matrix(self.grid_shape, spec.epsilon)
        self.E = (self.Z.T @ self.A @ self.Z).tocsc()
        self._E = DirectSolver(self.E, self.counters, tag="E")
        self.coarse_shape = tuple(coarse_size(m) for m in self.grid_shape)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def n_coarse(self) -> int:
        return self.Z.shape[1]

    def prolong(self, c: np.ndarray) -> np.ndarray:
        """Matrix-free Z c."""
        eps = self.spec.epsilon
        if len(self.grid_shape) == 1:
            return apply_Z_1d(c, eps, self.grid_shape[0])
        nx, ny = self.grid_shape
        cx, cy = self.coarse_shape
        u = apply_Z_1d(np.reshape(c, (cy, cx)), eps, nx, axis=1)
        return apply_Z_1d(u, eps, ny, axis=0).ravel()

    def restrict(self, v: np.ndarray) -> np.ndarray:
        """Matrix-free Z^T v."""
        eps = self.spec.epsilon
        if len(self.grid_shape) == 1:
            return apply_Zt_1d(v, eps)
        nx, ny = self.grid_shape
        u = apply_Zt_1d(np.reshape(v, (ny, nx)), eps, axis=1)
        return apply_Zt_1d(u, eps, axis=0).ravel()

    def apply_Q(self, v: np.ndarray) -> np.ndarray:
        return self.prolong(self._E.solve(self.restrict(v)))

    def apply_P(self, v: np.ndarray) -> np.ndarray:
        return v - self.A @ self.apply_Q(v)

    def apply_Pt(self, v: np.ndarray) -> np.ndarray:
        """(I - A Q)^T v = v - Z E^{-T} Z^T A^T v (conjugated for ``adjoint="H"``)."""
        w = self._E.solve(self.restrict(self.AT @ v), trans=self.spec.adjoint)
        return v - self.prolong(w)

    def apply_deflated(self, v: np.ndarray) -> np.ndarray:
        """P^T A v."""
        self.counters["matvec:A"] += 1
        return self.apply_Pt(self.A @ v)


def build_deflation(A: sp.spmatrix, spec: DeflationSpec, grid_shape: tuple[int, ...] | None = None,
                    counters: Counter | None = None) -> DeflationOperators:
    grid_shape = (A.shape[0],) if grid_shape is None else grid_shape
    return DeflationOperators(A, grid_shape, spec, counters)
