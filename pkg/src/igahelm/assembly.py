"""Galerkin assembly of the Helmholtz system on a spline space.

The discrete operator represents -Laplace - k^2 with Robin edges:

    A = S - K2 - i k N

where S is the stiffness matrix, K2 the k^2-weighted mass matrix and N the
boundary mass matrix of the Robin edges. Dirichlet DOFs are removed from
the system and their data lifted to the right-hand side.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.io

from .problems import ModelProblem, WaveNumberField
from .spline import (
    ElementTables, SplineSpace, basis_and_derivs, build_open_uniform_knots, tensor_space,
)


def _assemble_1d(tab: ElementTables, n: int, local: np.ndarray, order=None) -> sp.csr_matrix:
    # local: (n_el, p+1, p+1) element matrices; ``order`` is the visiting order.
    # Triplets are merged in element-index order, so the sum is bitwise
    # independent of how the elements were visited.
    n_el, q1, _ = local.shape
    order = np.arange(n_el) if order is None else np.sort(np.asarray(order))
    a = np.arange(q1)
    rows = (tab.first[order, None, None] + a[None, :, None]) + 0 * a[None, None, :]
    cols = (tab.first[order, None, None] + a[None, None, :]) + 0 * a[None, :, None]
    mat = sp.coo_matrix((local[order].ravel(), (rows.ravel(), cols.ravel())), shape=(n, n))
    return mat.tocsr()


def _local_stiffness_1d(tab: ElementTables) -> np.ndarray:
    return np.einsum("eq,eqa,eqb->eab", tab.weights, tab.derivs, tab.derivs)


def _local_mass_1d(tab: ElementTables, w: np.ndarray | None = None) -> np.ndarray:
    wq = tab.weights if w is None else tab.weights * w
    return np.einsum("eq,eqa,eqb->eab", wq, tab.values, tab.values)


def stiffness_1d(space: SplineSpace, axis: int = 0, order=None) -> sp.csr_matrix:
    tab = space.tables(axis)
    return _assemble_1d(tab, space.shape[axis], _local_stiffness_1d(tab), order)


def mass_1d(space: SplineSpace, axis: int = 0, weight: Callable | None = None,
            order=None) -> sp.csr_matrix:
    tab = space.tables(axis)
    w = None if weight is None else weight(tab.points)
    return _assemble_1d(tab, space.shape[axis], _local_mass_1d(tab, w), order)


def assemble_stiffness(space: SplineSpace) -> sp.csr_matrix:
    """Stiffness matrix (grad phi_i, grad phi_j), real symmetric."""
    if space.dim == 1:
        return stiffness_1d(space)
    Sx, Sy = stiffness_1d(space, 0), stiffness_1d(space, 1)
    Mx, My = mass_1d(space, 0), mass_1d(space, 1)
    # x-fastest numbering: global = j * nx + i  ->  kron(y-factor, x-factor)
    return (sp.kron(My, Sx) + sp.kron(Sy, Mx)).tocsr()


def _weighted_mass_2d(space: SplineSpace, weight: Callable) -> sp.csr_matrix:
    """Mass matrix with a weight sampled at the 2D Gauss points.

    Contributions are accumulated in a banded array indexed by
    (row_y, row_x, offset_y, offset_x), then converted to CSR.
    """
    tx, ty = space.tables(0), space.tables(1)
    nx, ny = space.shape
    p = space.p
    q1 = p + 1
    ne_x, ne_y = tx.first.size, ty.first.size
    band = np.zeros((ny, nx, 2 * p + 1, 2 * p + 1))
    # W[ey, ex, qy, qx]: weight times tensor quadrature weights
    W = weight(tx.points[None, :, None, :], ty.points[:, None, :, None])
    W = W * ty.weights[:, None, :, None] * tx.weights[None, :, None, :]
    # element e = (ey, ex) touches rows first + a = e + a in each direction
    for ay in range(q1):
        for by in range(q1):
            wy = W * (ty.values[:, :, ay] * ty.values[:, :, by])[:, None, :, None]
            # local[ey, ex, ax, bx]
            local = np.einsum("yxab,xbc,xbd->yxcd", wy, tx.values, tx.values, optimize=True)
            for ax in range(q1):
                for bx in range(q1):
                    band[ay:ay + ne_y, ax:ax + ne_x, by - ay + p, bx - ax + p] += local[:, :, ax, bx]
    jy, ix, dy, dx = np.meshgrid(np.arange(ny), np.arange(nx), np.arange(2 * p + 1),
                                 np.arange(2 * p + 1), indexing="ij")
    cy, cx = jy + dy - p, ix + dx - p
    ok = (cy >= 0) & (cy < ny) & (cx >= 0) & (cx < nx) & (band != 0.0)
    rows = (jy * nx + ix)[ok]
    cols = (cy * nx + cx)[ok]
    return sp.csr_matrix((band[ok], (rows, cols)), shape=(nx * ny, nx * ny))


def assemble_mass(space: SplineSpace, weight: WaveNumberField | Callable | None = None
                  ) -> sp.csr_matrix:
    """Mass matrix, optionally weighted.

    ``weight=None`` gives the plain mass matrix. A :class:`WaveNumberField`
    gives the k^2-weighted mass matrix (k(x, y)^2 phi_i phi_j); any other
    callable is used as the weight directly.
    """
    if isinstance(weight, WaveNumberField):
        field = weight
        if field.is_constant:
            return (field.base_k ** 2) * assemble_mass(space)
        weight = lambda x, y=None: field(x, y) ** 2  # noqa: E731
    if space.dim == 1:
        return mass_1d(space, 0, weight)
    if weight is None:
        return sp.kron(mass_1d(space, 1), mass_1d(space, 0)).tocsr()
    return _weighted_mass_2d(space, weight)


def _edge_dofs(space: SplineSpace, edge: str) -> np.ndarray:
    if space.dim == 1:
        return np.array([0 if edge == "left" else space.n_dof - 1])
    nx, ny = space.shape
    if edge == "left":
        return np.arange(ny) * nx
    if edge == "right":
        return np.arange(ny) * nx + nx - 1
    if edge == "bottom":
        return np.arange(nx)
    if edge == "top":
        return (ny - 1) * nx + np.arange(nx)
    raise ValueError(f"unknown edge {edge!r}")


def assemble_boundary_mass(space: SplineSpace, robin_edges=()) -> sp.csr_matrix:
    """Boundary mass matrix integrated over the Robin edges."""
    n = space.n_dof
    N = sp.csr_matrix((n, n))
    for edge in robin_edges:
        dofs = _edge_dofs(space, edge)
        if space.dim == 1:
            # point "integral": only the interpolatory end function is non-zero
            N = N + sp.csr_matrix(([1.0], ([dofs[0]], [dofs[0]])), shape=(n, n))
            continue
        axis = 0 if edge in ("bottom", "top") else 1
        trace = mass_1d(space, axis).tocoo()
        N = N + sp.csr_matrix((trace.data, (dofs[trace.row], dofs[trace.col])), shape=(n, n))
    return N.tocsr()


def assemble_load(space: SplineSpace, source=None) -> np.ndarray:
    """Load vector of a point source: f_i = phi_i(source)."""
    f = np.zeros(space.n_dof, dtype=complex)
    if source is None:
        return f
    if any(not 0.0 <= s <= 1.0 for s in source):
        raise ValueError(f"source point {source} outside the unit domain")
    kx = space.knots_per_dim[0]
    fx, vx, _ = basis_and_derivs(kx, source[0])
    ix = fx[0] + np.arange(kx.p + 1)
    if space.dim == 1:
        f[ix] = vx[0]
        return f
    ky = space.knots_per_dim[1]
    fy, vy, _ = basis_and_derivs(ky, source[1])
    iy = fy[0] + np.arange(ky.p + 1)
    f[(iy[:, None] * space.shape[0] + ix[None, :]).ravel()] = np.outer(vy[0], vx[0]).ravel()
    return f


@dataclass
class DiscreteSystem:
    """Assembled Helmholtz system after Dirichlet elimination.

    ``A`` and ``f`` live on the retained DOFs; the full-space matrices are
    kept for CSLP construction and post-processing.
    """

    problem: ModelProblem
    space: SplineSpace
    A: sp.csr_matrix
    f: np.ndarray
    retained: np.ndarray
    dirichlet: np.ndarray
    dirichlet_values: np.ndarray
    S: sp.csr_matrix
    M: sp.csr_matrix
    K2: sp.csr_matrix
    N: sp.csr_matrix

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def k(self) -> float:
        return self.problem.k

    @property
    def grid_shape(self) -> tuple[int, ...]:
        """Per-dimension counts of the retained DOFs (x first)."""
        if self.space.dim == 1:
            return (self.n,)
        d = self.problem.dirichlet_edges
        nx, ny = self.space.shape
        return (nx - ("left" in d) - ("right" in d), ny - ("bottom" in d) - ("top" in d))

    def restrict(self, mat: sp.spmatrix) -> sp.csr_matrix:
        r = self.retained
        return mat.tocsr()[r][:, r]

    @property
    def K2_retained(self) -> sp.csr_matrix:
        return self.restrict(self.K2)

    def embed(self, u_retained: np.ndarray) -> np.ndarray:
        """Full coefficient vector with Dirichlet values re-inserted."""
        u = np.zeros(self.space.n_dof, dtype=complex)
        u[self.retained] = u_retained
        u[self.dirichlet] = self.dirichlet_values
        return u


def _dirichlet_data(space: SplineSpace, problem: ModelProblem):
    vals = {}
    for edge in problem.dirichlet_edges:
        g = float(problem.dirichlet_value.get(edge, 0.0))
        for d in _edge_dofs(space, edge):
            # homogeneous data wins at corners shared with non-zero data
            vals[int(d)] = g if int(d) not in vals else min(vals[int(d)], g, key=abs)
    dofs = np.array(sorted(vals), dtype=int)
    return dofs, np.array([vals[d] for d in dofs], dtype=complex)


def build_system(problem: ModelProblem, n_elements: int, p: int) -> DiscreteSystem:
    kv = build_open_uniform_knots(n_elements, p)
    space = tensor_space(kv) if problem.dim == 1 else tensor_space(kv, kv)
    S = assemble_stiffness(space)
    M = assemble_mass(space)
    K2 = (problem.k ** 2) * M if problem.wave.is_constant else assemble_mass(space, problem.wave)
    N = assemble_boundary_mass(space, problem.robin_edges)
    A_full = (S - K2 - 1j * problem.k * N).astype(complex).tocsr()
    f_full = assemble_load(space, problem.source)

    dirichlet, g = _dirichlet_data(space, problem)
    retained = np.setdiff1d(np.arange(space.n_dof), dirichlet)
    A = A_full[retained][:, retained].tocsr()
    f = f_full[retained] - A_full[retained][:, dirichlet] @ g
    return DiscreteSystem(problem, space, A, f, retained, dirichlet, g, S, M, K2, N)


def export_matrix_market(path, mat: sp.spmatrix, comment: str = "") -> None:
    """Write a complex general MatrixMarket coordinate file."""
    scipy.io.mmwrite(str(path), sp.coo_matrix(mat, dtype=complex), comment=comment,
                     field="complex", symmetry="general")
