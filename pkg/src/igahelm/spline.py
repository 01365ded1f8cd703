"""B-spline bases on open uniform knot vectors.

Univariate bases are evaluated with the Cox-de Boor recursion. Assembly works
with per-element tables (values and first derivatives at Gauss points) that
are computed once per space and cached.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


@dataclass(frozen=True, eq=False)
class KnotVector:
    """Open uniform knot vector on [0, 1].

    Attributes
    ----------
    knots : np.ndarray
        Non-decreasing knot values, first and last repeated ``p + 1`` times.
    p : int
        Polynomial order of the basis.
    n_elements : int
        Number of non-empty knot spans.
    """

    knots: np.ndarray
    p: int
    n_elements: int

    @property
    def h(self) -> float:
        return 1.0 / self.n_elements

    @property
    def n_basis(self) -> int:
        return self.n_elements + self.p

    def span_index(self, xi):
        """Element containing ``xi``; the right end belongs to the last span."""
        xi = np.asarray(xi, dtype=float)
        e = np.floor(xi * self.n_elements).astype(int)
        return np.clip(e, 0, self.n_elements - 1)

    def greville(self) -> np.ndarray:
        """Greville abscissae (knot averages), one per basis function."""
        t, p = self.knots, self.p
        return np.array([t[j + 1:j + p + 1].mean() for j in range(self.n_basis)])


def build_open_uniform_knots(n_elements: int, p: int) -> KnotVector:
    if n_elements < 1:
        raise ValueError(f"n_elements must be >= 1, got {n_elements}")
    if p < 1:
        raise ValueError(f"order p must be >= 1, got {p}")
    interior = np.arange(n_elements + 1) / n_elements
    knots = np.concatenate([np.zeros(p), interior, np.ones(p)])
    return KnotVector(knots=knots, p=p, n_elements=n_elements)


def _check_index(kv: KnotVector, j: int) -> None:
    if not 0 <= j < kv.n_basis:
        raise IndexError(f"basis index {j} out of range [0, {kv.n_basis})")


def _active_span(t: np.ndarray, xi: float) -> int:
    # half-open spans [t_s, t_{s+1}); xi at the right end goes to the last non-empty span
    if xi >= t[-1]:
        return int(np.flatnonzero(t[:-1] < t[1:])[-1])
    return int(np.searchsorted(t, xi, side="right") - 1)


def _cox_de_boor(t: np.ndarray, j: int, p: int, xi: float, s: int) -> float:
    if p == 0:
        return 1.0 if j == s else 0.0
    val = 0.0
    d1 = t[j + p] - t[j]
    if d1 > 0.0:
        val += (xi - t[j]) / d1 * _cox_de_boor(t, j, p - 1, xi, s)
    d2 = t[j + p + 1] - t[j + 1]
    if d2 > 0.0:
        val += (t[j + p + 1] - xi) / d2 * _cox_de_boor(t, j + 1, p - 1, xi, s)
    return val


def eval_basis(kv: KnotVector, j: int, xi: float) -> float:
    """Value of the ``j``-th (0-based) basis function at ``xi``.

    Direct recursive Cox-de Boor evaluation with 0/0 := 0. Slow; meant for
    pointwise use and as a reference for the tabulated evaluators.
    """
    _check_index(kv, j)
    xi = float(xi)
    if not 0.0 <= xi <= 1.0:
        return 0.0
    return _cox_de_boor(kv.knots, j, kv.p, xi, _active_span(kv.knots, xi))


def eval_basis_deriv(kv: KnotVector, j: int, xi: float) -> float:
    """First derivative of the ``j``-th basis function at ``xi``.

    Uses p * (phi_{j,p-1} / (t_{j+p} - t_j) - phi_{j+1,p-1} / (t_{j+p+1} - t_{j+1})).
    """
    _check_index(kv, j)
    t, p = kv.knots, kv.p
    lower = KnotVector(knots=t[1:-1], p=p - 1, n_elements=kv.n_elements)
    out = 0.0
    d1 = t[j + p] - t[j]
    if d1 > 0.0 and 0 <= j - 1 < lower.n_basis:
        out += p / d1 * eval_basis(lower, j - 1, xi)
    d2 = t[j + p + 1] - t[j + 1]
    if d2 > 0.0 and 0 <= j < lower.n_basis:
        out -= p / d2 * eval_basis(lower, j, xi)
    return out


def basis_and_derivs(kv: KnotVector, xi) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised evaluation of all non-zero basis functions at points ``xi``.

    Returns
    -------
    first : (m,) int array
        Index of the first non-zero basis function at each point.
    values, derivs : (m, p + 1) arrays
        Values and first derivatives of basis functions ``first .. first + p``.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    t, p = kv.knots, kv.p
    e = kv.span_index(xi)
    span = e + p  # index into t of the left knot of the span
    m = xi.size
    # triangular table N[:, r] for degrees 0..p (NURBS book A2.2, vectorised)
    ndu = np.zeros((p + 1, p + 1, m))
    ndu[0, 0] = 1.0
    left = np.zeros((p + 1, m))
    right = np.zeros((p + 1, m))
    for d in range(1, p + 1):
        left[d] = xi - t[span + 1 - d]
        right[d] = t[span + d] - xi
        saved = np.zeros(m)
        for r in range(d):
            ndu[d, r] = right[r + 1] + left[d - r]
            tmp = ndu[r, d - 1] / ndu[d, r]
            ndu[r, d] = saved + right[r + 1] * tmp
            saved = left[d - r] * tmp
        ndu[d, d] = saved
    values = ndu[:, p].T.copy()
    derivs = np.zeros_like(values)
    # derivative from the degree p-1 functions stored in column p-1
    for r in range(p + 1):
        acc = np.zeros(m)
        if r >= 1:
            acc += ndu[r - 1, p - 1] / ndu[p, r - 1]
        if r <= p - 1:
            acc -= ndu[r, p - 1] / ndu[p, r]
        derivs[:, r] = p * acc
    return span - p, values, derivs


def gauss_rule(p: int, n_points: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on the reference span [-1, 1].

    Defaults to ``p + 1`` points, exact for degree ``2p + 1``.
    """
    n = p + 1 if n_points is None else n_points
    return np.polynomial.legendre.leggauss(n)


@dataclass(frozen=True)
class ElementTables:
    """Basis data at the Gauss points of every element of a 1D space."""

    points: np.ndarray   # (n_el, q) physical quadrature points
    weights: np.ndarray  # (n_el, q) weights including the Jacobian
    first: np.ndarray    # (n_el,) first active basis index
    values: np.ndarray   # (n_el, q, p + 1)
    derivs: np.ndarray   # (n_el, q, p + 1)


def element_tables(kv: KnotVector, n_points: int | None = None) -> ElementTables:
    gx, gw = gauss_rule(kv.p, n_points)
    h = kv.h
    mid = (np.arange(kv.n_elements) + 0.5) * h
    pts = mid[:, None] + 0.5 * h * gx[None, :]
    w = np.broadcast_to(0.5 * h * gw, pts.shape).copy()
    first, vals, ders = basis_and_derivs(kv, pts.ravel())
    q = gx.size
    vals = vals.reshape(kv.n_elements, q, kv.p + 1)
    ders = ders.reshape(kv.n_elements, q, kv.p + 1)
    # basis data of element e is evaluated inside e, so first = e
    return ElementTables(pts, w, first.reshape(kv.n_elements, q)[:, 0], vals, ders)


@dataclass(frozen=True, eq=False)
class SplineSpace:
    """Tensor-product spline space on [0, 1]^dim, x-fastest DOF numbering."""

    knots_per_dim: tuple[KnotVector, ...]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return len(self.knots_per_dim)

    @property
    def shape(self) -> tuple[int, ...]:
        """Univariate basis counts ordered (nx, ny)."""
        return tuple(kv.n_basis for kv in self.knots_per_dim)

    @property
    def n_dof(self) -> int:
        return int(np.prod(self.shape))

    @property
    def p(self) -> int:
        return self.knots_per_dim[0].p

    def global_index(self, i: int, j: int = 0) -> int:
        return j * self.shape[0] + i

    def multi_index(self, g: int) -> tuple[int, ...]:
        if self.dim == 1:
            return (g,)
        nx = self.shape[0]
        return (g % nx, g // nx)

    def tables(self, axis: int = 0, n_points: int | None = None) -> ElementTables:
        key = (axis, n_points)
        if key not in self._cache:
            self._cache[key] = element_tables(self.knots_per_dim[axis], n_points)
        return self._cache[key]

    def evaluate(self, coeffs: np.ndarray, x, y=None) -> np.ndarray:
        """Evaluate the spline with coefficients ``coeffs`` at points."""
        kx = self.knots_per_dim[0]
        fx, vx, _ = basis_and_derivs(kx, x)
        idx_x = fx[:, None] + np.arange(kx.p + 1)
        if self.dim == 1:
            return np.sum(vx * coeffs[idx_x], axis=1)
        ky = self.knots_per_dim[1]
        fy, vy, _ = basis_and_derivs(ky, y)
        idx_y = fy[:, None] + np.arange(ky.p + 1)
        c = coeffs.reshape(self.shape[1], self.shape[0])  # [j, i]
        local = c[idx_y[:, :, None], idx_x[:, None, :]]
        return np.einsum("ma,mb,mab->m", vy, vx, local)

    @cached_property
    def boundary_dofs(self) -> np.ndarray:
        """DOFs whose basis function is non-zero on the boundary."""
        if self.dim == 1:
            return np.array([0, self.n_dof - 1])
        nx, ny = self.shape
        i, j = np.meshgrid(np.arange(nx), np.arange(ny))
        mask = (i == 0) | (i == nx - 1) | (j == 0) | (j == ny - 1)
        return np.flatnonzero(mask.ravel())


def tensor_space(kv_x: KnotVector, kv_y: KnotVector | None = None) -> SplineSpace:
    if kv_y is None:
        return SplineSpace((kv_x,))
    if kv_x.p != kv_y.p:
        raise ValueError("both directions must share the same order")
    return SplineSpace((kv_x, kv_y))
