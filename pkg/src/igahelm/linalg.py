"""Complex linear-algebra kernels: operators, GMRES, direct solves, spectra."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


class LinearOperator(spla.LinearOperator):
    """Matrix-free complex operator ``v -> apply(v)`` with a description tag.

    Thin wrapper over :class:`scipy.sparse.linalg.LinearOperator` that keeps a
    tag and counts applications in a shared :class:`collections.Counter`.
    """

    def __init__(self, n: int, apply, tag: str = "", counters: Counter | None = None):
        super().__init__(dtype=complex, shape=(n, n))
        self._apply = apply
        self.tag = tag
        self.counters = counters if counters is not None else Counter()

    def _matvec(self, v):
        self.counters[f"apply:{self.tag}"] += 1
        return self._apply(np.asarray(v, dtype=complex).ravel())

    def _matmat(self, V):
        return np.column_stack([self._matvec(V[:, j]) for j in range(V.shape[1])])


def as_operator(A, tag: str = "matrix", counters: Counter | None = None) -> LinearOperator:
    if isinstance(A, LinearOperator):
        return A
    return LinearOperator(A.shape[0], lambda v: A @ v, tag, counters)


@dataclass
class GmresReport:
    iterations: int
    relative_residuals: list[float]
    converged: bool
    solution: np.ndarray
    breakdown: bool = False
    counters: Counter = field(default_factory=Counter)


def gmres(op, rhs: np.ndarray, tol: float = 1e-7, max_it: int = 100,
          x0: np.ndarray | None = None, ref_norm: float | None = None) -> GmresReport:
    """Unrestarted GMRES with modified Gram-Schmidt Arnoldi.

    Converged when the residual of the system ``op x = rhs`` (estimated from
    the Arnoldi least-squares problem) drops below ``tol * ref_norm``, with
    ``ref_norm`` defaulting to ``||rhs||``.
    Iteration counts exclude the initial residual. A lucky breakdown is
    reported as convergence.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    apply = op.matvec if hasattr(op, "matvec") else (lambda v: op @ v)
    b = np.asarray(rhs, dtype=complex).ravel()
    n = b.size
    if not np.any(b):
        raise ValueError("right-hand side must be non-zero")
    bnorm = np.linalg.norm(b) if ref_norm is None else float(ref_norm)
    x = np.zeros(n, dtype=complex) if x0 is None else np.asarray(x0, dtype=complex).copy()
    r = b - apply(x) if x0 is not None else b.copy()
    beta = np.linalg.norm(r)
    history = [beta / bnorm]
    if history[0] <= tol:
        return GmresReport(0, history, True, x)

    m = min(max_it, n)
    V = np.zeros((m + 1, n), dtype=complex)
    H = np.zeros((m + 1, m), dtype=complex)
    cs = np.zeros(m, dtype=complex)
    sn = np.zeros(m, dtype=complex)
    g = np.zeros(m + 1, dtype=complex)
    g[0] = beta
    V[0] = r / beta
    breakdown = False
    j = 0
    for j in range(m):
        w = apply(V[j])
        for i in range(j + 1):
            H[i, j] = np.vdot(V[i], w)
            w = w - H[i, j] * V[i]
        H[j + 1, j] = np.linalg.norm(w)
        for i in range(j):
            t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
            H[i + 1, j] = -np.conj(sn[i]) * H[i, j] + cs[i] * H[i + 1, j]
            H[i, j] = t
        hjj, hj1 = H[j, j], H[j + 1, j]
        denom = np.hypot(abs(hjj), abs(hj1))
        if denom == 0.0:
            breakdown = True
            break
        cs[j] = abs(hjj) / denom
        sn[j] = (hjj / abs(hjj) if hjj != 0 else 1.0) * np.conj(hj1) / denom
        H[j, j] = cs[j] * hjj + sn[j] * hj1
        H[j + 1, j] = 0.0
        g[j + 1] = -np.conj(sn[j]) * g[j]
        g[j] = cs[j] * g[j]
        history.append(abs(g[j + 1]) / bnorm)
        if abs(hj1) <= 1e-14 * denom:
            breakdown = True
        if history[-1] <= tol or breakdown:
            break
        V[j + 1] = w / hj1
    k = len(history) - 1
    if k > 0:
        y = np.linalg.solve(np.triu(H[:k, :k]), g[:k])
        x = x + V[:k].T @ y
    converged = history[-1] <= tol or breakdown
    return GmresReport(k, history, bool(converged), x, breakdown)


class DirectSolver:
    """Sparse LU factorization reused across solves."""

    def __init__(self, A: sp.spmatrix, counters: Counter | None = None, tag: str = "lu"):
        A = sp.csc_matrix(A, dtype=complex)
        if A.shape[0] != A.shape[1]:
            raise ValueError("matrix must be square")
        try:
            self._lu = spla.splu(A)
        except RuntimeError as exc:
            raise np.linalg.LinAlgError(f"sparse LU failed: {exc}") from exc
        self.shape = A.shape
        self.counters = counters if counters is not None else Counter()
        self.tag = tag

    def solve(self, b: np.ndarray, trans: str = "N") -> np.ndarray:
        self.counters[f"solve:{self.tag}"] += 1
        return self._lu.solve(np.asarray(b, dtype=complex), trans=trans)


def sparse_lu_solve(A: sp.spmatrix, b: np.ndarray) -> np.ndarray:
    return DirectSolver(A).solve(b)


def _action(op):
    if hasattr(op, "matvec"):
        return op.matvec
    if callable(op):
        return op
    return lambda v: op @ v


def materialize(op, n: int) -> np.ndarray:
    """Dense matrix of an operator (matrix, LinearOperator or callable)."""
    apply = _action(op)
    out = np.empty((n, n), dtype=complex)
    e = np.zeros(n, dtype=complex)
    for j in range(n):
        e[j] = 1.0
        out[:, j] = apply(e)
        e[j] = 0.0
    return out


def dense_eigenvalues(op, n: int, cap: int = 4000) -> np.ndarray:
    """All eigenvalues of an operator small enough to store densely."""
    if n > cap:
        raise MemoryError(f"dimension {n} exceeds the dense eigenvalue cap {cap}")
    if sp.issparse(op):
        return np.linalg.eigvals(op.toarray())
    return np.linalg.eigvals(materialize(op, n))
