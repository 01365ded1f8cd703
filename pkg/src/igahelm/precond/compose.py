"""Composition of deflation and CSLP into the operator handed to GMRES.

The preconditioned operator is ``B = P^T M^{-1} A`` (CSLP solve first, then
the deflation projection); either factor may be absent. Because ``P^T`` is
singular, the solution is split as ``x = Q f + P^T d`` where ``d`` solves

    P^T M^{-1} A d = P^T M^{-1} P f

from a zero initial guess. Since ``A P^T = P A``, ``d = P^T x`` is a solution,
so the recovered ``x`` is the solution of ``A x = f``. This is the same
Krylov process as solving ``P^T M^{-1} A u = P^T M^{-1} f`` from
``u_0 = Q f``; the stopping test is therefore taken relative to
``||P^T M^{-1} f||``, the preconditioned right-hand side. With
``formulation="literal"`` the right-hand side is ``P^T M^{-1} f`` and GMRES'
iterate is returned unchanged; the iteration count is then that of the
uncorrected system and ``x`` is not in general a solution of ``A x = f``.
"""
from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from ..linalg import GmresReport, LinearOperator, gmres
from .cslp import CslpSpec, build_cslp
from .deflation import DeflationOperators, DeflationSpec, build_deflation


@dataclass
class SolveReport:
    tag: str
    iterations: int
    converged: bool
    relative_residuals: list[float]
    solution: np.ndarray
    true_relative_residual: float
    counters: Counter = field(default_factory=Counter)
    setup_seconds: float = 0.0
    solve_seconds: float = 0.0


class ComposedOperator:
    """``P^T M^{-1} A`` with the bookkeeping to recover ``x``."""

    def __init__(self, A: sp.spmatrix, deflation: DeflationOperators | None,
                 cslp: LinearOperator | None, tag: str = "", formulation: str = "corrected",
                 counters: Counter | None = None):
        if formulation not in ("corrected", "literal"):
            raise ValueError(f"unknown formulation {formulation!r}")
        self.A = sp.csr_matrix(A)
        n = self.A.shape[0]
        if cslp is not None and cslp.shape[0] != n:
            raise ValueError("CSLP size does not match the system")
        if deflation is not None and deflation.n != n:
            raise ValueError("deflation size does not match the system")
        self.deflation = deflation
        self.cslp = cslp
        self.tag = tag
        self.formulation = formulation
        self.counters = counters if counters is not None else Counter()
        self.operator = LinearOperator(n, self._apply, tag=tag or "B", counters=self.counters)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def _precondition(self, w: np.ndarray) -> np.ndarray:
        if self.cslp is not None:
            w = self.cslp.matvec(w)
        if self.deflation is not None:
            w = self.deflation.apply_Pt(w)
        return w

    def _apply(self, v: np.ndarray) -> np.ndarray:
        self.counters["matvec:A"] += 1
        return self._precondition(self.A @ v)

    def rhs(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=complex)
        if self.deflation is not None and self.formulation == "corrected":
            f = self.deflation.apply_P(f)
        return self._precondition(f)

    def recover(self, d: np.ndarray, f: np.ndarray) -> np.ndarray:
        if self.deflation is None or self.formulation == "literal":
            return d
        return self.deflation.apply_Q(f) + self.deflation.apply_Pt(d)

    def solve(self, f: np.ndarray, tol: float = 1e-7, max_it: int = 100) -> SolveReport:
        t0 = time.perf_counter()
        rhs, ref = self.rhs(f), None
        if self.deflation is not None and self.formulation == "corrected":
            ref = np.linalg.norm(self._precondition(np.asarray(f, dtype=complex)))
        rep: GmresReport = gmres(self.operator, rhs, tol=tol, max_it=max_it, ref_norm=ref)
        x = self.recover(rep.solution, f)
        seconds = time.perf_counter() - t0
        res = np.linalg.norm(f - self.A @ x) / np.linalg.norm(f)
        return SolveReport(self.tag, rep.iterations, rep.converged, rep.relative_residuals, x,
                           float(res), self.counters, 0.0, seconds)


def compose(deflation: DeflationSpec | None, cslp: CslpSpec | None, system,
            tag: str = "", formulation: str = "corrected",
            counters: Counter | None = None) -> ComposedOperator:
    """Build the preconditioned operator for a :class:`DiscreteSystem`.

    ``system`` may also be a bare sparse matrix when no CSLP is requested
    (the shifted operator needs the k^2-weighted mass matrix).
    """
    counters = counters if counters is not None else Counter()
    t0 = time.perf_counter()
    if sp.issparse(system):
        if cslp is not None:
            raise ValueError("CSLP needs a DiscreteSystem, not a bare matrix")
        A, grid_shape = system, (system.shape[0],)
    else:
        A, grid_shape = system.A, system.grid_shape
    defl = None if deflation is None else build_deflation(A, deflation, grid_shape, counters)
    minv = None if cslp is None else build_cslp(system, cslp, counters)
    op = ComposedOperator(A, defl, minv, tag, formulation, counters)
    op.setup_seconds = time.perf_counter() - t0
    return op


def solve(system, deflation: DeflationSpec | None, cslp: CslpSpec | None, tol: float = 1e-7,
          max_it: int = 100, tag: str = "", formulation: str = "corrected") -> SolveReport:
    op = compose(deflation, cslp, system, tag, formulation)
    rep = op.solve(system.f, tol, max_it)
    rep.setup_seconds = op.setup_seconds
    return rep
