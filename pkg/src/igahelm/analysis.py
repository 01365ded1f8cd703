"""Error measures, convergence and pollution studies, and spectra.

Two error measures are provided:

* :func:`l2_error` is the L2 norm of u_h - u computed with elementwise Gauss
  quadrature, ``2p + 4`` points per element by default (the exact solution is
  oscillatory, so the assembly rule underestimates the norm on coarse meshes).
* :func:`sampled_l2_error` is the Euclidean norm of u_h - u at ``n`` uniform
  sample points divided by ``n``. This is the scale in which the reference
  error tables and pollution curves are reported; for smooth errors it is
  about ``||e||_{L2} / sqrt(n)``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .assembly import DiscreteSystem, build_system
from .linalg import DirectSolver, dense_eigenvalues, sparse_lu_solve
from .precond.cslp import CslpSpec, shifted_matrix
from .precond.deflation import DeflationSpec, build_deflation
from .precond.multigrid import two_grid_proxy
from .problems import ModelProblem, make_problem, resolution_for

PLATEAU = 1e-14
N_SAMPLES = 1000


def _source_elements(system: DiscreteSystem) -> list[np.ndarray] | None:
    src = system.problem.source
    if src is None:
        return None
    out = []
    for kv, s in zip(system.space.knots_per_dim, src):
        e = s * kv.n_elements
        # a source on a knot touches both neighbouring elements
        cand = {int(np.clip(math.floor(e), 0, kv.n_elements - 1))}
        if abs(e - round(e)) < 1e-12:
            cand |= {int(round(e)) - 1, int(round(e))}
        out.append(np.array(sorted(c for c in cand if 0 <= c < kv.n_elements)))
    return out


def l2_error(u_full: np.ndarray, system: DiscreteSystem, exact=None,
             n_points: int | None = None, exclude_source: bool = True) -> float:
    """Quadrature L2 norm of ``u_h - exact`` over the unit domain.

    ``u_full`` holds all coefficients (Dirichlet values included). For
    point-source problems the elements touching the source are skipped when
    ``exclude_source`` is set, since the exact solution is singular or kinked
    there.
    """
    exact = system.problem.exact if exact is None else exact
    if exact is None:
        raise ValueError(f"{system.problem.id} has no analytic solution")
    space = system.space
    if n_points is None:
        n_points = 2 * space.p + 4
    skip = _source_elements(system) if exclude_source else None
    if space.dim == 1:
        tab = space.tables(0, n_points)
        uh = space.evaluate(u_full, tab.points.ravel()).reshape(tab.points.shape)
        err = np.abs(uh - exact(tab.points)) ** 2 * tab.weights
        if skip is not None:
            err[skip[0]] = 0.0
        return float(np.sqrt(err.sum()))
    tx, ty = space.tables(0, n_points), space.tables(1, n_points)
    total = 0.0
    for ey in range(ty.points.shape[0]):
        X, Y = np.meshgrid(tx.points.ravel(), ty.points[ey])
        W = np.outer(ty.weights[ey], tx.weights.ravel())
        e = np.abs(space.evaluate(u_full, X.ravel(), Y.ravel()) - exact(X.ravel(), Y.ravel())) ** 2
        e = (e * W.ravel()).reshape(X.shape)
        if skip is not None and ey in skip[1]:
            q = tx.points.shape[1]
            for ex in skip[0]:
                e[:, ex * q:(ex + 1) * q] = 0.0
        total += e.sum()
    return float(np.sqrt(total))


def sampled_l2_error(u_full: np.ndarray, system: DiscreteSystem, exact=None,
                     n_samples: int = N_SAMPLES) -> float:
    """``||e(x_i)||_2 / n`` over ``n`` uniform samples of [0, 1] (1D only)."""
    exact = system.problem.exact if exact is None else exact
    if exact is None:
        raise ValueError(f"{system.problem.id} has no analytic solution")
    if system.space.dim != 1:
        raise NotImplementedError("sampled error is defined for 1D problems")
    x = np.linspace(0.0, 1.0, n_samples)
    e = system.space.evaluate(u_full, x) - exact(x)
    return float(np.linalg.norm(e) / n_samples)


def solve_direct(system: DiscreteSystem) -> np.ndarray:
    """Full coefficient vector from a sparse LU solve."""
    return system.embed(sparse_lu_solve(system.A, system.f))


@dataclass
class ErrorReport:
    problem: str
    k: float
    p: int
    n_elements: int
    kh: float
    dof_count: int
    l2_error: float
    sampled_l2_error: float


def error_report(problem: ModelProblem, n_elements: int, p: int, u_full=None,
                 system: DiscreteSystem | None = None) -> ErrorReport:
    system = build_system(problem, n_elements, p) if system is None else system
    u = solve_direct(system) if u_full is None else u_full
    sampled = sampled_l2_error(u, system) if system.space.dim == 1 else float("nan")
    return ErrorReport(problem.id, problem.k, p, n_elements, problem.k / n_elements, system.n,
                       l2_error(u, system), sampled)


def fit_slope(h, err, plateau: float = PLATEAU) -> float:
    """Least-squares slope of log(err) against log(h) over the pre-plateau part.

    Points below ``plateau`` are dropped, as is everything from the first
    refinement whose local rate falls below half the rate of the first pair
    (round-off has taken over). ``h`` must be ordered from coarse to fine.
    """
    h = np.asarray(h, dtype=float)
    err = np.asarray(err, dtype=float)
    keep = err >= plateau
    with np.errstate(divide="ignore", invalid="ignore"):
        local = np.diff(np.log(err)) / np.diff(np.log(h))
    if local.size and np.isfinite(local[0]):
        stalled = np.flatnonzero(~(local >= 0.5 * local[0]))
        if stalled.size:
            keep[stalled[0] + 1:] = False
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(h[keep]), np.log(err[keep]), 1)[0])


@dataclass
class ConvergenceResult:
    reports: list[ErrorReport]
    slope: float
    sampled_slope: float = float("nan")


def convergence_study(problem: ModelProblem, p: int, element_counts=(8, 16, 32, 64)
                      ) -> ConvergenceResult:
    reports = [error_report(problem, n, p) for n in element_counts]
    h = [1.0 / r.n_elements for r in reports]
    slope = fit_slope(h, [r.l2_error for r in reports])
    sampled = fit_slope(h, [r.sampled_l2_error for r in reports], plateau=PLATEAU / 10)
    return ConvergenceResult(reports, slope, sampled)


def pollution_study(problem_id: str, p_range, k_range, kh_targets=(0.625,)) -> list[ErrorReport]:
    """L2 errors on the grid ``n = ceil(k / kh)`` for every (kh, p, k)."""
    out = []
    for kh in kh_targets:
        for p in p_range:
            for k in k_range:
                prob = make_problem(problem_id, float(k))
                rep = error_report(prob, resolution_for(k, kh), p)
                rep.kh = kh
                out.append(rep)
    return out


@dataclass
class SpectrumDataset:
    eigenvalues: np.ndarray
    operator_tag: str
    problem: str
    k: float
    p: int
    n: int
    params: dict = field(default_factory=dict)

    def near_zero(self, atol: float) -> int:
        return int(np.sum(np.abs(self.eigenvalues) < atol))


SPECTRUM_TAGS = ("A", "PA", "MinvA", "PMinvA")


def spectrum_operator(system: DiscreteSystem, tag: str, epsilon: float = 0.0,
                      beta2: float = 1.0, nu: int = 1, omega: float = 0.6,
                      inversion: str = "two-grid", shift: str = "mass"):
    """Callable ``v -> Op v`` for one of :data:`SPECTRUM_TAGS`.

    ``PA`` stands for the deflated operator ``P^T A`` (same spectrum as
    ``P A``). ``inversion`` selects the CSLP inverse: the two-grid proxy or
    an exact solve.
    """
    if tag not in SPECTRUM_TAGS:
        raise ValueError(f"unknown spectrum operator {tag!r}")
    A = system.A
    defl = None
    if tag in ("PA", "PMinvA"):
        defl = build_deflation(A, DeflationSpec(epsilon), system.grid_shape)
    minv = None
    if tag in ("MinvA", "PMinvA"):
        M = shifted_matrix(system, CslpSpec(beta2, shift=shift))
        if inversion == "exact":
            minv = DirectSolver(M).solve
        else:
            minv = two_grid_proxy(M, system.grid_shape, nu=nu, omega=omega)

    def apply(v):
        w = A @ v
        if minv is not None:
            w = minv(w)
        if defl is not None:
            w = defl.apply_Pt(w)
        return w
    return apply


def spectrum_study(system: DiscreteSystem, tag: str, cap: int = 4000, **params) -> SpectrumDataset:
    """All eigenvalues of the composed operator (dense, ``n <= cap``)."""
    op = spectrum_operator(system, tag, **params)
    eig = dense_eigenvalues(op, system.n, cap=cap)
    return SpectrumDataset(eig, tag, system.problem.id, system.k, system.space.p, system.n,
                           dict(params))


def output_name(study: str, problem: str, p: int, k: float) -> str:
    return f"{study}_{problem}_p{p}_k{k:g}.csv"


def write_error_csv(path, reports: list[ErrorReport]) -> Path:
    path = Path(path)
    cols = ["k", "p", "kh", "n_dof", "l2_error", "sampled_l2_error", "n_elements", "problem"]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in reports:
            d = asdict(r)
            d["n_dof"] = d.pop("dof_count")
            w.writerow([repr(d[c]) if isinstance(d[c], float) else d[c] for c in cols])
    return path


def write_spectrum_csv(path, data: SpectrumDataset) -> Path:
    path = Path(path)
    np.savetxt(path, np.column_stack([data.eigenvalues.real, data.eigenvalues.imag]),
               delimiter=",", header="re,im", comments="", fmt="%.17g")
    return path


def read_spectrum_csv(path) -> np.ndarray:
    arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return arr[:, 0] + 1j * arr[:, 1]
