"""Sweeps over (k, p, preconditioner), result files and golden-table diffs."""
from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from ..analysis import l2_error, sampled_l2_error
from ..assembly import build_system
from ..precond.compose import solve
from ..problems import make_problem, resolution_for
from .config import ExperimentConfig, PreconditionerConfig, config_hash


@dataclass
class RunRecord:
    """One cell of a sweep; ``converged=False`` at ``max_it`` is the table's ``*``."""

    table: str
    problem: str
    k: float
    p: int
    tag: str
    label: str
    n_elements: int
    n_dof: int
    status: str                    # ok | skipped | error
    iterations: int | None = None
    converged: bool | None = None
    true_relative_residual: float | None = None
    l2_error: float | None = None
    sampled_l2_error: float | None = None
    wall_seconds: float | None = None
    residual_history: list = field(default_factory=list)
    op_counts: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    config_hash: str = ""
    message: str = ""

    def key(self) -> tuple:
        return (self.table, self.problem, self.k, self.p, self.label)

    @property
    def cell(self) -> str:
        if self.status != "ok":
            return self.status
        return str(self.iterations) if self.converged else "*"


COLUMNS = [f.name for f in fields(RunRecord)]
_JSON_COLUMNS = {"residual_history", "op_counts", "config"}


def _retained_size(problem, n_el: int, p: int) -> int:
    per_dim = n_el + p
    if problem.dim == 1:
        return per_dim - len(problem.dirichlet_edges)
    d = problem.dirichlet_edges
    nx = per_dim - ("left" in d) - ("right" in d)
    ny = per_dim - ("bottom" in d) - ("top" in d)
    return nx * ny


def harness_resolution(problem, k: float, kh: float) -> int:
    """Elements from the kh rule, rounded up to even (to a multiple of 4 for step fields)."""
    n = resolution_for(k, kh)
    m = 2 if problem.wave.is_constant else 4
    return -(-n // m) * m


def run_single(problem_id: str, k: float, p: int, pc: PreconditionerConfig, kh: float = 0.625,
               tol: float = 1e-7, max_it: int = 100, max_n: int | None = None,
               problem_options: dict | None = None, table: str = "single",
               n_elements: int | None = None, compute_error: bool = True,
               formulation: str = "corrected") -> RunRecord:
    """Build, solve and measure one configuration; failures become records."""
    problem = make_problem(problem_id, k, **(problem_options or {}))
    n_el = harness_resolution(problem, k, kh) if n_elements is None else n_elements
    snapshot = {
        "problem": problem.id, "k": k, "p": p, "kh": kh, "n_elements": n_el, "tol": tol,
        "max_it": max_it, "formulation": formulation,
        "problem_options": problem_options or {}, **pc.snapshot(k, problem.dim),
    }
    rec = RunRecord(table, problem.id, float(k), p, pc.tag, pc.label(), n_el,
                    _retained_size(problem, n_el, p), "ok", config=snapshot,
                    config_hash=config_hash(snapshot))
    if max_n is not None and rec.n_dof > max_n:
        rec.status, rec.message = "skipped", f"n_dof {rec.n_dof} exceeds cap {max_n}"
        return rec
    t0 = time.perf_counter()
    try:
        system = build_system(problem, n_el, p)
        defl, cslp = pc.specs(k, problem.dim)
        rep = solve(system, defl, cslp, tol=tol, max_it=max_it, tag=pc.label(),
                    formulation=formulation)
    except (ValueError, ArithmeticError, MemoryError, RuntimeError, np.linalg.LinAlgError) as exc:
        rec.status, rec.message = "error", f"{type(exc).__name__}: {exc}"
        rec.wall_seconds = time.perf_counter() - t0
        return rec
    rec.wall_seconds = time.perf_counter() - t0
    rec.iterations = rep.iterations
    rec.converged = rep.converged
    rec.true_relative_residual = rep.true_relative_residual
    rec.residual_history = [float(r) for r in rep.relative_residuals]
    rec.op_counts = dict(sorted(rep.counters.items()))
    if compute_error and problem.exact is not None and problem.dim == 1:
        u = system.embed(rep.solution)
        rec.l2_error = l2_error(u, system)
        rec.sampled_l2_error = sampled_l2_error(u, system)
    return rec


def run_table(config: ExperimentConfig, threads: int = 1, max_n: int | None = None,
              compute_error: bool = True) -> list[RunRecord]:
    """Cartesian sweep k x p x preconditioner; records sorted by key."""
    cap = max_n if max_n is not None else config.max_n
    meshes = config.n_elements or [None]
    jobs = [(k, p, pc, n) for pc in config.preconditioners for k in config.k for p in config.p
            for n in meshes if pc.applies_to(p)]

    def work(job):
        k, p, pc, n = job
        return run_single(config.problem, k, p, pc, config.kh, config.tol, config.max_it, cap,
                          config.problem_options, config.name, n_elements=n,
                          compute_error=compute_error, formulation=config.formulation)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(work, jobs))
    else:
        records = [work(j) for j in jobs]
    return sorted(records, key=lambda r: (r.table, r.problem, r.label, r.k, r.p, r.n_elements))


# ---------------------------------------------------------------- serialization

def _cell_text(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True)
    return str(value)


def _parse_cell(name: str, text: str):
    if name in _JSON_COLUMNS:
        return json.loads(text) if text else ({} if name != "residual_history" else [])
    if text == "":
        return None if name not in ("message", "config_hash") else ""
    kind = RunRecord.__dataclass_fields__[name].type
    if "bool" in kind:
        return text == "True"
    if kind.startswith("int"):
        return int(text)
    if kind.startswith("float"):
        return float(text)
    return text


def records_to_json(records: list[RunRecord]) -> str:
    return json.dumps([asdict(r) for r in records], indent=1, sort_keys=True) + "\n"


def records_from_json(text: str) -> list[RunRecord]:
    return [RunRecord(**d) for d in json.loads(text)]


def emit_results(records: list[RunRecord], out_dir, fmt: str = "csv", name: str = "results") -> Path:
    """Write records as ``<name>.csv`` or ``<name>.json`` under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        path = out / f"{name}.json"
        path.write_text(records_to_json(records))
        return path
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    path = out / f"{name}.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for r in records:
            d = asdict(r)
            w.writerow([_cell_text(d[c]) for c in COLUMNS])
    return path


def load_results(path) -> list[RunRecord]:
    path = Path(path)
    if path.suffix == ".json":
        return records_from_json(path.read_text())
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [RunRecord(**{c: _parse_cell(c, row[c]) for c in COLUMNS}) for row in rows]


# ---------------------------------------------------------------- golden tables

@dataclass
class ReferenceCell:
    table: str
    problem: str
    label: str
    k: float
    p: int
    value: str          # iteration count or "*"
    tolerance: int | None = None


@dataclass
class CellDiff:
    cell: ReferenceCell
    got: str
    delta: int | None
    status: str         # match | warn | fail


@dataclass
class DiffReport:
    diffs: list[CellDiff]

    @property
    def passed(self) -> bool:
        return all(d.status != "fail" for d in self.diffs)

    def summary(self) -> str:
        counts = {s: sum(d.status == s for d in self.diffs) for s in ("match", "warn", "fail")}
        return ", ".join(f"{v} {k}" for k, v in counts.items())

    def lines(self) -> list[str]:
        out = []
        for d in self.diffs:
            c = d.cell
            out.append(f"{d.status:5s} {c.table} {c.problem} {c.label} k={c.k:g} p={c.p}: "
                       f"reference {c.value}, got {d.got}")
        return out


def load_reference(path) -> list[ReferenceCell]:
    cells = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            tol = row.get("tolerance") or None
            cells.append(ReferenceCell(row["table"], row["problem"], row["label"],
                                       float(row["k"]), int(row["p"]), row["iterations"].strip(),
                                       int(tol) if tol is not None else None))
    return cells


def compare_to_reference(records: list[RunRecord], reference, tolerance: int = 2,
                         tables: set | None = None) -> DiffReport:
    """Cell-by-cell diff of iteration counts against the digitized tables.

    ``reference`` is a path or a list of :class:`ReferenceCell`. Only the
    reference cells of tables present in ``records`` (or in ``tables``)
    are compared; a reference cell without a matching record, or a record
    without a reference cell, is a shape mismatch and raises ``KeyError``.
    A ``*`` on one side and a count on the other is always a failure.
    """
    ref = load_reference(reference) if isinstance(reference, (str, Path)) else list(reference)
    wanted = {r.table for r in records} if tables is None else set(tables)
    ref = [c for c in ref if c.table in wanted]
    by_key = {r.key(): r for r in records if r.status != "skipped"}
    ref_keys = {(c.table, c.problem, c.k, c.p, c.label) for c in ref}
    extra = sorted(set(by_key) - ref_keys, key=str)
    if extra:
        raise KeyError(f"records without reference cells: {extra[:5]}")
    diffs = []
    for c in ref:
        rec = by_key.get((c.table, c.problem, c.k, c.p, c.label))
        if rec is None:
            continue  # capped or skipped runs are not compared
        got = rec.cell
        tol = tolerance if c.tolerance is None else c.tolerance
        if c.value == "*" or got in ("*", "error"):
            ok = c.value == got
            diffs.append(CellDiff(c, got, None, "match" if ok else "fail"))
            continue
        delta = int(got) - int(c.value)
        status = "match" if delta == 0 else ("warn" if abs(delta) <= tol else "fail")
        diffs.append(CellDiff(c, got, delta, status))
    if not diffs and ref:
        raise KeyError("no reference cell matched the records")
    return DiffReport(diffs)
