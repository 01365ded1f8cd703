"""Command line entry point: ``igahelm <solve|table|spectrum|convergence|compare>``.

Exit codes: 0 success, 1 runtime error, 2 golden-table mismatch.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .. import analysis
from ..assembly import build_system, export_matrix_market
from ..problems import make_problem, resolution_for
from .config import TAGS, PreconditionerConfig, load_config, tomllib
from .runner import compare_to_reference, emit_results, load_results, run_single, run_table

log = logging.getLogger("igahelm")

EXIT_OK, EXIT_ERROR, EXIT_MISMATCH = 0, 1, 2


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v]


def _beta2(text: str):
    try:
        return float(text)
    except ValueError:
        return text


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--out", default="results", help="output directory")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--max-n", type=int, default=None, help="skip systems larger than this")
    sp.add_argument("--threads", type=int, default=1)


def _add_precond(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--tag", choices=TAGS, default="D_eps")
    sp.add_argument("--epsilon", type=float, default=None)
    sp.add_argument("--beta2", type=_beta2, default=None, help='number or "1/k", "1/(3k)"')
    sp.add_argument("--cycles", type=int, default=1)
    sp.add_argument("--nu", type=int, default=1)
    sp.add_argument("--omega", type=float, default=0.6)
    sp.add_argument("--shift", choices=("mass", "identity"), default="mass")


def _add_problem(sp: argparse.ArgumentParser, many: bool = False) -> None:
    sp.add_argument("--problem", default="MP1B")
    if many:
        sp.add_argument("--k", type=_floats, default=[1.0])
        sp.add_argument("--p", type=_ints, default=[1, 2, 3, 4, 5])
    else:
        sp.add_argument("--k", type=float, default=100.0)
        sp.add_argument("--p", type=int, default=2)
    sp.add_argument("--kh", type=float, default=0.625)
    sp.add_argument("--robin-edges", default="", help="comma-separated Robin edges (MP2A)")


def _problem_options(args) -> dict:
    edges = [e for e in args.robin_edges.split(",") if e]
    return {"robin_edges": tuple(edges)} if edges else {}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="igahelm", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="single preconditioned GMRES run")
    _add_problem(sp)
    _add_precond(sp)
    _add_common(sp)
    sp.add_argument("--n-elements", type=int, default=None)
    sp.add_argument("--tol", type=float, default=1e-7)
    sp.add_argument("--max-it", type=int, default=100)
    sp.add_argument("--export-matrix", default=None, help="write A to this MatrixMarket file")

    sp = sub.add_parser("table", help="sweep from a config file")
    sp.add_argument("--config", required=True)
    sp.add_argument("--reference", default=None, help="golden CSV to diff against")
    sp.add_argument("--tolerance", type=int, default=2)
    _add_common(sp)

    sp = sub.add_parser("spectrum", help="dense eigenvalue dump of a composed operator")
    _add_problem(sp)
    sp.add_argument("--operator", choices=analysis.SPECTRUM_TAGS, default="PA")
    sp.add_argument("--epsilon", type=float, default=0.0)
    sp.add_argument("--beta2", type=float, default=1.0)
    sp.add_argument("--nu", type=int, default=1)
    sp.add_argument("--omega", type=float, default=0.6)
    sp.add_argument("--inversion", choices=("two-grid", "exact"), default="two-grid")
    _add_common(sp)

    sp = sub.add_parser("convergence", help="L2 error study (refinement or fixed kh)")
    _add_problem(sp, many=True)
    sp.add_argument("--elements", type=_ints, default=None,
                    help="element counts for a refinement study; omit for a fixed-kh study")
    sp.add_argument("--config", default=None, help="TOML whose [experiment] table sets the sweep")
    _add_common(sp)

    sp = sub.add_parser("compare", help="diff a results file against a golden table")
    sp.add_argument("--results", required=True)
    sp.add_argument("--reference", required=True)
    sp.add_argument("--tolerance", type=int, default=2)
    return ap


def _cmd_solve(args) -> int:
    pc = PreconditionerConfig(args.tag, args.epsilon, args.beta2, args.cycles, args.nu,
                              args.omega, args.shift)
    opts = _problem_options(args)
    if args.export_matrix:
        prob = make_problem(args.problem, args.k, **opts)
        n_el = args.n_elements or resolution_for(args.k, args.kh)
        system = build_system(prob, n_el, args.p)
        export_matrix_market(args.export_matrix, system.A,
                             comment=f"{prob.id} k={args.k:g} p={args.p} n_elements={n_el}")
    rec = run_single(args.problem, args.k, args.p, pc, args.kh, args.tol, args.max_it,
                     args.max_n, opts, n_elements=args.n_elements)
    path = emit_results([rec], args.out, args.format, name=f"solve_{rec.problem}_p{rec.p}_k{rec.k:g}")
    print(f"{rec.label} {rec.problem} k={rec.k:g} p={rec.p} n={rec.n_dof}: "
          f"{rec.cell} iterations -> {path}")
    return EXIT_OK if rec.status == "ok" else EXIT_ERROR


def _cmd_table(args) -> int:
    cfg = load_config(args.config)
    records = run_table(cfg, threads=args.threads, max_n=args.max_n)
    path = emit_results(records, args.out, args.format, name=cfg.name)
    for r in records:
        print(f"{r.table} {r.label:12s} k={r.k:<8g} p={r.p}: {r.cell}")
    print(f"wrote {path}")
    if any(r.status == "error" for r in records):
        log.warning("%d runs failed", sum(r.status == "error" for r in records))
    if args.reference:
        rep = compare_to_reference(records, args.reference, args.tolerance)
        print(rep.summary())
        return EXIT_OK if rep.passed else EXIT_MISMATCH
    return EXIT_OK


def _cmd_spectrum(args) -> int:
    prob = make_problem(args.problem, args.k, **_problem_options(args))
    n_el = resolution_for(args.k, args.kh)
    system = build_system(prob, n_el, args.p)
    cap = args.max_n if args.max_n is not None else 4000
    data = analysis.spectrum_study(system, args.operator, cap=cap, epsilon=args.epsilon,
                                   beta2=args.beta2, nu=args.nu, omega=args.omega,
                                   inversion=args.inversion)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    name = analysis.output_name(f"spectrum-{args.operator}", prob.id, args.p, args.k)
    path = analysis.write_spectrum_csv(out / name, data)
    if args.format == "json":
        path = path.with_suffix(".json")
        path.write_text(json.dumps({"operator": data.operator_tag, "problem": data.problem,
                                    "k": data.k, "p": data.p, "n": data.n, "params": data.params,
                                    "re": data.eigenvalues.real.tolist(),
                                    "im": data.eigenvalues.imag.tolist()}))
    print(f"{data.n} eigenvalues, min Re = {data.eigenvalues.real.min():.4g} -> {path}")
    return EXIT_OK


def _apply_sweep_config(args) -> None:
    with open(args.config, "rb") as fh:
        exp = tomllib.load(fh).get("experiment", {})
    for key, attr in (("problem", "problem"), ("kh", "kh"), ("n_elements", "elements")):
        if key in exp:
            setattr(args, attr, exp[key])
    if "k" in exp:
        args.k = [float(v) for v in np.atleast_1d(exp["k"])]
    if "p" in exp:
        args.p = [int(v) for v in np.atleast_1d(exp["p"])]


def _cmd_convergence(args) -> int:
    if args.config:
        _apply_sweep_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    opts = _problem_options(args)
    for k in args.k:
        for p in args.p:
            prob = make_problem(args.problem, k, **opts)
            if args.elements:
                res = analysis.convergence_study(prob, p, args.elements)
                reports, study = res.reports, "convergence"
                print(f"{prob.id} k={k:g} p={p}: slope {res.slope:.3f}")
            else:
                reports = [analysis.error_report(prob, resolution_for(k, args.kh), p)]
                study = "pollution"
            for r in reports:
                print(f"  n_el={r.n_elements:<6d} L2={r.l2_error:.4e} sampled={r.sampled_l2_error:.4e}")
            analysis.write_error_csv(out / analysis.output_name(study, prob.id, p, k), reports)
    return EXIT_OK


def _cmd_compare(args) -> int:
    rep = compare_to_reference(load_results(args.results), args.reference, args.tolerance)
    for line in rep.lines():
        print(line)
    print(rep.summary())
    return EXIT_OK if rep.passed else EXIT_MISMATCH


COMMANDS = {"solve": _cmd_solve, "table": _cmd_table, "spectrum": _cmd_spectrum,
            "convergence": _cmd_convergence, "compare": _cmd_compare}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (OSError, ValueError, KeyError, MemoryError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
