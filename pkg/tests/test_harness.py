import csv
import json

import numpy as np
import pytest
import scipy.io

from igahelm.harness import (
    ExperimentConfig, PreconditionerConfig, RunRecord, compare_to_reference, emit_results,
    load_config, load_reference, load_results, parse_beta2, run_single, run_table,
)
from igahelm.harness.cli import main
from igahelm.harness.config import config_from_dict
from igahelm.harness.runner import ReferenceCell, harness_resolution
from igahelm.problems import mp1b, mp2b


# ------------------------------------------------------------------ config

@pytest.mark.parametrize("text, k, expected", [
    (1.0, 10.0, 1.0), ("4.2", 10.0, 4.2), ("1/k", 100.0, 0.01), ("2/k", 100.0, 0.02),
    ("1/(3k)", 50.0, 1 / 150), ("1 / (3 k)", 50.0, 1 / 150),
])
def test_parse_beta2(text, k, expected):
    assert parse_beta2(text, k) == pytest.approx(expected)


def test_parse_beta2_rejects_garbage():
    with pytest.raises(ValueError):
        parse_beta2("k^2", 1.0)


def test_preconditioner_tags():
    d, c = PreconditionerConfig("D").specs(100.0, 1)
    assert d.epsilon == 0.0 and c is None
    d, c = PreconditionerConfig("Deps_C_MG", cycles=12, nu=3).specs(100.0, 2)
    assert d.epsilon == 0.15 and c.beta2 == 4.2 and c.cycles == 12 and c.nu == 3
    d, c = PreconditionerConfig("C_ex").specs(100.0, 1)
    assert d is None and c.inversion == "exact" and c.beta2 == pytest.approx(0.01)
    assert PreconditionerConfig("DC_MG", cycles=12).label() == "DC_MG^12"
    assert PreconditionerConfig("none").specs(1.0, 1) == (None, None)
    with pytest.raises(ValueError):
        PreconditionerConfig("ILU")


def test_shipped_configs_load():
    for name in ("table1", "table2", "table3", "table4", "table5", "table6"):
        cfg = load_config(f"configs/{name}.toml")
        assert cfg.preconditioners
        assert cfg.digest() == load_config(f"configs/{name}.toml").digest()
    t6 = load_config("configs/table6.toml")
    assert [pc.applies_to(5) for pc in t6.preconditioners].count(True) >= 2


def test_config_validation():
    with pytest.raises(ValueError):
        config_from_dict({"experiment": {"name": "x", "problem": "MP1B", "k": [1], "p": [1]}})
    with pytest.raises(ValueError):
        config_from_dict({"experiment": {"name": "x", "problem": "MP1B", "p": [1]},
                          "preconditioner": [{"tag": "D"}]})
    with pytest.raises(ValueError):
        config_from_dict({"experiment": {"name": "x", "problem": "MP1B", "k": 1, "p": 1},
                          "preconditioner": [{"tag": "D", "colour": "red"}]})


def test_harness_resolution_rounding():
    assert harness_resolution(mp1b(100.0), 100.0, 0.625) == 160
    assert harness_resolution(mp1b(101.0), 101.0, 0.625) == 162
    assert harness_resolution(mp2b(50.0), 50.0, 0.625) % 4 == 0


# ------------------------------------------------------------------ runs

@pytest.fixture(scope="module")
def small_config():
    return ExperimentConfig("tiny", "MP1B", [20.0, 40.0], [1, 2],
                            [PreconditionerConfig("D_eps"), PreconditionerConfig("C_ex")])


@pytest.fixture(scope="module")
def small_records(small_config):
    return run_table(small_config)


def test_run_table_shape(small_records):
    assert len(small_records) == 8
    assert all(r.status == "ok" and r.converged for r in small_records)
    keys = [r.key() for r in small_records]
    assert len(set(keys)) == len(keys)


def test_determinism(small_config, small_records):
    again = run_table(small_config)
    for a, b in zip(small_records, again):
        assert a.iterations == b.iterations
        assert a.residual_history == b.residual_history     # bitwise
        assert a.config_hash == b.config_hash


def test_threads_give_same_records(small_config, small_records):
    threaded = run_table(small_config, threads=2)
    assert [r.residual_history for r in threaded] == [r.residual_history for r in small_records]


def test_cap_records_skip():
    rec = run_single("MP1B", 1000.0, 2, PreconditionerConfig("D_eps"), max_n=100)
    assert rec.status == "skipped" and rec.iterations is None and rec.cell == "skipped"


def test_unconverged_cell_is_star():
    rec = run_single("MP1B", 200.0, 1, PreconditionerConfig("none"), max_it=5)
    assert rec.converged is False and rec.cell == "*"


def test_record_errors_measured():
    rec = run_single("MP1A", 50.0, 2, PreconditionerConfig("D_eps"))
    assert rec.l2_error is not None and rec.sampled_l2_error < rec.l2_error
    assert rec.op_counts["matvec:A"] >= rec.iterations


# ------------------------------------------------------------------ serialization

def test_emit_empty(tmp_path):
    path = emit_results([], tmp_path, "csv", name="empty")
    rows = list(csv.reader(path.open()))
    assert len(rows) == 1 and "config_hash" in rows[0]
    assert load_results(path) == []


def test_emit_single_row(tmp_path, small_records):
    path = emit_results(small_records[:1], tmp_path, "csv")
    rows = list(csv.DictReader(path.open()))
    assert len(rows) == 1 and rows[0]["config_hash"] == small_records[0].config_hash


def test_json_round_trip_byte_identical(tmp_path, small_records):
    first = emit_results(small_records, tmp_path / "a", "json")
    second = emit_results(load_results(first), tmp_path / "b", "json")
    assert first.read_bytes() == second.read_bytes()


def test_csv_round_trip(tmp_path, small_records):
    path = emit_results(small_records, tmp_path, "csv")
    back = load_results(path)
    assert back == small_records


def test_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        emit_results([], tmp_path, "xml")


# ------------------------------------------------------------------ golden diffs

def _cells(records, shift=0, star=None):
    cells = []
    for r in records:
        v = str(r.iterations + shift)
        if star is not None and r.key() == star:
            v = "*"
        cells.append(ReferenceCell(r.table, r.problem, r.label, r.k, r.p, v))
    return cells


def test_compare_identical(small_records):
    rep = compare_to_reference(small_records, _cells(small_records))
    assert rep.passed and all(d.delta == 0 for d in rep.diffs)
    assert rep.summary().startswith("8 match")


def test_compare_off_by_one_warns(small_records):
    rep = compare_to_reference(small_records, _cells(small_records, shift=1))
    assert rep.passed and {d.status for d in rep.diffs} == {"warn"}


def test_compare_star_against_count_fails(small_records):
    rep = compare_to_reference(small_records, _cells(small_records, star=small_records[0].key()))
    assert not rep.passed
    assert sum(d.status == "fail" for d in rep.diffs) == 1


def test_compare_outside_tolerance_fails(small_records):
    assert not compare_to_reference(small_records, _cells(small_records, shift=3)).passed
    assert compare_to_reference(small_records, _cells(small_records, shift=3), tolerance=3).passed


def test_compare_shape_mismatch(small_records):
    with pytest.raises(KeyError):
        compare_to_reference(small_records, _cells(small_records)[:-1])


def test_reference_file():
    cells = load_reference("reference/iterations.csv")
    assert len(cells) == 300
    assert {c.table for c in cells} >= {"table2", "table3", "table4", "table5", "table6"}
    star = [c for c in cells if c.value == "*"]
    assert star and all(c.value == "*" for c in star)


# ------------------------------------------------------------------ CLI

def test_cli_solve_and_export(tmp_path, capsys):
    mtx = tmp_path / "A.mtx"
    code = main(["solve", "--problem", "MP1B", "--k", "50", "--p", "2", "--out", str(tmp_path),
                 "--format", "json", "--export-matrix", str(mtx)])
    assert code == 0
    A = scipy.io.mmread(str(mtx))
    assert A.shape == (80, 80)
    data = json.loads(next(tmp_path.glob("solve_*.json")).read_text())
    assert data[0]["converged"] and data[0]["n_dof"] == 80


def test_cli_runtime_error(tmp_path, capsys):
    assert main(["solve", "--problem", "MP9", "--out", str(tmp_path)]) == 1
    assert "error" in capsys.readouterr().err
    assert main(["table", "--config", str(tmp_path / "missing.toml")]) == 1


def _write_table_config(tmp_path):
    cfg = tmp_path / "t.toml"
    cfg.write_text('[experiment]\nname = "mini"\nproblem = "MP1B"\nk = [20]\np = [1, 2]\n'
                   '[[preconditioner]]\ntag = "D_eps"\n')
    return cfg


def test_cli_table_exit_codes(tmp_path):
    cfg = _write_table_config(tmp_path)
    out = tmp_path / "out"
    assert main(["table", "--config", str(cfg), "--out", str(out)]) == 0
    recs = load_results(out / "mini.csv")
    ref = tmp_path / "ref.csv"
    with ref.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["table", "problem", "label", "k", "p", "iterations", "tolerance"])
        for r in recs:
            w.writerow([r.table, r.problem, r.label, r.k, r.p, r.iterations, ""])
    assert main(["table", "--config", str(cfg), "--out", str(out), "--reference", str(ref)]) == 0
    assert main(["compare", "--results", str(out / "mini.csv"), "--reference", str(ref)]) == 0
    lines = ref.read_text().splitlines()
    parts = lines[1].split(",")
    parts[5] = str(int(parts[5]) + 10)
    ref.write_text("\n".join([lines[0], ",".join(parts), *lines[2:]]) + "\n")
    assert main(["compare", "--results", str(out / "mini.csv"), "--reference", str(ref)]) == 2


def test_cli_spectrum_and_convergence(tmp_path):
    assert main(["spectrum", "--problem", "MP1B", "--k", "10", "--p", "2", "--operator", "PA",
                 "--out", str(tmp_path)]) == 0
    assert list(tmp_path.glob("spectrum-PA_MP1B_p2_k10.csv"))
    assert main(["convergence", "--problem", "MP1A", "--k", "1", "--p", "2",
                 "--elements", "4,8", "--out", str(tmp_path)]) == 0
    assert list(tmp_path.glob("convergence_MP1A_p2_k1.csv"))


def test_cli_convergence_from_config(tmp_path, capsys):
    assert main(["convergence", "--config", "configs/table1.toml", "--p", "1",
                 "--out", str(tmp_path)]) == 0
    assert "slope" in capsys.readouterr().out


def test_cli_bad_arguments():
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--format", "xml"])
    assert exc.value.code == 2
