import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from igahelm.analysis import (
    convergence_study, error_report, fit_slope, l2_error, output_name, pollution_study,
    read_spectrum_csv, sampled_l2_error, solve_direct, spectrum_operator, spectrum_study,
    write_error_csv, write_spectrum_csv,
)
from igahelm.assembly import build_system
from igahelm.linalg import materialize
from igahelm.problems import mp1a, mp1b, mp2a, resolution_for


# ------------------------------------------------------------------ error measures

def test_zero_error_for_functions_in_the_space():
    system = build_system(mp1a(1.0), 8, 3)
    n = system.space.n_basis if hasattr(system.space, "n_basis") else system.S.shape[0]
    ones = np.ones(n)
    assert l2_error(ones, system, exact=lambda x: np.ones_like(x)) < 1e-14
    assert sampled_l2_error(ones, system, exact=lambda x: np.ones_like(x)) < 1e-15


def test_l2_norm_equals_mass_energy():
    system = build_system(mp1a(1.0), 10, 2)
    c = np.random.default_rng(0).standard_normal(system.S.shape[0])
    expected = np.sqrt(c @ system.M @ c)
    assert l2_error(c, system, exact=lambda x: np.zeros_like(x)) == pytest.approx(expected, rel=1e-12)


def test_l2_error_against_adaptive_quadrature():
    system = build_system(mp1a(3.0), 6, 2)
    u = solve_direct(system)
    def e2(x):
        return abs(system.space.evaluate(u, np.array([x]))[0] - system.problem.exact(x)) ** 2
    ref = np.sqrt(sum(quad(e2, a / 6, (a + 1) / 6, epsabs=1e-16, epsrel=1e-12)[0]
                      for a in range(6)))
    assert l2_error(u, system) == pytest.approx(ref, rel=1e-8)


def test_sampled_error_definition():
    system = build_system(mp1a(1.0), 8, 1)
    u = solve_direct(system)
    x = np.linspace(0, 1, 1000)
    e = system.space.evaluate(u, x) - system.problem.exact(x)
    assert sampled_l2_error(u, system) == pytest.approx(np.linalg.norm(e) / 1000, rel=1e-14)


def test_error_measure_guards():
    system = build_system(mp2a(5.0, robin_edges=("left",)), 8, 1)
    u = solve_direct(system)
    with pytest.raises(ValueError):
        l2_error(u, system)
    system = build_system(mp2a(5.0), 8, 1)
    with pytest.raises(NotImplementedError):
        sampled_l2_error(solve_direct(system), system)


# ------------------------------------------------------------------ convergence

@pytest.mark.parametrize("p", [1, 2, 3, 4, 5])
def test_table_one_values(p):
    with open("reference/table1_l2.csv") as fh:
        ref = {(int(r["n_elements"]), int(r["p"])): float(r["l2_error"]) for r in csv.DictReader(fh)}
    for n in (8, 16, 32):
        got = error_report(mp1a(1.0), n, p).sampled_l2_error
        if ref[n, p] < 1e-14:
            continue   # round-off level
        assert ref[n, p] / 2 <= got <= 2 * ref[n, p], (n, p, got, ref[n, p])


@pytest.mark.parametrize("p", [1, 2, 3, 4])
def test_convergence_rate(p):
    res = convergence_study(mp1a(1.0), p, (8, 16, 32, 64))
    assert abs(res.slope - (p + 1)) <= 0.1
    assert abs(res.sampled_slope - (p + 1)) <= 0.1


def test_fit_slope_plateau_rules():
    h = 1 / np.array([8, 16, 32, 64])
    assert fit_slope(h, 3 * h ** 4) == pytest.approx(4.0)
    # last point stalled at round-off
    assert fit_slope(h, [1e-8, 1e-8 / 64, 1e-8 / 4096, 2e-12]) == pytest.approx(6.0)
    assert fit_slope(h, [1e-8, 1e-10, 1e-15, 1e-16]) == pytest.approx(np.log2(100))
    assert np.isnan(fit_slope(h, [1e-15] * 4))


@settings(max_examples=30, deadline=None)
@given(rate=st.floats(0.5, 6), c=st.floats(1e-3, 1e3))
def test_fit_slope_recovers_power_laws(rate, c):
    h = 1 / np.array([4.0, 8, 16, 32])
    assert fit_slope(h, c * h ** rate, plateau=0.0) == pytest.approx(rate, rel=1e-9)


@pytest.fixture(scope="module")
def tradeoff():
    return {(r.p, r.kh): r for r in
            pollution_study("MP1A", [3, 4], [2500], kh_targets=(0.625, 0.825))}


def test_pollution_tradeoff_direction(tradeoff):
    # fewer DOFs at p = 4, kh = 0.825 and no loss of accuracy against p = 3, kh = 0.625
    a, b = tradeoff[4, 0.825], tradeoff[3, 0.625]
    assert a.dof_count < b.dof_count
    assert a.sampled_l2_error <= b.sampled_l2_error


def test_pollution_tradeoff_dispersion_oracle(tradeoff):
    # relative phase error of maximally smooth splines, (kh)^2p / c_p
    c = {3: 120960.0, 4: 14515200.0}
    d3, d4 = 0.625 ** 6 / c[3], 0.825 ** 8 / c[4]
    ratio = tradeoff[3, 0.625].l2_error / tradeoff[4, 0.825].l2_error
    assert 1.0 < ratio < d3 / d4


@pytest.mark.xfail(strict=True, reason="p = 4 is about 7x more accurate than p = 3 here; "
                                       "see the pollution note in the README")
def test_pollution_tradeoff_factor_four(tradeoff):
    a, b = tradeoff[4, 0.825].l2_error, tradeoff[3, 0.625].l2_error
    assert b / 4 <= a <= 4 * b


def test_pollution_grows_with_k_at_fixed_kh():
    reps = pollution_study("MP1A", [1], [100, 1000])
    assert reps[1].sampled_l2_error > reps[0].sampled_l2_error
    assert [r.kh for r in reps] == [0.625, 0.625]


def test_higher_order_less_pollution():
    errs = [r.sampled_l2_error for r in pollution_study("MP1A", [1, 2, 3], [1000])]
    assert errs[0] > errs[1] > errs[2]


# ------------------------------------------------------------------ spectra

def test_spectrum_of_a_matches_matrix():
    system = build_system(mp1b(20.0), 40, 2)
    data = spectrum_study(system, "A")
    ref = np.linalg.eigvals(system.A.toarray())
    np.testing.assert_allclose(np.sort_complex(data.eigenvalues), np.sort_complex(ref),
                               atol=1e-9 * abs(ref).max())
    assert data.n == system.n and data.p == 2 and data.k == 20.0


def test_deflated_spectrum_real_for_real_operator():
    system = build_system(mp1b(20.0), 40, 3)
    assert abs(system.A.imag).max() == 0
    lam = spectrum_study(system, "PA", epsilon=0.15).eigenvalues
    assert abs(lam.imag).max() < 1e-8 * abs(lam).max()
    assert spectrum_study(system, "PA").near_zero(1e-8 * abs(lam).max()) == system.n // 2


def test_cslp_spectrum_in_unit_disc_region():
    system = build_system(mp1b(30.0), 48, 2)
    lam = spectrum_study(system, "MinvA", beta2=1.0, inversion="exact").eigenvalues
    # exact CSLP: eigenvalues lie on the circle through 0 and 1 (centre 1/2)
    assert np.all(abs(lam - 0.5) <= 0.5 + 1e-8)


def test_spectrum_operator_composition():
    system = build_system(mp1b(10.0), 20, 2)
    n = system.n
    B = materialize(spectrum_operator(system, "PMinvA", epsilon=0.1, inversion="exact"), n)
    P = materialize(spectrum_operator(system, "PA", epsilon=0.1), n) @ np.linalg.inv(
        system.A.toarray())
    Minv_A = materialize(spectrum_operator(system, "MinvA", inversion="exact"), n)
    np.testing.assert_allclose(B, P @ Minv_A, atol=1e-9)
    with pytest.raises(ValueError):
        spectrum_operator(system, "QA")


def test_spectrum_cap():
    system = build_system(mp1b(10.0), 60, 1)
    with pytest.raises(MemoryError):
        spectrum_study(system, "A", cap=10)


# ------------------------------------------------------------------ files

def test_output_names():
    assert output_name("spectrum-PA", "MP2A", 3, 50.0) == "spectrum-PA_MP2A_p3_k50.csv"
    assert output_name("pollution", "MP1A", 1, 1e4) == "pollution_MP1A_p1_k10000.csv"


def test_spectrum_csv_round_trip(tmp_path):
    system = build_system(mp1b(10.0), 16, 2)
    data = spectrum_study(system, "MinvA", beta2=0.5)
    path = write_spectrum_csv(tmp_path / "s.csv", data)
    np.testing.assert_array_equal(read_spectrum_csv(path), data.eigenvalues)
    assert path.read_text().splitlines()[0] == "re,im"


def test_error_csv(tmp_path):
    reps = [error_report(mp1a(1.0), n, 2) for n in (4, 8)]
    path = write_error_csv(tmp_path / "e.csv", reps)
    rows = list(csv.DictReader(path.open()))
    assert [int(r["n_elements"]) for r in rows] == [4, 8]
    assert float(rows[1]["l2_error"]) == reps[1].l2_error
    assert set(rows[0]) >= {"k", "p", "kh", "n_dof", "l2_error"}


def test_resolution_rule_used_by_pollution():
    rep = pollution_study("MP1A", [2], [1000])[0]
    assert rep.n_elements == resolution_for(1000, 0.625) == 1600
