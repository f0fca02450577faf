import json

import numpy as np
import pytest

from dirac_mti.errors import ConfigError
from dirac_mti.harness.config import RunConfig, cache_root, load_config
from dirac_mti.harness.expr import Expression
from dirac_mti.harness.limit_study import fit_linear_in_t, halving_ratios, run_limit_study
from dirac_mti.harness.reference import (
    MAGIC,
    load_reference,
    make_reference,
    read_snapshot,
    snapshot_path,
    write_snapshot,
)
from dirac_mti.harness.sweep import GATED, ErrorReport, exit_code, fit_order, l2_error, run_sweep
from dirac_mti.potentials import nm_initial, nm_potential
from dirac_mti.spectral import GridMismatchError, SpinorField, make_grid

TARGET_EPS1 = [3.69e-2, 9.18e-3, 2.29e-3, 5.73e-4, 1.43e-4, 3.58e-5, 8.94e-6, 2.24e-6, 5.59e-7]
TARGET_EPS8 = [7.12e-2, 7.17e-2, 4.90e-2, 1.48e-2, 3.89e-3, 9.84e-4, 2.47e-4, 6.17e-5, 1.54e-5]
TAUS = [0.1 / 2**k for k in range(9)]


def small_config(**kw):
    base = dict(
        epsilons=[1.0, 0.5],
        M=[64, 128],
        taus=[0.1, 0.05, 0.025],
        T=0.5,
        reference={"h_e": 0.125, "tau_e": 1e-3},
    )
    base.update(kw)
    return RunConfig(**base)


# -- expressions --------------------------------------------------------------


def test_expression_evaluates_nm_case():
    x = np.linspace(-3, 3, 7)
    V = Expression("(1 - x)/(1 + x**2)")
    A = Expression("(x + 1)**2/(1 + x**2)")
    Vn, An = nm_potential()(0.0, x)
    assert np.allclose(V(0.0, x), Vn) and np.allclose(A(0.0, x), An)
    assert Expression("sqrt(exp(pi)) + cos(0) - sin(0) * e")(0, x) == pytest.approx(np.exp(np.pi / 2) + 1)
    assert Expression("3")(0.0, x).shape == x.shape


@pytest.mark.parametrize("src", ["__import__('os')", "x.real", "abs(x)", "y + 1", "lambda: 1", "x if t else 1", "1 +"])
def test_expression_rejects_unsafe(src):
    with pytest.raises(ConfigError):
        Expression(src)


def test_expression_time_derivative():
    e = Expression("sin(2*t)*x + exp(-t)")
    assert e.depends_on_t and not Expression("x**2").depends_on_t
    d = e.d_dt()
    x = np.linspace(0, 1, 5)
    assert np.allclose(d(0.3, x), 2 * np.cos(0.6) * x - np.exp(-0.3))
    assert np.allclose(Expression("e**t").d_dt()(1.0, x), np.e)


# -- configs -------------------------------------------------------------------


def test_config_defaults_and_derived():
    c = RunConfig()
    assert c.domain == (-16.0, 16.0) and c.T == 2.0 and c.reference_M == 1024 and c.M == [1024]
    c = RunConfig(h=[2, 1, 0.5])
    assert c.M == [16, 32, 64]
    c.check_reference_refines()


@pytest.mark.parametrize(
    "kw",
    [
        {"epsilons": [0.0]},
        {"epsilons": [1.5]},
        {"epsilons": []},
        {"taus": [3.0]},
        {"taus": [-0.1]},
        {"domain": (1, -1)},
        {"M": [31]},
        {"M": [32], "h": [1.0]},
        {"h": [0.3]},
        {"method": "rk4"},
        {"threads": 0},
        {"bogus": 1},
    ],
)
def test_config_rejects(kw):
    with pytest.raises(ValueError):
        RunConfig(**kw)


def test_reference_must_refine(cache_dir):
    c = RunConfig(M=[48], reference={"h_e": 1 / 32})
    with pytest.raises(ConfigError):
        c.check_reference_refines()
    with pytest.raises(ConfigError):
        make_reference(c, 1.0)
    # tau_e must sit well below the smallest study step
    with pytest.raises(ConfigError):
        make_reference(RunConfig(M=[64], taus=[5e-6]), 1.0)
    assert not cache_dir.exists()


def test_load_config_errors(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    p.write_text(json.dumps({"epsilons": [0.5], "case": {"V": "cos(t)", "phi1": "exp(-x**2)", "phi2": "0"}}))
    c = load_config(p)
    s = c.sampler()
    assert not s.time_independent
    x = np.zeros(3)
    assert np.allclose(s.dt(0.5, x)[0], -np.sin(0.5))


def test_expression_case_matches_builtin():
    c = RunConfig(
        case={
            "V": "(1 - x)/(1 + x**2)",
            "A1": "(x + 1)**2/(1 + x**2)",
            "phi1": "exp(-x**2/2)",
            "phi2": "exp(-(x - 1)**2/2)",
        }
    )
    g = make_grid(-16, 16, 64)
    assert np.allclose(c.initial(g).values, nm_initial(g).values)
    assert c.sampler().time_independent
    assert c.case_key().startswith("expr-") and RunConfig().case_key() == "nm_a-16.0_b16.0"


def test_cache_root_env(monkeypatch, tmp_path):
    monkeypatch.setenv("DIRAC_MTI_CACHE", str(tmp_path))
    assert cache_root() == tmp_path
    monkeypatch.delenv("DIRAC_MTI_CACHE")
    assert cache_root().name == "dirac-mti"


# -- error metric and report ---------------------------------------------------


def test_l2_error_examples(rng):
    g = make_grid(-16, 16, 64)
    a = SpinorField(g, rng.standard_normal((2, 64)) + 1j * rng.standard_normal((2, 64)))
    assert l2_error(a, a) == 0.0
    b = SpinorField(g, a.values + np.array([[1.0], [0.0]]))
    assert l2_error(b, a) == pytest.approx(np.sqrt(32), rel=1e-14)
    c = SpinorField(g, rng.standard_normal((2, 64)) + 1j * rng.standard_normal((2, 64)))
    naive = 0.0
    for k in range(2):
        for j in range(64):
            naive += abs(a.values[k, j] - c.values[k, j]) ** 2
    assert l2_error(a, c) == pytest.approx(np.sqrt(g.h * naive), rel=1e-14)
    with pytest.raises(GridMismatchError):
        l2_error(a, SpinorField(make_grid(-16, 16, 32), np.zeros((2, 32))))


def test_fit_order_synthetic_tau_squared():
    taus = TAUS[:5]
    rep = ErrorReport.from_errors([1.0, 0.5], 1 / 32, taus, [[3 * t**2 for t in taus], [7 * t**2 for t in taus]])
    fit = fit_order(rep)
    for eps in (1.0, 0.5):
        assert [round(o, 2) for _, o in fit.orders[eps]] == [2.0] * 4
    assert fit.slope == pytest.approx(2.0)


def test_fit_order_target_rows():
    rep = ErrorReport.from_errors([1.0, 0.125], 1 / 32, TAUS, [TARGET_EPS1, TARGET_EPS8])
    fit = fit_order(rep)
    assert [f"{o:.2f}" for _, o in fit.orders[1.0]][:2] == ["2.01", "2.00"]
    assert [f"{o:.2f}" for _, o in fit.orders[0.125]][:4] == ["-0.01", "0.55", "1.73", "1.93"]


def test_fit_order_needs_three_taus():
    with pytest.raises(ValueError):
        fit_order(ErrorReport.from_errors([1.0], 1.0, [0.1, 0.05], [[1.0, 0.25]]))


def test_single_cell_report_has_no_order():
    rep = ErrorReport.from_errors([1.0], 1 / 32, [0.1], [[3.69e-2]])
    lines = [l for l in rep.csv_text().splitlines() if not l.startswith("#")]
    assert lines == ["epsilon,h,tau,T,error,order", "1,0.03125,0.1,2,3.690000e-02,"]


# -- reference cache -----------------------------------------------------------


def test_snapshot_format(tmp_path, rng):
    g = make_grid(-16, 16, 8)
    f = SpinorField(g, rng.standard_normal((2, 8)) + 1j * rng.standard_normal((2, 8)))
    p = tmp_path / "x.bin"
    write_snapshot(p, f, 0.25, 2.0)
    raw = p.read_bytes()
    assert raw[:8] == MAGIC == b"DMTIREF1"
    assert len(raw) == 8 + 4 + 4 * 8 + 4 * 8 * 8
    assert int.from_bytes(raw[8:12], "little") == 8
    assert np.frombuffer(raw[12:44], "<f8").tolist() == [0.25, 2.0, -16.0, 16.0]
    body = np.frombuffer(raw[44:], "<f8").reshape(8, 4)
    assert np.array_equal(body[:, 0], f.values[0].real) and np.array_equal(body[:, 3], f.values[1].imag)
    back, eps, t = read_snapshot(p)
    assert np.array_equal(back.values, f.values) and back.grid == g
    p.write_bytes(b"NOTAREF!" + raw[8:])
    with pytest.raises(ValueError):
        read_snapshot(p)
    p.write_bytes(raw[:-8])
    with pytest.raises(ValueError):
        read_snapshot(p)


def test_make_reference_deterministic_and_cached(tmp_path):
    c = small_config(reference={"h_e": 0.125, "tau_e": 2e-3, "times": [0.25]})
    a = make_reference(c, 0.5, root=tmp_path / "a")
    b = make_reference(c, 0.5, root=tmp_path / "b")
    assert sorted(a) == [0.25, 0.5]
    for t in a:
        pa, pb = snapshot_path(c, 0.5, t, tmp_path / "a"), snapshot_path(c, 0.5, t, tmp_path / "b")
        assert pa.name == f"ref_eps0.5_M256_t{t!r}.bin"
        assert pa.read_bytes() == pb.read_bytes()
        assert a[t].meta["mass_drift"] < 1e-12
        assert a[t].floor == pytest.approx(10 * a[t].meta["discrepancy_2tau"] / 4)
    again = make_reference(c, 0.5, root=tmp_path / "a")
    assert np.array_equal(again[0.5].field.values, a[0.5].field.values)
    assert load_reference(c, 0.5, 0.75, tmp_path / "a") is None


def test_reference_self_convergence_estimate(tmp_path):
    # the 2 tau_e companion estimates the tau_e vs tau_e/2 gap within a few percent
    c = small_config(T=1.0, reference={"h_e": 0.125, "tau_e": 1e-3})
    est = make_reference(c, 1.0, root=tmp_path)[1.0].meta["self_convergence"]
    half = make_reference(small_config(T=1.0, reference={"h_e": 0.125, "tau_e": 5e-4}), 1.0, root=tmp_path)[1.0]
    ref = make_reference(c, 1.0, root=tmp_path)[1.0]
    gap = float(np.sqrt(ref.field.grid.h * np.sum(np.abs(ref.field.values - half.field.values) ** 2)))
    assert est == pytest.approx(gap, rel=0.05)


# -- sweeps --------------------------------------------------------------------


def test_sweep_orders_and_csv(tmp_path):
    rep = run_sweep(small_config(), threads=1, root=tmp_path)
    assert len(rep.cells) == 12 and exit_code(rep) == 0
    text = rep.csv_text()
    rows = [l for l in text.splitlines() if not l.startswith("#")]
    assert rows[0] == "epsilon,h,tau,T,error,order"
    assert any(l.startswith("# desk-scale defaults") for l in text.splitlines())
    fit = fit_order(rep, h=0.25)
    for eps, seq in fit.orders.items():
        assert all(1.8 < o < 2.2 for _, o in seq)
    out = rep.write(tmp_path / "out")
    assert out.read_text() == text
    assert json.loads((tmp_path / "out" / "report.json").read_text())["cells"][1]["order"] is not None


def test_sweep_deterministic_across_threads(tmp_path):
    c = small_config(epsilons=[1.0], M=[64])
    a = run_sweep(c, threads=1, root=tmp_path / "a").csv_text()
    b = run_sweep(c, threads=2, root=tmp_path / "b").csv_text()
    assert a == b


def test_sweep_restartable(tmp_path):
    c = small_config(epsilons=[1.0], M=[64])
    first = run_sweep(c, threads=1, root=tmp_path)
    cells = sorted((tmp_path / "cells").rglob("*.json"))
    assert len(cells) == 3
    cells[0].unlink()
    stamp = {p: p.stat().st_mtime_ns for p in cells[1:]}
    second = run_sweep(c, threads=1, root=tmp_path)
    assert second.csv_text() == first.csv_text()
    assert all(p.stat().st_mtime_ns == m for p, m in stamp.items())
    assert cells[0].exists()


def test_gate_withholds_reference_limited_cells(tmp_path):
    # a coarse reference puts the floor above the finest cells' errors
    c = small_config(epsilons=[1.0], M=[128], taus=[0.05, 0.02, 0.01], reference={"h_e": 0.125, "tau_e": 1e-3})
    rep = run_sweep(c, threads=1, root=tmp_path)
    floor = rep.cells[0].floor
    assert floor > 0
    for cell in rep.cells:
        if cell.status == GATED:
            assert cell.error < floor
    # a weaker reference raises the stored floor; cached errors are re-gated against it
    for meta in tmp_path.rglob("ref_*_t0.5.json"):
        d = json.loads(meta.read_text())
        meta.write_text(json.dumps(d | {"floor": 1e-3}))
    rep2 = run_sweep(c, threads=1, root=tmp_path)
    assert [cell.status for cell in rep2.cells] == ["ok", GATED, GATED]
    assert rep2.gated and exit_code(rep2) == 3
    line = [l for l in rep2.csv_text().splitlines() if l.startswith("1,0.25,0.01,")][0]
    assert line.split(",")[4] == ""


def test_sweep_failure_recorded_not_raised(tmp_path):
    c = small_config(epsilons=[1.0], M=[64], case={"V": "1/(x - x)", "phi1": "exp(-x**2)", "phi2": "0"})
    rep = run_sweep(c, threads=1, root=tmp_path)
    assert rep.failed and exit_code(rep) == 2
    assert all(cell.detail.startswith("reference:") for cell in rep.cells)


def test_limiting_method_sweep(tmp_path):
    c = small_config(epsilons=[0.25], M=[128], taus=[0.05, 0.025, 0.0125], method="schrodinger")
    rep = run_sweep(c, threads=1, root=tmp_path)
    errs = [cell.error for cell in rep.cells]
    # model error dominates: roughly independent of tau
    assert max(errs) / min(errs) < 1.2


# -- limit study ---------------------------------------------------------------


def test_limit_study_small(tmp_path):
    c = RunConfig(
        domain=(-32, 32),
        epsilons=[0.25, 0.125],
        M=[512],
        taus=[2e-3],
        T=0.5,
        observer_every=50,
        method="mti",
    )
    st = run_limit_study(c, threads=1)
    assert [s.epsilon for s in st.series] == [0.25, 0.125]
    for s in st.series:
        assert s.t[0] == 0.0 and s.E_sch[0] < 1e-13 and s.E_pau[0] < 1e-13
        assert s.t[-1] == pytest.approx(0.5) and len(s.t) == 6
    assert st.boundary_ok
    path = st.write(tmp_path, plot_data=True)
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "epsilon,t,E_sch,E_pau" and len(lines) == 13
    assert (tmp_path / "limit_eps0.25.dat").exists()


def test_limit_helpers():
    assert halving_ratios({0.25: 4.0, 0.125: 2.0, 0.0625: 1.0}) == [2.0, 2.0]
    t = np.linspace(0.25, 2, 8)
    c3, c4, r = fit_linear_in_t(t, 0.5 + 2 * t)
    assert c3 == pytest.approx(0.5) and c4 == pytest.approx(2.0) and r < 1e-12
    c3, c4, r = fit_linear_in_t(t, 3 - t)
    assert c3 >= 0 and c4 >= 0 and r > 0
