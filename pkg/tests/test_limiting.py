import numpy as np
import pytest

from dirac_mti.limiting import (
    PauliState,
    ScalarField,
    e_pau,
    e_sch,
    pauli_evolve,
    pauli_initial,
    schrodinger_evolve,
)
from dirac_mti.mti import evolve
from dirac_mti.observers import Recorder
from dirac_mti.potentials import FREE, nm_initial, nm_potential
from dirac_mti.spectral import GridMismatchError, SpinorField, fwd, make_grid, mode_table


def l2(g, u):
    return float(np.sqrt(g.h * np.sum(np.abs(u) ** 2)))


def split(f):
    g = f.grid
    return ScalarField(g, f.values[0]), ScalarField(g, f.values[1])


def test_free_schrodinger_single_mode_phase():
    g = make_grid(-16, 16, 64)
    l, T = 5, 1.3
    mode = np.exp(1j * g.mu[l] * (g.nodes - g.a))
    st = schrodinger_evolve(ScalarField(g, mode), ScalarField(g, mode), FREE, 0.1, T)
    ph = np.exp(-0.5j * T * g.mu[l] ** 2)
    assert np.abs(st.phi_e.values - ph * mode).max() < 1e-13
    assert np.abs(st.phi_p.values - np.conj(ph) * mode).max() < 1e-13


def test_schrodinger_mass_conserved():
    g = make_grid(-16, 16, 256)
    pe, pp = split(nm_initial(g))
    rec = Recorder(lambda s: (s.phi_e.mass(), s.phi_p.mass()), every=10)
    schrodinger_evolve(pe, pp, nm_potential(), 0.01, 2.0, [rec])
    m = np.array(rec.values)
    assert np.abs(m - m[0]).max() / m[0].max() < 1e-12


def test_schrodinger_order_two():
    g = make_grid(-16, 16, 256)
    pe, pp = split(nm_initial(g))
    P = nm_potential()
    sol = {}
    for tau in (0.04, 0.02, 0.01, 0.005):
        s = schrodinger_evolve(pe, pp, P, tau, 2.0)
        sol[tau] = np.stack((s.phi_e.values, s.phi_p.values))
    d = [l2(g, sol[a] - sol[a / 2]) for a in (0.04, 0.02, 0.01)]
    orders = np.log2(np.array(d[:-1]) / np.array(d[1:]))
    assert np.all((orders > 1.9) & (orders < 2.1))


@pytest.mark.parametrize("eps", [1.0, 0.1])
def test_pauli_free_phase(eps):
    g = make_grid(-16, 16, 128)
    t = mode_table(g, eps)
    ini = pauli_initial(nm_initial(g), t)
    tau, T = 0.05, 1.0
    out = pauli_evolve(ini, FREE, t, tau, T)
    ph = np.exp(-1j * t.delta_minus * T / eps**2)
    assert np.abs(fwd(out.psi_e.values) - ph * fwd(ini.psi_e.values)).max() < 1e-13
    assert np.abs(fwd(out.psi_p.values) - np.conj(ph) * fwd(ini.psi_p.values)).max() < 1e-13


def test_pauli_symbol_identity():
    g = make_grid(-16, 16, 1024)
    for eps in (1.0, 0.1, 1e-3, 1e-6):
        t = mode_table(g, eps)
        assert np.abs(t.delta_minus / eps**2 - g.mu**2 / (t.delta + 1)).max() < 1e-12 * max(1, g.mu.max() ** 2)


def test_pauli_order_two():
    g = make_grid(-16, 16, 256)
    eps = 0.25
    t = mode_table(g, eps)
    ini = pauli_initial(nm_initial(g), t)
    P = nm_potential()
    sol = {}
    for tau in (0.02, 0.01, 0.005, 0.0025):
        s = pauli_evolve(ini, P, t, tau, 1.0)
        sol[tau] = np.stack((s.psi_e.values, s.psi_p.values))
    d = [l2(g, sol[a] - sol[a / 2]) for a in (0.02, 0.01, 0.005)]
    orders = np.log2(np.array(d[:-1]) / np.array(d[1:]))
    assert np.all((orders > 1.8) & (orders < 2.2))


def test_pauli_mass_drift_small():
    g = make_grid(-16, 16, 256)
    t = mode_table(g, 0.25)
    ini = pauli_initial(nm_initial(g), t)
    m = lambda s: l2(g, s.psi_e.values) ** 2 + l2(g, s.psi_p.values) ** 2
    rec = Recorder(m, every=20)
    pauli_evolve(ini, nm_potential(), t, 0.005, 2.0, [rec])
    drift = max(abs(v - rec.values[0]) for v in rec.values) / rec.values[0]
    assert drift < 1e-3


def test_error_functionals_vanish_at_zero():
    g = make_grid(-16, 16, 128)
    f0 = nm_initial(g)
    for eps in (1.0, 0.125):
        t = mode_table(g, eps)
        assert e_sch(f0, *split(f0), 0.0, eps) < 1e-13
        assert e_pau(f0, pauli_initial(f0, t), 0.0, eps) < 1e-13


def test_e_sch_exact_reconstruction():
    g = make_grid(-16, 16, 64)
    pe, pp = split(nm_initial(g))
    t, eps = 0.7, 0.2
    w = np.exp(-1j * t / eps**2)
    phi = SpinorField(g, np.stack((w * pe.values, np.conj(w) * pp.values)))
    assert e_sch(phi, pe, pp, t, eps) < 1e-14


def test_grid_mismatch():
    g, h = make_grid(-16, 16, 64), make_grid(-16, 16, 32)
    f = nm_initial(g)
    with pytest.raises(GridMismatchError):
        e_sch(f, *split(nm_initial(h)), 0.0, 1.0)
    with pytest.raises(GridMismatchError):
        e_pau(f, pauli_initial(nm_initial(h), mode_table(h, 1.0)), 0.0, 1.0)
    with pytest.raises(GridMismatchError):
        PauliState(nm_initial(g), nm_initial(h), 0.0)
    with pytest.raises(ValueError):
        ScalarField(g, np.zeros(3))


def test_pauli_closer_than_schrodinger_for_small_eps():
    g = make_grid(-32, 32, 512)
    f0 = nm_initial(g)
    P = nm_potential()
    eps, tau, T = 0.125, 2e-3, 0.5
    t = mode_table(g, eps)
    phi = evolve(f0, P, eps, tau, T, table=t).field
    s = schrodinger_evolve(*split(f0), P, tau, T)
    p = pauli_evolve(pauli_initial(f0, t), P, t, tau, T)
    assert e_pau(phi, p, T, eps) < e_sch(phi, s.phi_e, s.phi_p, T, eps)
