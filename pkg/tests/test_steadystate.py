"""Liouvillian construction, steady-state solve, and CW sweeps.

Oracles: the weakly driven empty cavity has the closed-form steady photon
number e^2 / (delta^2 + (gamma_c/2)^2); the undriven system must settle
into |g,0>; long-time integration of the full master equation must agree
with the algebraic fixed point.
"""

import numpy as np
import pytest

from qdcavity.dynamics import (ground_state_density, lindblad_rhs,
                               propagate_hamiltonian)
from qdcavity.errors import SteadyStateError
from qdcavity.model import (SystemParams, build_static_rwa_hamiltonian,
                            collapse_operators)
from qdcavity.operators import HBAR_UEV_PS
from qdcavity.steadystate import (Spectrum, build_liouvillian, spectrum_sweep,
                                  steady_state, unvec, vec)


def make_params(**overrides):
    base = dict(g=50.0, delta=4000.0, gamma_c=70.0, gamma_xx_x=30.0,
                gamma_x_g=20.0, fock_cutoff=3)
    base.update(overrides)
    return SystemParams(**base)


def random_density(dim, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = m @ m.conj().T
    return rho / np.trace(rho)


# ---------------------------------------------------------------------------
# vectorization convention


def test_vec_is_column_stacking():
    rho = np.arange(9.0).reshape(3, 3)
    v = vec(rho)
    for i in range(3):
        for j in range(3):
            assert v[i + 3 * j] == rho[i, j]
    assert np.array_equal(unvec(v), rho)


def test_unvec_rejects_non_square():
    with pytest.raises(ValueError):
        unvec(np.arange(5.0))


def test_vec_kron_identity():
    # vec(A rho B) = (B^T kron A) vec(rho), the identity everything rests on
    rng = np.random.default_rng(3)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    b = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    lhs = vec(a @ rho @ b)
    rhs = np.kron(b.T, a) @ vec(rho)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


# ---------------------------------------------------------------------------
# liouvillian vs direct right-hand side


def test_liouvillian_matches_rhs_on_random_states():
    p = make_params(gamma_d1=15.0, gamma_d2=20.0, fock_cutoff=2)
    h = build_static_rwa_hamiltonian(p, cavity_drive_detuning=-30.0, e_in=3.0, e_c=1.0)
    c_ops = collapse_operators(p)
    lv = build_liouvillian(h, c_ops, p)
    for seed in range(50):
        rho = random_density(p.space.dim, seed)
        direct = lindblad_rhs(rho, h, c_ops, p)
        assert np.max(np.abs(unvec(lv @ vec(rho)) - direct)) < 1e-10


def test_liouvillian_without_params_skips_dephasing():
    p = make_params(fock_cutoff=1)
    h = build_static_rwa_hamiltonian(p, e_in=2.0)
    lv = build_liouvillian(h, collapse_operators(p))
    rho = random_density(p.space.dim, 1)
    direct = lindblad_rhs(rho, h, collapse_operators(p), p)
    assert np.max(np.abs(unvec(lv @ vec(rho)) - direct)) < 1e-12


def test_liouvillian_annihilates_trace():
    # Tr(L rho) = 0 for every rho means the trace functional is a left null
    # vector of the Liouvillian
    p = make_params(gamma_d1=5.0, gamma_d2=9.0, fock_cutoff=2)
    h = build_static_rwa_hamiltonian(p, e_in=1.0, e_c=1.0)
    lv = build_liouvillian(h, collapse_operators(p), p)
    d = p.space.dim
    trace_vec = np.zeros(d * d)
    trace_vec[np.arange(d) * (d + 1)] = 1.0
    assert np.max(np.abs(trace_vec @ lv)) < 1e-12


def test_liouvillian_fock_decay_action():
    # acting on |g,1><g,1| the empty-cavity generator gives
    # (gamma_c/hbar) (|g,0><g,0| - |g,1><g,1|)
    p = make_params(g=0.0, gamma_xx_x=0.0, gamma_x_g=0.0, fock_cutoff=1)
    space = p.space
    h = np.zeros((space.dim, space.dim), dtype=complex)
    lv = build_liouvillian(h, collapse_operators(p), p)
    e1 = np.zeros((space.dim, space.dim), dtype=complex)
    e1[space.index("g", 1), space.index("g", 1)] = 1.0
    out = unvec(lv @ vec(e1))
    rate = p.gamma_c / HBAR_UEV_PS
    expected = -rate * e1
    expected[space.index("g", 0), space.index("g", 0)] = rate
    assert np.max(np.abs(out - expected)) < 1e-14


def test_liouvillian_shape_validation():
    with pytest.raises(ValueError):
        build_liouvillian(np.zeros((2, 3)), [])
    with pytest.raises(ValueError):
        build_liouvillian(np.zeros((2, 2)), [np.zeros((3, 3))])


# ---------------------------------------------------------------------------
# steady-state solve


def test_undriven_system_settles_into_ground_state():
    p = make_params()
    h = build_static_rwa_hamiltonian(p)
    lv = build_liouvillian(h, collapse_operators(p), p)
    rho = steady_state(lv)
    assert np.max(np.abs(rho - ground_state_density(p.space))) < 1e-10


def test_steady_state_is_fixed_point_and_valid():
    p = make_params(gamma_d1=10.0, gamma_d2=5.0)
    h = build_static_rwa_hamiltonian(p, cavity_drive_detuning=40.0, e_in=3.0, e_c=1.0)
    lv = build_liouvillian(h, collapse_operators(p), p)
    rho = steady_state(lv)
    assert abs(np.trace(rho) - 1.0) < 1e-12
    assert np.max(np.abs(rho - rho.conj().T)) < 1e-12
    assert np.max(np.abs(lv @ vec(rho))) < 1e-9
    assert float(np.linalg.eigvalsh(rho)[0]) > -1e-8


def test_degenerate_kernel_is_reported():
    # with every rate off the kernel is the whole space
    p = make_params(g=0.0, gamma_c=0.0, gamma_xx_x=0.0, gamma_x_g=0.0, fock_cutoff=1)
    h = build_static_rwa_hamiltonian(p)
    lv = build_liouvillian(h, collapse_operators(p), p)
    with pytest.raises(SteadyStateError):
        steady_state(lv)


def test_disconnected_sectors_are_reported():
    # photon loss alone cannot mix qd levels, so the steady state is not
    # unique: any level population distribution survives
    p = make_params(g=0.0, gamma_xx_x=0.0, gamma_x_g=0.0, fock_cutoff=1)
    h = build_static_rwa_hamiltonian(p)
    lv = build_liouvillian(h, collapse_operators(p), p)
    with pytest.raises(SteadyStateError):
        steady_state(lv)


def test_steady_state_shape_validation():
    with pytest.raises(ValueError):
        steady_state(np.zeros((5, 5)))


def test_steady_state_matches_long_time_integration():
    sets = [
        dict(g=50.0, gamma_c=70.0, gamma_xx_x=30.0, gamma_x_g=20.0,
             gamma_d1=10.0, gamma_d2=15.0, fock_cutoff=2),
        dict(g=80.0, gamma_c=40.0, gamma_xx_x=25.0, gamma_x_g=35.0, fock_cutoff=2),
        dict(g=20.0, gamma_c=90.0, gamma_xx_x=50.0, gamma_x_g=10.0, fock_cutoff=1),
    ]
    for idx, kw in enumerate(sets):
        p = make_params(**kw)
        h = build_static_rwa_hamiltonian(p, cavity_drive_detuning=20.0,
                                         e_in=2.0, e_c=1.5)
        lv = build_liouvillian(h, collapse_operators(p), p)
        rho_ss = steady_state(lv)
        slowest = min(v for v in (p.gamma_c, p.gamma_xx_x, p.gamma_x_g) if v > 0)
        t_final = 40.0 * HBAR_UEV_PS / slowest
        rho0 = random_density(p.space.dim, 17 + idx)
        traj = propagate_hamiltonian(p, np.asarray(h, dtype=complex),
                                     np.array([0.0, t_final]), rho0=rho0,
                                     tol=1e-11, store_states=True)
        assert np.max(np.abs(traj.states[-1] - rho_ss)) < 1e-6


# ---------------------------------------------------------------------------
# spectrum sweeps


def test_empty_cavity_lorentzian_response():
    p = make_params(g=0.0, gamma_xx_x=0.0, gamma_x_g=0.0, fock_cutoff=3)
    detunings = np.linspace(-150.0, 150.0, 31)
    e_in = 1.0
    spec = spectrum_sweep(p, e_in=e_in, e_c=0.0, detuning_axis=detunings,
                          verify_unique=False)
    expected = e_in**2 / (detunings**2 + (p.gamma_c / 2.0) ** 2)
    rel = np.max(np.abs(spec.cavity_photon_number - expected) / expected)
    assert rel < 1e-8
    # no exciton drive, no exciton population, no coincidences
    assert np.max(np.abs(spec.joint_intensity_Ixc)) < 1e-14


def test_weak_drive_response_is_linear():
    p = make_params()
    detunings = np.array([-50.0, 0.0, 50.0])
    weak = spectrum_sweep(p, e_in=0.01, e_c=0.0, detuning_axis=detunings)
    strong = spectrum_sweep(p, e_in=0.02, e_c=0.0, detuning_axis=detunings)
    ratio = strong.cavity_photon_number / weak.cavity_photon_number
    assert np.max(np.abs(ratio - 4.0)) < 1e-3


def test_spectrum_sweep_workers_match_serial():
    p = make_params(fock_cutoff=2)
    detunings = np.linspace(-100.0, 100.0, 7)
    serial = spectrum_sweep(p, e_in=3.0, e_c=1.0, detuning_axis=detunings, workers=1)
    parallel = spectrum_sweep(p, e_in=3.0, e_c=1.0, detuning_axis=detunings, workers=2)
    assert np.array_equal(serial.cavity_photon_number, parallel.cavity_photon_number)
    assert np.array_equal(serial.joint_intensity_Ixc, parallel.joint_intensity_Ixc)
    assert isinstance(serial, Spectrum)


def test_spectrum_sweep_argument_validation():
    p = make_params(fock_cutoff=1)
    with pytest.raises(ValueError, match="e_in"):
        spectrum_sweep(p, e_in=-1.0, e_c=0.0, detuning_axis=np.array([0.0]))
    with pytest.raises(ValueError, match="e_c"):
        spectrum_sweep(p, e_in=1.0, e_c=-2.0, detuning_axis=np.array([0.0]))
    with pytest.raises(ValueError):
        spectrum_sweep(p, e_in=1.0, e_c=0.0, detuning_axis=np.array([[0.0]]))
    with pytest.raises(ValueError):
        spectrum_sweep(p, e_in=1.0, e_c=0.0, detuning_axis=np.array([0.0]), workers=0)


def test_sweep_error_names_the_detuning():
    p = make_params(g=0.0, gamma_c=0.0, gamma_xx_x=0.0, gamma_x_g=0.0, fock_cutoff=1)
    with pytest.raises(SteadyStateError, match="detuning"):
        spectrum_sweep(p, e_in=0.0, e_c=0.0, detuning_axis=np.array([12.5]))
