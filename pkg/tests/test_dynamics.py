"""Master-equation propagation against closed-form solutions.

Oracles used here:
  * empty lossy cavity: <n>(t) = exp(-gamma_c t / hbar), exact
  * lossless ladder: starting from |x,1>, P_x(t) = cos^2(g t / hbar)
  * pure dephasing: the g-x coherence decays as exp(-gamma_d1 t / hbar)
  * driven lossy cavity at g=0: coherent state alpha(t) from the scalar
    ODE alpha' = -i E(t)/hbar - gamma_c alpha / (2 hbar), integrated by
    cumulative quadrature on a fine grid
"""

import numpy as np
import pytest

from qdcavity.dynamics import (LindbladGenerator, SERIES_NAMES, Trajectory,
                               check_cutoff_convergence, dephasing_term,
                               dephasing_weights, effective_coupling, expectation,
                               ground_state_density, joint_intensity, lindblad_rhs,
                               output_flux, propagate, propagate_hamiltonian,
                               validate_density_matrix)
from qdcavity.errors import NumericalError
from qdcavity.model import (DriveEnvelope, SystemParams, build_hamiltonian,
                            collapse_operators, gaussian_envelope)
from qdcavity.operators import (HBAR_UEV_PS, HilbertSpace, annihilation,
                                number_operator, projector, transition)


def make_params(**overrides):
    base = dict(g=100.0, delta=4000.0, gamma_c=70.0, gamma_xx_x=30.0,
                gamma_x_g=20.0, fock_cutoff=3)
    base.update(overrides)
    return SystemParams(**base)


def pure_state_density(space, level, n):
    vec = space.basis_state(level, n)
    return np.outer(vec, vec.conj())


def random_density(space, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(space.dim, space.dim)) + 1j * rng.normal(size=(space.dim, space.dim))
    rho = m @ m.conj().T
    return rho / np.trace(rho)


# ---------------------------------------------------------------------------
# generator structure


def test_rhs_is_traceless():
    p = make_params(gamma_d1=15.0, gamma_d2=20.0)
    gen = LindbladGenerator(p, build_hamiltonian(p, (), 0.0))
    for seed in range(4):
        rho = random_density(p.space, seed)
        assert abs(np.trace(gen.rhs_matrix(0.0, rho))) < 1e-12


def test_rhs_preserves_hermiticity():
    p = make_params(gamma_d1=15.0, gamma_d2=20.0)
    gen = LindbladGenerator(p, build_hamiltonian(p, (), 1.3))
    rho = random_density(p.space, 5)
    out = gen.rhs_matrix(1.3, rho)
    assert np.max(np.abs(out - out.conj().T)) < 1e-12


def test_ground_state_is_stationary():
    p = make_params(gamma_d1=15.0, gamma_d2=20.0)
    gen = LindbladGenerator(p, build_hamiltonian(p, (), 0.0))
    rho = ground_state_density(p.space)
    assert np.max(np.abs(gen.rhs_matrix(0.0, rho))) < 1e-15


def test_lindblad_rhs_free_function_matches_generator():
    p = make_params(gamma_d1=7.0, gamma_d2=3.0)
    h = build_hamiltonian(p, (), 0.9)
    gen = LindbladGenerator(p, h)
    rho = random_density(p.space, 9)
    direct = lindblad_rhs(rho, h, collapse_operators(p), p)
    assert np.max(np.abs(direct - gen.rhs_matrix(0.9, rho))) < 1e-14


def test_dephasing_mask_equals_projector_sandwich():
    p = make_params(gamma_d1=15.0, gamma_d2=20.0)
    w = dephasing_weights(p)
    for seed in range(5):
        rho = random_density(p.space, seed + 100)
        assert np.max(np.abs(w * rho - dephasing_term(rho, p))) < 1e-14


def test_dephasing_leaves_populations_and_xx_g_coherence_alone():
    p = make_params(gamma_d1=15.0, gamma_d2=20.0)
    space = p.space
    w = dephasing_weights(p)
    for level in ("g", "x", "xx"):
        k = space.index(level, 1)
        assert w[k, k] == 0.0
    assert w[space.index("xx", 0), space.index("g", 0)] == 0.0
    assert w[space.index("x", 2), space.index("g", 0)] == -p.gamma_d1
    assert w[space.index("x", 0), space.index("xx", 1)] == -p.gamma_d2


# ---------------------------------------------------------------------------
# density-matrix validation


def test_validate_density_matrix_accepts_and_rejects():
    space = HilbertSpace(2)
    validate_density_matrix(ground_state_density(space))
    bad_trace = 0.5 * ground_state_density(space)
    with pytest.raises(NumericalError, match="trace"):
        validate_density_matrix(bad_trace)
    skew = ground_state_density(space).astype(complex)
    skew[0, 1] = 1e-3
    with pytest.raises(NumericalError, match="hermiticity"):
        validate_density_matrix(skew)
    neg = np.diag([1.5, -0.5] + [0.0] * (space.dim - 2)).astype(complex)
    with pytest.raises(NumericalError, match="negative"):
        validate_density_matrix(neg)
    nan = ground_state_density(space).astype(complex)
    nan[0, 0] = np.nan
    with pytest.raises(NumericalError, match="finite"):
        validate_density_matrix(nan)


# ---------------------------------------------------------------------------
# closed-form propagation oracles


def test_empty_cavity_decay_matches_exponential():
    p = make_params(g=0.0, gamma_xx_x=0.0, gamma_x_g=0.0)
    t = np.linspace(0.0, 3.0 * HBAR_UEV_PS / p.gamma_c, 61)
    traj = propagate(p, (), t, rho0=pure_state_density(p.space, "g", 1), tol=1e-12)
    expected = np.exp(-p.gamma_c * t / HBAR_UEV_PS)
    rel = np.max(np.abs(traj.series["cavity_photon_number"] - expected) / expected)
    assert rel < 1e-8


def test_lossless_ladder_rabi_oscillation():
    p = make_params(gamma_c=0.0, gamma_xx_x=0.0, gamma_x_g=0.0)
    period = np.pi * HBAR_UEV_PS / p.g
    t = np.linspace(0.0, 2.0 * period, 81)
    traj = propagate(p, (), t, rho0=pure_state_density(p.space, "x", 1),
                     tol=1e-12, include_detuned_terms=False)
    expected = np.cos(p.g * t / HBAR_UEV_PS) ** 2
    assert np.max(np.abs(traj.series["exciton_population"] - expected)) < 1e-8
    # the partner population lives on the biexciton rung
    assert np.max(np.abs(traj.series["biexciton_population"] - (1.0 - expected))) < 1e-8


def test_pure_dephasing_coherence_decay():
    p = make_params(g=0.0, gamma_c=0.0, gamma_xx_x=0.0, gamma_x_g=0.0,
                    gamma_d1=15.0, gamma_d2=20.0, fock_cutoff=1)
    space = p.space
    vec = (space.basis_state("g", 0) + space.basis_state("x", 0)) / np.sqrt(2.0)
    rho0 = np.outer(vec, vec.conj())
    t = np.linspace(0.0, 2.0 * HBAR_UEV_PS / p.gamma_d1, 41)
    traj = propagate(p, (), t, tol=1e-12, rho0=rho0, store_states=True,
                     include_detuned_terms=False)
    kx, kg = space.index("x", 0), space.index("g", 0)
    coherence = np.abs(traj.states[:, kx, kg])
    expected = 0.5 * np.exp(-p.gamma_d1 * t / HBAR_UEV_PS)
    assert np.max(np.abs(coherence - expected)) < 1e-9
    # populations do not move under pure dephasing
    assert np.max(np.abs(traj.series["exciton_population"] - 0.5)) < 1e-9


def test_dephasing_spares_xx_g_coherence():
    p = make_params(g=0.0, gamma_c=0.0, gamma_xx_x=0.0, gamma_x_g=0.0,
                    gamma_d1=15.0, gamma_d2=20.0, delta=0.0, fock_cutoff=1)
    space = p.space
    vec = (space.basis_state("g", 0) + space.basis_state("xx", 0)) / np.sqrt(2.0)
    rho0 = np.outer(vec, vec.conj())
    t = np.linspace(0.0, 50.0, 11)
    traj = propagate(p, (), t, tol=1e-12, rho0=rho0, store_states=True)
    kxx, kg = space.index("xx", 0), space.index("g", 0)
    assert np.max(np.abs(np.abs(traj.states[:, kxx, kg]) - 0.5)) < 1e-9


def coherent_amplitude_oracle(drive, gamma_c, t_grid):
    """alpha(t) for the driven lossy cavity by cumulative quadrature."""
    fine = np.linspace(t_grid[0], t_grid[-1], 200_001)
    decay = gamma_c / (2.0 * HBAR_UEV_PS)
    integrand = np.exp(decay * fine) * gaussian_envelope(drive, fine)
    from scipy.integrate import cumulative_trapezoid
    cum = cumulative_trapezoid(integrand, fine, initial=0.0)
    alpha_fine = (-1j / HBAR_UEV_PS) * np.exp(-decay * fine) * cum
    return np.interp(t_grid, fine, alpha_fine.real) + 1j * np.interp(t_grid, fine, alpha_fine.imag)


def test_driven_cavity_matches_coherent_state_oracle():
    p = make_params(g=0.0, gamma_xx_x=0.0, gamma_x_g=0.0, fock_cutoff=5)
    drive = DriveEnvelope.gaussian_pulse("cavity", area=0.02, fwhm=5.0, t_center=13.0)
    t = np.linspace(0.0, 60.0, 121)
    traj = propagate(p, (drive,), t, tol=1e-12)
    alpha = coherent_amplitude_oracle(drive, p.gamma_c, t)
    nbar = np.abs(alpha) ** 2
    assert np.max(np.abs(traj.series["cavity_photon_number"] - nbar)) < 1e-10
    # the emitter never leaves the ground state
    assert np.max(traj.series["exciton_population"]) < 1e-12


# ---------------------------------------------------------------------------
# derived observables


def test_observable_values_on_known_states():
    p = make_params(gamma_c_out=50.0)
    space = p.space
    rho = pure_state_density(space, "x", 2)
    assert joint_intensity(rho, space) == pytest.approx(2.0)
    assert effective_coupling(rho, p) == pytest.approx(p.g)
    assert output_flux(rho, p) == pytest.approx(50.0 * 2.0 / HBAR_UEV_PS)
    rho_g = pure_state_density(space, "g", 1)
    assert joint_intensity(rho_g, space) == 0.0
    mixed = 0.5 * pure_state_density(space, "x", 0) + 0.5 * pure_state_density(space, "xx", 0)
    assert effective_coupling(mixed, p) == pytest.approx(0.0)


def test_expectation_shape_mismatch():
    with pytest.raises(ValueError):
        expectation(np.eye(3), np.eye(4))


def test_trajectory_series_are_complete():
    p = make_params(fock_cutoff=2)
    t = np.linspace(0.0, 5.0, 6)
    traj = propagate(p, (), t, tol=1e-9)
    assert isinstance(traj, Trajectory)
    assert set(traj.series) == set(SERIES_NAMES)
    for name in SERIES_NAMES:
        assert traj.series[name].shape == t.shape
    assert traj.states is None
    assert traj.diagnostics["max_trace_drift"] < 1e-9


# ---------------------------------------------------------------------------
# integration contract


def test_time_grid_validation():
    p = make_params(fock_cutoff=1)
    with pytest.raises(ValueError):
        propagate(p, (), np.array([0.0, 1.0, 0.5]))
    with pytest.raises(ValueError):
        propagate(p, (), np.array([]))
    with pytest.raises(ValueError):
        propagate(p, (), np.array([0.0, np.inf]))
    with pytest.raises(ValueError):
        propagate_hamiltonian(p, build_hamiltonian(p, (), 0.0), np.array([0.0, 0.0, 1.0]))
    # a single-point grid just reads off the initial state
    traj = propagate(p, (), np.array([0.0]))
    assert traj.series["exciton_population"][0] == pytest.approx(0.0)


def test_rho0_shape_checked():
    p = make_params(fock_cutoff=1)
    with pytest.raises(ValueError):
        propagate(p, (), np.linspace(0.0, 1.0, 3), rho0=np.eye(4) / 4.0)


def test_tolerance_tightening_improves_accuracy():
    p = make_params(g=0.0, gamma_xx_x=0.0, gamma_x_g=0.0, fock_cutoff=2)
    t = np.linspace(0.0, 20.0, 21)
    rho0 = pure_state_density(p.space, "g", 1)
    expected = np.exp(-p.gamma_c * t / HBAR_UEV_PS)
    errors = []
    for tol in (1e-6, 1e-10):
        traj = propagate(p, (), t, rho0=rho0, tol=tol)
        errors.append(np.max(np.abs(traj.series["cavity_photon_number"] - expected)))
    assert errors[1] < errors[0]
    assert errors[1] < 1e-9


def test_diagnostics_report_invariant_drift():
    p = make_params(gamma_d1=15.0, gamma_d2=20.0)
    drives = (DriveEnvelope.gaussian_pulse("qd", area=0.012, fwhm=5.0, t_center=10.0),
              DriveEnvelope.gaussian_pulse("cavity", area=0.02, fwhm=5.0, t_center=13.0))
    t = np.linspace(0.0, 40.0, 81)
    traj = propagate(p, drives, t, tol=1e-9)
    d = traj.diagnostics
    assert d["max_trace_drift"] <= 1e-8
    assert d["max_hermiticity_error"] <= 1e-10
    assert d["min_eigenvalue"] >= -1e-8
    assert d["n_rhs_evaluations"] > 0
    assert d["wall_time_s"] > 0.0


def test_propagate_hamiltonian_accepts_plain_matrix():
    p = make_params(g=0.0, gamma_xx_x=0.0, gamma_x_g=0.0, fock_cutoff=2)
    h = np.zeros((p.space.dim, p.space.dim), dtype=complex)
    t = np.linspace(0.0, 10.0, 11)
    rho0 = pure_state_density(p.space, "g", 1)
    traj = propagate_hamiltonian(p, h, t, rho0=rho0, tol=1e-11)
    expected = np.exp(-p.gamma_c * t / HBAR_UEV_PS)
    assert np.max(np.abs(traj.series["cavity_photon_number"] - expected)) < 1e-9


def test_custom_collapse_ops_override():
    # passing explicit zero collapse ops freezes the excited state
    p = make_params(g=0.0, fock_cutoff=1)
    space = p.space
    zeros = [np.zeros((space.dim, space.dim), dtype=complex)]
    rho0 = pure_state_density(space, "x", 0)
    t = np.linspace(0.0, 30.0, 7)
    traj = propagate_hamiltonian(p, np.zeros((space.dim, space.dim), dtype=complex),
                                 t, rho0=rho0, collapse_ops=zeros, tol=1e-10)
    assert np.max(np.abs(traj.series["exciton_population"] - 1.0)) < 1e-10


# ---------------------------------------------------------------------------
# cutoff convergence


def test_cutoff_convergence_weak_drive():
    p = make_params()
    drives = (DriveEnvelope.gaussian_pulse("qd", area=0.012, fwhm=5.0, t_center=10.0),
              DriveEnvelope.gaussian_pulse("cavity", area=0.02, fwhm=5.0, t_center=13.0))
    t = np.linspace(0.0, 30.0, 31)
    dev = check_cutoff_convergence(p, drives, t, 3, 5, tol=1e-10)
    assert dev < 1e-8


def test_cutoff_convergence_argument_check():
    p = make_params()
    with pytest.raises(ValueError):
        check_cutoff_convergence(p, (), np.linspace(0.0, 1.0, 3), 5, 5)
