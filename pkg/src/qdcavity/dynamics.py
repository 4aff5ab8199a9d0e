"""Master-equation right-hand side, time propagation and single-time observables.

The equation of motion is

    d rho / dt = i [rho, H] / hbar
               + (1 / hbar) sum_k ( L_k rho L_k^dag
                                    - (L_k^dag L_k rho + rho L_k^dag L_k) / 2 )
               + D(rho) / hbar

with the pure-dephasing generator

    D(rho) = - gamma_d1 (P_x rho P_g + P_g rho P_x)
             - gamma_d2 (P_xx rho P_x + P_x rho P_xx)

which damps the x-g coherence at gamma_d1 and the xx-x coherence at
gamma_d2 while leaving populations and the xx-g coherence alone. All
energies are in ueV and times in ps, so every rate enters divided by
HBAR_UEV_PS.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import operators
from .errors import NumericalError
from .model import RotatingFrameHamiltonian, collapse_operators
from .operators import HBAR_UEV_PS

# hard abort thresholds for accepted integrator output
_TRACE_ABORT = 1e-6
_EIG_ABORT = -1e-6

SERIES_NAMES = (
    "cavity_photon_number",
    "exciton_population",
    "biexciton_population",
    "joint_intensity_Ixc",
    "effective_coupling",
    "output_flux",
    "emitter_intensity",
)


def ground_state_density(space):
    """|g, 0><g, 0| on the composite space."""
    vec = space.basis_state("g", 0)
    return np.outer(vec, vec.conj())


def expectation(rho, op):
    """Tr(op rho), complex."""
    rho = np.asarray(rho)
    op = np.asarray(op)
    if rho.shape != op.shape:
        raise ValueError(f"shape mismatch {rho.shape} vs {op.shape}")
    return complex(np.einsum("ij,ji->", op, rho))


def validate_density_matrix(rho, trace_tol=1e-8, herm_tol=1e-8, eig_floor=-1e-8):
    """Raise NumericalError unless rho is a density matrix within tolerances."""
    rho = np.asarray(rho)
    if not np.all(np.isfinite(rho)):
        raise NumericalError("density matrix contains non-finite entries")
    drift = abs(np.trace(rho) - 1.0)
    if drift > trace_tol:
        raise NumericalError(f"density matrix trace deviates from 1 by {drift:.3e}")
    herm = float(np.max(np.abs(rho - rho.conj().T)))
    if herm > herm_tol:
        raise NumericalError(f"density matrix hermiticity deviation {herm:.3e}")
    low = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2.0)[0])
    if low < eig_floor:
        raise NumericalError(f"density matrix has negative eigenvalue {low:.3e}")


def dephasing_term(rho, params):
    """The pure-dephasing generator D(rho), literal projector-sandwich form.

    Returned in energy units (divide by hbar for a rate). Traceless by
    construction since every sandwich P_a rho P_b with a != b has zero
    diagonal.
    """
    space = params.space
    p_g = operators.projector(space, "g")
    p_x = operators.projector(space, "x")
    p_xx = operators.projector(space, "xx")
    out = -params.gamma_d1 * (p_x @ rho @ p_g + p_g @ rho @ p_x)
    out -= params.gamma_d2 * (p_xx @ rho @ p_x + p_x @ rho @ p_xx)
    return out


def _level_indicator(space, level):
    vec = np.zeros(space.dim)
    idx = operators.LEVEL_INDEX[level] * space.n_fock
    vec[idx:idx + space.n_fock] = 1.0
    return vec


def dephasing_weights(params):
    """Elementwise weights W with D(rho) = W * rho (rates in ueV).

    Fast equivalent of :func:`dephasing_term`: the projector sandwiches only
    mask coherence blocks, so the generator is diagonal in the matrix-element
    basis.
    """
    space = params.space
    ind = {lv: _level_indicator(space, lv) for lv in operators.LEVELS}
    w = np.zeros((space.dim, space.dim))
    w -= params.gamma_d1 * (np.outer(ind["x"], ind["g"]) + np.outer(ind["g"], ind["x"]))
    w -= params.gamma_d2 * (np.outer(ind["xx"], ind["x"]) + np.outer(ind["x"], ind["xx"]))
    return w


class LindbladGenerator:
    """Precomputed right-hand side of the master equation.

    hamiltonian may be a matrix (static) or a callable t -> matrix;
    collapse_ops defaults to the three radiative channels of params.
    Dephasing rates are taken from params.
    """

    def __init__(self, params, hamiltonian, collapse_ops=None):
        self.params = params
        self.dim = params.space.dim
        if callable(hamiltonian):
            self._h_fn = hamiltonian
            self._h_static = None
            if isinstance(hamiltonian, RotatingFrameHamiltonian) and hamiltonian.is_static:
                self._h_static = hamiltonian(0.0)
        else:
            self._h_static = np.asarray(hamiltonian, dtype=complex)
            self._h_fn = None
            if self._h_static.shape != (self.dim, self.dim):
                raise ValueError(
                    f"hamiltonian shape {self._h_static.shape} does not match space dim {self.dim}")
        if collapse_ops is None:
            collapse_ops = collapse_operators(params)
        self._channels = []
        for l in collapse_ops:
            l = np.asarray(l, dtype=complex)
            if l.shape != (self.dim, self.dim):
                raise ValueError(f"collapse operator shape {l.shape} does not match space dim {self.dim}")
            ldag = l.conj().T
            self._channels.append((l, ldag, ldag @ l))
        if params.gamma_d1 != 0.0 or params.gamma_d2 != 0.0:
            self._deph = dephasing_weights(params) / HBAR_UEV_PS
        else:
            self._deph = None

    def hamiltonian(self, t):
        if self._h_static is not None:
            return self._h_static
        return self._h_fn(t)

    def rhs_matrix(self, t, rho):
        h = self.hamiltonian(t)
        out = (-1j / HBAR_UEV_PS) * (h @ rho - rho @ h)
        for l, ldag, ldagl in self._channels:
            out += (l @ rho @ ldag - 0.5 * (ldagl @ rho + rho @ ldagl)) / HBAR_UEV_PS
        if self._deph is not None:
            out += self._deph * rho
        return out

    def rhs_flat(self, t, y):
        rho = y.reshape(self.dim, self.dim)
        return self.rhs_matrix(t, rho).ravel()


def lindblad_rhs(rho, h, collapse_ops, params):
    """d rho / dt for a single state; see the module docstring for the form."""
    rho = np.asarray(rho, dtype=complex)
    gen = LindbladGenerator(params, np.asarray(h, dtype=complex), collapse_ops)
    if rho.shape != (gen.dim, gen.dim):
        raise ValueError(f"rho shape {rho.shape} does not match space dim {gen.dim}")
    return gen.rhs_matrix(0.0, rho)


def _integrate(gen, m0, t_eval, tol, max_step, density_checks=True):
    """Integrate the generator from m0 at t_eval[0], returning states at t_eval.

    density_checks enforces the trace/positivity invariants expected of a
    physical density matrix; conditional (collapsed) matrices skip them and
    only require finiteness and hermiticity.
    """
    t_eval = np.asarray(t_eval, dtype=float)
    dim = gen.dim
    m0 = np.asarray(m0, dtype=complex)
    info = {"n_rhs_evaluations": 0, "max_trace_drift": 0.0,
            "max_hermiticity_error": 0.0, "min_eigenvalue": 0.0}
    if len(t_eval) == 1:
        return np.array([m0]), info
    sol = solve_ivp(
        gen.rhs_flat, (t_eval[0], t_eval[-1]), m0.ravel(),
        method="RK45", t_eval=t_eval, rtol=tol, atol=tol,
        max_step=max_step if max_step is not None else np.inf,
    )
    if not sol.success:
        raise NumericalError(f"integration failed: {sol.message}")
    if sol.y.shape[1] != len(t_eval):
        raise NumericalError("integrator did not reach the end of the grid")
    states = np.ascontiguousarray(sol.y.T).reshape(len(t_eval), dim, dim)
    info["n_rhs_evaluations"] = int(sol.nfev)
    if not np.all(np.isfinite(states)):
        raise NumericalError("integration produced non-finite entries")
    herm = float(np.max(np.abs(states - states.conj().transpose(0, 2, 1))))
    info["max_hermiticity_error"] = herm
    if density_checks:
        traces = np.einsum("tii->t", states)
        drift = float(np.max(np.abs(traces - 1.0)))
        info["max_trace_drift"] = drift
        if drift > _TRACE_ABORT:
            k = int(np.argmax(np.abs(traces - 1.0)))
            raise NumericalError(
                f"trace drift {drift:.3e} at t = {t_eval[k]:g} ps exceeds {_TRACE_ABORT:g}")
        low = min(float(np.linalg.eigvalsh((s + s.conj().T) / 2.0)[0]) for s in states)
        info["min_eigenvalue"] = low
        if low < _EIG_ABORT:
            raise NumericalError(
                f"density matrix eigenvalue {low:.3e} below {_EIG_ABORT:g}")
    return states, info


@dataclass
class Trajectory:
    """Time grid, observable series and integration diagnostics."""

    times: np.ndarray
    series: dict
    states: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)


def _series_from_states(params, states):
    space = params.space
    n_op = operators.number_operator(space)
    p_x = operators.projector(space, "x")
    p_xx = operators.projector(space, "xx")
    nbar = np.einsum("ij,tji->t", n_op, states).real
    pop_x = np.einsum("ij,tji->t", p_x, states).real
    pop_xx = np.einsum("ij,tji->t", p_xx, states).real
    joint = np.einsum("ij,tji->t", n_op @ p_x, states).real
    return {
        "cavity_photon_number": nbar,
        "exciton_population": pop_x,
        "biexciton_population": pop_xx,
        "joint_intensity_Ixc": joint,
        "effective_coupling": params.g * np.sqrt(np.abs(pop_x - pop_xx)),
        "output_flux": (params.gamma_c_out / HBAR_UEV_PS) * nbar,
        "emitter_intensity": pop_x.copy(),
    }


def _check_time_grid(t_grid):
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) < 1:
        raise ValueError("time grid must be a non-empty 1-d array")
    if len(t_grid) > 1 and np.any(np.diff(t_grid) <= 0.0):
        raise ValueError("time grid must be strictly increasing")
    if not np.all(np.isfinite(t_grid)):
        raise ValueError("time grid must be finite")
    return t_grid


def propagate(params, drives, t_grid, rho0=None, tol=1e-9,
              include_detuned_terms=True, store_states=False):
    """Propagate the pulsed-frame master equation over t_grid.

    rho0 defaults to the ground state |g,0><g,0| and is taken at t_grid[0].
    Returns a Trajectory with all named observable series.
    """
    t_grid = _check_time_grid(t_grid)
    h = RotatingFrameHamiltonian(params, drives, include_detuned_terms)
    return propagate_hamiltonian(params, h, t_grid, rho0=rho0, tol=tol,
                                 max_step=h.suggested_max_step,
                                 store_states=store_states)


def propagate_hamiltonian(params, hamiltonian, t_grid, rho0=None, tol=1e-9,
                          max_step=None, collapse_ops=None, store_states=False):
    """Propagate under an explicit Hamiltonian (matrix or callable t -> matrix)."""
    t_grid = _check_time_grid(t_grid)
    space = params.space
    if rho0 is None:
        rho0 = ground_state_density(space)
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (space.dim, space.dim):
        raise ValueError(f"rho0 shape {rho0.shape} does not match space dim {space.dim}")
    validate_density_matrix(rho0)
    gen = LindbladGenerator(params, hamiltonian, collapse_ops)
    started = time.perf_counter()
    states, info = _integrate(gen, rho0, t_grid, tol, max_step, density_checks=True)
    info["wall_time_s"] = time.perf_counter() - started
    info["tolerance"] = tol
    series = _series_from_states(params, states)
    return Trajectory(times=t_grid, series=series,
                      states=states if store_states else None, diagnostics=info)


def joint_intensity(rho, space):
    """<a^dag a sigma_x,x>, the equal-time photon-exciton coincidence rate."""
    op = operators.number_operator(space) @ operators.projector(space, "x")
    return expectation(rho, op).real


def effective_coupling(rho, params):
    """g * sqrt(|<sigma_x,x> - <sigma_xx,xx>|), the population-weighted coupling."""
    space = params.space
    pop_x = expectation(rho, operators.projector(space, "x")).real
    pop_xx = expectation(rho, operators.projector(space, "xx")).real
    return params.g * np.sqrt(abs(pop_x - pop_xx))


def output_flux(rho, params):
    """Detected photon flux (gamma_c_out / hbar) <a^dag a>, in 1/ps."""
    nbar = expectation(rho, operators.number_operator(params.space)).real
    return (params.gamma_c_out / HBAR_UEV_PS) * nbar


def emitter_intensity(rho, space):
    """Exciton emission intensity; proportional to <sigma_x,x>."""
    return expectation(rho, operators.projector(space, "x")).real


def check_cutoff_convergence(params, drives, t_grid, n1, n2, tol=1e-9,
                             include_detuned_terms=True):
    """Max absolute deviation over all observable series between cutoffs n1 < n2."""
    if not (0 <= n1 < n2):
        raise ValueError(f"need 0 <= n1 < n2, got {n1}, {n2}")
    from dataclasses import replace
    results = []
    for n in (n1, n2):
        p = replace(params, fock_cutoff=n)
        results.append(propagate(p, drives, t_grid, tol=tol,
                                 include_detuned_terms=include_detuned_terms))
    worst = 0.0
    for name in SERIES_NAMES:
        worst = max(worst, float(np.max(np.abs(results[0].series[name] - results[1].series[name]))))
    return worst
