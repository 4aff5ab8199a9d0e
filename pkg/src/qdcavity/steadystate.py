"""Vectorized Liouvillian, steady-state solve and CW spectrum sweeps.

Vectorization is column-stacking: vec(rho)[i + j*d] = rho[i, j], i.e.
``vec = rho.ravel(order="F")``, under which vec(A rho B) =
(B^T kron A) vec(rho). The Liouvillian is carried as a plain (d^2, d^2)
complex array in units of 1/ps.

The steady state solves L vec(rho) = 0 with the trace constraint imposed
by replacing one row of L with the trace functional and setting that RHS
entry to 1. Uniqueness is probed by re-solving with the trace row in a
different position; the solutions agree only when the nullspace is
one-dimensional.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import operators
from .errors import SteadyStateError
from .model import build_static_rwa_hamiltonian, collapse_operators
from .operators import HBAR_UEV_PS


def vec(rho):
    """Column-stack a matrix."""
    return np.asarray(rho).ravel(order="F")


def unvec(v):
    """Inverse of :func:`vec`."""
    v = np.asarray(v)
    d = math.isqrt(v.size)
    if d * d != v.size:
        raise ValueError(f"vector length {v.size} is not a perfect square")
    return v.reshape(d, d, order="F")


def build_liouvillian(h, collapse_ops, params=None):
    """Superoperator matrix of the master equation (1/ps units).

    params, when given, contributes the pure-dephasing generator (its space
    must match h); pass None for generic systems without dephasing.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"hamiltonian must be square, got {h.shape}")
    d = h.shape[0]
    eye = np.eye(d, dtype=complex)
    lv = (-1j / HBAR_UEV_PS) * (np.kron(eye, h) - np.kron(h.T, eye))
    for l in collapse_ops:
        l = np.asarray(l, dtype=complex)
        if l.shape != (d, d):
            raise ValueError(f"collapse operator shape {l.shape} does not match {h.shape}")
        ldagl = l.conj().T @ l
        lv += (np.kron(l.conj(), l)
               - 0.5 * np.kron(eye, ldagl)
               - 0.5 * np.kron(ldagl.T, eye)) / HBAR_UEV_PS
    if params is not None and (params.gamma_d1 != 0.0 or params.gamma_d2 != 0.0):
        space = params.space
        if space.dim != d:
            raise ValueError(f"params space dim {space.dim} does not match hamiltonian dim {d}")
        p_g = operators.projector(space, "g")
        p_x = operators.projector(space, "x")
        p_xx = operators.projector(space, "xx")
        # projectors are real diagonal, so B^T = B in vec(P_a rho P_b)
        lv -= (params.gamma_d1 / HBAR_UEV_PS) * (np.kron(p_g, p_x) + np.kron(p_x, p_g))
        lv -= (params.gamma_d2 / HBAR_UEV_PS) * (np.kron(p_x, p_xx) + np.kron(p_xx, p_x))
    return lv


def _trace_row(d):
    row = np.zeros(d * d, dtype=complex)
    row[np.arange(d) * (d + 1)] = 1.0
    return row


def steady_state(liouv, residual_tol=1e-9, uniqueness_tol=1e-6, verify_unique=True):
    """Unique trace-one fixed point of the Liouvillian, as a density matrix."""
    liouv = np.asarray(liouv)
    n = liouv.shape[0]
    d = math.isqrt(n)
    if liouv.ndim != 2 or liouv.shape != (n, n) or d * d != n:
        raise ValueError(f"Liouvillian must be (d^2, d^2), got {liouv.shape}")
    trace_row = _trace_row(d)
    rhs = np.zeros(n, dtype=complex)

    def solve_with_row(row_index):
        a = liouv.copy()
        a[row_index] = trace_row
        b = rhs.copy()
        b[row_index] = 1.0
        try:
            return np.linalg.solve(a, b)
        except np.linalg.LinAlgError as exc:
            raise SteadyStateError(
                f"steady state is not unique (reduced system singular, row {row_index})") from exc

    x = solve_with_row(0)
    residual = liouv @ x
    residual[0] = 0.0
    worst = float(np.max(np.abs(residual)))
    if worst > residual_tol:
        raise SteadyStateError(
            f"steady-state residual {worst:.3e} exceeds {residual_tol:g}; "
            "the Liouvillian is ill-conditioned or has a degenerate kernel")
    if verify_unique:
        x_alt = solve_with_row(n - 1)
        gap = float(np.max(np.abs(x - x_alt)))
        if gap > uniqueness_tol:
            raise SteadyStateError(
                f"steady state is not unique (two trace-row placements differ by {gap:.3e})")
    rho = unvec(x)
    rho = (rho + rho.conj().T) / 2.0
    trace = float(np.trace(rho).real)
    if abs(trace - 1.0) > 1e-8:
        raise SteadyStateError(f"steady-state trace {trace} deviates from 1")
    rho = rho / trace
    low = float(np.linalg.eigvalsh(rho)[0])
    if low < -1e-8:
        raise SteadyStateError(f"steady state has negative eigenvalue {low:.3e}")
    return rho


@dataclass
class Spectrum:
    """Steady-state observables versus cavity-drive detuning."""

    detuning_axis: np.ndarray
    cavity_photon_number: np.ndarray
    joint_intensity_Ixc: np.ndarray


def _sweep_point(args):
    params, e_in, e_c, detuning, verify_unique = args
    h = build_static_rwa_hamiltonian(params, cavity_drive_detuning=detuning,
                                     control_drive_detuning=0.0, e_in=e_in, e_c=e_c)
    lv = build_liouvillian(h, collapse_operators(params), params)
    try:
        rho = steady_state(lv, verify_unique=verify_unique)
    except SteadyStateError as exc:
        raise SteadyStateError(f"detuning {detuning:g} ueV: {exc}") from exc
    space = params.space
    n_op = operators.number_operator(space)
    p_x = operators.projector(space, "x")
    nbar = float(np.einsum("ij,ji->", n_op, rho).real)
    joint = float(np.einsum("ij,ji->", n_op @ p_x, rho).real)
    return nbar, joint


def spectrum_sweep(params, e_in, e_c, detuning_axis, workers=1, verify_unique=True):
    """Sweep the cavity-drive detuning with the control held resonant.

    e_in and e_c are the CW amplitudes in ueV (>= 0); returns a Spectrum
    sampled on detuning_axis.
    """
    detuning_axis = np.asarray(detuning_axis, dtype=float)
    if detuning_axis.ndim != 1 or len(detuning_axis) == 0:
        raise ValueError("detuning_axis must be a non-empty 1-d array")
    if not np.all(np.isfinite(detuning_axis)):
        raise ValueError("detuning_axis must be finite")
    for name, value in (("e_in", e_in), ("e_c", e_c)):
        if not math.isfinite(value) or value < 0.0:
            raise ValueError(f"{name} must be >= 0, got {value}")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    jobs = [(params, e_in, e_c, float(dd), verify_unique) for dd in detuning_axis]
    if workers == 1:
        points = [_sweep_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_sweep_point, jobs))
    nbar = np.array([p[0] for p in points])
    joint = np.array([p[1] for p in points])
    return Spectrum(detuning_axis=detuning_axis, cavity_photon_number=nbar,
                    joint_intensity_Ixc=joint)
