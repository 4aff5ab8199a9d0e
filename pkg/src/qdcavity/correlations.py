"""Two-time photon-exciton coincidences and equal-time correlation functions.

The two-detector coincidence map

    I_cx(t1, t2) = <sigma_x,g(t2) a^dag(t1) a(t1) sigma_g,x(t2)>   (t1 > t2)
                 = <a^dag(t1) sigma_x,g(t2) sigma_g,x(t2) a(t1)>   (t1 <= t2)

is evaluated with the quantum regression theorem: the earlier detector
collapses the state (a rho a^dag for the photon, sigma_g,x rho sigma_x,g
for the exciton), the collapsed matrix is propagated under the full
generator to the later time, and the later detector's operator is traced
there. Values are not renormalized; the trace of the collapsed matrix is
the first-detection probability and stays in the product.

Numerically each collapsed matrix is scaled to unit trace before
propagation and the scale is restored afterwards. The master equation is
linear, so this is exact, and it keeps the integrator's absolute error
control meaningful for entries that are ten orders of magnitude below 1.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import operators
from .dynamics import (LindbladGenerator, Trajectory, _check_time_grid, _integrate,
                       _series_from_states, ground_state_density)
from .model import RotatingFrameHamiltonian

_TIME_MATCH = 1e-9  # ps; grid times are compared to this absolute tolerance
_TRACE_FLOOR = 1e-300  # collapsed matrices with smaller trace contribute zero


@dataclass
class TwoTimeGrid:
    """Coincidence values on the product of two time axes.

    values[i, j] = I_cx(t1_axis[i], t2_axis[j]). normalized_values and
    normalized_defined are filled by normalized_joint.
    """

    t1_axis: np.ndarray
    t2_axis: np.ndarray
    values: np.ndarray
    normalized_values: np.ndarray | None = None
    normalized_defined: np.ndarray | None = None


def _measurement_operator(space, which):
    if which == "exciton":
        return operators.projector(space, "x")
    if which == "photon":
        return operators.number_operator(space)
    raise ValueError(f"unknown observable {which!r}")


def _conditional_values(params, drives, include_detuned_terms, tol, chi0, t_start,
                        eval_times, observe):
    """Trace of the named operator against the propagated collapsed matrix.

    Module-level so process pools can pickle it. eval_times must be
    increasing and >= t_start; entries equal to t_start are read off chi0
    directly.
    """
    eval_times = np.asarray(eval_times, dtype=float)
    out = np.zeros(len(eval_times))
    if len(eval_times) == 0:
        return out
    space = params.space
    op = _measurement_operator(space, observe)
    scale = float(np.trace(chi0).real)
    if scale <= _TRACE_FLOOR:
        return out
    at_start = np.isclose(eval_times, t_start, rtol=0.0, atol=_TIME_MATCH)
    if np.any(at_start):
        out[at_start] = np.einsum("ij,ji->", op, chi0).real
    later = ~at_start
    if np.any(later):
        h = RotatingFrameHamiltonian(params, drives, include_detuned_terms)
        gen = LindbladGenerator(params, h)
        t_eval = np.concatenate(([t_start], eval_times[later]))
        states, _ = _integrate(gen, chi0 / scale, t_eval, tol,
                               h.suggested_max_step, density_checks=False)
        out[later] = scale * np.einsum("ij,tji->t", op, states[1:]).real
    return out


def _conditional_task(args):
    kind, index, payload = args
    return kind, index, _conditional_values(*payload)


def _check_axis(axis, name):
    axis = _check_time_grid(axis)
    if axis[0] < 0.0:
        raise ValueError(f"{name} must not contain negative times")
    return axis


def _two_time_impl(params, drives, t1_axis, t2_axis, rho0, tol,
                   include_detuned_terms, workers):
    t1_axis = _check_axis(t1_axis, "t1_axis")
    t2_axis = _check_axis(t2_axis, "t2_axis")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    space = params.space
    if rho0 is None:
        rho0 = ground_state_density(space)

    t_union = np.union1d(t1_axis, t2_axis)
    if t_union[0] > 0.0:
        t_union = np.concatenate(([0.0], t_union))
    h = RotatingFrameHamiltonian(params, drives, include_detuned_terms)
    gen = LindbladGenerator(params, h)
    states, info = _integrate(gen, np.asarray(rho0, dtype=complex), t_union, tol,
                              h.suggested_max_step, density_checks=True)

    def state_at(t):
        k = int(np.searchsorted(t_union, t))
        for kk in (k, k - 1, k + 1):
            if 0 <= kk < len(t_union) and abs(t_union[kk] - t) <= _TIME_MATCH:
                return states[kk]
        raise RuntimeError(f"time {t} missing from the union grid")

    a = operators.annihilation(space)
    a_dag = operators.creation(space)
    s_gx = operators.transition(space, "g", "x")
    s_xg = operators.transition(space, "x", "g")

    tasks = []
    for i, t1 in enumerate(t1_axis):
        chi0 = a @ state_at(t1) @ a_dag
        evals = t2_axis[t2_axis >= t1 - _TIME_MATCH]
        tasks.append(("row", i, (params, drives, include_detuned_terms, tol,
                                 chi0, t1, evals, "exciton")))
    for j, t2 in enumerate(t2_axis):
        chi0 = s_gx @ state_at(t2) @ s_xg
        evals = t1_axis[t1_axis > t2 + _TIME_MATCH]
        tasks.append(("col", j, (params, drives, include_detuned_terms, tol,
                                 chi0, t2, evals, "photon")))

    if workers == 1:
        results = map(_conditional_task, tasks)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_conditional_task, tasks))

    values = np.zeros((len(t1_axis), len(t2_axis)))
    for kind, index, vals in results:
        if kind == "row":
            mask = t2_axis >= t1_axis[index] - _TIME_MATCH
            values[index, mask] = vals
        else:
            mask = t1_axis > t2_axis[index] + _TIME_MATCH
            values[mask, index] = vals

    grid = TwoTimeGrid(t1_axis=t1_axis, t2_axis=t2_axis, values=values)
    trajectory = Trajectory(times=t_union, series=_series_from_states(params, states),
                            states=None, diagnostics=info)
    return grid, trajectory


def two_time_joint_intensity(params, drives, t1_axis, t2_axis, rho0=None,
                             tol=1e-9, include_detuned_terms=True, workers=1):
    """I_cx on the product grid; see the module docstring for conventions."""
    grid, _ = _two_time_impl(params, drives, t1_axis, t2_axis, rho0, tol,
                             include_detuned_terms, workers)
    return grid


def two_time_with_normalization(params, drives, t1_axis, t2_axis, rho0=None,
                                tol=1e-9, include_detuned_terms=True, workers=1,
                                floor=1e-12):
    """Coincidence grid plus the single-time trajectory, with P^N filled in."""
    grid, trajectory = _two_time_impl(params, drives, t1_axis, t2_axis, rho0, tol,
                                      include_detuned_terms, workers)
    return normalized_joint(grid, trajectory, floor=floor), trajectory


def _series_at(trajectory, name, times):
    """Exact-time lookup of a trajectory series at the requested times."""
    out = np.empty(len(times))
    for k, t in enumerate(np.asarray(times, dtype=float)):
        i = int(np.searchsorted(trajectory.times, t))
        hit = None
        for ii in (i, i - 1, i + 1):
            if 0 <= ii < len(trajectory.times) and abs(trajectory.times[ii] - t) <= _TIME_MATCH:
                hit = ii
                break
        if hit is None:
            raise ValueError(f"trajectory does not contain time {t:g} ps")
        out[k] = trajectory.series[name][hit]
    return out


def normalized_joint(grid, trajectory, floor=1e-12):
    """P^N(t1, t2) = I_cx / (<a^dag a>(t1) <sigma_x,x>(t2)).

    Entries whose denominator factors fall at or below floor are flagged
    undefined (NaN value, defined mask False) rather than divided.
    """
    nbar = _series_at(trajectory, "cavity_photon_number", grid.t1_axis)
    pop_x = _series_at(trajectory, "exciton_population", grid.t2_axis)
    defined = (nbar[:, None] > floor) & (pop_x[None, :] > floor)
    denom = np.outer(nbar, pop_x)
    normalized = np.full_like(grid.values, np.nan)
    np.divide(grid.values, denom, out=normalized, where=defined)
    return replace(grid, normalized_values=normalized, normalized_defined=defined)


def g2_cross_equal_time(rho, space, floor=1e-12):
    """g2_cx = <a^dag a sigma_x,x> / (<a^dag a> <sigma_x,x>); NaN if undefined."""
    n_op = operators.number_operator(space)
    p_x = operators.projector(space, "x")
    nbar = np.einsum("ij,ji->", n_op, rho).real
    pop = np.einsum("ij,ji->", p_x, rho).real
    if nbar <= floor or pop <= floor:
        return float("nan")
    joint = np.einsum("ij,ji->", n_op @ p_x, rho).real
    return float(joint / (nbar * pop))


def g2_cavity_equal_time(rho, space, floor=1e-12):
    """g2_c = <a^dag a^dag a a> / <a^dag a>^2; NaN if undefined."""
    a = operators.annihilation(space)
    a_dag = operators.creation(space)
    nbar = np.einsum("ij,ji->", a_dag @ a, rho).real
    if nbar <= floor:
        return float("nan")
    num = np.einsum("ij,ji->", a_dag @ a_dag @ a @ a, rho).real
    return float(num / nbar**2)


def g2_exciton_equal_time(rho, space, floor=1e-12):
    """g2_x with the normal-ordered numerator <s_xg s_xg s_gx s_gx>.

    On the three-level ladder sigma_g,x sigma_g,x is the zero matrix, so the
    numerator vanishes identically; the value is 0 whenever the denominator
    <sigma_x,x>^2 is defined and NaN otherwise. The operator product is built
    literally rather than short-circuited.
    """
    s_gx = operators.transition(space, "g", "x")
    s_xg = operators.transition(space, "x", "g")
    pop = np.einsum("ij,ji->", operators.projector(space, "x"), rho).real
    if pop <= floor:
        return float("nan")
    num = np.einsum("ij,ji->", s_xg @ s_xg @ s_gx @ s_gx, rho).real
    return float(num / pop**2)


@dataclass(frozen=True)
class CauchySchwarz:
    """Equal-time Cauchy-Schwarz test [g2_cx]^2 <= g2_c * g2_x."""

    lhs: float
    rhs: float
    violated: bool
    defined: bool


def cauchy_schwarz_violation(rho, space, floor=1e-12, slack=1e-12):
    """Evaluate the classical inequality [g2_cx]^2 <= g2_c g2_x at equal time.

    violated is True when lhs exceeds rhs by more than slack; defined is
    False (and violated False) when any of the three correlators is
    undefined at the given floor.
    """
    cx = g2_cross_equal_time(rho, space, floor=floor)
    cc = g2_cavity_equal_time(rho, space, floor=floor)
    xx = g2_exciton_equal_time(rho, space, floor=floor)
    if any(np.isnan(v) for v in (cx, cc, xx)):
        return CauchySchwarz(lhs=float("nan"), rhs=float("nan"),
                             violated=False, defined=False)
    lhs = cx**2
    rhs = cc * xx
    return CauchySchwarz(lhs=lhs, rhs=rhs, violated=bool(lhs > rhs + slack), defined=True)
