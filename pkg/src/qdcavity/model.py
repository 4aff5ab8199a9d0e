"""System parameters, drive envelopes, Hamiltonians and loss channels.

The emitter is a three-level ladder g -> x -> xx with the upper transition
(x -> xx) pulled down by the binding energy ``delta`` so that the cavity,
tuned to omega_c = omega_x + delta... more precisely omega_xx - omega_x,
is resonant with x <-> xx and detuned by ``delta`` from g <-> x.

Two frames are provided.

Pulsed frame (``RotatingFrameHamiltonian``): every level and the mode
rotate at their bare frequencies, the control carrier is locked to the
g-x transition and the cavity-drive carrier to the mode. The x-xx
exchange ``g (a^dag sigma_x,xx + H.c.)`` and the resonant drive terms are
then static; the far-detuned cross terms survive with explicit
``exp(+/- i (delta - detuning) t / hbar)`` phase factors. Those fast terms
produce sub-ps ripples at period 2 pi hbar / delta and can be dropped
with ``include_detuned_terms=False``.

CW two-tone frame (``build_static_rwa_hamiltonian``): rotating at the two
drive carriers absorbs the drive detunings into diagonal terms and the
cross terms are dropped entirely (secular approximation, valid while the
binding energy dwarfs every linewidth and drive strength). The result is
time independent, which is what the steady-state solver needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import operators
from .operators import HBAR_UEV_PS, HilbertSpace


@dataclass(frozen=True)
class SystemParams:
    """Static system parameters. Energies and rates in ueV, cutoff dimensionless.

    gamma_c is the total cavity loss; gamma_c_out is the part routed to the
    detector (defaults to gamma_c). gamma_d1 / gamma_d2 are the pure-dephasing
    rates of the x and xx levels.
    """

    g: float
    delta: float
    gamma_c: float
    gamma_xx_x: float
    gamma_x_g: float
    omega_x: float = 0.0
    gamma_c_out: float | None = None
    gamma_d1: float = 0.0
    gamma_d2: float = 0.0
    fock_cutoff: int = 5

    def __post_init__(self):
        if self.gamma_c_out is None:
            object.__setattr__(self, "gamma_c_out", float(self.gamma_c))
        for name in ("g", "gamma_c", "gamma_xx_x", "gamma_x_g", "gamma_c_out", "gamma_d1", "gamma_d2"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0.0:
                raise ValueError(f"{name} must be a finite value >= 0, got {value}")
        if not math.isfinite(self.delta):
            raise ValueError(f"delta must be finite, got {self.delta}")
        if not math.isfinite(self.omega_x):
            raise ValueError(f"omega_x must be finite, got {self.omega_x}")
        if self.gamma_c_out > self.gamma_c:
            raise ValueError(
                f"gamma_c_out ({self.gamma_c_out}) cannot exceed the total cavity loss gamma_c ({self.gamma_c})"
            )
        if int(self.fock_cutoff) != self.fock_cutoff or self.fock_cutoff < 0:
            raise ValueError(f"fock_cutoff must be an integer >= 0, got {self.fock_cutoff}")

    @property
    def omega_c(self):
        """Bare cavity frequency (energy units), resonant with x <-> xx."""
        return self.omega_x + self.delta

    @property
    def omega_xx(self):
        """Bare biexciton energy, 2 omega_x + delta."""
        return 2.0 * self.omega_x + self.delta

    @property
    def space(self):
        return HilbertSpace(self.fock_cutoff)


_FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


@dataclass(frozen=True)
class DriveEnvelope:
    """One coherent drive tone.

    kind "gaussian": pulse with ``area`` (units of pi) so that
    2 * integral(E dt) / hbar = area * pi, duration ``fwhm`` (ps, of the
    field envelope), centered at ``t_center``.
    kind "cw": constant field ``amplitude`` (ueV).

    target "qd" couples to sigma_x,g (control), target "cavity" to a^dag
    (photon injection). ``detuning`` offsets the carrier from the target
    transition (g-x for the qd, the mode for the cavity), in ueV.
    """

    kind: str
    target: str
    area: float = 0.0
    fwhm: float = 0.0
    t_center: float = 0.0
    amplitude: float = 0.0
    detuning: float = 0.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "cw"):
            raise ValueError(f"drive kind must be 'gaussian' or 'cw', got {self.kind!r}")
        if self.target not in ("qd", "cavity"):
            raise ValueError(f"drive target must be 'qd' or 'cavity', got {self.target!r}")
        if not math.isfinite(self.detuning):
            raise ValueError("drive detuning must be finite")
        if self.kind == "gaussian":
            if not math.isfinite(self.area):
                raise ValueError("pulse area must be finite")
            if not (math.isfinite(self.fwhm) and self.fwhm > 0.0):
                raise ValueError(f"pulse fwhm must be > 0, got {self.fwhm}")
            if not math.isfinite(self.t_center):
                raise ValueError("pulse t_center must be finite")
        else:
            if not math.isfinite(self.amplitude) or self.amplitude < 0.0:
                raise ValueError(f"cw amplitude must be >= 0, got {self.amplitude}")

    @classmethod
    def gaussian_pulse(cls, target, area, fwhm, t_center, detuning=0.0):
        return cls(kind="gaussian", target=target, area=area, fwhm=fwhm,
                   t_center=t_center, detuning=detuning)

    @classmethod
    def cw(cls, target, amplitude, detuning=0.0):
        return cls(kind="cw", target=target, amplitude=amplitude, detuning=detuning)


def gaussian_envelope(drive, t):
    """Field amplitude E(t) in ueV of a gaussian pulse, vectorized over t.

    Normalized so that 2 * integral(E dt) / hbar = area * pi; an area of 1
    inverts a resonant two-level transition.
    """
    if drive.kind != "gaussian":
        raise ValueError("gaussian_envelope needs a gaussian drive")
    sigma = drive.fwhm * _FWHM_TO_SIGMA
    theta = drive.area * math.pi
    peak = theta * HBAR_UEV_PS / (2.0 * sigma * math.sqrt(2.0 * math.pi))
    tau = np.asarray(t, dtype=float) - drive.t_center
    out = peak * np.exp(-0.5 * (tau / sigma) ** 2)
    return float(out) if np.ndim(out) == 0 else out


def drive_amplitude(drive, t):
    """Instantaneous field amplitude in ueV for either drive kind."""
    if drive.kind == "gaussian":
        return gaussian_envelope(drive, t)
    out = np.full(np.shape(t), drive.amplitude) if np.ndim(t) else drive.amplitude
    return out


class RotatingFrameHamiltonian:
    """Callable t -> H(t) (dense, ueV) in the pulsed rotating frame.

    Static part: g (a^dag sigma_x,xx + H.c.).
    Time-dependent part, each stored as (op, coefficient(t)) with
    H += c(t) op + conj(c(t)) op^dag:

      * residual cavity coupling  g e^{+i delta t/hbar} a^dag sigma_g,x
      * qd drive                  E(t) e^{-i detuning t/hbar} sigma_x,g
        and, when detuned terms are kept, the same field driving the upper
        transition E(t) e^{+i (delta - detuning) t/hbar} sigma_xx,x
      * cavity drive              E(t) e^{-i detuning t/hbar} a^dag
    """

    def __init__(self, params, drives=(), include_detuned_terms=True):
        self.params = params
        self.drives = tuple(drives)
        self.include_detuned_terms = bool(include_detuned_terms)
        space = params.space
        a_dag = operators.creation(space)
        coupling = params.g * (a_dag @ operators.transition(space, "x", "xx"))
        self._static = coupling + operators.dagger(coupling)
        delta_rate = params.delta / HBAR_UEV_PS
        self._terms = []  # (op, op_dag, coefficient callable)
        self._angular_rates = []
        self._pulse_fwhms = []

        def add(op, coeff, rate):
            self._terms.append((op, operators.dagger(op), coeff))
            if rate != 0.0:
                self._angular_rates.append(abs(rate))

        if self.include_detuned_terms and params.g != 0.0 and params.delta != 0.0:
            op = params.g * (a_dag @ operators.transition(space, "g", "x"))
            add(op, lambda t, w=delta_rate: np.exp(1j * w * t), delta_rate)
        elif params.g != 0.0 and params.delta == 0.0 and self.include_detuned_terms:
            # degenerate case: the "detuned" coupling is resonant too
            op = params.g * (a_dag @ operators.transition(space, "g", "x"))
            add(op, lambda t: 1.0 + 0.0j, 0.0)

        for d in self.drives:
            if d.kind == "gaussian":
                env = lambda t, dd=d: gaussian_envelope(dd, t)
                self._pulse_fwhms.append(d.fwhm)
            else:
                env = lambda t, amp=d.amplitude: amp
            det_rate = d.detuning / HBAR_UEV_PS
            if d.target == "cavity":
                add(a_dag, lambda t, e=env, w=det_rate: e(t) * np.exp(-1j * w * t), det_rate)
            else:
                add(operators.transition(space, "x", "g"),
                    lambda t, e=env, w=det_rate: e(t) * np.exp(-1j * w * t), det_rate)
                if self.include_detuned_terms:
                    w_up = delta_rate - det_rate
                    add(operators.transition(space, "xx", "x"),
                        lambda t, e=env, w=w_up: e(t) * np.exp(1j * w * t), w_up)

    @property
    def is_static(self):
        if self._pulse_fwhms:
            return False
        return not self._angular_rates

    @property
    def suggested_max_step(self):
        """Step cap in ps resolving the fastest explicit phase and pulse, or None."""
        caps = []
        if self._angular_rates:
            caps.append(2.0 * math.pi / max(self._angular_rates) / 20.0)
        if self._pulse_fwhms:
            caps.append(min(self._pulse_fwhms) / 4.0)
        return min(caps) if caps else None

    def __call__(self, t):
        h = self._static.copy()
        for op, op_dag, coeff in self._terms:
            c = coeff(t)
            h += c * op
            h += np.conj(c) * op_dag
        return h


def build_hamiltonian(params, drives, t, include_detuned_terms=True):
    """H(t) in the pulsed rotating frame at a single time."""
    return RotatingFrameHamiltonian(params, drives, include_detuned_terms)(t)


def build_static_rwa_hamiltonian(params, cavity_drive_detuning=0.0,
                                 control_drive_detuning=0.0, e_in=0.0, e_c=0.0):
    """Time-independent two-tone frame Hamiltonian for steady-state work.

    cavity_drive_detuning is the cavity-drive carrier offset from the mode,
    control_drive_detuning the control carrier offset from g-x; e_in / e_c
    are the constant field amplitudes (ueV).
    """
    space = params.space
    d_in = float(cavity_drive_detuning)
    d_c = float(control_drive_detuning)
    n_op = operators.number_operator(space)
    p_x = operators.projector(space, "x")
    p_xx = operators.projector(space, "xx")
    h = -d_c * p_x - (d_c + d_in) * p_xx - d_in * n_op
    raising = (params.g * (operators.creation(space) @ operators.transition(space, "x", "xx"))
               + e_c * operators.transition(space, "x", "g")
               + e_in * operators.creation(space))
    h = h + raising + operators.dagger(raising)
    return h


def collapse_operators(params):
    """The three radiative collapse channels, in fixed order.

    sqrt(gamma_c) a, sqrt(gamma_xx_x) sigma_x,xx, sqrt(gamma_x_g) sigma_g,x.
    Zero rates yield zero matrices (kept so channel count is invariant).
    """
    space = params.space
    return [
        math.sqrt(params.gamma_c) * operators.annihilation(space),
        math.sqrt(params.gamma_xx_x) * operators.transition(space, "x", "xx"),
        math.sqrt(params.gamma_x_g) * operators.transition(space, "g", "x"),
    ]
