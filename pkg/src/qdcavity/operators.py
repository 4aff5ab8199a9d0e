"""Dense operator algebra on the quantum-dot / cavity product space.

Units: energies in micro-eV (ueV), times in picoseconds (ps). The single
unit bridge is ``HBAR_UEV_PS``; angular rates are energy / hbar, in rad/ps.

Basis convention, fixed package-wide: the emitter levels are ordered
``("g", "x", "xx")`` and the composite index is QD-major, Fock-minor,

    index(level, n) = level_position * (fock_cutoff + 1) + n

so full-space operators are built as ``np.kron(qd_part, fock_part)``.
All operators and states are dense complex ``numpy`` arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

HBAR_UEV_PS = 658.2119569  # hbar in ueV * ps

LEVELS = ("g", "x", "xx")
LEVEL_INDEX = {name: i for i, name in enumerate(LEVELS)}


def energy_to_angular_rate(energy_uev):
    """Convert an energy in ueV to an angular rate in rad/ps."""
    return energy_uev / HBAR_UEV_PS


@dataclass(frozen=True)
class HilbertSpace:
    """Three-level emitter ladder times a photon space truncated at fock_cutoff."""

    fock_cutoff: int

    def __post_init__(self):
        if self.fock_cutoff < 0:
            raise ValueError("fock_cutoff must be >= 0")

    @property
    def n_fock(self):
        return self.fock_cutoff + 1

    @property
    def dim(self):
        return 3 * self.n_fock

    def index(self, level, n):
        """Composite basis index of |level, n photons>."""
        if level not in LEVEL_INDEX:
            raise ValueError(f"unknown level {level!r}, expected one of {LEVELS}")
        if not 0 <= n <= self.fock_cutoff:
            raise ValueError(f"photon number {n} outside cutoff {self.fock_cutoff}")
        return LEVEL_INDEX[level] * self.n_fock + n

    def level_and_photon(self, index):
        """Inverse of :meth:`index`."""
        if not 0 <= index < self.dim:
            raise ValueError(f"index {index} outside dimension {self.dim}")
        return LEVELS[index // self.n_fock], index % self.n_fock

    def basis_state(self, level, n):
        vec = np.zeros(self.dim, dtype=complex)
        vec[self.index(level, n)] = 1.0
        return vec


def _frozen(m):
    # cached operators are shared between callers, so guard against in-place edits
    m.flags.writeable = False
    return m


@lru_cache(maxsize=None)
def annihilation(space):
    """Photon annihilation on the full space, 1_qd (x) a."""
    a = np.diag(np.sqrt(np.arange(1, space.n_fock, dtype=float)), k=1).astype(complex)
    return _frozen(np.kron(np.eye(3, dtype=complex), a))


@lru_cache(maxsize=None)
def creation(space):
    """Photon creation on the full space, 1_qd (x) a^dag."""
    return _frozen(np.ascontiguousarray(dagger(annihilation(space))))


@lru_cache(maxsize=None)
def number_operator(space):
    """Photon number a^dag a on the full space."""
    return _frozen(creation(space) @ annihilation(space))


@lru_cache(maxsize=None)
def transition(space, to_level, from_level):
    """Emitter operator |to_level><from_level| (x) 1_fock."""
    for lv in (to_level, from_level):
        if lv not in LEVEL_INDEX:
            raise ValueError(f"unknown level {lv!r}, expected one of {LEVELS}")
    e = np.zeros((3, 3), dtype=complex)
    e[LEVEL_INDEX[to_level], LEVEL_INDEX[from_level]] = 1.0
    return _frozen(np.kron(e, np.eye(space.n_fock, dtype=complex)))


def projector(space, level):
    """Population projector |level><level| (x) 1_fock."""
    return transition(space, level, level)


def identity(space):
    return np.eye(space.dim, dtype=complex)


def dagger(m):
    """Conjugate transpose."""
    return np.asarray(m).conj().T


def commutator(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"commutator needs equal square matrices, got {a.shape} and {b.shape}")
    return a @ b - b @ a


def solve_linear(m, rhs):
    """Solve m @ x = rhs by LU with partial pivoting.

    Raises numpy.linalg.LinAlgError when pivoting detects a singular matrix,
    ValueError on shape mismatch.
    """
    m = np.asarray(m)
    rhs = np.asarray(rhs)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got shape {m.shape}")
    if rhs.shape[0] != m.shape[0]:
        raise ValueError(f"rhs length {rhs.shape[0]} does not match matrix dimension {m.shape[0]}")
    return np.linalg.solve(m, rhs)


def hermitian_min_eigenvalue(m, herm_tol=1e-10):
    """Smallest eigenvalue of a Hermitian matrix.

    Rejects inputs whose anti-Hermitian part exceeds herm_tol so that the
    realness of the result is meaningful.
    """
    m = np.asarray(m)
    deviation = float(np.max(np.abs(m - dagger(m)))) if m.size else 0.0
    if deviation > herm_tol:
        raise ValueError(f"matrix is not Hermitian within {herm_tol:g} (deviation {deviation:.3e})")
    return float(np.linalg.eigvalsh((m + dagger(m)) / 2.0)[0])
