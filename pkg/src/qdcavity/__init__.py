"""Dissipative quantum-dot / microcavity simulator.

Pulsed Lindblad dynamics of a three-level emitter ladder coupled to a
single cavity mode, two-time photon-exciton coincidence maps via the
quantum regression theorem, and CW steady-state spectra from the
vectorized Liouvillian.
"""

__version__ = "0.1.0"

from .config import ScenarioConfig, parse_config, preset, serialize_config
from .correlations import (CauchySchwarz, TwoTimeGrid, cauchy_schwarz_violation,
                           g2_cavity_equal_time, g2_cross_equal_time,
                           g2_exciton_equal_time, normalized_joint,
                           two_time_joint_intensity, two_time_with_normalization)
from .dynamics import (LindbladGenerator, Trajectory, check_cutoff_convergence,
                       dephasing_term, expectation, ground_state_density,
                       joint_intensity, lindblad_rhs, propagate,
                       propagate_hamiltonian, validate_density_matrix)
from .errors import ConfigError, NumericalError, QdCavityError, SteadyStateError
from .model import (DriveEnvelope, RotatingFrameHamiltonian, SystemParams,
                    build_hamiltonian, build_static_rwa_hamiltonian,
                    collapse_operators, gaussian_envelope)
from .operators import (HBAR_UEV_PS, HilbertSpace, annihilation, creation,
                        dagger, energy_to_angular_rate, number_operator,
                        projector, transition)
from .steadystate import (Spectrum, build_liouvillian, spectrum_sweep,
                          steady_state, unvec, vec)
