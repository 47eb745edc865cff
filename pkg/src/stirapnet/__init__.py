"""Open-system simulation of spin-ensemble quantum interfaces between flux qubits and optical photons.

Single nodes swap a flux-qubit excitation into a cavity photon by STIRAP
through a dispersively coupled spin ensemble; two nodes joined by a one-way
fibre transfer the excitation from qubit A to qubit B.
"""
from .algebra import (SINK, CollapseChannel, ControlledHamiltonian, Generator, OesBasis, Trajectory,
                      apply_generator, dissipator, evolve)
from .analysis import (CavityState, antisymmetric_mode_population, fidelity, reduce_to_cavity,
                       wigner)
from .ensemble import EnsembleSpec, SpinGroup, sample_ensemble
from .errors import ConfigurationError, IntegrationError, SingularDetuningError
from .network import (ChiralLink, NetworkModel, NetworkParams, build_chiral_term,
                      build_network_generator, run_transfer)
from .node import (NodeParams, build_collapse_channels, build_effective_hamiltonian,
                   build_full_oracle_hamiltonian, cavity_shift, single_node_generator)
from .pulses import (Envelope, PulseSchedule, bessel_j1, inverse_j1, network_schedule,
                     resonance_conditions, stirap_schedule)

__version__ = "0.1.0"
