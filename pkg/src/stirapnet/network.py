"""Two nodes joined by a one-way optical channel (A -> B)."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analysis import antisymmetric_mode_population
from .algebra import SINK, ControlledHamiltonian, Generator, OesBasis, Trajectory, evolve
from .ensemble import SpinGroup, sample_ensemble
from .errors import ConfigurationError
from .node import NodeParams, build_collapse_channels, node_terms
from .pulses import PulseSchedule


@dataclass(frozen=True)
class ChiralLink:
    """Cascaded coupling of the two cavity modes through the fibre.

    ``term`` returns
    ``-sqrt(kA kB) (aB^+ aA rho - aA rho aB^+ + rho aA^+ aB - aB rho aA^+)``
    where ``a_l = |sink><photon_l|``.
    """

    kappa_ex_a: float
    kappa_ex_b: float
    basis: OesBasis

    def __post_init__(self):
        if self.kappa_ex_a < 0 or self.kappa_ex_b < 0:
            raise ConfigurationError("extraction rates must be >= 0")
        if self.basis.nodes != 2:
            raise ConfigurationError("a chiral link needs a two-node basis")

    @property
    def strength(self) -> float:
        return float(np.sqrt(self.kappa_ex_a * self.kappa_ex_b))

    def term(self, rho: np.ndarray) -> np.ndarray:
        out = np.zeros_like(rho, dtype=complex)
        s = self.strength
        if s == 0:
            return out
        a, b = self.basis.photon(0), self.basis.photon(1)
        out[b, :] -= s * rho[a, :]
        out[:, b] -= s * rho[:, a]
        out[SINK, SINK] += s * (rho[a, b] + rho[b, a])
        return out


def build_chiral_term(link: ChiralLink, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (link.basis.dim, link.basis.dim):
        raise ConfigurationError(f"state shape {rho.shape} does not match the two-node basis")
    return link.term(rho)


@dataclass(frozen=True)
class NetworkParams:
    """Two nodes, the fibre link rates and the spin-manifold detuning.

    ``dispersive_detuning`` pushes both spin manifolds below the common
    qubit/cavity frame.  In network mode each node's ``delta_q`` is the qubit
    offset from two-photon resonance with its cavity.
    """

    node_a: NodeParams
    node_b: NodeParams
    dispersive_detuning: float
    kappa_ex_a: float | None = None
    kappa_ex_b: float | None = None

    def link_rates(self) -> tuple[float, float]:
        ka = self.node_a.kappa_ex if self.kappa_ex_a is None else self.kappa_ex_a
        kb = self.node_b.kappa_ex if self.kappa_ex_b is None else self.kappa_ex_b
        if ka > self.node_a.kappa + 1e-15 or kb > self.node_b.kappa + 1e-15:
            raise ConfigurationError("fibre extraction rate exceeds the total cavity decay rate")
        return ka, kb


def _node_hamiltonian_terms(params: NodeParams, groups: list[SpinGroup], basis: OesBasis,
                            node: int, detuning: float):
    nt0 = node_terms(params, groups, basis, node)
    nt = node_terms(params, groups, basis, node, qubit_offset=-nt0.delta_en + params.delta_q,
                    spin_offset=-nt0.delta_en - detuning)
    # sideband off: static magnetic coupling, no chirp
    return nt.static + nt.qubit_leg, nt.optical_leg, nt.stark


@dataclass
class NetworkModel:
    """Assembled two-node system; ``groups`` holds the sampled ensemble per node."""

    params: NetworkParams
    groups: tuple[list[SpinGroup], list[SpinGroup]] = field(default=None)

    def __post_init__(self):
        if self.groups is None:
            self.groups = (sample_ensemble(self.params.node_a.ensemble),
                           sample_ensemble(self.params.node_b.ensemble))
        na, nb = len(self.groups[0]), len(self.groups[1])
        if na != nb:
            raise ConfigurationError("both nodes must use the same number of spin groups")
        self.basis = OesBasis(2, na)

    def generator(self, schedule_a: PulseSchedule, schedule_b: PulseSchedule | None = None) -> Generator:
        """Cascaded generator; node B follows ``schedule_a`` unless given its own."""
        schedule_b = schedule_a if schedule_b is None else schedule_b
        p, b = self.params, self.basis
        static = np.zeros((b.dim, b.dim), dtype=complex)
        terms = []
        channels = []
        for node, (np_, sched) in enumerate(((p.node_a, schedule_a), (p.node_b, schedule_b))):
            st, optical, stark = _node_hamiltonian_terms(np_, self.groups[node], b, node,
                                                         p.dispersive_detuning)
            static += st
            env = sched.optical
            terms.append((env, optical))
            terms.append((lambda t, env=env: env(t) ** 2, stark))
            channels += build_collapse_channels(np_, self.groups[node], b, node)
        ka, kb = p.link_rates()
        link = ChiralLink(ka, kb, b)
        return Generator(ControlledHamiltonian(static, terms), channels, chiral=link, dim=b.dim)

    def observables(self) -> dict:
        b = self.basis
        qa, qb = b.qubit(0), b.qubit(1)
        ca, cb = b.photon(0), b.photon(1)
        spins = np.concatenate([b.spins(0), b.spins(1)])
        return {
            "qubitA": lambda r: r[qa, qa].real,
            "qubitB": lambda r: r[qb, qb].real,
            "spinsTotal": lambda r: float(np.sum(r[spins, spins].real)),
            "cavityA": lambda r: r[ca, ca].real,
            "cavityB": lambda r: r[cb, cb].real,
            "antisym": lambda r: antisymmetric_mode_population(r, b),
            "sink": lambda r: r[SINK, SINK].real,
        }

    def initial_state(self) -> np.ndarray:
        return self.basis.pure(self.basis.qubit(0))


def build_network_generator(params: NetworkParams, schedule_a: PulseSchedule,
                            schedule_b: PulseSchedule | None = None) -> Generator:
    return NetworkModel(params).generator(schedule_a, schedule_b)


@dataclass
class TransferResult:
    trajectory: Trajectory
    peak_fidelity: float
    peak_population: float
    peak_time: float
    final_loss: float


def run_transfer(params: NetworkParams, schedule: PulseSchedule, sample_times,
                 rel_tol: float = 1e-8, abs_tol: float = 1e-10,
                 schedule_b: PulseSchedule | None = None, model: NetworkModel | None = None,
                 store_states: bool = False) -> TransferResult:
    """Start with qubit A excited and follow the excitation into qubit B."""
    model = model or NetworkModel(params)
    gen = model.generator(schedule, schedule_b)
    traj = evolve(gen, model.initial_state(), sample_times, rel_tol, abs_tol,
                  observables=model.observables(), store_states=store_states)
    qb = traj["qubitB"]
    k = int(np.argmax(qb))
    pop = float(max(qb[k], 0.0))
    return TransferResult(traj, float(np.sqrt(pop)), pop, float(traj.times[k]),
                          float(traj["sink"][-1]))
