"""One interface node: effective Hamiltonian, three-level oracle and loss channels.

Conventions
-----------
``g_f`` and ``gc`` are ensemble-collective couplings.  Group ``j`` carries
``g_f * sqrt(w_j)`` on the magnetic leg and ``gc * xi_j * sqrt(w_j)`` on the
optical leg, so a homogeneous ensemble couples through one bright mode of
the same strength whatever the group count.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .algebra import SINK, CollapseChannel, ControlledHamiltonian, Generator, OesBasis
from .ensemble import EnsembleSpec, SpinGroup
from .errors import ConfigurationError, SingularDetuningError
from .pulses import PulseSchedule, inverse_j1


@dataclass(frozen=True)
class NodeParams:
    """Rates and detunings of one node, in units of the scenario base rate.

    ``dbar`` is the mean ground splitting; the laser-cavity detuning follows
    from the identity ``delta1 - delta0 = delta - dbar``.  The optical decay
    rates only enter the three-level oracle.
    """

    gamma1_qb: float = 0.0
    gamma2_qb: float = 0.0
    kappa: float = 0.0
    xi: float = 1.0
    spin_decay: float = 0.0
    spin_dephasing: float = 0.0
    delta0: float = 1.0
    delta1: float = 1.0
    dbar: float = 0.0
    delta_q: float = 0.0
    gc: float = 0.0
    omega_c0: float = 0.0
    g_f: float = 0.0
    ensemble: EnsembleSpec = field(default_factory=EnsembleSpec)
    optical_decay_ground: float = 0.0
    optical_decay_excited: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.xi <= 1.0:
            raise ConfigurationError(f"extraction fraction xi must lie in [0, 1], got {self.xi}")
        for name in ("gamma1_qb", "gamma2_qb", "kappa", "spin_decay", "spin_dephasing",
                     "optical_decay_ground", "optical_decay_excited", "omega_c0"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be >= 0, got {getattr(self, name)}")
        width = max(self.optical_decay_ground + self.optical_decay_excited, self.kappa)
        if width > 0 and min(abs(self.delta0), abs(self.delta1)) < 10 * width:
            warnings.warn("optical detunings are not large against the linewidths; "
                          "the dispersive model may be inaccurate", RuntimeWarning, stacklevel=3)

    @property
    def laser_detuning(self) -> float:
        """Laser-cavity detuning ``delta`` implied by ``delta1 - delta0 = delta - dbar``."""
        return self.delta1 - self.delta0 + self.dbar

    @property
    def kappa_ex(self) -> float:
        return self.xi * self.kappa

    @property
    def kappa_i(self) -> float:
        return self.kappa - self.kappa_ex


@dataclass(frozen=True)
class GroupArrays:
    """Per-group coefficients derived from params and sampled groups."""

    gf: np.ndarray
    gc: np.ndarray
    phase: np.ndarray
    splitting: np.ndarray
    d0: np.ndarray
    d1: np.ndarray
    xi: np.ndarray
    sqrt_w: np.ndarray


def group_arrays(params: NodeParams, groups: list[SpinGroup]) -> GroupArrays:
    if not groups:
        raise ConfigurationError("at least one spin group is required")
    w = np.array([g.weight for g in groups])
    if abs(w.sum() - 1.0) > 1e-12:
        raise ConfigurationError(f"group weights sum to {w.sum()!r}, expected 1")
    xi = np.array([g.coupling_fraction for g in groups])
    if np.any(xi <= 0):
        raise ConfigurationError("coupling fractions must be positive")
    split = np.array([g.splitting_offset for g in groups])
    opt = np.array([g.optical_offset for g in groups])
    d0 = params.delta0 + opt
    d1 = params.delta1 + opt - split
    if np.any(d0 == 0) or np.any(d1 == 0):
        raise SingularDetuningError("a group sits exactly on an optical resonance")
    sw = np.sqrt(w)
    return GroupArrays(gf=params.g_f * sw, gc=params.gc * xi * sw,
                       phase=np.array([g.phase for g in groups]), splitting=split,
                       d0=d0, d1=d1, xi=xi, sqrt_w=sw)


def cavity_shift(params: NodeParams, groups: list[SpinGroup]) -> float:
    """Dispersive cavity shift ``sum_j gc_j**2 / (delta0 + Delta_j)``."""
    ga = group_arrays(params, groups)
    return float(np.sum(ga.gc ** 2 / ga.d0))


def raman_coupling(params: NodeParams, groups: list[SpinGroup], omega_c: float) -> np.ndarray:
    """``Lambda_j = (omega_c/2) gc (1/(delta0+Delta_j) + 1/(delta1+Delta_j-delta_j))``."""
    ga = group_arrays(params, groups)
    return 0.5 * omega_c * params.gc * (1.0 / ga.d0 + 1.0 / ga.d1)


@dataclass
class NodeTerms:
    """Affine decomposition of a node Hamiltonian in its control fields.

    ``H = static + J(t)*qubit_leg + Oc(t)*optical_leg + Oc(t)**2*stark
    + phi_dot(t)*chirp + omega_mu(t)*sideband``.
    """

    static: np.ndarray
    qubit_leg: np.ndarray
    optical_leg: np.ndarray
    stark: np.ndarray
    chirp: np.ndarray
    sideband: np.ndarray
    delta_en: float


def node_terms(params: NodeParams, groups: list[SpinGroup], basis: OesBasis, node: int = 0,
               qubit_offset: float | None = None, spin_offset: float | None = None) -> NodeTerms:
    ga = group_arrays(params, groups)
    if len(groups) != basis.groups:
        raise ConfigurationError(f"{len(groups)} groups for a basis with {basis.groups}")
    d = basis.dim
    q, c = basis.qubit(node), basis.photon(node)
    sp = basis.spins(node)
    delta_en = float(np.sum(ga.gc ** 2 / ga.d0))
    static = np.zeros((d, d), dtype=complex)
    static[q, q] = params.delta_q if qubit_offset is None else qubit_offset
    base = -(params.delta1 - params.delta0) if spin_offset is None else spin_offset
    static[sp, sp] = base + ga.splitting
    static[c, c] = -delta_en
    qleg = np.zeros((d, d), dtype=complex)
    qleg[sp, q] = -ga.gf
    qleg[q, sp] = -ga.gf
    oleg = np.zeros((d, d), dtype=complex)
    lam_per_drive = 0.5 * params.gc * (1.0 / ga.d0 + 1.0 / ga.d1)
    elem = -lam_per_drive * ga.xi * ga.sqrt_w * np.exp(1j * ga.phase)
    oleg[c, sp] = elem
    oleg[sp, c] = elem.conj()
    stark = np.zeros((d, d), dtype=complex)
    stark[sp, sp] = -1.0 / ga.d1
    chirp = np.zeros((d, d), dtype=complex)
    chirp[q, q] = 1.0
    chirp[sp, sp] = 1.0
    side = np.zeros((d, d), dtype=complex)
    side[q, q] = -1.0
    return NodeTerms(static, qleg, oleg, stark, chirp, side, delta_en)


def node_hamiltonian(params: NodeParams, groups: list[SpinGroup], schedule: PulseSchedule,
                     basis: OesBasis | None = None) -> ControlledHamiltonian:
    """Time-dependent effective Hamiltonian of one node driven by ``schedule``."""
    basis = basis or OesBasis(1, len(groups))
    nt = node_terms(params, groups, basis)
    oc = schedule.optical
    return ControlledHamiltonian(nt.static, [
        (schedule.qubit_leg, nt.qubit_leg),
        (oc, nt.optical_leg),
        (lambda t: oc(t) ** 2, nt.stark),
        (schedule.chirp, nt.chirp),
        (schedule.sideband_frequency, nt.sideband),
    ])


def build_effective_hamiltonian(params: NodeParams, groups: list[SpinGroup],
                                schedule: PulseSchedule, t: float) -> np.ndarray:
    """Adiabatically eliminated one-excitation Hamiltonian of a single node at time ``t``.

    Diagonals: qubit ``phi_dot + Delta_q - omega_mu``, spin group ``j``
    ``-(delta1 - delta0 - delta_j - phi_dot + Oc**2/(delta1 + Delta_j - delta_j))``,
    cavity ``-delta_en``.  Off-diagonals: ``-g_f,j J1`` (qubit-spin) and
    ``-Lambda_j xi_j sqrt(w_j) exp(i theta_j)`` (cavity-spin).
    """
    return node_hamiltonian(params, groups, schedule)(t)


def oracle_basis(groups: int) -> OesBasis:
    return OesBasis(1, groups, extended=True)


class OracleHamiltonian:
    """Three-level spin model without adiabatic elimination.

    Frame: cavity at zero, drive frequency and chirp removed from the spin
    ground-state manifold, sideband modulation of the qubit kept explicitly
    as ``x(t) * omega_mu(t) * cos(Phi_mu(t))`` with ``J1(x) = qubit leg``.
    """

    def __init__(self, params: NodeParams, groups: list[SpinGroup], schedule: PulseSchedule):
        ga = group_arrays(params, groups)
        self.basis = oracle_basis(len(groups))
        b = self.basis
        d = b.dim
        q, c = b.qubit(0), b.photon(0)
        sp, op = b.spins(0), b.opticals(0)
        self.schedule = schedule
        self.static = np.zeros((d, d), dtype=complex)
        self.static[q, q] = params.delta_q
        self.static[sp, sp] = -(params.delta1 - params.delta0) + ga.splitting
        self.static[op, op] = ga.d0
        self.static[c, op] = ga.gc * np.exp(1j * ga.phase)
        self.static[op, c] = ga.gc * np.exp(-1j * ga.phase)
        self.static[sp, q] = -ga.gf
        self.static[q, sp] = -ga.gf
        self.drive = np.zeros((d, d), dtype=complex)
        self.drive[sp, op] = 1.0
        self.drive[op, sp] = 1.0
        self.chirp = np.zeros((d, d), dtype=complex)
        self.chirp[q, q] = 1.0
        self.chirp[sp, sp] = 1.0
        self.q = q

    def modulation(self, t: float) -> float:
        s = self.schedule
        j = s.qubit_leg(t)
        if j == 0.0:
            return 0.0
        x = inverse_j1(min(j, 0.5818652242815963))
        return x * s.sideband_frequency(t) * math.cos(s.sideband_phase(t))

    def __call__(self, t: float) -> np.ndarray:
        s = self.schedule
        h = self.static + s.optical(t) * self.drive + s.chirp(t) * self.chirp
        h[self.q, self.q] += self.modulation(t)
        return h


def build_full_oracle_hamiltonian(params: NodeParams, groups: list[SpinGroup],
                                  schedule: PulseSchedule, t: float) -> np.ndarray:
    return OracleHamiltonian(params, groups, schedule)(t)


def build_collapse_channels(params: NodeParams, groups: list[SpinGroup],
                            basis: OesBasis | None = None, node: int = 0) -> list[CollapseChannel]:
    """Loss channels of one node; zero-rate channels are left out.

    Pure dephasing at rate ``r`` uses ``sqrt(2 r)`` times the excited-state
    projector, so coherences with that state decay at exactly ``r``.
    """
    basis = basis or OesBasis(1, len(groups))
    tag = "AB"[node]
    q, c = basis.qubit(node), basis.photon(node)
    out: list[CollapseChannel] = []

    def add(op, rate, name):
        if rate < 0:
            raise ConfigurationError(f"negative rate for {name}: {rate}")
        if rate > 0:
            out.append(CollapseChannel(op, rate, name))

    add(basis.transition(SINK, q), params.gamma1_qb, f"qubit_decay_{tag}")
    add(basis.projector(q), 2.0 * params.gamma2_qb, f"qubit_dephasing_{tag}")
    for j, s in enumerate(basis.spins(node)):
        add(basis.transition(SINK, s), params.spin_decay, f"spin_decay_{tag}{j}")
        add(basis.projector(s), 2.0 * params.spin_dephasing, f"spin_dephasing_{tag}{j}")
    if basis.extended:
        for j, r in enumerate(basis.opticals(node)):
            add(basis.transition(SINK, r), params.optical_decay_ground, f"optical_decay_g_{tag}{j}")
            add(basis.transition(basis.spin(node, j), r), params.optical_decay_excited,
                f"optical_decay_e_{tag}{j}")
    add(basis.transition(SINK, c), params.kappa, f"cavity_decay_{tag}")
    return out


def single_node_generator(params: NodeParams, groups: list[SpinGroup],
                          schedule: PulseSchedule) -> Generator:
    basis = OesBasis(1, len(groups))
    return Generator(node_hamiltonian(params, groups, schedule, basis),
                     build_collapse_channels(params, groups, basis), dim=basis.dim)


def oracle_generator(params: NodeParams, groups: list[SpinGroup],
                     schedule: PulseSchedule) -> Generator:
    h = OracleHamiltonian(params, groups, schedule)
    return Generator(h, build_collapse_channels(params, groups, h.basis), dim=h.basis.dim)
