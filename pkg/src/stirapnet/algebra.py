"""Dense operator algebra over the one-excitation space and Lindblad integration.

All states live in a truncated Hilbert space holding one global ground state
("sink", index 0) plus, for every node, the qubit-excited state, one
collective excitation per spin group and a single cavity photon.  Every loss
channel empties into the sink.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, IntegrationError

SINK = 0


@dataclass(frozen=True)
class OesBasis:
    """Index map of the one-excitation space.

    Per-node layout is ``[qubit, spin_1..spin_N, (optical_1..optical_N), photon]``;
    the optical block only exists in the extended basis used by the
    three-level oracle.
    """

    nodes: int = 1
    groups: int = 20
    extended: bool = False

    def __post_init__(self):
        if self.nodes not in (1, 2):
            raise ConfigurationError(f"nodes must be 1 or 2, got {self.nodes}")
        if self.groups < 1:
            raise ConfigurationError(f"need at least one spin group, got {self.groups}")

    @property
    def block(self) -> int:
        return (2 * self.groups if self.extended else self.groups) + 2

    @property
    def dim(self) -> int:
        return 1 + self.nodes * self.block

    def _offset(self, node: int) -> int:
        if not 0 <= node < self.nodes:
            raise ConfigurationError(f"node {node} outside basis with {self.nodes} node(s)")
        return 1 + node * self.block

    def qubit(self, node: int = 0) -> int:
        return self._offset(node)

    def spin(self, node: int, j: int) -> int:
        if not 0 <= j < self.groups:
            raise ConfigurationError(f"spin group {j} out of range")
        return self._offset(node) + 1 + j

    def spins(self, node: int = 0) -> np.ndarray:
        start = self._offset(node) + 1
        return np.arange(start, start + self.groups)

    def optical(self, node: int, j: int) -> int:
        if not self.extended:
            raise ConfigurationError("optical excited states exist only in the extended basis")
        if not 0 <= j < self.groups:
            raise ConfigurationError(f"spin group {j} out of range")
        return self._offset(node) + 1 + self.groups + j

    def opticals(self, node: int = 0) -> np.ndarray:
        if not self.extended:
            raise ConfigurationError("optical excited states exist only in the extended basis")
        start = self._offset(node) + 1 + self.groups
        return np.arange(start, start + self.groups)

    def photon(self, node: int = 0) -> int:
        return self._offset(node) + self.block - 1

    def labels(self) -> list[str]:
        out = ["sink"]
        for l in range(self.nodes):
            tag = "AB"[l]
            out.append(f"qubit_{tag}")
            out += [f"spin_{tag}{j}" for j in range(self.groups)]
            if self.extended:
                out += [f"optical_{tag}{j}" for j in range(self.groups)]
            out.append(f"photon_{tag}")
        return out

    def ket(self, index: int) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[index] = 1.0
        return v

    def projector(self, index: int) -> np.ndarray:
        return self.transition(index, index)

    def transition(self, to: int, frm: int) -> np.ndarray:
        """Return ``|to><frm|``."""
        m = np.zeros((self.dim, self.dim), dtype=complex)
        m[to, frm] = 1.0
        return m

    def pure(self, index: int) -> np.ndarray:
        return self.projector(index)


@dataclass(frozen=True)
class CollapseChannel:
    """Lindblad channel ``rate * D[operator]``."""

    operator: np.ndarray
    rate: float
    name: str = ""

    def __post_init__(self):
        if not self.rate >= 0:
            raise ConfigurationError(f"collapse rate must be >= 0, got {self.rate} ({self.name})")
        op = np.asarray(self.operator)
        if op.ndim != 2 or op.shape[0] != op.shape[1]:
            raise ConfigurationError(f"collapse operator must be square, got {op.shape}")


def _check_square(a: np.ndarray, dim: int, what: str) -> None:
    if a.shape != (dim, dim):
        raise ConfigurationError(f"{what} has shape {a.shape}, expected {(dim, dim)}")


def dissipator(c: np.ndarray, rate: float, rho: np.ndarray) -> np.ndarray:
    """``rate * (C rho C^+ - 1/2 {C^+ C, rho})``."""
    rho = np.asarray(rho)
    c = np.asarray(c)
    _check_square(c, rho.shape[0], "collapse operator")
    _check_square(rho, rho.shape[0], "density matrix")
    if rate < 0:
        raise ConfigurationError(f"collapse rate must be >= 0, got {rate}")
    if rate == 0:
        return np.zeros_like(rho, dtype=complex)
    cd = c.conj().T
    cdc = cd @ c
    return rate * (c @ rho @ cd - 0.5 * (cdc @ rho + rho @ cdc))


class ControlledHamiltonian:
    """``H(t) = H0 + sum_k f_k(t) M_k`` with cheap evaluation.

    ``terms`` pairs scalar control functions with constant matrices; the
    matrices are kept in a stacked array so evaluation is a single
    tensordot.
    """

    def __init__(self, static: np.ndarray, terms: Sequence[tuple[Callable[[float], float], np.ndarray]] = ()):
        self.static = np.asarray(static, dtype=complex)
        self.dim = self.static.shape[0]
        self.controls = [f for f, _ in terms]
        if terms:
            self.matrices = np.stack([np.asarray(m, dtype=complex) for _, m in terms])
        else:
            self.matrices = np.zeros((0, self.dim, self.dim), dtype=complex)
        self._flat = self.matrices.reshape(len(self.controls), self.dim * self.dim)

    def coefficients(self, t: float) -> np.ndarray:
        return np.array([f(t) for f in self.controls], dtype=float)

    def __call__(self, t: float) -> np.ndarray:
        if not self.controls:
            return self.static
        return self.static + (self.coefficients(t) @ self._flat).reshape(self.dim, self.dim)


def zero_hamiltonian(dim: int) -> ControlledHamiltonian:
    return ControlledHamiltonian(np.zeros((dim, dim), dtype=complex))


@dataclass
class Generator:
    """Lindblad generator ``-i[H(t), rho] + sum rate*D[C] rho (+ chiral term)``.

    ``chiral`` is any object exposing ``term(rho) -> ndarray`` (see
    :class:`stirapnet.network.ChiralLink`).
    """

    hamiltonian: Callable[[float], np.ndarray]
    channels: list[CollapseChannel] = field(default_factory=list)
    chiral: object | None = None
    dim: int | None = None

    def __post_init__(self):
        if self.dim is None:
            self.dim = np.asarray(self.hamiltonian(0.0)).shape[0]
        for ch in self.channels:
            _check_square(np.asarray(ch.operator), self.dim, f"channel {ch.name!r}")
        self._compile()

    def _compile(self) -> None:
        d = self.dim
        k = np.zeros((d, d), dtype=complex)
        to, frm, weight = [], [], []
        general = []
        for ch in self.channels:
            if ch.rate == 0:
                continue
            op = np.asarray(ch.operator, dtype=complex)
            k += ch.rate * (op.conj().T @ op)
            nz = np.argwhere(op != 0)
            if len(nz) == 1:
                a, b = nz[0]
                to.append(a)
                frm.append(b)
                weight.append(ch.rate * abs(op[a, b]) ** 2)
            else:
                general.append((ch.rate, op, op.conj().T))
        self._k_half = 0.5 * k
        # single-element jumps only move population: feed = F @ diag(rho)
        feed = np.zeros((d, d))
        np.add.at(feed, (np.array(to, dtype=int), np.array(frm, dtype=int)), np.array(weight, dtype=float))
        self._feed = feed if to else None
        self._general = general
        self._diag = np.diag_indices(d)

    def __call__(self, t: float, rho: np.ndarray) -> np.ndarray:
        a = -1j * self.hamiltonian(t) - self._k_half
        return self._finish(a @ rho + rho @ a.conj().T, rho)

    def hermitian_rhs(self, t: float, rho: np.ndarray) -> np.ndarray:
        """Same as calling the generator, valid only for Hermitian ``rho`` (one product saved)."""
        m = (-1j * self.hamiltonian(t) - self._k_half) @ rho
        return self._finish(m + m.conj().T, rho)

    def _finish(self, out: np.ndarray, rho: np.ndarray) -> np.ndarray:
        if self._feed is not None:
            out[self._diag] += self._feed @ rho.diagonal()
        for rate, op, opd in self._general:
            out += rate * (op @ rho @ opd)
        if self.chiral is not None:
            out += self.chiral.term(rho)
        return out


def apply_generator(gen: Generator, t: float, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    _check_square(rho, gen.dim, "density matrix")
    return gen(t, rho)


def check_density_matrix(rho: np.ndarray, herm_tol: float = 1e-10, trace_tol: float = 1e-8,
                         eig_tol: float = 1e-8) -> None:
    """Raise :class:`ConfigurationError` unless ``rho`` is a valid state."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ConfigurationError(f"density matrix must be square, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        raise ConfigurationError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > trace_tol:
        raise ConfigurationError(f"density matrix trace {np.trace(rho).real:.3g} != 1")
    if min_eigenvalue(rho) < -eig_tol:
        raise ConfigurationError("density matrix is not positive semidefinite")


def min_eigenvalue(rho: np.ndarray) -> float:
    h = 0.5 * (rho + rho.conj().T)
    return float(np.linalg.eigvalsh(h)[0])


@dataclass
class Trajectory:
    """Sampled result of :func:`evolve`.

    ``populations[k, i]`` is ``rho_ii`` at ``times[k]``; ``observables`` maps
    each requested hook to its sampled values.
    """

    times: np.ndarray
    populations: np.ndarray
    observables: dict[str, np.ndarray]
    final_state: np.ndarray
    states: np.ndarray | None = None
    steps: int = 0
    rejected: int = 0
    evaluations: int = 0

    def __getitem__(self, name: str) -> np.ndarray:
        return self.observables[name]


# Dormand-Prince 5(4) tableau.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array(_A[6] + [0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


def _initial_step(f, t0, y0, f0, span, rtol, atol):
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean(np.abs(y0 / scale) ** 2))
    d1 = np.sqrt(np.mean(np.abs(f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    y1 = y0 + h0 * f0
    f1 = f(t0 + h0, y1)
    d2 = np.sqrt(np.mean(np.abs((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, span)


def evolve(gen: Callable[[float, np.ndarray], np.ndarray], rho0: np.ndarray,
           sample_times: Sequence[float], rel_tol: float = 1e-8, abs_tol: float = 1e-10,
           observables: Mapping[str, Callable[[np.ndarray], float]] | None = None,
           store_states: bool = False, t0: float | None = None,
           max_steps: int = 5_000_000) -> Trajectory:
    """Integrate ``d rho/dt = gen(t, rho)`` with adaptive Dormand-Prince 5(4).

    Steps are clamped so every sample time is hit exactly.  The integration
    starts at ``t0`` (default: the first sample time).

    Raises
    ------
    IntegrationError
        If the step size drops below ``1e-14`` times the integration span.
    """
    times = np.asarray(sample_times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ConfigurationError("sample_times must be a non-empty 1-D sequence")
    if np.any(np.diff(times) <= 0):
        raise ConfigurationError("sample_times must be strictly ascending")
    if rel_tol <= 0 or abs_tol <= 0:
        raise ConfigurationError("tolerances must be positive")
    t = float(times[0] if t0 is None else t0)
    if t > times[0]:
        raise ConfigurationError("t0 must not exceed the first sample time")
    y = np.array(rho0, dtype=complex)
    n = times.size
    observables = dict(observables or {})
    pops = np.empty((n, y.shape[0]))
    obs = {name: np.empty(n) for name in observables}
    states = np.empty((n,) + y.shape, dtype=complex) if store_states else None

    def record(k, state):
        pops[k] = state.diagonal().real
        for name, fn in observables.items():
            obs[name][k] = fn(state)
        if states is not None:
            states[k] = state

    # Lindblad flows keep Hermitian states Hermitian, so every stage is too
    if hasattr(gen, "hermitian_rhs") and np.allclose(y, y.conj().T, rtol=0, atol=1e-14):
        gen = gen.hermitian_rhs
    span = float(times[-1] - t)
    h_min = 1e-14 * max(span, 1e-300)
    steps = rejected = 0
    f0 = gen(t, y)
    evals = 1
    h = None
    k = 0
    while k < n and times[k] <= t:
        record(k, y)
        k += 1
    if k < n:
        h = _initial_step(gen, t, y, f0, span, rel_tol, abs_tol)
        evals += 1
    stages = [None] * 7
    while k < n:
        target = times[k]
        clamped = False
        h_step = h
        if t + h_step >= target:
            h_step = target - t
            clamped = True
        if h_step < h_min:
            raise IntegrationError("step size underflow", float(t))
        stages[0] = f0
        for i in range(1, 7):
            acc = y.copy()
            for j, a in enumerate(_A[i]):
                if a != 0.0:
                    acc += (h_step * a) * stages[j]
            if i == 6:
                y_new = acc
            stages[i] = gen(t + _C[i] * h_step, acc)
        evals += 6
        err_vec = h_step * sum(e * s for e, s in zip(_E, stages) if e != 0.0)
        scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean(np.abs(err_vec / scale) ** 2)))
        steps += 1
        if steps > max_steps:
            raise IntegrationError("maximum step count exceeded", float(t))
        if not np.isfinite(err):
            rejected += 1
            h = 0.2 * h_step
            continue
        if err <= 1.0:
            t = target if clamped else t + h_step
            y = y_new
            f0 = stages[6]
            factor = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h_next = h_step * factor
            h = max(h_next, h) if clamped else h_next
            while k < n and times[k] <= t:
                record(k, y)
                k += 1
        else:
            rejected += 1
            h = h_step * max(0.2, 0.9 * err ** -0.2)
    return Trajectory(times=times, populations=pops, observables=obs, final_state=y,
                      states=states, steps=steps, rejected=rejected, evaluations=evals)
