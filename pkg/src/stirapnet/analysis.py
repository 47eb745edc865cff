"""State diagnostics: fidelity, reduced cavity state, antisymmetric mode, Wigner function."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import SINK, OesBasis
from .errors import ConfigurationError


def fidelity(rho: np.ndarray, target: np.ndarray) -> float:
    """``sqrt(<psi|rho|psi>)`` for a normalised pure ``target``."""
    rho = np.asarray(rho, dtype=complex)
    psi = np.asarray(target, dtype=complex).ravel()
    if rho.shape != (psi.size, psi.size):
        raise ConfigurationError(f"target of length {psi.size} does not match state shape {rho.shape}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-8:
        raise ConfigurationError(f"target state is not normalised (norm {norm:.12g})")
    overlap = float(np.real(psi.conj() @ rho @ psi))
    return float(np.sqrt(min(max(overlap, 0.0), 1.0)))


@dataclass(frozen=True)
class CavityState:
    """One cavity mode truncated to Fock levels ``|0>, |1>``."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ConfigurationError(f"cavity state must be 2x2, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > 1e-8:
            raise ConfigurationError("cavity state is not Hermitian")
        if abs(np.trace(m) - 1) > 1e-8:
            raise ConfigurationError(f"cavity state trace {np.trace(m).real:.3g} != 1")
        if np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0] < -1e-8:
            raise ConfigurationError("cavity state is not positive semidefinite")
        object.__setattr__(self, "matrix", m)

    @property
    def photon_population(self) -> float:
        return float(self.matrix[1, 1].real)


def reduce_to_cavity(rho: np.ndarray, basis: OesBasis, node: int = 0) -> CavityState:
    """Partial trace onto one cavity inside the one-excitation space.

    The only state sharing its environment with the one-photon state is the
    sink, so the ``|0>-|1>`` coherence is the sink/photon element.
    """
    rho = np.asarray(rho, dtype=complex)
    c = basis.photon(node)
    p1 = rho[c, c].real
    tr = np.trace(rho).real
    m = np.array([[tr - p1, rho[SINK, c]], [rho[c, SINK], p1]], dtype=complex)
    return CavityState(m / tr)


def wigner(cav: CavityState, half_width: float = 3.0, points: int = 201):
    """Wigner function on a square grid in ``(Re alpha, Im alpha)``.

    ``W = (2/pi) exp(-2|a|^2) [rho00 + rho11 (4|a|^2 - 1) + 4 Re(rho10 conj(a))]``.

    Returns
    -------
    x, y : ndarray
        Grid axes (``points`` values each).
    w : ndarray
        ``w[i, k]`` is W at ``alpha = x[k] + 1j*y[i]``.
    """
    if points < 2:
        raise ConfigurationError(f"need at least 2 grid points, got {points}")
    if half_width <= 0:
        raise ConfigurationError(f"grid half-width must be positive, got {half_width}")
    m = cav.matrix
    x = np.linspace(-half_width, half_width, points)
    y = x.copy()
    alpha = x[None, :] + 1j * y[:, None]
    r2 = np.abs(alpha) ** 2
    w = (2.0 / np.pi) * np.exp(-2.0 * r2) * (
        m[0, 0].real + m[1, 1].real * (4.0 * r2 - 1.0) + 4.0 * np.real(m[1, 0] * np.conj(alpha)))
    return x, y, w


def antisymmetric_mode_population(rho: np.ndarray, basis: OesBasis) -> float:
    """``<psi-|rho|psi->`` with ``psi- = (|photon_A> - |photon_B>)/sqrt(2)``."""
    if basis.nodes != 2:
        raise ConfigurationError("the antisymmetric mode needs a two-node basis")
    rho = np.asarray(rho, dtype=complex)
    a, b = basis.photon(0), basis.photon(1)
    return float(0.5 * np.real(rho[a, a] + rho[b, b] - rho[a, b] - rho[b, a]))


def excitation_budget(rho: np.ndarray, basis: OesBasis) -> dict[str, float]:
    """Populations grouped by subsystem; the values sum to the trace."""
    d = np.real(np.diag(np.asarray(rho)))
    out = {"sink": float(d[SINK])}
    for node in range(basis.nodes):
        tag = "AB"[node]
        out[f"qubit{tag}"] = float(d[basis.qubit(node)])
        out[f"spins{tag}"] = float(d[basis.spins(node)].sum())
        if basis.extended:
            out[f"optical{tag}"] = float(d[basis.opticals(node)].sum())
        out[f"cavity{tag}"] = float(d[basis.photon(node)])
    return out
