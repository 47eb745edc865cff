"""Discretised inhomogeneous spin ensemble."""
from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class EnsembleSpec:
    """Sampling recipe for ``groups`` spin groups.

    Parameters
    ----------
    groups : int
        Number of spin groups.
    sigma_detuning : float
        Standard deviation of the spin detuning offsets (base-rate units).
    sigma_phase : float
        Standard deviation of the optical coupling phases (radians).
    mode : str
        ``"stratified"`` (deterministic quantiles) or ``"random"``.
    seed : int
        Seed for ``mode="random"``.
    coupling_spread : float
        Relative spread of the optical coupling fractions; 0 gives
        identical groups.
    """

    groups: int = 20
    sigma_detuning: float = 0.0
    sigma_phase: float = 0.0
    mode: str = "stratified"
    seed: int = 0
    coupling_spread: float = 0.0

    def __post_init__(self):
        if self.groups < 1:
            raise ConfigurationError(f"ensemble needs at least one group, got {self.groups}")
        if self.sigma_detuning < 0 or self.sigma_phase < 0 or self.coupling_spread < 0:
            raise ConfigurationError("ensemble spreads must be non-negative")
        if self.mode not in ("stratified", "random"):
            raise ConfigurationError(f"unknown sampling mode {self.mode!r}")


@dataclass(frozen=True)
class SpinGroup:
    """One group: ground-splitting offset, optical offset, phase, coupling fraction, weight."""

    splitting_offset: float
    optical_offset: float
    phase: float
    coupling_fraction: float
    weight: float


def _quantiles(n: int) -> np.ndarray:
    nd = NormalDist()
    return np.array([nd.inv_cdf((k + 0.5) / n) for k in range(n)])


def _stride(n: int, frac: float) -> int:
    """A stride coprime to ``n`` near ``frac * n``; it decorrelates the quantile axes."""
    if n <= 2:
        return 1
    s = max(1, int(round(frac * n)))
    while math.gcd(s, n) != 1:
        s += 1
    return s


def sample_ensemble(spec: EnsembleSpec) -> list[SpinGroup]:
    """Draw the spin groups described by ``spec``.

    Stratified mode puts every quantity at the ``(k + 1/2)/N`` Gaussian
    quantiles, each group carrying weight ``1/N``; the optical offsets and
    phases use strided permutations of the same quantiles so the three axes
    are not perfectly correlated.
    """
    n = spec.groups
    if spec.mode == "stratified":
        z = _quantiles(n)
        k = np.arange(n)
        z_split = z
        z_opt = z[(k * _stride(n, 0.618)) % n]
        z_phase = z[(k * _stride(n, 0.382)) % n]
        z_xi = z[::-1]
    else:
        rng = np.random.default_rng(spec.seed)
        z_split, z_opt, z_phase, z_xi = rng.standard_normal((4, n))
    xi = 1.0 + spec.coupling_spread * z_xi
    if np.any(xi <= 0):
        raise ConfigurationError("coupling spread too large: non-positive coupling fraction")
    xi = xi / xi.mean()
    w = np.full(n, 1.0 / n)
    return [
        SpinGroup(
            splitting_offset=float(spec.sigma_detuning * z_split[j]),
            optical_offset=float(spec.sigma_detuning * z_opt[j]),
            phase=float(spec.sigma_phase * z_phase[j]),
            coupling_fraction=float(xi[j]),
            weight=float(w[j]),
        )
        for j in range(n)
    ]
