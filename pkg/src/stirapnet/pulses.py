"""Control fields: Bessel sideband factor, pulse envelopes, chirp and resonance."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .errors import ConfigurationError, SingularDetuningError

if TYPE_CHECKING:
    from .node import NodeParams

J1_ARGMAX = 1.8411837813406593
J1_MAX = 0.5818652242815963


def _series(x: float, order: int) -> float:
    half = 0.5 * x
    term = half ** order / math.factorial(order)
    total = term
    q = -half * half
    k = 0
    while abs(term) > 1e-18 * max(abs(total), 1e-300):
        k += 1
        term *= q / (k * (k + order))
        total += term
        if k > 200:
            break
    return total


def _miller(x: float) -> tuple[float, float]:
    """J0 and J1 by normalised backward recurrence (x > 0)."""
    start = 2 * int((x + 16.0 * max(1.0, x) ** (1 / 3) + 24.0) / 2)
    j_next, j_cur = 0.0, 1e-30
    norm = 0.0
    j0 = j1 = 0.0
    for k in range(start, 0, -1):
        j_prev = (2.0 * k / x) * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j_cur
        if k - 1 == 1:
            j1 = j_cur
        if abs(j_cur) > 1e250:
            j_next *= 1e-250
            j_cur *= 1e-250
            norm *= 1e-250
            j1 *= 1e-250
    j0 = j_cur
    norm += j0
    return j0 / norm, j1 / norm


def _j1_scalar(x: float) -> float:
    ax = abs(x)
    if ax < 4.0:
        return _series(x, 1)
    val = _miller(ax)[1]
    return val if x > 0 else -val


def _j0_scalar(x: float) -> float:
    ax = abs(x)
    if ax < 4.0:
        return _series(ax, 0)
    return _miller(ax)[0]


def bessel_j1(x):
    """Bessel function of the first kind, order one.

    Power series for ``|x| < 4``, Miller backward recurrence beyond.
    Accepts scalars or arrays.
    """
    if np.ndim(x) == 0:
        return _j1_scalar(float(x))
    arr = np.asarray(x, dtype=float)
    return np.vectorize(_j1_scalar, otypes=[float])(arr)


def bessel_j0(x):
    if np.ndim(x) == 0:
        return _j0_scalar(float(x))
    arr = np.asarray(x, dtype=float)
    return np.vectorize(_j0_scalar, otypes=[float])(arr)


def inverse_j1(value: float, tol: float = 1e-14) -> float:
    """Smallest ``x >= 0`` with ``J1(x) = value``, for ``0 <= value <= J1_MAX``.

    Used to report the physical modulation depth behind a J1-space pulse.
    """
    if value < 0:
        return -inverse_j1(-value, tol)
    if value > J1_MAX + 1e-12:
        raise ConfigurationError(f"J1 never reaches {value}; maximum is {J1_MAX:.10f}")
    value = min(value, J1_MAX)
    lo, hi = 0.0, J1_ARGMAX
    x = 2.0 * value if value < 0.4 else 1.0
    for _ in range(100):
        fx = _j1_scalar(x) - value
        if fx > 0:
            hi = x
        else:
            lo = x
        deriv = _j0_scalar(x) - (_j1_scalar(x) / x if x > 0 else 0.5)
        step = fx / deriv if deriv > 1e-12 else None
        x_new = x - step if step is not None else 0.5 * (lo + hi)
        if not lo <= x_new <= hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) < tol:
            return x_new
        x = x_new
    return x


def gaussian_pulse(t, amplitude: float, center: float, width: float):
    if width <= 0:
        raise ConfigurationError(f"pulse width must be positive, got {width}")
    return amplitude * np.exp(-((np.asarray(t) - center) ** 2) / (2.0 * width ** 2))


def sech_pulse(t, amplitude: float, center: float, width: float):
    if width <= 0:
        raise ConfigurationError(f"pulse width must be positive, got {width}")
    return amplitude / np.cosh((np.asarray(t) - center) / width)


@dataclass(frozen=True)
class Envelope:
    """Pulse shape; ``kind`` is one of ``gaussian``, ``sech``, ``constant``, ``zero``."""

    kind: str
    amplitude: float = 0.0
    center: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "sech", "constant", "zero"):
            raise ConfigurationError(f"unknown envelope kind {self.kind!r}")
        if self.kind in ("gaussian", "sech") and self.width <= 0:
            raise ConfigurationError(f"pulse width must be positive, got {self.width}")

    def __call__(self, t: float) -> float:
        if self.kind == "gaussian":
            x = (t - self.center) / self.width
            return self.amplitude * math.exp(-0.5 * x * x)
        if self.kind == "sech":
            x = (t - self.center) / self.width
            if abs(x) > 700:
                return 0.0
            return self.amplitude / math.cosh(x)
        if self.kind == "constant":
            return self.amplitude
        return 0.0

    @property
    def peak(self) -> float:
        return 0.0 if self.kind == "zero" else self.amplitude

    def power_integral(self, t0: float, t1: float) -> float:
        """Closed-form ``int_{t0}^{t1} envelope(s)^2 ds``."""
        a2 = self.amplitude ** 2
        if self.kind == "gaussian":
            s = self.width
            f = lambda t: math.erf((t - self.center) / s)
            return a2 * s * math.sqrt(math.pi) / 2.0 * (f(t1) - f(t0))
        if self.kind == "sech":
            s = self.width
            f = lambda t: math.tanh((t - self.center) / s)
            return a2 * s * (f(t1) - f(t0))
        if self.kind == "constant":
            return a2 * (t1 - t0)
        return 0.0


CHIRP_MODES = ("tracking", "constant", "zero")


def resonance_conditions(params: "NodeParams", omega_c: float, delta_en: float | None = None) -> tuple[float, float]:
    """Chirp rate and sideband frequency that put qubit, spins and cavity on resonance.

    Returns ``(phi_dot, omega_mu)`` with
    ``phi_dot = D1 - D0 + omega_c**2/D1 - delta_en`` and
    ``omega_mu = Delta_q + (D1 - D0) + omega_c**2/D1``.
    ``delta_en`` defaults to the sampled ensemble's cavity shift.
    """
    if params.delta1 == 0:
        raise SingularDetuningError("Delta_1 = 0: the ac Stark shift is undefined")
    if delta_en is None:
        from .node import cavity_shift
        from .ensemble import sample_ensemble

        delta_en = cavity_shift(params, sample_ensemble(params.ensemble))
    stark = omega_c ** 2 / params.delta1
    d10 = params.delta1 - params.delta0
    return d10 + stark - delta_en, params.delta_q + d10 + stark


@dataclass(frozen=True)
class PulseSchedule:
    """Time-dependent controls of one node.

    ``qubit_leg`` is the value of the sideband factor J1(Omega_mu/omega_mu)
    directly; ``optical`` is the classical drive Omega_c.  The chirp and the
    sideband frequency are ``offset + stark_coeff * P(t)`` with ``P`` the
    instantaneous (tracking) or peak (constant) drive power.
    """

    qubit_leg: Envelope
    optical: Envelope
    chirp_mode: str = "tracking"
    chirp_offset: float = 0.0
    sideband_offset: float = 0.0
    stark_coeff: float = 0.0
    start: float = 0.0
    stop: float = 1.0

    def __post_init__(self):
        if self.chirp_mode not in CHIRP_MODES:
            raise ConfigurationError(f"unknown chirp mode {self.chirp_mode!r}")
        if abs(self.qubit_leg.peak) > J1_MAX + 1e-9:
            raise ConfigurationError(
                f"qubit-leg amplitude {self.qubit_leg.peak} exceeds the J1 range {J1_MAX:.4f}")
        if self.optical.peak < 0:
            raise ConfigurationError("optical drive amplitude must be >= 0")
        if not self.stop > self.start:
            raise ConfigurationError("schedule window must have stop > start")

    def _power(self, t: float) -> float:
        if self.chirp_mode == "tracking":
            return self.optical(t) ** 2
        if self.chirp_mode == "constant":
            return self.optical.peak ** 2
        return 0.0

    def chirp(self, t: float) -> float:
        return self.chirp_offset + self.stark_coeff * self._power(t)

    def sideband_frequency(self, t: float) -> float:
        return self.sideband_offset + self.stark_coeff * self._power(t)

    def sideband_phase(self, t: float) -> float:
        """``int_start^t omega_mu(s) ds``."""
        base = self.sideband_offset * (t - self.start)
        if self.chirp_mode == "tracking":
            return base + self.stark_coeff * self.optical.power_integral(self.start, t)
        if self.chirp_mode == "constant":
            return base + self.stark_coeff * self.optical.peak ** 2 * (t - self.start)
        return base

    def modulation_depth(self, t: float) -> float:
        """Physical ratio Omega_mu/omega_mu behind the J1-space qubit leg."""
        return inverse_j1(self.qubit_leg(t))

    def times(self, samples: int) -> np.ndarray:
        return np.linspace(self.start, self.stop, samples)


def stirap_schedule(params: "NodeParams", delta_en: float, *, width_optical: float,
                    width_qubit: float, delay: float, optical_center: float,
                    qubit_peak: float = 0.58, chirp_mode: str = "tracking",
                    stop: float | None = None) -> PulseSchedule:
    """Counter-intuitive Gaussian pair: the optical leg leads the qubit leg by ``delay``."""
    if params.delta1 == 0:
        raise SingularDetuningError("Delta_1 = 0: the ac Stark shift is undefined")
    optical = Envelope("gaussian", params.omega_c0, optical_center, width_optical)
    qubit = Envelope("gaussian", qubit_peak, optical_center + delay, width_qubit)
    d10 = params.delta1 - params.delta0
    if chirp_mode == "zero":
        chirp_offset, sideband_offset, stark = 0.0, params.delta_q + delta_en, 0.0
    else:
        chirp_offset = d10 - delta_en
        sideband_offset = params.delta_q + d10
        stark = 1.0 / params.delta1
    if stop is None:
        stop = 12.0 * max(width_optical, width_qubit)
    return PulseSchedule(qubit, optical, chirp_mode, chirp_offset, sideband_offset, stark, 0.0, stop)


def network_schedule(omega_c0: float, center: float, width: float, stop: float) -> PulseSchedule:
    """Sech-shaped optical drive with the sideband switched off."""
    return PulseSchedule(Envelope("zero"), Envelope("sech", omega_c0, center, width),
                         chirp_mode="zero", start=0.0, stop=stop)
