"""Reservoir models: spectral densities, mean field and correlation function.

All spectra are parameterized by the frequency offset from the laser
frequency ``w - omega_L``; the absolute laser frequency never appears.
The time-domain correlation uses ``K(t) = int dw K(w) exp(-i (w - omega_L) t)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import NotApplicableError, UnsupportedTransformError, ValidationError

__all__ = [
    "Constant",
    "Taylor",
    "Gaussian",
    "Lorentzian",
    "SpectralModel",
    "ExponentialMean",
    "DiscreteModes",
    "NonstationaryModel",
    "CorrelationKernel",
    "k_omega",
    "k_derivs",
    "k_time",
    "mean_r",
    "detuning_shift",
    "correlation",
]


def _check_k0(k0):
    if not (math.isfinite(k0) and k0 >= 0):
        raise ValidationError(f"spectral amplitude must be >= 0, got {k0}")


def _check_width(width):
    if not (math.isfinite(width) and width > 0):
        raise ValidationError(f"spectral width must be > 0, got {width}")


@dataclass(frozen=True)
class Constant:
    """Flat spectrum; its correlation function is ``2 pi k0 delta(t)``."""

    k0: float

    def __post_init__(self):
        _check_k0(self.k0)

    def value(self, x):
        return self.k0 + 0.0 * np.asarray(x, dtype=float)

    def derivs(self):
        return self.k0, 0.0, 0.0

    def time(self, dt):
        raise UnsupportedTransformError(
            "a flat spectrum is delta-correlated; it is handled analytically in quadrature")


@dataclass(frozen=True)
class Taylor:
    """Quadratic spectrum ``k0 + k1 x + k2 x^2 / 2`` around the laser frequency."""

    k0: float
    k1: float = 0.0
    k2: float = 0.0

    def __post_init__(self):
        _check_k0(self.k0)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return self.k0 + self.k1 * x + 0.5 * self.k2 * x * x

    def derivs(self):
        return self.k0, self.k1, self.k2

    def time(self, dt):
        raise UnsupportedTransformError("a Taylor spectrum is not integrable")


@dataclass(frozen=True)
class Gaussian:
    """Gaussian of peak height ``k0`` at offset ``center``, standard deviation ``width``."""

    k0: float
    center: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        _check_k0(self.k0)
        _check_width(self.width)

    def value(self, x):
        u = (np.asarray(x, dtype=float) - self.center) / self.width
        return self.k0 * np.exp(-0.5 * u * u)

    def derivs(self):
        x = -self.center
        s2 = self.width ** 2
        k = float(self.value(0.0))
        return k, -x / s2 * k, (x * x / s2 - 1.0) / s2 * k

    def time(self, dt):
        dt = np.asarray(dt, dtype=float)
        amp = self.k0 * self.width * math.sqrt(2.0 * math.pi)
        return amp * np.exp(-0.5 * (self.width * dt) ** 2 - 1j * self.center * dt)


@dataclass(frozen=True)
class Lorentzian:
    """Lorentzian of peak height ``k0`` at offset ``center``, half width ``width``."""

    k0: float
    center: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        _check_k0(self.k0)
        _check_width(self.width)

    def value(self, x):
        u = np.asarray(x, dtype=float) - self.center
        g2 = self.width ** 2
        return self.k0 * g2 / (u * u + g2)

    def derivs(self):
        x = -self.center
        g2 = self.width ** 2
        d = x * x + g2
        k = self.k0 * g2 / d
        k1 = -2.0 * self.k0 * g2 * x / d ** 2
        k2 = self.k0 * g2 * (6.0 * x * x - 2.0 * g2) / d ** 3
        return k, k1, k2

    def time(self, dt):
        dt = np.asarray(dt, dtype=float)
        amp = self.k0 * math.pi * self.width
        return amp * np.exp(-self.width * np.abs(dt) - 1j * self.center * dt)


SpectralModel = Union[Constant, Taylor, Gaussian, Lorentzian]


def k_omega(m: SpectralModel, offset):
    """Spectral density at frequency offset ``w - omega_L``."""
    out = m.value(offset)
    return float(out) if np.ndim(out) == 0 else out


def k_derivs(m: SpectralModel):
    """``(K, dK/dw, d2K/dw2)`` at the laser frequency, exact."""
    return tuple(float(v) for v in m.derivs())


def k_time(m: SpectralModel, dt):
    """Stationary correlation ``K(dt)``; refused for Constant and Taylor spectra."""
    out = m.time(dt)
    return complex(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class ExponentialMean:
    """Mean reservoir field ``a * gamma * omega * exp(-gamma (t - t0))``."""

    a: float = 1.0
    gamma: float = 2.0

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ValidationError(f"gamma must be > 0, got {self.gamma}")
        if not math.isfinite(self.a):
            raise ValidationError("prefactor a must be finite")


@dataclass(frozen=True)
class DiscreteModes:
    """Driven bosonic modes ``(g_j, delta_j, omega_j)`` initially in vacuum.

    Mode phases are kept in the rotating frame of the laser, so only
    ``delta_j`` enters the time dependence.
    """

    modes: tuple

    def __post_init__(self):
        modes = tuple(tuple(float(v) for v in m) for m in self.modes)
        object.__setattr__(self, "modes", modes)
        for g, d, w in modes:
            if d == 0.0:
                raise ValidationError("mode detuning delta_j must be non-zero")

    def arrays(self):
        arr = np.array(self.modes, dtype=float).reshape(-1, 3)
        return arr[:, 0], arr[:, 1], arr[:, 2]


NonstationaryModel = Union[ExponentialMean, DiscreteModes]


@dataclass(frozen=True)
class CorrelationKernel:
    """Correlation ``<R(tau) R(t)> = K(tau - t) + <R(tau)><R(t)>``."""

    stationary: SpectralModel
    nonstationary: Optional[NonstationaryModel] = None


def mean_r(nm: NonstationaryModel, t, t0: float, omega: float):
    """Mean reservoir field for a vacuum-initialized reservoir; zero before ``t0``."""
    t = np.asarray(t, dtype=float)
    dt = t - t0
    after = dt >= 0
    dt_pos = np.where(after, dt, 0.0)
    if isinstance(nm, ExponentialMean):
        out = nm.a * nm.gamma * omega * np.exp(-nm.gamma * dt_pos)
    elif isinstance(nm, DiscreteModes):
        g, d, w = nm.arrays()
        phase = np.multiply.outer(dt_pos, d)
        out = 2.0 * np.sum(g * w / d * np.cos(phase), axis=-1)
    else:
        raise TypeError(f"unknown nonstationary model {nm!r}")
    out = np.where(after, out, 0.0)
    return float(out) if out.ndim == 0 else out


def detuning_shift(nm: NonstationaryModel) -> float:
    """Detuning shift ``-2 sum_j g_j omega_j / delta_j`` of a driven mode reservoir."""
    if not isinstance(nm, DiscreteModes):
        raise NotApplicableError("detuning shift is only defined for discrete modes; supply it directly")
    g, d, w = nm.arrays()
    return float(-2.0 * np.sum(g * w / d))


def correlation(k: CorrelationKernel, tau, t: float, t0: float, omega: float):
    """Regular part of the reservoir correlation function.

    A flat stationary spectrum contributes only a delta function at
    ``tau == t``; that term is omitted here and handled analytically by the
    quadrature routines.
    """
    tau = np.asarray(tau, dtype=float)
    if isinstance(k.stationary, Constant):
        out = np.zeros_like(tau, dtype=complex)
    else:
        out = np.asarray(k_time(k.stationary, tau - t), dtype=complex)
    if k.nonstationary is not None:
        out = out + mean_r(k.nonstationary, tau, t0, omega) * mean_r(k.nonstationary, t, t0, omega)
    return complex(out) if out.ndim == 0 else out
