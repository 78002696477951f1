"""Driving pulse, detuning and density-matrix value types.

Units are fixed throughout the package: time in ps, every rate and angular
frequency in rad/ps.  ``PulseSpec.omega`` is the full Rabi frequency; the
envelope entering the Hamiltonian is ``omega / 2`` during a rectangular pulse,
so a pulse of area ``omega * duration == pi`` inverts an undamped system.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ValidationError

__all__ = [
    "PulseSpec",
    "TlsParams",
    "BlochState",
    "pulse_area",
    "envelope_at",
]


@dataclass(frozen=True)
class PulseSpec:
    """Driving pulse envelope.

    A rectangular pulse is described by ``omega``, ``duration`` and ``t0``.
    When ``samples`` is given the envelope is sampled: a time-sorted sequence
    of ``(time, complex amplitude)`` pairs, linearly interpolated, where the
    amplitude is the envelope value itself (not the full Rabi frequency).
    """

    omega: float
    duration: float
    t0: float = 0.0
    samples: Optional[tuple] = None

    def __post_init__(self):
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ValidationError(f"pulse duration must be > 0, got {self.duration}")
        if not (math.isfinite(self.omega) and self.omega >= 0):
            raise ValidationError(f"pulse omega must be >= 0, got {self.omega}")
        if self.samples is not None:
            times = [float(s[0]) for s in self.samples]
            if len(times) < 2:
                raise ValidationError("sampled envelope needs at least two samples")
            if any(b <= a for a, b in zip(times, times[1:])):
                raise ValidationError("sampled envelope times must be strictly increasing")
            if not math.isclose(times[0], self.t0, abs_tol=1e-12):
                raise ValidationError("sampled envelope must start at t0")
            if times[-1] < self.t0 + self.duration - 1e-12:
                raise ValidationError("sampled envelope must cover [t0, t0 + duration]")

    @classmethod
    def rectangular(cls, omega: float, duration: float, t0: float = 0.0) -> "PulseSpec":
        return cls(omega=float(omega), duration=float(duration), t0=float(t0))

    @classmethod
    def sampled(cls, times: Sequence[float], values: Sequence[complex]) -> "PulseSpec":
        """Build a sampled pulse spanning the first to the last sample time."""
        times = [float(t) for t in times]
        values = [complex(v) for v in values]
        if len(times) != len(values):
            raise ValidationError("times and values differ in length")
        peak = 2.0 * max(abs(v) for v in values) if values else 0.0
        return cls(omega=peak, duration=times[-1] - times[0], t0=times[0],
                   samples=tuple(zip(times, values)))

    @property
    def is_rectangular(self) -> bool:
        return self.samples is None

    @property
    def t_end(self) -> float:
        return self.t0 + self.duration

    def sample_arrays(self):
        t = np.array([s[0] for s in self.samples], dtype=float)
        v = np.array([s[1] for s in self.samples], dtype=complex)
        return t, v

    def breakpoints(self) -> list:
        """Times at which the envelope or its slope may jump."""
        if self.samples is None:
            return [self.t0, self.t_end]
        return [float(s[0]) for s in self.samples if s[0] <= self.t_end] + [self.t_end]


@dataclass(frozen=True)
class TlsParams:
    """Detuning ``delta = omega_0 - omega_L`` plus a reservoir-induced shift."""

    delta: float = 0.0
    delta_shift: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.delta) and math.isfinite(self.delta_shift)):
            raise ValidationError("detuning and shift must be finite")

    @property
    def effective_delta(self) -> float:
        return self.delta + self.delta_shift


@dataclass(frozen=True)
class BlochState:
    """Excited-state population ``rho_pp`` and coherence ``rho_pm``."""

    rho_pp: float = 0.0
    rho_pm: complex = 0j

    @property
    def rho_mm(self) -> float:
        return 1.0 - self.rho_pp

    def bloch_vector(self) -> tuple:
        x = 2.0 * self.rho_pm.real
        y = -2.0 * self.rho_pm.imag
        z = 2.0 * self.rho_pp - 1.0
        return x, y, z

    def bloch_length(self) -> float:
        return math.sqrt(sum(c * c for c in self.bloch_vector()))

    def is_physical(self, tol: float = 1e-8) -> bool:
        p = self.rho_pp
        if p < -tol or p > 1 + tol:
            return False
        return abs(self.rho_pm) ** 2 <= p * (1 - p) + tol


def pulse_area(p: PulseSpec) -> float:
    """Pulse area in radians; ``pi`` means a pi-pulse."""
    if p.is_rectangular:
        return p.omega * p.duration
    t, v = p.sample_arrays()
    mask = t <= p.t_end + 1e-12
    return float(np.trapezoid(2.0 * np.abs(v[mask]), t[mask]))


def envelope_at(p: PulseSpec, t):
    """Envelope value at time ``t`` (scalar or array); zero outside the pulse."""
    t_arr = np.asarray(t, dtype=float)
    inside = (t_arr >= p.t0) & (t_arr <= p.t_end)
    if p.is_rectangular:
        out = np.where(inside, 0.5 * p.omega, 0.0).astype(complex)
    else:
        ts, vs = p.sample_arrays()
        re = np.interp(t_arr, ts, vs.real)
        im = np.interp(t_arr, ts, vs.imag)
        out = np.where(inside, re + 1j * im, 0.0)
    if out.ndim == 0:
        return complex(out)
    return out
