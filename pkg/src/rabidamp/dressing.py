"""Dressing functions of the driven two-level system.

``D++`` and ``D+-`` are the population and coherence components of the
Heisenberg-evolved excited-state projector.  For a rectangular pulse they have
closed forms; for arbitrary envelopes they are built from the numerically
propagated 2x2 evolution operator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .system import PulseSpec, TlsParams, envelope_at

__all__ = [
    "DressingParams",
    "d_plus_plus",
    "d_plus_minus",
    "dress_numeric",
    "propagator",
]

_SERIES_SWITCH = 1e-6


@dataclass(frozen=True)
class DressingParams:
    """Rectangular-pulse Rabi frequency ``omega`` and detuning ``delta``."""

    omega: float
    delta: float = 0.0

    @property
    def omega_r(self) -> float:
        return math.hypot(self.delta, self.omega)

    @property
    def c(self) -> float:
        wr = self.omega_r
        if wr == 0.0:
            return 1.0
        return self.delta / wr

    @property
    def s(self) -> float:
        wr = self.omega_r
        if wr == 0.0:
            return 0.0
        return self.omega / wr


def d_plus_plus(dp: DressingParams, t):
    """Population dressing function ``(1 + c^2 + s^2 cos(omega_r t)) / 2``."""
    c, s = dp.c, dp.s
    out = 0.5 * (1.0 + c * c + s * s * np.cos(dp.omega_r * np.asarray(t, dtype=float)))
    return float(out) if np.ndim(out) == 0 else out


def d_plus_minus(dp: DressingParams, t):
    """Coherence dressing function.

    Evaluated as ``(i omega / omega_r) (c (1 - cos x) + i sin x)`` with
    ``x = omega_r t``; below ``|x| < 1e-6`` the series ``-omega t + i omega
    delta t^2 / 2`` is used instead.
    """
    t = np.asarray(t, dtype=float)
    wr = dp.omega_r
    x = wr * t
    small = np.abs(x) < _SERIES_SWITCH
    series = -dp.omega * t + 0.5j * dp.omega * dp.delta * t * t
    if wr == 0.0:
        out = series.astype(complex)
    else:
        x_safe = np.where(small, 0.0, x)
        one_minus_cos = 2.0 * np.sin(0.5 * x_safe) ** 2
        closed = (1j * dp.omega / wr) * (dp.c * one_minus_cos + 1j * np.sin(x_safe))
        out = np.where(small, series, closed)
    return complex(out) if out.ndim == 0 else out


def _hamiltonian(env: complex, delta: float) -> np.ndarray:
    # basis (|+>, |->)
    return np.array([[delta, env], [np.conj(env), 0.0]], dtype=complex)


def _expm_antihermitian(m: np.ndarray) -> np.ndarray:
    # m = -i (a I + b . sigma) with a, b real
    a = 0.5 * (1j * (m[0, 0] + m[1, 1])).real
    bz = 0.5 * (1j * (m[0, 0] - m[1, 1])).real
    bx = (1j * m[0, 1]).real
    by = -(1j * m[0, 1]).imag
    nb = math.sqrt(bx * bx + by * by + bz * bz)
    cos_b = math.cos(nb)
    sinc_b = math.sin(nb) / nb if nb > 1e-300 else 1.0
    phase = complex(math.cos(a), -math.sin(a))
    return phase * np.array(
        [[cos_b - 1j * sinc_b * bz, -1j * sinc_b * (bx - 1j * by)],
         [-1j * sinc_b * (bx + 1j * by), cos_b + 1j * sinc_b * bz]],
        dtype=complex,
    )


def propagator(p: PulseSpec, tls: TlsParams, t: float, max_step: float | None = None) -> np.ndarray:
    """Time-ordered evolution operator of the bare Hamiltonian from ``p.t0`` to ``p.t0 + t``.

    Uses fixed-step fourth-order Magnus steps, each exponentiated exactly, so
    the result is unitary to rounding error.  Steps are aligned with sample
    knots of sampled envelopes.
    """
    if t < 0:
        raise ValueError("propagation time must be non-negative")
    delta = tls.effective_delta
    scale = max(abs(delta), p.omega, 1e-12)
    if max_step is None:
        max_step = min(1e-2, 0.02 / scale)
    if max_step <= 1e-14:
        raise NumericalError("step-size underflow in dressing propagator")
    t_final = p.t0 + t
    edges = [p.t0] + [b for b in p.breakpoints() if p.t0 < b < t_final] + [t_final]
    g1 = 0.5 - math.sqrt(3.0) / 6.0
    g2 = 0.5 + math.sqrt(3.0) / 6.0
    k = math.sqrt(3.0) / 12.0
    u = np.eye(2, dtype=complex)
    for a, b in zip(edges, edges[1:]):
        span = b - a
        if span <= 0:
            continue
        n = max(1, math.ceil(span / max_step))
        h = span / n
        # evaluate envelope strictly inside the interval so edge values are one-sided
        for i in range(n):
            ta = a + i * h
            a1 = -1j * _hamiltonian(envelope_at(p, ta + g1 * h), delta)
            a2 = -1j * _hamiltonian(envelope_at(p, ta + g2 * h), delta)
            omega = 0.5 * h * (a1 + a2) + k * h * h * (a2 @ a1 - a1 @ a2)
            u = _expm_antihermitian(omega) @ u
    return u


def dress_numeric(p: PulseSpec, tls: TlsParams, t: float):
    """``(D++(t), D+-(t))`` from the numerically propagated evolution operator.

    ``D++ = |U++|^2`` and ``D+- = 2i U++ conj(U-+)``; negative arguments are
    evaluated at ``|t|``.
    """
    u = propagator(p, tls, abs(float(t)))
    dpp = abs(u[0, 0]) ** 2
    dpm = 2j * u[0, 0] * np.conj(u[1, 0])
    return float(dpp), complex(dpm)
