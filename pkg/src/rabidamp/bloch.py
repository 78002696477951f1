"""Time-local Bloch equations with policy-supplied coefficients.

State is carried as three reals ``(rho_pp, Re rho_pm, Im rho_pm)``::

    d rho_pp / dt = i [Omega(t) rho_mp - Omega*(t) rho_pm]
    d rho_pm / dt = {i [Delta + <R(t)>] - kappa(t)} rho_pm + i omega_bar*(t) [1 - 2 rho_pp]

The population equation uses the bare envelope unless
``renormalize_population_drive`` is set.  A complex ``kappa`` splits into a
decay rate (real part) and a frequency shift (imaginary part) automatically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import expm

from .dephasing import (
    DephasingPolicy,
    Markov,
    StationaryExpansion,
    StationaryTriplet,
    coefficient_function,
)
from .errors import ValidationError
from .ode import adaptive, rk4_fixed
from .system import BlochState, PulseSpec, TlsParams, envelope_at

__all__ = [
    "SimConfig",
    "Trajectory",
    "derivative",
    "integrate",
    "final_population",
    "reference_final_state",
    "final_populations_exact",
    "default_max_step",
]

RK45 = "rk45"
EXACT = "exact"


@dataclass(frozen=True)
class SimConfig:
    pulse: PulseSpec
    policy: DephasingPolicy
    tls: TlsParams = field(default_factory=TlsParams)
    initial: BlochState = field(default_factory=BlochState)
    t_end: Optional[float] = None
    rel_tol: float = 1e-9
    abs_tol: float = 1e-11
    max_step: Optional[float] = None
    renormalize_population_drive: bool = False
    method: str = RK45

    def __post_init__(self):
        if self.t_end is not None and self.t_end < self.pulse.t0:
            raise ValidationError("t_end must not precede the pulse start")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValidationError("tolerances must be > 0")
        if self.max_step is not None and not self.max_step > 0:
            raise ValidationError("max_step must be > 0")
        if self.method not in (RK45, EXACT):
            raise ValidationError(f"unknown integration method {self.method!r}")

    @property
    def end(self) -> float:
        return self.pulse.t_end if self.t_end is None else self.t_end

    def with_omega(self, omega: float) -> "SimConfig":
        p = self.pulse
        if not p.is_rectangular:
            raise ValidationError("amplitude rescaling needs a rectangular pulse")
        return replace(self, pulse=PulseSpec.rectangular(omega, p.duration, p.t0))


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    rho_pp: np.ndarray
    rho_pm: np.ndarray
    kappa_used: np.ndarray

    @property
    def states(self) -> list:
        return [BlochState(float(p), complex(c)) for p, c in zip(self.rho_pp, self.rho_pm)]

    @property
    def rho_mm(self) -> np.ndarray:
        return 1.0 - self.rho_pp

    def bloch_lengths(self) -> np.ndarray:
        return np.sqrt(4.0 * np.abs(self.rho_pm) ** 2 + (2.0 * self.rho_pp - 1.0) ** 2)


def default_max_step(cfg: SimConfig) -> float:
    if cfg.max_step is not None:
        return cfg.max_step
    wr = math.hypot(cfg.pulse.omega, cfg.tls.effective_delta)
    cap = cfg.pulse.duration / 50.0
    return min(0.05 / wr, cap) if wr > 0 else cap


def _tangent(t, p, rho, env, kappa, omega_bar, mean_field, delta, renorm):
    drive = omega_bar if renorm else env
    dp = -2.0 * (drive * rho.conjugate()).imag
    drho = (1j * (delta + mean_field) - kappa) * rho + 1j * omega_bar.conjugate() * (1.0 - 2.0 * p)
    return dp, drho


def derivative(s: BlochState, t: float, cfg: SimConfig, coeffs=None):
    """Tangent ``(d rho_pp/dt, d rho_pm/dt)`` at state ``s`` and time ``t``."""
    if coeffs is None:
        coeffs = coefficient_function(cfg.policy, cfg.pulse, cfg.tls, max(cfg.end, t),
                                      default_max_step(cfg) / 4.0)
    kappa, obar, mf = coeffs(t)
    return _tangent(t, s.rho_pp, complex(s.rho_pm), envelope_at(cfg.pulse, t), kappa, obar, mf,
                    cfg.tls.effective_delta, cfg.renormalize_population_drive)


def _segment_edges(cfg: SimConfig):
    t_start, t_stop = cfg.pulse.t0, cfg.end
    inner = [b for b in cfg.pulse.breakpoints() if t_start < b < t_stop]
    return [t_start] + sorted(set(inner)) + [t_stop]


def _is_constant(cfg: SimConfig) -> bool:
    return cfg.pulse.is_rectangular and isinstance(
        cfg.policy, (Markov, StationaryTriplet, StationaryExpansion))


def _rhs_factory(cfg: SimConfig, coeffs, a: float, b: float):
    """Real right-hand side valid on the open segment ``(a, b)``."""
    delta = cfg.tls.effective_delta
    renorm = cfg.renormalize_population_drive
    pulse = cfg.pulse
    if _is_constant(cfg):
        mid = 0.5 * (a + b)
        kappa, obar, mf = coeffs(mid)
        env = complex(envelope_at(pulse, mid))

        def rhs(t, y):
            dp, drho = _tangent(t, y[0], complex(y[1], y[2]), env, kappa, obar, mf, delta, renorm)
            return np.array([dp, drho.real, drho.imag])
        return rhs

    if pulse.is_rectangular:
        on_value = complex(0.5 * pulse.omega)
        lo, hi = pulse.t0, pulse.t_end
        inside = lo <= 0.5 * (a + b) <= hi
        side = coeffs.side(inside) if hasattr(coeffs, "side") else coeffs

        def rhs(t, y):
            kappa, obar, mf = side(t)
            env = on_value if inside else 0j
            dp, drho = _tangent(t, y[0], complex(y[1], y[2]), env, kappa, obar, mf, delta, renorm)
            return np.array([dp, drho.real, drho.imag])
        return rhs

    def rhs(t, y):
        kappa, obar, mf = coeffs(t)
        env = complex(envelope_at(pulse, t))
        dp, drho = _tangent(t, y[0], complex(y[1], y[2]), env, kappa, obar, mf, delta, renorm)
        return np.array([dp, drho.real, drho.imag])
    return rhs


def _affine_matrix(cfg: SimConfig, coeffs, t):
    """Generator of the constant-coefficient affine flow on ``(p, x, y, 1)``."""
    kappa, obar, mf = coeffs(t)
    env = complex(envelope_at(cfg.pulse, t))
    d = cfg.tls.effective_delta + mf - kappa.imag
    kr = kappa.real
    a, b = obar.real, obar.imag
    drive = obar if cfg.renormalize_population_drive else env
    m = np.zeros((4, 4))
    # dp = -2 Im(drive * conj(rho)) = -2 (Im drive) x + 2 (Re drive) y
    m[0, 1] = -2.0 * drive.imag
    m[0, 2] = 2.0 * drive.real
    m[1] = [-2.0 * b, -kr, -d, b]
    m[2] = [-2.0 * a, d, -kr, a]
    return m


def _exact_final(cfg: SimConfig, coeffs, edges):
    if not _is_constant(cfg):
        raise ValidationError("exact propagation needs a rectangular pulse and a time-independent policy")
    y = np.array([cfg.initial.rho_pp, cfg.initial.rho_pm.real, cfg.initial.rho_pm.imag, 1.0])
    for a, b in zip(edges, edges[1:]):
        if b > a:
            y = expm(_affine_matrix(cfg, coeffs, 0.5 * (a + b)) * (b - a)) @ y
    return y[:3]


def _coeffs_for(cfg: SimConfig):
    return coefficient_function(cfg.policy, cfg.pulse, cfg.tls, cfg.end, default_max_step(cfg) / 4.0)


def integrate(cfg: SimConfig, sample_times: Optional[Sequence[float]] = None) -> Trajectory:
    """Integrate from the pulse start to ``cfg.end``.

    Without ``sample_times`` the trajectory holds every accepted step;
    otherwise it holds dense-output values at the requested times.
    """
    coeffs = _coeffs_for(cfg)
    edges = _segment_edges(cfg)
    y = np.array([cfg.initial.rho_pp, cfg.initial.rho_pm.real, cfg.initial.rho_pm.imag])
    max_step = default_max_step(cfg)
    want = None if sample_times is None else np.asarray(sample_times, dtype=float)
    if want is not None and want.size and (want.min() < edges[0] - 1e-12 or want.max() > edges[-1] + 1e-12):
        raise ValidationError("sample times must lie within the integration interval")

    if cfg.method == EXACT:
        if want is not None:
            raise ValidationError("exact propagation returns the final state only")
        final = _exact_final(cfg, coeffs, edges)
        times = np.array([edges[0], edges[-1]])
        states = np.vstack([y, final])
    else:
        all_t, all_y, pieces = [np.array([edges[0]])], [y[None, :]], []
        for a, b in zip(edges, edges[1:]):
            if b <= a:
                continue
            rhs = _rhs_factory(cfg, coeffs, a, b)
            ts, ys, sol = adaptive(rhs, (a, b), y, cfg.rel_tol, cfg.abs_tol, max_step,
                                   dense=want is not None)
            all_t.append(ts[1:])
            all_y.append(ys[1:])
            pieces.append((a, b, ys[-1], sol))
            y = ys[-1]
        if want is None:
            times = np.concatenate(all_t)
            states = np.vstack(all_y)
        else:
            times = want
            states = _dense_eval(want, edges[0], cfg.initial, pieces)

    kappa = np.array([coeffs(float(t))[0] for t in times], dtype=complex)
    return Trajectory(times=times, rho_pp=states[:, 0], rho_pm=states[:, 1] + 1j * states[:, 2],
                      kappa_used=kappa)


def _dense_eval(want, t_start, initial, pieces):
    """Continuous-solution values at ``want``; segment ends use the stepped state."""
    out = np.empty((want.size, 3))
    start = np.array([initial.rho_pp, initial.rho_pm.real, initial.rho_pm.imag])
    for i, t in enumerate(want):
        if t <= t_start:
            out[i] = start
            continue
        for a, b, y_end, sol in pieces:
            if t <= b:
                out[i] = y_end if t >= b else sol(t)
                break
        else:
            out[i] = pieces[-1][2]
    return out


def final_population(cfg: SimConfig) -> float:
    """Excited-state population at ``cfg.end`` (the pulse end by default)."""
    traj = integrate(cfg)
    return float(traj.rho_pp[-1])


def reference_final_state(cfg: SimConfig, dt: float = 1e-4) -> BlochState:
    """Final state from fixed-step classical RK4, as an accuracy reference."""
    coeffs = _coeffs_for(cfg)
    edges = _segment_edges(cfg)
    y = np.array([cfg.initial.rho_pp, cfg.initial.rho_pm.real, cfg.initial.rho_pm.imag])
    for a, b in zip(edges, edges[1:]):
        if b > a:
            y = rk4_fixed(_rhs_factory(cfg, coeffs, a, b), (a, b), y, dt)
    return BlochState(float(y[0]), complex(y[1], y[2]))


def final_populations_exact(cfg: SimConfig, omegas) -> np.ndarray:
    """Final populations for a batch of rectangular-pulse Rabi frequencies.

    Same flow as ``method="exact"``; the matrix exponentials are evaluated as
    one stacked call.  Requires a time-independent policy.
    """
    omegas = np.asarray(omegas, dtype=float)
    p = cfg.pulse
    cfgs = [cfg.with_omega(float(w)) for w in omegas]
    if not cfgs:
        return np.empty(0)
    if not _is_constant(cfgs[0]):
        raise ValidationError("exact propagation needs a rectangular pulse and a time-independent policy")
    y = np.tile([cfg.initial.rho_pp, cfg.initial.rho_pm.real, cfg.initial.rho_pm.imag, 1.0],
                (omegas.size, 1))
    edges = _segment_edges(cfg)
    for a, b in zip(edges, edges[1:]):
        if b <= a:
            continue
        mid = 0.5 * (a + b)
        gens = np.stack([_affine_matrix(c, _coeffs_for(c), mid) * (b - a) for c in cfgs])
        y = np.einsum("nij,nj->ni", expm(gens), y)
    return y[:, 0]
