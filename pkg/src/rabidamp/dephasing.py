"""Time-dependent dephasing rate and renormalized Rabi frequency.

Each policy supplies, at time ``t``, the complex dephasing rate ``kappa``,
the generalized Rabi frequency ``omega_bar`` entering the coherence equation,
and the mean reservoir field ``<R(t)>`` that shifts the detuning.

Stationary closed forms (triplet, quadratic expansion) are defined for
rectangular pulses only.  Quadrature-based policies use the dressing of the
pulse that is active at ``t``: the rectangular pulse dressing while it is on,
free evolution (``D++ = 1``, ``D+- = 0``) after it ends.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.interpolate import CubicSpline

from .dressing import DressingParams, d_plus_minus, d_plus_plus
from .errors import NumericalError, UnphysicalRateWarning, ValidationError
from .quadrature import adaptive_quad, gauss_kronrod
from .reservoir import (
    Constant,
    CorrelationKernel,
    ExponentialMean,
    NonstationaryModel,
    SpectralModel,
    correlation,
    k_derivs,
    k_omega,
    k_time,
    mean_r,
)
from .system import PulseSpec, TlsParams, envelope_at

__all__ = [
    "Markov",
    "StationaryTriplet",
    "StationaryExpansion",
    "Nonstationary",
    "GeneralQuadrature",
    "DephasingPolicy",
    "RateTrace",
    "kappa_markov",
    "kappa_triplet",
    "kappa_expansion",
    "rabi_generalized",
    "kappa_nonstationary",
    "kappa_nonstationary_closed",
    "kappa_quadrature",
    "omega_bar_quadrature",
    "rate_trace",
    "evaluate",
    "coefficient_function",
    "instantaneous_dressing",
]

UNIT_DPP = "unit"
FULL_DPP = "full"


@dataclass(frozen=True)
class Markov:
    kappa: float
    name: str = "markov"

    def __post_init__(self):
        if not (math.isfinite(self.kappa) and self.kappa >= 0):
            raise ValidationError(f"kappa must be >= 0, got {self.kappa}")


@dataclass(frozen=True)
class StationaryTriplet:
    spectrum: SpectralModel
    name: str = "triplet"


@dataclass(frozen=True)
class StationaryExpansion:
    spectrum: SpectralModel
    name: str = "expansion"


@dataclass(frozen=True)
class Nonstationary:
    kappa_s: float
    model: NonstationaryModel
    dpp_mode: str = UNIT_DPP
    quad_tol: float = 1e-8
    name: str = "nonstationary"

    def __post_init__(self):
        if not (math.isfinite(self.kappa_s) and self.kappa_s >= 0):
            raise ValidationError(f"kappa_s must be >= 0, got {self.kappa_s}")
        if self.dpp_mode not in (UNIT_DPP, FULL_DPP):
            raise ValidationError(f"dpp_mode must be 'unit' or 'full', got {self.dpp_mode!r}")
        if not self.quad_tol > 0:
            raise ValidationError("quad_tol must be > 0")


@dataclass(frozen=True)
class GeneralQuadrature:
    kernel: CorrelationKernel
    quad_tol: float = 1e-8
    name: str = "quadrature"

    def __post_init__(self):
        if not self.quad_tol > 0:
            raise ValidationError("quad_tol must be > 0")


DephasingPolicy = Union[Markov, StationaryTriplet, StationaryExpansion, Nonstationary, GeneralQuadrature]


@dataclass(frozen=True)
class RateTrace:
    times: np.ndarray
    kappa: np.ndarray
    omega_bar: np.ndarray

    def __post_init__(self):
        if not (len(self.times) == len(self.kappa) == len(self.omega_bar)):
            raise ValidationError("rate trace columns differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ValidationError("rate trace times must be strictly increasing")


# -- closed forms -------------------------------------------------------------

def kappa_markov(policy: Markov) -> float:
    if not isinstance(policy, Markov):
        raise TypeError(f"expected a Markov policy, got {type(policy).__name__}")
    return policy.kappa


def kappa_triplet(m: SpectralModel, omega: float, delta: float) -> float:
    """Dephasing rate from the three triplet frequencies ``0, +-omega_r``."""
    dp = DressingParams(omega, delta)
    c, s, wr = dp.c, dp.s, dp.omega_r
    k_center = k_omega(m, 0.0)
    if s == 0.0:
        return math.pi * k_center
    return (0.5 * math.pi * (c * c + 1.0) * k_center
            + 0.25 * math.pi * s * s * (k_omega(m, wr) + k_omega(m, -wr)))


def kappa_expansion(m: SpectralModel, omega: float) -> float:
    """``pi K + (pi omega^2 / 4) K''``, clamped at zero with a warning."""
    k, _, k2 = k_derivs(m)
    kappa = math.pi * k + 0.25 * math.pi * omega * omega * k2
    if kappa < 0:
        warnings.warn(f"negative dephasing rate {kappa:.4g} clamped to 0 (omega={omega:.4g})",
                      UnphysicalRateWarning, stacklevel=2)
        return 0.0
    return kappa


def rabi_generalized(m: SpectralModel, omega: float, delta: float) -> complex:
    """``(omega - pi omega K' + pi omega delta K'' / 2) / 2``."""
    _, k1, k2 = k_derivs(m)
    return complex(0.5 * (omega - math.pi * omega * k1 + 0.5 * math.pi * omega * delta * k2))


def kappa_nonstationary_closed(policy: Nonstationary, t: float, p: PulseSpec) -> float:
    """Closed form for an exponential mean field with ``D++ = 1``."""
    nm = policy.model
    dt = t - p.t0
    if dt <= 0:
        return policy.kappa_s
    e = math.exp(-nm.gamma * dt)
    return policy.kappa_s + nm.a ** 2 * nm.gamma * p.omega ** 2 * e * (1.0 - e)


def _panels_for(span: float, freq: float) -> int:
    return max(1, min(4096, math.ceil(abs(span) * abs(freq) / math.pi) + 1))


def kappa_nonstationary(policy: Nonstationary, t: float, dressing: DressingParams, p: PulseSpec) -> float:
    """Stationary rate plus ``<R(t)> int_{t0}^t <R(tau)> D++(tau - t) dtau``.

    The mean field is driven by the pulse amplitude ``p.omega``; ``dressing``
    supplies ``D++`` in full-dressing mode.
    """
    if not isinstance(policy, Nonstationary):
        raise TypeError(f"expected a Nonstationary policy, got {type(policy).__name__}")
    t0 = p.t0
    if t <= t0:
        return policy.kappa_s
    if policy.dpp_mode == UNIT_DPP and isinstance(policy.model, ExponentialMean):
        return kappa_nonstationary_closed(policy, t, p)
    r_t = mean_r(policy.model, t, t0, p.omega)
    if r_t == 0.0:
        return policy.kappa_s
    if policy.dpp_mode == FULL_DPP:
        def integrand(tau):
            return mean_r(policy.model, tau, t0, p.omega) * d_plus_plus(dressing, tau - t)
        freq = dressing.omega_r
    else:
        def integrand(tau):
            return mean_r(policy.model, tau, t0, p.omega)
        freq = 0.0
    if isinstance(policy.model, ExponentialMean):
        freq = max(freq, policy.model.gamma)
    else:
        freq = max(freq, float(np.max(np.abs(policy.model.arrays()[1]))))
    tol = policy.quad_tol / max(abs(r_t), 1.0)
    val, _ = adaptive_quad(integrand, t0, t, abs_tol=tol, initial_panels=_panels_for(t - t0, freq))
    return policy.kappa_s + r_t * float(np.real(val))


def _kernel_scale(kernel: CorrelationKernel) -> float:
    st = kernel.stationary
    freq = 0.0
    if hasattr(st, "width"):
        freq = max(freq, st.width + abs(st.center))
    nm = kernel.nonstationary
    if isinstance(nm, ExponentialMean):
        freq = max(freq, nm.gamma)
    elif nm is not None:
        freq = max(freq, float(np.max(np.abs(nm.arrays()[1]))))
    return freq


def _kernel_quad(kernel, t, t0, dressing, drive, weight, quad_tol):
    if t <= t0:
        return 0j
    amp = dressing.omega if drive is None else drive

    def integrand(tau):
        return correlation(kernel, tau, t, t0, amp) * weight(dressing, tau - t)

    freq = max(dressing.omega_r, _kernel_scale(kernel))
    lo = t0
    st = kernel.stationary
    if kernel.nonstationary is None and hasattr(st, "width"):
        # stationary-only kernels are negligible beyond ~40 correlation times
        lo = max(t0, t - 40.0 / st.width)
    val, _ = adaptive_quad(integrand, lo, t, abs_tol=quad_tol,
                           initial_panels=_panels_for(t - lo, freq))
    return complex(val)


def kappa_quadrature(kernel: CorrelationKernel, t: float, t0: float, dressing: DressingParams,
                     quad_tol: float = 1e-8, drive: Optional[float] = None) -> complex:
    """``int_{t0}^t <R(tau) R(t)> D++(tau - t) dtau`` by adaptive quadrature.

    A flat stationary spectrum contributes ``pi K`` exactly (half of its
    delta function falls inside the interval).  ``drive`` is the Rabi
    frequency driving the mean field; it defaults to ``dressing.omega``.
    """
    if not isinstance(kernel.stationary, Constant):
        k_time(kernel.stationary, 0.0)  # refuses Taylor spectra
    if t <= t0:
        return 0j
    val = _kernel_quad(kernel, t, t0, dressing, drive, d_plus_plus, quad_tol)
    if isinstance(kernel.stationary, Constant):
        val += math.pi * kernel.stationary.k0
    return val


def omega_bar_quadrature(kernel: CorrelationKernel, t: float, t0: float, dressing: DressingParams,
                         p: PulseSpec, quad_tol: float = 1e-8, drive: Optional[float] = None) -> complex:
    """``Omega(t) - int_{t0}^t <R(tau) R(t)> D+-(tau - t) dtau``."""
    if not isinstance(kernel.stationary, Constant):
        k_time(kernel.stationary, 0.0)
    env = envelope_at(p, t)
    if t <= t0:
        return env
    # the delta part of a flat spectrum meets D+-(0) = 0
    return env - _kernel_quad(kernel, t, t0, dressing, drive, d_plus_minus, quad_tol)


# -- pointwise evaluation -----------------------------------------------------

def instantaneous_dressing(p: PulseSpec, tls: TlsParams, t: float) -> DressingParams:
    return DressingParams(2.0 * abs(envelope_at(p, t)), tls.effective_delta)


def _require_rectangular(policy, p):
    if not p.is_rectangular:
        raise ValidationError(f"{type(policy).__name__} is defined for rectangular pulses only")


def evaluate(policy: DephasingPolicy, p: PulseSpec, tls: TlsParams, t: float):
    """``(kappa, omega_bar, mean_field)`` at time ``t``, computed directly."""
    env = envelope_at(p, t)
    if isinstance(policy, Markov):
        return complex(policy.kappa), env, 0.0
    if isinstance(policy, (StationaryTriplet, StationaryExpansion)):
        _require_rectangular(policy, p)
        omega = 2.0 * abs(env)
        delta = tls.effective_delta
        if isinstance(policy, StationaryTriplet):
            kappa = kappa_triplet(policy.spectrum, omega, delta)
        else:
            kappa = kappa_expansion(policy.spectrum, omega)
        return complex(kappa), rabi_generalized(policy.spectrum, omega, delta), 0.0
    dressing = instantaneous_dressing(p, tls, t)
    if isinstance(policy, Nonstationary):
        kappa = kappa_nonstationary(policy, t, dressing, p)
        return complex(kappa), env, mean_r(policy.model, t, p.t0, p.omega)
    if isinstance(policy, GeneralQuadrature):
        k = policy.kernel
        kappa = kappa_quadrature(k, t, p.t0, dressing, policy.quad_tol, drive=p.omega)
        obar = omega_bar_quadrature(k, t, p.t0, dressing, p, policy.quad_tol, drive=p.omega)
        mf = 0.0 if k.nonstationary is None else mean_r(k.nonstationary, t, p.t0, p.omega)
        return kappa, obar, mf
    raise TypeError(f"unknown policy {policy!r}")


def rate_trace(policy: DephasingPolicy, p: PulseSpec, tls: TlsParams, grid) -> RateTrace:
    """Tabulate ``kappa(t)`` and ``omega_bar(t)`` on ``grid``."""
    times = np.asarray(grid, dtype=float)
    kappa = np.empty(times.size, dtype=complex)
    obar = np.empty(times.size, dtype=complex)
    for i, t in enumerate(times):
        kappa[i], obar[i], _ = evaluate(policy, p, tls, float(t))
    return RateTrace(times, kappa, obar)


# -- tabulated coefficients for the integrator --------------------------------

def _cumulative(f, grid, tol):
    """Running integral of ``f`` from ``grid[0]`` to every grid point."""
    out = np.zeros(grid.size, dtype=complex)
    per_panel = tol / max(grid.size - 1, 1)
    acc = 0j
    for i in range(grid.size - 1):
        a, b = grid[i], grid[i + 1]
        v, e = gauss_kronrod(f, a, b)
        if e > per_panel:
            v, _ = adaptive_quad(f, a, b, abs_tol=per_panel)
        acc += v
        out[i + 1] = acc
    return out


def _grid(a, b, step):
    n = max(4, math.ceil((b - a) / step))
    return np.linspace(a, b, n + 1)


class _Tabulated:
    """Piecewise cubic interpolation of coefficients, split at the pulse end."""

    def __init__(self, pieces, p, mean_field):
        self.pieces = pieces
        self.p = p
        self.mean_field = mean_field

    def __call__(self, t):
        for lo, hi, k_spl, o_spl in self.pieces:
            if t <= hi or (lo, hi) == self.pieces[-1][:2]:
                return complex(k_spl(t)), complex(o_spl(t)), self.mean_field(t)
        raise AssertionError("unreachable")

    def side(self, on: bool):
        """Coefficients restricted to the on-pulse or off-pulse piece.

        The integrator uses this so that a stage evaluated exactly at the
        pulse end still sees the limit from its own side.
        """
        index = 0 if on or len(self.pieces) == 1 else 1
        _, _, k_spl, o_spl = self.pieces[index]
        return lambda t: (complex(k_spl(t)), complex(o_spl(t)), self.mean_field(t))


def _spline(x, y):
    if x.size < 4:
        return lambda t: np.interp(t, x, y.real) + 1j * np.interp(t, x, y.imag)
    return CubicSpline(x, y)


def _nonstationary_piece(policy, p, tls, grid, on):
    """Grid values of kappa for a rectangular pulse, using separable D++."""
    t0 = p.t0
    model = policy.model
    dp = DressingParams(p.omega if on else 0.0, tls.effective_delta)
    wr = dp.omega_r

    def r(tau):
        return mean_r(model, tau, t0, p.omega)

    full = policy.dpp_mode == FULL_DPP and on and dp.s > 0
    base = np.concatenate([[t0], grid]) if grid[0] > t0 else grid
    tol = policy.quad_tol
    j0 = _cumulative(r, base, tol).real
    r_grid = mean_r(model, base, t0, p.omega)
    if full:
        jc = _cumulative(lambda tau: r(tau) * np.cos(wr * (tau - t0)), base, tol).real
        js = _cumulative(lambda tau: r(tau) * np.sin(wr * (tau - t0)), base, tol).real
        ph = wr * (base - t0)
        a = 0.5 * (1.0 + dp.c ** 2)
        b = 0.5 * dp.s ** 2
        integral = a * j0 + b * (np.cos(ph) * jc + np.sin(ph) * js)
    else:
        integral = j0
    kappa = policy.kappa_s + r_grid * integral
    if base.size != grid.size:
        kappa = kappa[1:]
    return kappa.astype(complex)


def coefficient_function(policy: DephasingPolicy, p: PulseSpec, tls: TlsParams,
                         t_end: float, grid_step: float):
    """Callable ``t -> (kappa, omega_bar, mean_field)`` for the integrator.

    Closed-form policies are evaluated directly.  Quadrature-based ones are
    tabulated on a uniform grid of spacing at most ``grid_step`` and
    cubic-interpolated, separately on and after the pulse.
    """
    if isinstance(policy, (Markov, StationaryTriplet, StationaryExpansion)):
        if not isinstance(policy, Markov):
            _require_rectangular(policy, p)
        return _Direct(policy, p, tls)
    if isinstance(policy, Nonstationary) and policy.dpp_mode == UNIT_DPP \
            and isinstance(policy.model, ExponentialMean):
        return _Direct(policy, p, tls)

    spans = [(p.t0, min(p.t_end, t_end), True)]
    if t_end > p.t_end:
        spans.append((p.t_end, t_end, False))
    pieces = []
    for lo, hi, on in spans:
        if hi <= lo:
            continue
        grid = _grid(lo, hi, grid_step)
        if isinstance(policy, Nonstationary) and p.is_rectangular:
            kappa = _nonstationary_piece(policy, p, tls, grid, on)
            obar = np.full(grid.size, 0.5 * p.omega if on else 0.0, dtype=complex)
        else:
            kappa = np.empty(grid.size, dtype=complex)
            obar = np.empty(grid.size, dtype=complex)
            for i, t in enumerate(grid):
                # off-pulse values are one-sided limits from the right of the pulse end
                tt = float(t) if on else max(float(t), float(np.nextafter(p.t_end, np.inf)))
                kappa[i], obar[i], _ = evaluate(policy, p, tls, tt)
        pieces.append((lo, hi, _spline(grid, kappa), _spline(grid, obar)))

    if isinstance(policy, Nonstationary):
        model = policy.model
    else:
        model = policy.kernel.nonstationary
    if model is None:
        mean_field = lambda t: 0.0  # noqa: E731
    else:
        mean_field = lambda t: mean_r(model, t, p.t0, p.omega)  # noqa: E731
    return _Tabulated(pieces, p, mean_field)


class _Direct:
    def __init__(self, policy, p, tls):
        self.policy = policy
        self.p = p
        self.tls = tls
        self._cache = {}

    def __call__(self, t):
        policy, p = self.policy, self.p
        if isinstance(policy, Nonstationary):
            return (complex(kappa_nonstationary_closed(policy, t, p)), envelope_at(p, t),
                    mean_r(policy.model, t, p.t0, p.omega))
        if p.is_rectangular and not isinstance(policy, Markov):
            on = p.t0 <= t <= p.t_end
            if on not in self._cache:
                self._cache[on] = evaluate(policy, p, self.tls, p.t0 if on else p.t_end + 1.0)
            return self._cache[on]
        return evaluate(policy, p, self.tls, t)
