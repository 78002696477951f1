"""Pulse-area sweeps, pulse-width series and their CSV form.

Amplitudes are in pi-pulse units: ``u = 1`` is a pi-pulse at the configured
pulse width, so ``omega = u * pi / duration``.
"""
from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .bloch import SimConfig, final_population
from .dephasing import FULL_DPP, UNIT_DPP, DephasingPolicy, Nonstationary, rate_trace
from .errors import ValidationError
from .system import PulseSpec

__all__ = [
    "AMPLITUDE_AT_FIXED_WIDTH",
    "AREA_AT_FIXED_WIDTH",
    "SweepSpec",
    "SweepResult",
    "area_sweep",
    "width_series",
    "population_vs_amplitude_at_pulse_end",
    "nonstationary_rate_traces",
    "local_maxima",
    "sweep_csv",
    "gnuplot_script",
]

AMPLITUDE_AT_FIXED_WIDTH = "amplitude"
AREA_AT_FIXED_WIDTH = "area"


@dataclass(frozen=True)
class SweepSpec:
    base: SimConfig
    grid: tuple
    policies: tuple = ()
    sweep_variable: str = AMPLITUDE_AT_FIXED_WIDTH

    def __post_init__(self):
        grid = tuple(float(u) for u in self.grid)
        object.__setattr__(self, "grid", grid)
        if not grid:
            raise ValidationError("sweep grid is empty")
        if grid[0] < 0 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValidationError("sweep grid must be non-negative and increasing")
        if self.sweep_variable not in (AMPLITUDE_AT_FIXED_WIDTH, AREA_AT_FIXED_WIDTH):
            raise ValidationError(f"unknown sweep variable {self.sweep_variable!r}")
        policies = tuple(self.policies) or (self.base.policy,)
        names = [p.name for p in policies]
        if len(set(names)) != len(names):
            raise ValidationError(f"policy names must be unique, got {names}")
        object.__setattr__(self, "policies", policies)


@dataclass(frozen=True)
class SweepResult:
    amplitudes: np.ndarray
    columns: dict
    pulse_width: float

    def __post_init__(self):
        for name, col in self.columns.items():
            if len(col) != len(self.amplitudes):
                raise ValidationError(f"column {name!r} has the wrong length")


def _point(task):
    cfg, u = task
    omega = u * math.pi / cfg.pulse.duration
    return final_population(cfg.with_omega(omega))


def _run(tasks, jobs):
    if jobs is None or jobs <= 1 or len(tasks) < 2:
        return [_point(t) for t in tasks]
    chunk = max(1, len(tasks) // (4 * jobs))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_point, tasks, chunksize=chunk))


def area_sweep(spec: SweepSpec, jobs: int = 1) -> SweepResult:
    """Final excited-state population versus amplitude, one column per policy."""
    if not spec.base.pulse.is_rectangular:
        raise ValidationError("amplitude sweeps need a rectangular pulse")
    tasks = [(replace(spec.base, policy=pol), u) for pol in spec.policies for u in spec.grid]
    values = _run(tasks, jobs)
    n = len(spec.grid)
    columns = {pol.name: np.array(values[i * n:(i + 1) * n]) for i, pol in enumerate(spec.policies)}
    return SweepResult(np.array(spec.grid), columns, spec.base.pulse.duration)


def width_series(base: SimConfig, widths: Sequence[float], grid, policies=(), jobs: int = 1) -> list:
    """One amplitude sweep per pulse width, amplitudes in pi-pulse units."""
    out = []
    for w in widths:
        if not w > 0:
            raise ValidationError(f"pulse width must be > 0, got {w}")
        p = base.pulse
        cfg = replace(base, pulse=PulseSpec.rectangular(p.omega, float(w), p.t0), t_end=None)
        out.append(area_sweep(SweepSpec(cfg, grid, tuple(policies)), jobs=jobs))
    return out


def population_vs_amplitude_at_pulse_end(base: SimConfig, grid, jobs: int = 1) -> SweepResult:
    """Non-stationary sweep with unit and full ``D++`` columns side by side."""
    pol = base.policy
    if not isinstance(pol, Nonstationary):
        raise ValidationError("this sweep needs a Nonstationary policy")
    policies = (replace(pol, dpp_mode=UNIT_DPP, name="unit_dpp"),
                replace(pol, dpp_mode=FULL_DPP, name="full_dpp"))
    return area_sweep(SweepSpec(replace(base, t_end=None), grid, policies), jobs=jobs)


def nonstationary_rate_traces(base: SimConfig, grid) -> dict:
    """``kappa(t)`` for unit and full ``D++`` on the same grid."""
    pol = base.policy
    if not isinstance(pol, Nonstationary):
        raise ValidationError("rate traces need a Nonstationary policy")
    return {
        "unit_dpp": rate_trace(replace(pol, dpp_mode=UNIT_DPP), base.pulse, base.tls, grid),
        "full_dpp": rate_trace(replace(pol, dpp_mode=FULL_DPP), base.pulse, base.tls, grid),
    }


def local_maxima(x, y):
    """Interior local maxima refined by a parabola through the three bracketing samples.

    Returns ``(positions, heights)``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    pos, height = [], []
    for i in range(1, len(y) - 1):
        if y[i] > y[i - 1] and y[i] >= y[i + 1]:
            x0, x1, x2 = x[i - 1], x[i], x[i + 1]
            y0, y1, y2 = y[i - 1], y[i], y[i + 1]
            denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
            a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
            b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom
            c = (x1 * x2 * (x1 - x2) * y0 + x2 * x0 * (x2 - x0) * y1 + x0 * x1 * (x0 - x1) * y2) / denom
            if a < 0:
                xv = -b / (2 * a)
                pos.append(xv)
                height.append(a * xv * xv + b * xv + c)
            else:
                pos.append(x1)
                height.append(y1)
    return np.array(pos), np.array(height)


def _fmt(v) -> str:
    return f"{float(v):.12g}"


def sweep_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    names = list(result.columns)
    buf.write(",".join(["amplitude_pi_units"] + [f"rho_pp_{n}" for n in names]) + "\n")
    for i, u in enumerate(result.amplitudes):
        buf.write(",".join([_fmt(u)] + [_fmt(result.columns[n][i]) for n in names]) + "\n")
    return buf.getvalue()


def gnuplot_script(csv_name: str, columns: Sequence[str], xlabel: str, ylabel: str) -> str:
    """Plain gnuplot commands plotting every data column of a CSV against the first."""
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
    ]
    plots = [f"'{csv_name}' using 1:{i + 2} with lines" for i in range(len(columns))]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"
