"""Thin ODE helpers for small real systems.

``adaptive`` wraps scipy's Dormand-Prince 5(4) stepper (``solve_ivp`` with
``RK45``) and turns a failed solve into ``NumericalError``.  ``rk4_fixed`` is
the classical fixed-step scheme, kept as an independent reference.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NumericalError

__all__ = ["adaptive", "rk4_fixed"]


def adaptive(fun, t_span, y0, rtol=1e-9, atol=1e-11, max_step=np.inf, dense=False):
    """Integrate ``y' = fun(t, y)`` over ``t_span`` with error control.

    Returns ``(ts, ys, sol)``: accepted step times, states at those times
    (one row per step), and the continuous solution when ``dense`` is set.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    y0 = np.asarray(y0, dtype=float)
    if t1 <= t0:
        return np.array([t0]), y0[None, :].copy(), None
    res = solve_ivp(fun, (t0, t1), y0, method="RK45", rtol=rtol, atol=atol,
                    max_step=max_step, dense_output=dense)
    if res.status != 0:
        raise NumericalError(f"integration failed near t={res.t[-1]:.6g}: {res.message}")
    return res.t, res.y.T, res.sol


def rk4_fixed(fun, t_span, y0, dt):
    """Classical RK4 with a uniform step no larger than ``dt``; returns the final state."""
    t, t_end = float(t_span[0]), float(t_span[1])
    y = np.asarray(y0, dtype=float).copy()
    if t_end <= t:
        return y
    n = max(1, math.ceil((t_end - t) / dt - 1e-9))
    h = (t_end - t) / n
    for i in range(n):
        ti = t + i * h
        k1 = fun(ti, y)
        k2 = fun(ti + 0.5 * h, y + 0.5 * h * k1)
        k3 = fun(ti + 0.5 * h, y + 0.5 * h * k2)
        k4 = fun(ti + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return y
