"""Least-squares estimation of reservoir parameters from amplitude sweeps.

The observed signal (photocurrent, photoluminescence) is modelled as
``scale * rho_pp`` at the end of a rectangular pulse.  Parameters are fitted
with a bounded Levenberg-Marquardt iteration using forward-difference
Jacobians, restarted from several deterministic starting points.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .bloch import SimConfig, final_population, final_populations_exact
from .dephasing import FULL_DPP, UNIT_DPP, Markov, Nonstationary, StationaryExpansion
from .errors import NumericalError, UnphysicalRateWarning, ValidationError
from .reservoir import ExponentialMean, Taylor
from .system import PulseSpec, TlsParams

__all__ = [
    "DataSet",
    "FitResult",
    "FitModel",
    "FitNonConvergence",
    "MODELS",
    "read_dataset_csv",
    "predict",
    "residuals",
    "fit",
    "levenberg_marquardt",
]

PENALTY = 1e3


class FitNonConvergence(NumericalError):
    """No start converged; ``best`` holds the lowest-RSS attempt."""

    def __init__(self, message, best):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class DataSet:
    """Digitized sweep: rows of ``(amplitude_pi_units, signal, weight)``."""

    amplitudes: np.ndarray
    signal: np.ndarray
    pulse_width: float
    weights: Optional[np.ndarray] = None
    label: str = ""

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=float)
        sig = np.asarray(self.signal, dtype=float)
        object.__setattr__(self, "amplitudes", amp)
        object.__setattr__(self, "signal", sig)
        if amp.shape != sig.shape:
            raise ValidationError("amplitudes and signal differ in length")
        if np.any(amp < 0):
            raise ValidationError("amplitudes must be non-negative")
        if not self.pulse_width > 0:
            raise ValidationError("pulse width must be > 0")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != amp.shape:
                raise ValidationError("weights and amplitudes differ in length")
            object.__setattr__(self, "weights", w)

    def weight_array(self) -> np.ndarray:
        return np.ones_like(self.amplitudes) if self.weights is None else self.weights


def read_dataset_csv(text: str, pulse_width: float, label: str = "") -> DataSet:
    """Parse ``amplitude_pi_units,signal[,weight]`` CSV with ``#`` comments and a header."""
    rows = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.reader(rows)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ValidationError("dataset CSV is empty") from None
    if header[:2] != ["amplitude_pi_units", "signal"] or header[2:] not in ([], ["weight"]):
        raise ValidationError(f"unexpected dataset CSV header {header}")
    data = [[float(v) for v in row] for row in reader if row]
    if any(len(r) != len(header) for r in data):
        raise ValidationError("dataset CSV rows do not match the header")
    arr = np.array(data, dtype=float).reshape(-1, len(header))
    weights = arr[:, 2] if len(header) == 3 else None
    return DataSet(arr[:, 0], arr[:, 1], pulse_width, weights, label)


@dataclass(frozen=True)
class FitModel:
    """Parameter names, default bounds and the policy built from a parameter vector."""

    family: str
    names: tuple
    lower: tuple
    upper: tuple
    dpp_mode: str = UNIT_DPP

    def policy(self, values: dict):
        if self.family == "markov":
            return Markov(values["kappa"])
        if self.family == "expansion":
            return StationaryExpansion(Taylor(values["k0"], values.get("k1", 0.0), values["k2"]))
        if self.family == "nonstationary":
            return Nonstationary(values["kappa_s"], ExponentialMean(values["a"], values["gamma"]),
                                 self.dpp_mode)
        raise ValidationError(f"unknown model family {self.family!r}")

    def freeze(self, name: str) -> "FitModel":
        keep = [i for i, n in enumerate(self.names) if n != name]
        return replace(self, names=tuple(self.names[i] for i in keep),
                       lower=tuple(self.lower[i] for i in keep),
                       upper=tuple(self.upper[i] for i in keep))


MODELS = {
    "markov": FitModel("markov", ("kappa", "scale"), (0.0, 1e-6), (50.0, 1e6)),
    "expansion": FitModel("expansion", ("k0", "k1", "k2", "scale"),
                          (0.0, -10.0, -10.0, 1e-6), (10.0, 10.0, 10.0, 1e6)),
    "nonstationary": FitModel("nonstationary", ("kappa_s", "a", "gamma", "scale"),
                              (0.0, 0.0, 1e-3, 1e-6), (50.0, 100.0, 100.0, 1e6)),
}


def predict(model: FitModel, values: dict, ds: DataSet, tls: TlsParams = TlsParams()) -> np.ndarray:
    """Model signal ``scale * rho_pp`` at every amplitude of ``ds``."""
    policy = model.policy(values)
    cfg = SimConfig(PulseSpec.rectangular(0.0, ds.pulse_width), policy, tls)
    omegas = ds.amplitudes * math.pi / ds.pulse_width
    if isinstance(policy, (Markov, StationaryExpansion)):
        pop = final_populations_exact(cfg, omegas)
    else:
        pop = np.array([final_population(cfg.with_omega(float(w))) for w in omegas])
    return values["scale"] * pop


def residuals(model: FitModel, values: dict, datasets: Sequence[DataSet],
              tls: TlsParams = TlsParams()):
    """Weighted residuals over all datasets and a failure flag.

    An integrator failure yields a flat ``PENALTY`` residual rather than an
    exception, so the optimizer can back off.
    """
    out = []
    failed = False
    for ds in datasets:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", UnphysicalRateWarning)
                pred = predict(model, values, ds, tls)
            if not np.all(np.isfinite(pred)):
                raise NumericalError("non-finite model prediction")
        except (NumericalError, ValidationError):
            failed = True
            pred = ds.signal + PENALTY
        out.append((pred - ds.signal) * ds.weight_array())
    return np.concatenate(out), failed


@dataclass
class FitResult:
    params: dict
    sigma: dict
    rss: float
    converged: bool
    iters: int
    start_rss: list = field(default_factory=list)

    def to_json(self) -> str:
        doc = {
            "params": {k: float(v) for k, v in self.params.items()},
            "sigma": {k: float(v) for k, v in self.sigma.items()},
            "rss": float(self.rss),
            "converged": bool(self.converged),
            "iters": int(self.iters),
        }
        return json.dumps(doc, indent=2, sort_keys=True)


def _jacobian(fun, x, r, lower, upper):
    jac = np.empty((r.size, x.size))
    for i in range(x.size):
        h = max(1e-6 * abs(x[i]), 1e-9)
        if x[i] + h > upper[i]:
            h = -h
        xp = x.copy()
        xp[i] += h
        jac[:, i] = (fun(xp) - r) / h
    return jac


def levenberg_marquardt(fun, x0, lower, upper, max_iter=200, rss_rtol=1e-10, gtol=1e-8):
    """Bounded LM: minimize ``sum(fun(x)**2)`` with steps clipped into the box.

    Returns ``(x, rss, jacobian, iterations, converged)``.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    x = np.clip(np.asarray(x0, dtype=float), lower, upper)
    r = fun(x)
    rss = float(r @ r)
    jac = _jacobian(fun, x, r, lower, upper)
    lam = None
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        g = jac.T @ r
        jtj = jac.T @ jac
        d = np.diag(jtj).copy()
        d[d <= 0] = 1.0
        if lam is None:
            lam = 1e-3 * float(d.max())
        # projected gradient: ignore components pushing against an active bound
        at_lo = (x <= lower) & (g > 0)
        at_hi = (x >= upper) & (g < 0)
        g_free = np.where(at_lo | at_hi, 0.0, g)
        if np.linalg.norm(g_free) < gtol:
            converged = True
            break
        accepted = False
        while lam < 1e16:
            try:
                step = np.linalg.solve(jtj + lam * np.diag(d), -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            x_new = np.clip(x + step, lower, upper)
            r_new = fun(x_new)
            rss_new = float(r_new @ r_new)
            if rss_new < rss:
                accepted = True
                break
            lam *= 4.0
        if not accepted:
            # no descent possible at any damping: stationary to working precision
            converged = True
            break
        change = (rss - rss_new) / max(rss, 1e-300)
        x, r, rss = x_new, r_new, rss_new
        lam = max(lam / 3.0, 1e-12)
        jac = _jacobian(fun, x, r, lower, upper)
        if change < rss_rtol or rss < 1e-28:
            converged = True
            break
    return x, rss, jac, it, converged


def _starts(x0, lower, upper, n, seed):
    rng = np.random.default_rng(seed)
    starts = [np.clip(x0, lower, upper)]
    for _ in range(n - 1):
        factor = np.exp(rng.uniform(np.log(0.5), np.log(2.0), size=x0.size))
        x = x0 * factor
        # sign-indefinite parameters also get an additive kick
        kick = rng.normal(0.0, 0.25, size=x0.size) * np.abs(x0)
        x = np.where(lower < 0, x0 + kick, x)
        starts.append(np.clip(x, lower, upper))
    return starts


def fit(model: FitModel, datasets: Sequence[DataSet], init: dict, bounds: Optional[dict] = None,
        tls: TlsParams = TlsParams(), n_starts: int = 8, seed: int = 0, max_iter: int = 200,
        freeze: Sequence[str] = ()) -> FitResult:
    """Fit ``model`` to ``datasets`` starting from ``init``.

    ``freeze`` names parameters held at their ``init`` value (e.g. ``k1``).
    ``bounds`` maps parameter names to ``(low, high)`` overrides.
    """
    for name in freeze:
        model = model.freeze(name)
    fixed = {k: float(init[k]) for k in freeze}
    names = model.names
    missing = [n for n in names if n not in init]
    if missing:
        raise ValidationError(f"missing initial values for {missing}")
    lower = np.array(model.lower, dtype=float)
    upper = np.array(model.upper, dtype=float)
    for k, (lo, hi) in (bounds or {}).items():
        if k in names:
            lower[names.index(k)] = lo
            upper[names.index(k)] = hi
    x0 = np.array([float(init[n]) for n in names])
    if np.any(x0 < lower) or np.any(x0 > upper):
        raise ValidationError("initial values lie outside the bounds")
    if sum(ds.amplitudes.size for ds in datasets) < max(4, len(names) + 1):
        raise ValidationError("not enough data points for a fit")

    def values_of(x):
        v = dict(fixed)
        v.update(zip(names, (float(t) for t in x)))
        return v

    def fun(x):
        return residuals(model, values_of(x), datasets, tls)[0]

    best = None
    any_conv = False
    start_rss = []
    for x_start in _starts(x0, lower, upper, max(1, n_starts), seed):
        r0 = fun(x_start)
        start_rss.append(float(r0 @ r0))
        x, rss, jac, iters, conv = levenberg_marquardt(fun, x_start, lower, upper, max_iter=max_iter)
        any_conv = any_conv or conv
        if best is None or rss < best[1]:
            best = (x, rss, jac, iters, conv)

    x, rss, jac, iters, conv = best
    n_obs, n_par = jac.shape
    dof = max(n_obs - n_par, 1)
    try:
        cov = np.linalg.inv(jac.T @ jac) * (rss / dof)
        sig = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        sig = np.full(n_par, np.inf)
    result = FitResult(values_of(x), dict(zip(names, (float(s) for s in sig))), rss,
                       conv, iters, start_rss)
    if not any_conv:
        raise FitNonConvergence("no start converged", result)
    return result
