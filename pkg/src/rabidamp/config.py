"""JSON run configuration: schema validation and construction of typed objects."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from .dephasing import (
    GeneralQuadrature,
    Markov,
    Nonstationary,
    StationaryExpansion,
    StationaryTriplet,
)
from .errors import NotApplicableError, ValidationError
from .reservoir import (
    Constant,
    CorrelationKernel,
    DiscreteModes,
    ExponentialMean,
    Gaussian,
    Lorentzian,
    Taylor,
    detuning_shift,
)
from .system import PulseSpec, TlsParams

__all__ = ["ConfigError", "RunConfig", "SCHEMA", "load_config", "parse_config", "grid_values"]


class ConfigError(ValueError):
    """Missing, unreadable or invalid configuration."""


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


_spectrum = {"oneOf": [
    _obj({"type": {"const": "constant"}, "k0": _nonneg}, ["type", "k0"]),
    _obj({"type": {"const": "taylor"}, "k0": _nonneg, "k1": _num, "k2": _num}, ["type", "k0"]),
    _obj({"type": {"const": "gaussian"}, "k0": _nonneg, "center": _num, "width": _pos},
         ["type", "k0", "width"]),
    _obj({"type": {"const": "lorentzian"}, "k0": _nonneg, "center": _num, "width": _pos},
         ["type", "k0", "width"]),
]}

_mean_field = {"oneOf": [
    _obj({"type": {"const": "exponential"}, "a": _num, "gamma": _pos}, ["type"]),
    _obj({"type": {"const": "modes"},
          "modes": {"type": "array", "minItems": 1,
                    "items": {"type": "array", "items": _num, "minItems": 3, "maxItems": 3}}},
         ["type", "modes"]),
]}

_name = {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"}

_policy = {"oneOf": [
    _obj({"type": {"const": "markov"}, "name": _name, "kappa": _nonneg}, ["type", "kappa"]),
    _obj({"type": {"const": "triplet"}, "name": _name, "spectrum": _spectrum}, ["type", "spectrum"]),
    _obj({"type": {"const": "expansion"}, "name": _name, "spectrum": _spectrum}, ["type", "spectrum"]),
    _obj({"type": {"const": "nonstationary"}, "name": _name, "kappa_s": _nonneg,
          "mean_field": _mean_field, "dpp_mode": {"enum": ["unit", "full"]}, "quad_tol": _pos},
         ["type", "kappa_s", "mean_field"]),
    _obj({"type": {"const": "quadrature"}, "name": _name, "quad_tol": _pos,
          "kernel": _obj({"stationary": _spectrum, "nonstationary": _mean_field}, ["stationary"])},
         ["type", "kernel"]),
]}

_grid = {"oneOf": [
    {"type": "array", "items": _nonneg, "minItems": 1},
    _obj({"start": _nonneg, "stop": _nonneg, "step": _pos}, ["start", "stop", "step"]),
]}

SCHEMA = _obj({
    "description": {"type": "string"},
    "pulse": _obj({
        "shape": {"enum": ["rectangular", "sampled"]},
        "omega": _nonneg,
        "amplitude_pi_units": _nonneg,
        "duration": _pos,
        "t0": _num,
        "samples": {"type": "array", "minItems": 2,
                    "items": {"type": "array", "items": _num, "minItems": 2, "maxItems": 3}},
    }),
    "tls": _obj({"delta": _num, "delta_shift": {"oneOf": [_num, {"const": "from_modes"}]}}),
    "policy": _policy,
    "integrator": _obj({
        "rel_tol": _pos, "abs_tol": _pos, "max_step": _pos, "t_end": _num,
        "method": {"enum": ["rk45", "exact"]},
        "renormalize_population_drive": {"type": "boolean"},
        "output_step": _pos,
    }),
    "sweep": _obj({
        "grid": _grid,
        "policies": {"type": "array", "items": _policy, "minItems": 1},
        "widths": {"type": "array", "items": _pos, "minItems": 1},
        "sweep_variable": {"enum": ["amplitude", "area"]},
    }),
    "fit": _obj({
        "model": {"enum": ["markov", "expansion", "nonstationary"]},
        "data": {"type": "array", "minItems": 1, "items": _obj(
            {"path": {"type": "string"}, "pulse_width": _pos, "label": {"type": "string"}},
            ["path", "pulse_width"])},
        "init": {"type": "object", "additionalProperties": _num},
        "bounds": {"type": "object", "additionalProperties": {
            "type": "array", "items": _num, "minItems": 2, "maxItems": 2}},
        "freeze": {"type": "array", "items": {"type": "string"}},
        "n_starts": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer"},
        "dpp_mode": {"enum": ["unit", "full"]},
    }, ["model", "data", "init"]),
})


@dataclass
class RunConfig:
    pulse: Optional[PulseSpec] = None
    tls: TlsParams = field(default_factory=TlsParams)
    policy: object = None
    integrator: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    fit: dict = field(default_factory=dict)
    base_dir: Path = Path(".")
    raw: dict = field(default_factory=dict)


def grid_values(spec) -> np.ndarray:
    if isinstance(spec, list):
        return np.array(spec, dtype=float)
    n = int(math.floor((spec["stop"] - spec["start"]) / spec["step"] + 1e-9))
    # rounding keeps values like 0.15 exact in decimal output
    return np.round(spec["start"] + spec["step"] * np.arange(n + 1), 12)


def _spectrum_obj(d):
    kind = d["type"]
    if kind == "constant":
        return Constant(d["k0"])
    if kind == "taylor":
        return Taylor(d["k0"], d.get("k1", 0.0), d.get("k2", 0.0))
    cls = Gaussian if kind == "gaussian" else Lorentzian
    return cls(d["k0"], d.get("center", 0.0), d["width"])


def _mean_field_obj(d):
    if d["type"] == "exponential":
        return ExponentialMean(d.get("a", 1.0), d.get("gamma", 2.0))
    return DiscreteModes(tuple(tuple(m) for m in d["modes"]))


def policy_from_dict(d):
    kind = d["type"]
    extra = {"name": d["name"]} if "name" in d else {}
    if kind == "markov":
        return Markov(d["kappa"], **extra)
    if kind == "triplet":
        return StationaryTriplet(_spectrum_obj(d["spectrum"]), **extra)
    if kind == "expansion":
        return StationaryExpansion(_spectrum_obj(d["spectrum"]), **extra)
    if kind == "nonstationary":
        return Nonstationary(d["kappa_s"], _mean_field_obj(d["mean_field"]),
                             d.get("dpp_mode", "unit"), d.get("quad_tol", 1e-8), **extra)
    kernel = d["kernel"]
    nm = _mean_field_obj(kernel["nonstationary"]) if "nonstationary" in kernel else None
    return GeneralQuadrature(CorrelationKernel(_spectrum_obj(kernel["stationary"]), nm),
                             d.get("quad_tol", 1e-8), **extra)


def _pulse_from_dict(d):
    if d.get("shape", "rectangular") == "sampled" or "samples" in d:
        if "samples" not in d:
            raise ValidationError("a sampled pulse needs 'samples'")
        times = [s[0] for s in d["samples"]]
        values = [complex(s[1], s[2] if len(s) > 2 else 0.0) for s in d["samples"]]
        return PulseSpec.sampled(times, values)
    duration = d.get("duration", 1.0)
    if "omega" in d and "amplitude_pi_units" in d:
        raise ValidationError("give either 'omega' or 'amplitude_pi_units', not both")
    omega = d["omega"] if "omega" in d else d.get("amplitude_pi_units", 1.0) * math.pi / duration
    return PulseSpec.rectangular(omega, duration, d.get("t0", 0.0))


def parse_config(doc: dict, base_dir: Path = Path(".")) -> RunConfig:
    """Validate ``doc`` against the schema and build typed objects."""
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None
    try:
        cfg = RunConfig(base_dir=base_dir, raw=doc)
        if "pulse" in doc:
            cfg.pulse = _pulse_from_dict(doc["pulse"])
        if "policy" in doc:
            cfg.policy = policy_from_dict(doc["policy"])
        tls = doc.get("tls", {})
        shift = tls.get("delta_shift", 0.0)
        if shift == "from_modes":
            model = getattr(cfg.policy, "model", None)
            if model is None and isinstance(cfg.policy, GeneralQuadrature):
                model = cfg.policy.kernel.nonstationary
            if model is None:
                raise ValidationError("delta_shift 'from_modes' needs a mean-field model")
            shift = detuning_shift(model)
        cfg.tls = TlsParams(tls.get("delta", 0.0), shift)
        cfg.integrator = dict(doc.get("integrator", {}))
        sweep = dict(doc.get("sweep", {}))
        if "policies" in sweep:
            sweep["policies"] = [policy_from_dict(p) for p in sweep["policies"]]
        if "grid" in sweep:
            sweep["grid"] = grid_values(sweep["grid"])
        cfg.sweep = sweep
        cfg.fit = dict(doc.get("fit", {}))
    except (ValidationError, NotApplicableError) as exc:
        raise ConfigError(f"config invalid: {exc}") from None
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror or exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    return parse_config(doc, path.parent)
