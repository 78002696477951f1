"""Command-line front end.

Every subcommand reads ``--config`` (JSON) and writes ``--out`` (CSV or JSON).
Exit codes: 0 success, 2 configuration error, 3 numerical failure, 64 usage.
"""
from __future__ import annotations

import argparse
import io
import json
import logging
import math
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import experiments
from .bloch import SimConfig, integrate
from .config import ConfigError, RunConfig, load_config, parse_config
from .dephasing import rate_trace
from .dressing import DressingParams, d_plus_minus, d_plus_plus, dress_numeric
from .errors import NotApplicableError, NumericalError, ValidationError
from .fitting import MODELS, FitNonConvergence, fit, read_dataset_csv

log = logging.getLogger("rabidamp")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_USAGE = 64

REPRO_TARGETS = ("fig1a", "fig1b", "fig2a", "fig2b")
FIG1B_WIDTHS = (9.3, 7.0, 5.4)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _fmt(v) -> str:
    return f"{float(v):.12g}"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _sim_config(cfg: RunConfig, policy=None) -> SimConfig:
    if cfg.pulse is None:
        raise ConfigError("config needs a 'pulse' section")
    policy = policy or cfg.policy
    if policy is None:
        raise ConfigError("config needs a 'policy' section")
    integ = cfg.integrator
    kwargs = {k: integ[k] for k in ("rel_tol", "abs_tol", "max_step", "t_end", "method",
                                    "renormalize_population_drive") if k in integ}
    return SimConfig(pulse=cfg.pulse, policy=policy, tls=cfg.tls, **kwargs)


def _time_grid(sim: SimConfig, step=None):
    p = sim.pulse
    end = sim.end
    step = step or (end - p.t0) / 200.0
    n = max(1, math.ceil((end - p.t0) / step - 1e-9))
    return np.linspace(p.t0, end, n + 1)


def _load(args, target=None) -> RunConfig:
    if args.config:
        return load_config(args.config)
    if target is None:
        raise ConfigError("--config is required")
    ref = resources.files("rabidamp") / "data" / f"{target}.json"
    return parse_config(json.loads(ref.read_text()), Path(str(ref)).parent)


def cmd_dress(args):
    cfg = _load(args)
    if cfg.pulse is None:
        raise ConfigError("config needs a 'pulse' section")
    p = cfg.pulse
    step = cfg.integrator.get("output_step", p.duration / 200.0)
    ts = np.linspace(0.0, p.duration, max(1, math.ceil(p.duration / step - 1e-9)) + 1)
    rows = []
    if p.is_rectangular:
        dp = DressingParams(p.omega, cfg.tls.effective_delta)
        for t in ts:
            dpm = d_plus_minus(dp, t)
            rows.append((t, d_plus_plus(dp, t), dpm.real, dpm.imag))
    else:
        for t in ts:
            dpp, dpm = dress_numeric(p, cfg.tls, t)
            rows.append((t, dpp, dpm.real, dpm.imag))
    return _csv(["t_ps", "dpp", "dpm_re", "dpm_im"], rows), ["dpp", "dpm_re", "dpm_im"], "t (ps)"


def _rate_csv(trace):
    rows = zip(trace.times, trace.kappa.real, trace.kappa.imag, trace.omega_bar.real, trace.omega_bar.imag)
    return _csv(["t_ps", "kappa_re", "kappa_im", "omega_bar_re", "omega_bar_im"], rows)


def cmd_rate(args):
    cfg = _load(args)
    sim = _sim_config(cfg)
    grid = _time_grid(sim, cfg.integrator.get("output_step"))
    trace = rate_trace(sim.policy, sim.pulse, sim.tls, grid)
    return _rate_csv(trace), ["kappa_re", "kappa_im", "omega_bar_re", "omega_bar_im"], "t (ps)"


def cmd_simulate(args):
    cfg = _load(args)
    sim = _sim_config(cfg)
    step = cfg.integrator.get("output_step")
    traj = integrate(sim, _time_grid(sim, step) if step else None)
    rows = zip(traj.times, traj.rho_pp, traj.rho_pm.real, traj.rho_pm.imag,
               traj.kappa_used.real, traj.kappa_used.imag)
    header = ["t_ps", "rho_pp", "rho_pm_re", "rho_pm_im", "kappa_re", "kappa_im"]
    return _csv(header, rows), header[1:], "t (ps)"


def _sweep_spec(cfg: RunConfig) -> experiments.SweepSpec:
    sweep = cfg.sweep
    if "grid" not in sweep:
        raise ConfigError("config needs 'sweep.grid'")
    policies = tuple(sweep.get("policies", ())) or (cfg.policy,)
    base = _sim_config(cfg, policy=policies[0])
    return experiments.SweepSpec(base, tuple(sweep["grid"]), policies,
                                 sweep.get("sweep_variable", "amplitude"))


def cmd_sweep(args):
    spec = _sweep_spec(_load(args))
    log.info("sweeping %d amplitudes x %d policies", len(spec.grid), len(spec.policies))
    result = experiments.area_sweep(spec, jobs=args.jobs)
    return experiments.sweep_csv(result), list(result.columns), "amplitude (pi units)"


def _widths_csv(results):
    header = ["amplitude_pi_units"]
    cols = []
    for res in results:
        for name, col in res.columns.items():
            header.append(f"rho_pp_{name}_{res.pulse_width:g}ps")
            cols.append(col)
    rows = [[u] + [c[i] for c in cols] for i, u in enumerate(results[0].amplitudes)]
    return _csv(header, rows), header[1:]


def cmd_widths(args):
    cfg = _load(args)
    spec = _sweep_spec(cfg)
    widths = cfg.sweep.get("widths")
    if not widths:
        raise ConfigError("config needs 'sweep.widths'")
    log.info("sweeping %d widths", len(widths))
    results = experiments.width_series(spec.base, widths, spec.grid, spec.policies, jobs=args.jobs)
    text, cols = _widths_csv(results)
    return text, cols, "amplitude (pi units)"


def cmd_fit(args):
    cfg = _load(args)
    f = cfg.fit
    if not f:
        raise ConfigError("config needs a 'fit' section")
    datasets = []
    for entry in f["data"]:
        path = (cfg.base_dir / entry["path"])
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read dataset {path}: {exc.strerror or exc}") from None
        datasets.append(read_dataset_csv(text, entry["pulse_width"], entry.get("label", path.stem)))
    model = MODELS[f["model"]]
    if "dpp_mode" in f:
        model = replace(model, dpp_mode=f["dpp_mode"])
    bounds = {k: tuple(v) for k, v in f.get("bounds", {}).items()}
    try:
        result = fit(model, datasets, f["init"], bounds, cfg.tls, n_starts=f.get("n_starts", 8),
                     seed=f.get("seed", 0), freeze=tuple(f.get("freeze", ())))
    except FitNonConvergence as exc:
        _write(args.out, exc.best.to_json() + "\n")
        raise
    return result.to_json() + "\n", None, None


def cmd_repro(args):
    target = args.target
    if target == "fig1a":
        cfg = _load(args, target)
        result = experiments.area_sweep(_sweep_spec(cfg), jobs=args.jobs)
        return experiments.sweep_csv(result), list(result.columns), "amplitude (pi units)"
    if target == "fig1b":
        cfg = _load(args, target)
        spec = _sweep_spec(cfg)
        widths = cfg.sweep.get("widths", list(FIG1B_WIDTHS))
        results = experiments.width_series(spec.base, widths, spec.grid, spec.policies, jobs=args.jobs)
        text, cols = _widths_csv(results)
        return text, cols, "amplitude (pi units)"
    if target == "fig2a":
        cfg = _load(args, target)
        sim = _sim_config(cfg)
        grid = _time_grid(sim, cfg.integrator.get("output_step"))
        traces = experiments.nonstationary_rate_traces(sim, grid)
        header = ["t_ps"] + [f"kappa_{name}" for name in traces]
        rows = zip(grid, *(tr.kappa.real for tr in traces.values()))
        return _csv(header, rows), header[1:], "t (ps)"
    cfg = _load(args, target)
    sim = _sim_config(cfg)
    if "grid" not in cfg.sweep:
        raise ConfigError("config needs 'sweep.grid'")
    result = experiments.population_vs_amplitude_at_pulse_end(sim, cfg.sweep["grid"], jobs=args.jobs)
    return experiments.sweep_csv(result), list(result.columns), "amplitude (pi units)"


def _write(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rabidamp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="JSON run configuration")
        sp.add_argument("--out", required=True, help="output file (CSV or JSON)")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
        sp.add_argument("--quiet", action="store_true", help="suppress progress messages")
        sp.add_argument("--gnuplot", action="store_true",
                        help="also write a gnuplot script next to a CSV output")

    for name, fn, text in [
        ("dress", cmd_dress, "tabulate the dressing functions"),
        ("rate", cmd_rate, "tabulate kappa(t) and omega_bar(t)"),
        ("simulate", cmd_simulate, "integrate the Bloch equations"),
        ("sweep", cmd_sweep, "final population versus pulse amplitude"),
        ("widths", cmd_widths, "amplitude sweeps for several pulse widths"),
        ("fit", cmd_fit, "fit model parameters to digitized sweeps"),
    ]:
        sp = sub.add_parser(name, help=text)
        common(sp)
        sp.set_defaults(func=fn)
    sp = sub.add_parser("repro", help="reproduce a figure panel (illustrative parameters)")
    sp.add_argument("target", choices=REPRO_TARGETS)
    common(sp, config_required=False)
    sp.set_defaults(func=cmd_repro)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(name)s: %(message)s", stream=sys.stderr, force=True)
    if args.jobs < 1:
        print("rabidamp: error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        text, columns, xlabel = args.func(args)
    except (ConfigError, ValidationError, NotApplicableError) as exc:
        print(f"rabidamp: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"rabidamp: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    _write(args.out, text)
    if args.gnuplot and columns:
        script = experiments.gnuplot_script(Path(args.out).name, columns, xlabel, "value")
        _write(str(args.out) + ".gp", script)
    log.info("wrote %s", args.out)
    return EXIT_OK


def main():
    sys.exit(run())
