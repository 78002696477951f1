import json
import math
from importlib import resources

import pytest

from rabidamp.config import ConfigError, grid_values, load_config, parse_config
from rabidamp.dephasing import GeneralQuadrature, Nonstationary, StationaryExpansion
from rabidamp.reservoir import DiscreteModes

BUNDLED = sorted(p.name for p in resources.files("rabidamp.data").iterdir() if p.name.endswith(".json"))


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_configs_validate(name):
    with resources.as_file(resources.files("rabidamp.data") / name) as path:
        cfg = load_config(path)
    assert "description" in cfg.raw


def test_rectangular_from_pi_units():
    cfg = parse_config({"pulse": {"amplitude_pi_units": 2.0, "duration": 4.0}})
    assert cfg.pulse.omega == pytest.approx(math.pi / 2)


def test_sampled_pulse():
    cfg = parse_config({"pulse": {"shape": "sampled", "samples": [[0, 1], [1, 1, 0.5]]}})
    assert cfg.pulse.samples[1][1] == complex(1, 0.5)


def test_policy_construction():
    cfg = parse_config({"policy": {"type": "quadrature", "kernel": {
        "stationary": {"type": "gaussian", "k0": 0.1, "width": 2.0},
        "nonstationary": {"type": "modes", "modes": [[0.1, 2.0, 1.0]]}}},
        "tls": {"delta": 0.5, "delta_shift": "from_modes"}})
    assert isinstance(cfg.policy, GeneralQuadrature)
    assert isinstance(cfg.policy.kernel.nonstationary, DiscreteModes)
    assert cfg.tls.effective_delta == pytest.approx(0.5 - 0.1)


def test_sweep_section():
    cfg = parse_config({"sweep": {"grid": {"start": 0, "stop": 1, "step": 0.25},
                                  "policies": [{"type": "expansion", "name": "e",
                                                "spectrum": {"type": "taylor", "k0": 0.1}}]}})
    assert cfg.sweep["grid"].tolist() == [0, 0.25, 0.5, 0.75, 1.0]
    assert isinstance(cfg.sweep["policies"][0], StationaryExpansion)


def test_grid_values_decimal():
    g = grid_values({"start": 0.0, "stop": 0.3, "step": 0.05})
    assert g.tolist() == [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3]


@pytest.mark.parametrize("doc", [
    {"bogus": 1},
    {"pulse": {"omega": 1, "duration": 1, "colour": "red"}},
    {"pulse": {"omega": 1, "duration": 0}},
    {"pulse": {"omega": 1, "amplitude_pi_units": 1}},
    {"policy": {"type": "markov", "kappa": -1}},
    {"policy": {"type": "nonstationary", "kappa_s": 0.1, "mean_field": {"type": "exponential", "gamma": 0}}},
    {"policy": {"type": "markov", "kappa": 0.1}, "tls": {"delta_shift": "from_modes"}},
    {"pulse": {"shape": "sampled", "samples": [[1, 1], [0, 1]]}},
])
def test_invalid_configs(doc):
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_missing_file_names_path(tmp_path):
    path = tmp_path / "nope.json"
    with pytest.raises(ConfigError, match="nope.json"):
        load_config(path)


def test_bad_json_names_path(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{")
    with pytest.raises(ConfigError, match="bad.json"):
        load_config(path)


def test_nonstationary_defaults():
    cfg = parse_config({"policy": {"type": "nonstationary", "kappa_s": 0.0,
                                   "mean_field": {"type": "exponential"}}})
    assert isinstance(cfg.policy, Nonstationary)
    assert (cfg.policy.model.a, cfg.policy.model.gamma) == (1.0, 2.0)
