import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rabidamp.bloch import (SimConfig, default_max_step, derivative, final_population,
                            final_populations_exact, integrate, reference_final_state)
from rabidamp.dephasing import GeneralQuadrature, Markov, Nonstationary, StationaryExpansion
from rabidamp.errors import ValidationError
from rabidamp.reservoir import CorrelationKernel, ExponentialMean, Gaussian, Taylor
from rabidamp.system import BlochState, PulseSpec, TlsParams


def resonant_markov(omega, kappa, t):
    """Damped Rabi solution of ``w'' + kappa w' + omega^2 w = 0`` with ``w = 1 - 2 rho_pp``."""
    w = math.sqrt(omega ** 2 - kappa ** 2 / 4)
    inv = math.exp(-kappa * t / 2) * (math.cos(w * t) + kappa / (2 * w) * math.sin(w * t))
    return 0.5 * (1.0 - inv)


def test_pi_pulse():
    cfg = SimConfig(PulseSpec.rectangular(math.pi, 1.0), Markov(0.0))
    assert final_population(cfg) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("kappa", [0.0, 0.3, 2.0])
def test_resonant_markov_matches_analytic(kappa):
    cfg = SimConfig(PulseSpec.rectangular(5.0, 4.0), Markov(kappa))
    times = np.linspace(0.0, 4.0, 41)
    traj = integrate(cfg, sample_times=times)
    expected = [resonant_markov(5.0, kappa, t) for t in times]
    assert np.max(np.abs(traj.rho_pp - expected)) < 1e-8


def test_markov_long_time_limit():
    pulse = PulseSpec.rectangular(2 * math.pi, 250.0)
    cfg = SimConfig(pulse, Markov(0.1))
    traj = integrate(cfg, sample_times=[50.0, 250.0])
    assert traj.rho_pp[0] == pytest.approx(resonant_markov(2 * math.pi, 0.1, 50.0), abs=1e-7)
    assert traj.rho_pp[1] == pytest.approx(0.5, abs=1e-4)


@pytest.mark.parametrize("omega, delta", [(2.0, 1.0), (5.0, -3.0), (1.0, 4.0)])
def test_detuned_rabi_formula(omega, delta):
    cfg = SimConfig(PulseSpec.rectangular(omega, 3.0), Markov(0.0), TlsParams(delta))
    wr = math.hypot(omega, delta)
    expected = (omega / wr) ** 2 * math.sin(wr * 3.0 / 2) ** 2
    assert final_population(cfg) == pytest.approx(expected, abs=1e-9)


def test_free_evolution():
    s0 = BlochState(0.3, 0.2 + 0.1j)
    cfg = SimConfig(PulseSpec.rectangular(0.0, 2.0), Markov(0.4), TlsParams(1.5), initial=s0)
    traj = integrate(cfg, sample_times=[2.0])
    assert traj.rho_pp[0] == pytest.approx(0.3, abs=1e-12)
    assert traj.rho_pm[0] == pytest.approx(s0.rho_pm * np.exp((1.5j - 0.4) * 2.0), abs=1e-10)


@pytest.mark.parametrize("policy", [Markov(0.3), StationaryExpansion(Taylor(0.05, 0.01, 0.004))])
def test_exact_and_rk45_and_rk4_agree(policy):
    cfg = SimConfig(PulseSpec.rectangular(7.0, 2.0), policy, TlsParams(0.8), t_end=3.0)
    rk45 = integrate(cfg).rho_pp[-1]
    exact = integrate(SimConfig(cfg.pulse, policy, cfg.tls, t_end=3.0, method="exact")).rho_pp[-1]
    rk4 = reference_final_state(cfg, dt=1e-3).rho_pp
    assert rk45 == pytest.approx(exact, abs=1e-8)
    assert rk4 == pytest.approx(exact, abs=1e-8)


def test_batched_exact_matches_single():
    cfg = SimConfig(PulseSpec.rectangular(1.0, 1.5), Markov(0.2), TlsParams(0.3))
    omegas = [0.5, 2.0, 6.0]
    batch = final_populations_exact(cfg, omegas)
    for w, b in zip(omegas, batch):
        single = final_population(cfg.with_omega(w))
        assert b == pytest.approx(single, abs=1e-8)


def test_time_translation_invariance():
    pol = Nonstationary(0.05, ExponentialMean(0.5, 2.0), dpp_mode="full")
    a = SimConfig(PulseSpec.rectangular(4.0, 1.0, t0=0.0), pol, TlsParams(0.5))
    b = SimConfig(PulseSpec.rectangular(4.0, 1.0, t0=3.25), pol, TlsParams(0.5))
    assert final_population(a) == pytest.approx(final_population(b), abs=1e-9)


def test_sampled_constant_equals_rectangular():
    rect = SimConfig(PulseSpec.rectangular(3.0, 2.0), Markov(0.2), TlsParams(0.4))
    samp = SimConfig(PulseSpec.sampled([0.0, 0.7, 2.0], [1.5, 1.5, 1.5]), Markov(0.2), TlsParams(0.4))
    assert final_population(rect) == pytest.approx(final_population(samp), abs=1e-9)


def test_nonstationary_against_rk4_reference():
    pol = Nonstationary(0.05, ExponentialMean(1.0, 2.0), dpp_mode="full")
    cfg = SimConfig(PulseSpec.rectangular(math.pi, 1.0), pol, t_end=2.0)
    ref = reference_final_state(cfg, dt=1e-4)
    traj = integrate(cfg)
    assert traj.rho_pp[-1] == pytest.approx(ref.rho_pp, abs=1e-7)
    assert traj.rho_pm[-1] == pytest.approx(ref.rho_pm, abs=1e-7)


def test_quadrature_policy_contracts_with_shared_drive():
    # a centred spectrum on resonance gives a real omega_bar; using it in both
    # equations keeps the flow a contraction
    pol = GeneralQuadrature(CorrelationKernel(Gaussian(0.05, 0.0, 3.0)))
    cfg = SimConfig(PulseSpec.rectangular(2 * math.pi, 1.0), pol, renormalize_population_drive=True)
    traj = integrate(cfg)
    assert np.all(traj.kappa_used.real >= 0)
    assert np.all(np.diff(traj.bloch_lengths()) <= 1e-7)


def test_quadrature_policy_against_rk4_reference():
    pol = GeneralQuadrature(CorrelationKernel(Gaussian(0.05, 0.3, 3.0)))
    cfg = SimConfig(PulseSpec.rectangular(2 * math.pi, 1.0), pol, TlsParams(0.5), t_end=1.5)
    ref = reference_final_state(cfg, dt=1e-4)
    assert integrate(cfg).rho_pp[-1] == pytest.approx(ref.rho_pp, abs=1e-7)


def test_renormalize_flag():
    pol = StationaryExpansion(Taylor(0.05, 0.02, 0.0))
    base = SimConfig(PulseSpec.rectangular(math.pi, 1.0), pol)
    on = SimConfig(base.pulse, pol, renormalize_population_drive=True)
    # Markov: identical, since omega_bar is the bare envelope
    m0 = SimConfig(base.pulse, Markov(0.1))
    m1 = SimConfig(base.pulse, Markov(0.1), renormalize_population_drive=True)
    assert final_population(m0) == final_population(m1)
    assert abs(final_population(base) - final_population(on)) > 1e-3


def test_derivative_at_start():
    cfg = SimConfig(PulseSpec.rectangular(2.0, 1.0), Markov(0.3))
    dp, drho = derivative(BlochState(), 0.0, cfg)
    assert dp == 0.0
    assert drho == pytest.approx(1j * 1.0)


def test_default_max_step():
    cfg = SimConfig(PulseSpec.rectangular(10.0, 100.0), Markov(0.0))
    assert default_max_step(cfg) == pytest.approx(0.005)


@pytest.mark.parametrize("kwargs", [dict(t_end=-1.0), dict(rel_tol=0.0), dict(method="euler"),
                                    dict(max_step=0.0)])
def test_invalid_config(kwargs):
    with pytest.raises(ValidationError):
        SimConfig(PulseSpec.rectangular(1.0, 1.0), Markov(0.0), **kwargs)


def test_sample_times_outside_interval():
    cfg = SimConfig(PulseSpec.rectangular(1.0, 1.0), Markov(0.0))
    with pytest.raises(ValidationError):
        integrate(cfg, sample_times=[2.0])


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 15), st.floats(-3, 3), st.floats(0, 2), st.floats(0, 1), st.floats(0, 1),
       st.floats(-math.pi, math.pi))
def test_contraction_any_initial_state(omega, delta, kappa, r, z, phase):
    pp = 0.5 * (1 + z)
    coh = 0.5 * r * math.sqrt(max(0.0, 1 - z * z)) * complex(math.cos(phase), math.sin(phase))
    cfg = SimConfig(PulseSpec.rectangular(omega, 2.0), Markov(kappa), TlsParams(delta),
                    initial=BlochState(pp, coh))
    lengths = integrate(cfg).bloch_lengths()
    assert np.all(np.diff(lengths) <= 1e-7)
    assert lengths[-1] <= 1.0 + 1e-7
