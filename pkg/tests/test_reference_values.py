"""Hand-checkable reference values and the fixed-step cross-check matrix."""
import math

import numpy as np
import pytest

from rabidamp.bloch import SimConfig, derivative, final_population, integrate, reference_final_state
from rabidamp.dephasing import (Markov, Nonstationary, StationaryExpansion, evaluate,
                                kappa_expansion, kappa_nonstationary, kappa_quadrature,
                                omega_bar_quadrature, rabi_generalized, rate_trace)
from rabidamp.dressing import DressingParams
from rabidamp.experiments import SweepSpec, area_sweep, population_vs_amplitude_at_pulse_end
from rabidamp.reservoir import (Constant, CorrelationKernel, DiscreteModes, ExponentialMean,
                                Gaussian, Taylor, correlation, detuning_shift, k_derivs, k_omega,
                                k_time, mean_r)
from rabidamp.system import BlochState, PulseSpec, TlsParams


def test_spectral_values():
    assert k_omega(Constant(0.05), 7.0) == 0.05
    assert k_omega(Taylor(0.05, 0.0, 0.002), 3.0) == pytest.approx(0.059)
    assert k_omega(Gaussian(0.05, 0.0, 1.7), 1.7) == pytest.approx(0.05 * math.exp(-0.5))
    assert k_derivs(Gaussian(0.3, 0.0, 2.0)) == pytest.approx((0.3, 0.0, -0.3 / 4.0))
    assert abs(k_time(Gaussian(0.05, 0.0, 2.0), 30.0)) < 1e-300


def test_mean_field_values():
    assert mean_r(DiscreteModes(((0.1, 1.0, 0.5),)), 0.0, 0.0, 1.0) == pytest.approx(0.1)
    assert detuning_shift(DiscreteModes(((0.1, 1.0, 0.5),))) == pytest.approx(-0.1)
    assert detuning_shift(DiscreteModes(((0.1, 1.0, 0.0), (0.2, 3.0, 0.0)))) == 0.0
    assert detuning_shift(DiscreteModes(((0.1, 1.5, 0.4), (0.1, -1.5, 0.4)))) == 0.0
    assert mean_r(ExponentialMean(1.0, 2.0), 40.0, 0.0, math.pi) < 1e-30


def test_correlation_forgets_mean_field_at_late_times():
    k = CorrelationKernel(Gaussian(0.05, 0.0, 2.0), ExponentialMean(1.0, 2.0))
    late = correlation(k, 100.3, 100.0, 0.0, math.pi)
    assert late == pytest.approx(k_time(k.stationary, 0.3), abs=1e-15)
    assert correlation(CorrelationKernel(Gaussian(0.05, 0.0, 2.0)), 1.0, 1.0, 0.0, 1.0) == \
        pytest.approx(k_time(Gaussian(0.05, 0.0, 2.0), 0.0))


def test_rate_values():
    assert kappa_expansion(Taylor(0.05, 0.0, 0.002), 4.0) == pytest.approx(math.pi * 0.058)
    assert kappa_expansion(Taylor(0.05, 0.0, 0.0), 9.0) == pytest.approx(math.pi * 0.05)
    assert rabi_generalized(Taylor(0.05, 0.01, 0.0), 2.0, 0.0) == pytest.approx((2 - 2 * math.pi * 0.01) / 2)
    assert rabi_generalized(Taylor(0.05), 0.0, 1.0) == 0


def test_quadrature_empty_interval():
    k = CorrelationKernel(Gaussian(0.05, 0.0, 2.0))
    p = PulseSpec.rectangular(2.0, 1.0)
    assert kappa_quadrature(k, 0.0, 0.0, DressingParams(2.0, 0.0)) == 0
    assert omega_bar_quadrature(k, 0.0, 0.0, DressingParams(2.0, 0.0), p) == 1.0
    zero = CorrelationKernel(Gaussian(0.0, 0.0, 2.0))
    assert omega_bar_quadrature(zero, 0.5, 0.0, DressingParams(2.0, 0.0), p) == pytest.approx(1.0)


def test_nonstationary_limits():
    pol = Nonstationary(0.05, ExponentialMean(1.0, 2.0), dpp_mode="full")
    p = PulseSpec.rectangular(math.pi, 100.0)
    assert kappa_nonstationary(pol, 0.0, DressingParams(math.pi, 0.0), p) == 0.05
    assert kappa_nonstationary(pol, 60.0, DressingParams(math.pi, 0.0), p) == pytest.approx(0.05, abs=1e-12)


@pytest.mark.parametrize("policy", [Markov(0.1), StationaryExpansion(Taylor(0.05, 0.01, 0.002))])
def test_time_independent_policies_give_constant_traces(policy):
    p = PulseSpec.rectangular(3.0, 1.0)
    tr = rate_trace(policy, p, TlsParams(0.2), np.linspace(0.0, 1.0, 11))
    assert np.ptp(tr.kappa) == 0 and np.ptp(tr.omega_bar) == 0
    if isinstance(policy, StationaryExpansion):
        assert tr.kappa[0] == pytest.approx(kappa_expansion(policy.spectrum, 3.0))
        assert tr.omega_bar[0] == pytest.approx(rabi_generalized(policy.spectrum, 3.0, 0.2))


def test_tangent_fixed_points():
    cfg = SimConfig(PulseSpec.rectangular(2.0, 1.0, t0=1.0), Markov(0.3))
    assert derivative(BlochState(), 0.5, cfg) == (0.0, 0j)
    cfg = SimConfig(PulseSpec.rectangular(2.0, 1.0), Markov(0.3))
    dp, drho = derivative(BlochState(0.5, 0j), 0.5, cfg)
    assert dp == 0.0 and drho == 0


def test_no_drive_keeps_population():
    cfg = SimConfig(PulseSpec.rectangular(0.0, 1.0), Markov(0.2), initial=BlochState(0.3, 0.1))
    assert final_population(cfg) == pytest.approx(0.3, abs=1e-12)


def test_sweep_pi_units():
    res = area_sweep(SweepSpec(SimConfig(PulseSpec.rectangular(1.0, 2.0), Markov(0.0)), [1.0, 2.0]))
    assert res.columns["markov"] == pytest.approx([1.0, 0.0], abs=1e-9)


def test_no_mean_field_collapses_to_markov():
    base = SimConfig(PulseSpec.rectangular(1.0, 1.0), Nonstationary(0.2, ExponentialMean(0.0, 2.0)))
    grid = [0.0, 0.7, 1.5, 2.5]
    res = population_vs_amplitude_at_pulse_end(base, grid)
    markov = area_sweep(SweepSpec(SimConfig(base.pulse, Markov(0.2)), grid)).columns["markov"]
    assert res.columns["unit_dpp"] == pytest.approx(markov, abs=1e-9)
    assert res.columns["full_dpp"] == pytest.approx(markov, abs=1e-9)


@pytest.mark.parametrize("omega", [0.5, 2 * math.pi, 20.0])
@pytest.mark.parametrize("delta", [0.0, 1.0])
@pytest.mark.parametrize("kappa", [0.0, 0.1, 1.0])
def test_adaptive_matches_fixed_step_reference(omega, delta, kappa):
    cfg = SimConfig(PulseSpec.rectangular(omega, 1.0), Markov(kappa), TlsParams(delta))
    ref = reference_final_state(cfg, dt=1e-4)
    traj = integrate(cfg)
    assert traj.rho_pp[-1] == pytest.approx(ref.rho_pp, abs=1e-7)
    assert traj.rho_pm[-1] == pytest.approx(ref.rho_pm, abs=1e-7)
