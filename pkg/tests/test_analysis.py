import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
from scipy.optimize import curve_fit

from csltrap.errors import ConfigError, DomainError, FitError, SizeError, ExcessClampWarning
from csltrap.model import CONSTANTS, NoiseConfig, OscillatorMode, SphereParams, mean_gas_speed, thermal_force_psd
from csltrap.dynamics import SimulationConfig, Trajectory, default_timestep, simulate
from csltrap.analysis import (
    SampledSeries,
    TemperatureEstimate,
    effective_temperature,
    envelope_squared,
    excess_force_psd,
    excess_temperature_bound,
    fit_exponential_decay,
    fit_gaussian,
    normalized_energy_autocorrelation,
    psd_welch,
    quadrature_phase,
    radius_from_damping,
    radius_from_equipartition,
    temperature_uncertainty,
)
from csltrap.pipeline import fit_damping_from_envelope

SPHERE = SphereParams.from_radius_density(1.0e-6, 1100.0)
MODE = OscillatorMode(frequency=12.9, label="axis1")


def synthetic_trajectory(samples, dt, burn_in_s=0.0):
    return Trajectory(
        dt=dt,
        samples=np.atleast_2d(samples),
        seed=0,
        config_digest="synthetic",
        burn_in_s=burn_in_s,
    )


def thermal_config(gamma, temperature, duration, seed, modes=None, beta=0.0):
    modes = modes or (MODE,)
    s_th = thermal_force_psd(gamma, SPHERE.mass, temperature)
    return SimulationConfig(
        sphere=SPHERE,
        modes=modes,
        gamma=gamma,
        noise=tuple(NoiseConfig(thermal_psd=s_th) for _ in modes),
        duration=duration,
        dt=default_timestep(modes),
        seed=seed,
        coupling_beta=beta,
    )


class TestPsdWelch:
    def test_tone_parseval(self):
        dt = 1e-3
        t = dt * np.arange(200_000)
        amplitude = 2.0e-6
        traj = synthetic_trajectory(amplitude * np.cos(2 * math.pi * 50.0 * t), dt)
        psd = psd_welch(traj, segment_length=8192)
        assert psd.integral() == pytest.approx(amplitude**2 / 2, rel=0.01)

    def test_white_noise_parseval(self):
        rng = np.random.default_rng(5)
        series = 1e-6 * rng.standard_normal(2**20)
        traj = synthetic_trajectory(series, 1e-4)
        psd = psd_welch(traj, segment_length=4096)
        assert psd.integral() == pytest.approx(series.var(), rel=0.03)

    def test_lorentzian_peak_centred_on_resonance(self):
        gamma = 2 * math.pi * 0.4
        traj = simulate(thermal_config(gamma, 298.0, 410.0 / gamma, 17))
        psd = psd_welch(traj, segment_length=65536)
        df = psd.frequencies[1] - psd.frequencies[0]
        window = (psd.frequencies > 12.9 - 2.0) & (psd.frequencies < 12.9 + 2.0)

        def lorentzian(f, amp, f_c, width):
            return amp / ((f - f_c) ** 2 + width**2)

        popt, _ = curve_fit(
            lorentzian,
            psd.frequencies[window],
            psd.values[window],
            p0=(psd.values[window].max() * 0.04, 12.9, 0.2),
        )
        assert abs(popt[1] - 12.9) < df

    def test_frequency_axis(self):
        traj = synthetic_trajectory(np.random.default_rng(0).standard_normal(4096), 1e-3)
        psd = psd_welch(traj, segment_length=1024)
        assert psd.frequencies[0] == 0.0
        assert psd.frequencies[-1] == pytest.approx(500.0)

    def test_too_short_series(self):
        traj = synthetic_trajectory(np.zeros(100), 1e-3)
        with pytest.raises(SizeError):
            psd_welch(traj, segment_length=1024)

    def test_overlap_domain(self):
        traj = synthetic_trajectory(np.random.default_rng(0).standard_normal(4096), 1e-3)
        with pytest.raises(DomainError):
            psd_welch(traj, segment_length=512, overlap=0.95)


class TestFitGaussian:
    def test_iid_recovery(self):
        rng = np.random.default_rng(42)
        sigma_true = 1.15e-5
        fit = fit_gaussian(sigma_true * rng.standard_normal(1_000_000))
        assert fit.sigma == pytest.approx(sigma_true, rel=0.005)
        assert fit.mean == pytest.approx(0.0, abs=5 * sigma_true / 1000)
        # iid effective sample size: classic sigma / sqrt(2N) standard error
        assert fit.sigma_stderr == pytest.approx(
            sigma_true / math.sqrt(2_000_000), rel=0.25
        )

    def test_degenerate_input(self):
        with pytest.raises(DomainError):
            fit_gaussian(np.ones(500))

    def test_minimum_samples(self):
        with pytest.raises(SizeError):
            fit_gaussian(np.random.default_rng(0).standard_normal(50))

    def test_correlated_stderr_matches_block_bootstrap(self):
        gamma = 2 * math.pi * 0.4
        traj = simulate(thermal_config(gamma, 298.0, 405.0 / gamma, 23))
        x = traj.steady(0)
        fit = fit_gaussian(x)
        # sigma estimate itself is unbiased
        expected_sigma = math.sqrt(CONSTANTS.k_B * 298.0 / (SPHERE.mass * MODE.omega**2))
        assert fit.sigma == pytest.approx(expected_sigma, rel=0.15)
        # naive iid error would be far too optimistic on correlated data
        naive = fit.sigma / math.sqrt(2 * x.size)
        assert fit.sigma_stderr > 5 * naive
        # block spread oracle
        blocks = np.array_split(x, 16)
        block_sigmas = [b.std(ddof=0) for b in blocks]
        block_se = np.std(block_sigmas, ddof=1) / math.sqrt(len(blocks))
        assert 0.4 * block_se < fit.sigma_stderr < 2.5 * block_se


class TestEffectiveTemperature:
    def test_room_temperature_benchmark(self):
        est = effective_temperature(1.15e-5, MODE, 4.7e-15)
        assert est.t_eff == pytest.approx(296.0, rel=0.01)
        assert est.sigma_1s is None

    def test_quadratic_in_sigma(self):
        single = effective_temperature(1e-5, MODE, 4.7e-15).t_eff
        double = effective_temperature(2e-5, MODE, 4.7e-15).t_eff
        assert double == pytest.approx(4 * single, rel=1e-12)

    def test_two_modes_equal_temperature(self):
        # equipartition across modes: sigma_1 / sigma_2 = w_2 / w_1
        gamma = 2 * math.pi * 0.4
        modes = (
            OscillatorMode(frequency=12.9, label="axis1"),
            OscillatorMode(frequency=9.3, label="axis2"),
        )
        traj = simulate(thermal_config(gamma, 298.0, 405.0 / gamma, 29, modes=modes))
        sigma_1 = traj.steady(0).std()
        sigma_2 = traj.steady(1).std()
        assert sigma_1 / sigma_2 == pytest.approx(9.3 / 12.9, rel=0.1)
        t_1 = effective_temperature(sigma_1, modes[0], SPHERE.mass).t_eff
        t_2 = effective_temperature(sigma_2, modes[1], SPHERE.mass).t_eff
        assert t_1 == pytest.approx(t_2, rel=0.25)


class TestEnvelopeSquared:
    def test_pure_tone(self):
        dt = 1.0 / (200 * 12.9)
        t = dt * np.arange(int(60.0 / dt))
        amplitude = 2.0e-6
        traj = synthetic_trajectory(amplitude * np.cos(2 * math.pi * 12.9 * t), dt)
        env = envelope_squared(traj, 12.9, 1.5)
        assert env.values == pytest.approx(amplitude**2, rel=1e-3)

    def test_ring_down_decays_at_gamma(self):
        gamma = 2 * math.pi * 0.05
        mode = MODE
        config = SimulationConfig(
            sphere=SPHERE,
            modes=(mode,),
            gamma=gamma,
            noise=(NoiseConfig(),),
            duration=16.0,
            dt=1.0 / (400 * 12.9),
            seed=3,
            initial_state=((2.0e-6, 0.0),),
        )
        traj = simulate(config)
        env = envelope_squared(traj, 12.9, 1.5)
        t = env.dt * np.arange(env.values.size)
        ratio = env.values / env.values[0]
        expected = np.exp(-gamma * t)
        assert np.max(np.abs(ratio / expected - 1.0)) < 0.01

    def test_duffing_frequency_shift_tracked(self):
        # softening spring: instantaneous frequency follows f0 (1 + kappa X^2)
        alpha = -6.4
        mode = OscillatorMode(frequency=12.9, duffing_alpha=alpha, label="axis1")
        kappa = 3 * alpha / (8 * SPHERE.mass * mode.omega**2)
        x0 = math.sqrt(0.02 / abs(kappa))
        gamma = 2 * math.pi * 0.01
        config = SimulationConfig(
            sphere=SPHERE,
            modes=(mode,),
            gamma=gamma,
            noise=(NoiseConfig(),),
            duration=16.0,
            dt=1.0 / (400 * 12.9),
            seed=3,
            initial_state=((x0, 0.0),),
        )
        traj = simulate(config)
        bandwidth = 2.4
        env = envelope_squared(traj, 12.9, bandwidth)
        phase = quadrature_phase(traj, 12.9, bandwidth)
        n = min(env.values.size, phase.values.size)
        shift_measured = np.gradient(phase.values[:n], phase.dt) / (2 * math.pi)
        shift_predicted = 12.9 * kappa * env.values[:n]
        mask = env.values[:n] >= 0.5 * env.values[:n].max()
        # ignore edges where the gradient stencil is one-sided
        mask[:5] = False
        err = np.abs(shift_measured[mask] - shift_predicted[mask])
        assert np.max(err / np.abs(shift_predicted[mask])) < 0.05

    def test_bandwidth_ordering_errors(self):
        traj = synthetic_trajectory(np.zeros(10_000), 1e-3)
        with pytest.raises(ConfigError):
            envelope_squared(traj, 12.9, 5.0)
        with pytest.raises(ConfigError):
            envelope_squared(traj, 12.9, 1.0, gamma=2 * math.pi * 2.0)


class TestNormalizedEnergyAutocorrelation:
    def test_lag_zero_is_one(self):
        rng = np.random.default_rng(7)
        series = SampledSeries(dt=0.1, values=rng.exponential(size=5000))
        r = normalized_energy_autocorrelation(series, 20.0)
        assert r.values[0] == pytest.approx(1.0, rel=1e-12)

    def test_constant_series(self):
        series = SampledSeries(dt=0.1, values=np.full(5000, 3.7))
        r = normalized_energy_autocorrelation(series, 20.0)
        assert r.values == pytest.approx(np.ones_like(r.values), rel=1e-9)

    def test_thermal_oscillator_relaxes_at_gamma(self):
        gamma = 2 * math.pi * 0.4
        traj = simulate(thermal_config(gamma, 298.0, 4005.0 / gamma, 33))
        env = envelope_squared(traj, 12.9, 2.5, gamma=gamma)
        estimate = fit_damping_from_envelope(env, 2.5)
        assert estimate.gamma == pytest.approx(gamma, rel=0.1)

    def test_insufficient_data(self):
        series = SampledSeries(dt=0.1, values=np.ones(50))
        with pytest.raises(SizeError):
            normalized_energy_autocorrelation(series, 2.0)


class TestFitExponentialDecay:
    def test_synthetic_high_vacuum_decay(self):
        tau = 4700.0
        dt = 40.0
        t = dt * np.arange(500)
        series = SampledSeries(dt=dt, values=np.exp(-t / tau))
        estimate = fit_exponential_decay(series)
        assert estimate.tau == pytest.approx(tau, rel=1e-3)
        assert estimate.gamma / (2 * math.pi) == pytest.approx(34e-6, rel=0.05)

    def test_floored_decay_with_free_asymptote(self):
        tau = 10.0
        dt = 0.25
        t = dt * np.arange(800)
        series = SampledSeries(dt=dt, values=0.5 + 0.5 * np.exp(-t / tau))
        estimate = fit_exponential_decay(series)
        assert estimate.tau == pytest.approx(tau, rel=1e-3)

    def test_rescaled_amplitude_recovered(self):
        # the decaying term need not extrapolate to 1 - c at t = 0
        tau = 5.0
        dt = 0.1
        t = dt * np.arange(1500)
        values = 0.5 + 0.62 * np.exp(-t / tau)
        values[0] = 1.0
        series = SampledSeries(dt=dt, values=values)
        estimate = fit_exponential_decay(series, min_lag=3 * dt)
        assert estimate.tau == pytest.approx(tau, rel=1e-3)

    def test_non_decaying_input(self):
        t = 0.1 * np.arange(400)
        series = SampledSeries(dt=0.1, values=0.2 + 0.8 * np.exp(t / 50.0))
        with pytest.raises(FitError):
            fit_exponential_decay(series)

    def test_window_outside_support(self):
        series = SampledSeries(dt=0.1, values=np.exp(-0.1 * np.arange(100)))
        with pytest.raises(SizeError):
            fit_exponential_decay(series, fit_window=1000.0)


class TestRadiusEstimates:
    def test_radius_from_damping_benchmark(self):
        nu = mean_gas_speed(298.0, 0.02897)
        radius = radius_from_damping(0.992, 0.1, nu, 1100.0)
        assert radius == pytest.approx(1.0e-6, rel=0.01)

    def test_pressure_linearity(self):
        nu = 466.7
        gamma_full = (16 / math.pi) * 0.1 / (nu * 1e-6 * 1100.0)
        gamma_half = (16 / math.pi) * 0.05 / (nu * 1e-6 * 1100.0)
        assert radius_from_damping(gamma_half, 0.05, nu, 1100.0) == pytest.approx(
            radius_from_damping(gamma_full, 0.1, nu, 1100.0), rel=1e-12
        )

    def test_round_trip(self):
        nu = 466.7
        radius = 0.73e-6
        gamma = (16 / math.pi) * 0.02 / (nu * radius * 1100.0)
        assert radius_from_damping(gamma, 0.02, nu, 1100.0) == pytest.approx(
            radius, rel=1e-12
        )

    def test_radius_from_equipartition_benchmark(self):
        radius = radius_from_equipartition(1.15e-5, 12.9, 1100.0, 296.0)
        assert radius == pytest.approx(1.0e-6, rel=0.01)

    def test_equipartition_identity(self):
        # equivalent to m w^2 sigma^2 = k_B T with m = (4/3) pi rho R^3
        radius = radius_from_equipartition(1.3e-5, 11.0, 900.0, 250.0)
        sphere = SphereParams.from_radius_density(radius, 900.0)
        omega = 2 * math.pi * 11.0
        assert sphere.mass * omega**2 * (1.3e-5) ** 2 == pytest.approx(
            CONSTANTS.k_B * 250.0, rel=1e-9
        )

    def test_two_methods_agree_on_synthetic_experiment(self):
        # gas-dominated calibration run at 1e-3 mbar
        pressure = 0.1
        temperature = 298.0
        nu = mean_gas_speed(temperature, 0.02897)
        gamma = (16 / math.pi) * pressure / (nu * SPHERE.radius * SPHERE.density)
        traj = simulate(thermal_config(gamma, temperature, 405.0 / gamma, 37))
        sigma = traj.steady(0).std()
        radius_equi = radius_from_equipartition(sigma, 12.9, 1100.0, temperature)
        bandwidth = 1.29
        env = envelope_squared(traj, 12.9, bandwidth, gamma=gamma)
        gamma_fit = fit_damping_from_envelope(env, bandwidth).gamma
        radius_damp = radius_from_damping(gamma_fit, pressure, nu, 1100.0)
        assert radius_equi == pytest.approx(radius_damp, rel=0.15)


class TestTemperatureUncertainty:
    def test_high_vacuum_benchmark(self):
        sigma_t = temperature_uncertainty(297.9, 2.136e-4, 9.5e5)
        assert sigma_t == pytest.approx(29.6, rel=0.01)

    def test_square_root_law(self):
        base = temperature_uncertainty(300.0, 1e-3, 1e5)
        assert temperature_uncertainty(300.0, 1e-3, 4e5) == pytest.approx(
            base / 2, rel=1e-12
        )

    def test_domain(self):
        with pytest.raises(DomainError):
            temperature_uncertainty(300.0, 0.0, 1e5)


class TestExcessTemperatureBound:
    def test_benchmark_budget(self):
        hv = TemperatureEstimate(297.9, 16.2)
        mv = TemperatureEstimate(291.4, 4.1)
        delta_t, sigma_delta_t = excess_temperature_bound(hv, mv, 0.95)
        assert delta_t == pytest.approx(6.5, abs=1e-9)
        assert sigma_delta_t == pytest.approx(39.3, abs=0.1)
        assert sigma_delta_t == pytest.approx(40.0, rel=0.02)

    def test_equal_estimates_zero_uncertainty(self):
        est = TemperatureEstimate(300.0, 0.0)
        assert excess_temperature_bound(est, est, 0.95) == (0.0, 0.0)

    def test_monotone_in_uncertainties(self):
        mv = TemperatureEstimate(291.4, 4.1)
        previous = 0.0
        for sigma in (1.0, 5.0, 20.0, 50.0):
            hv = TemperatureEstimate(297.9, sigma)
            _, bound = excess_temperature_bound(hv, mv, 0.95)
            assert bound >= previous
            previous = bound

    def test_negative_delta_clamped_in_bound(self):
        hv = TemperatureEstimate(280.0, 10.0)
        mv = TemperatureEstimate(300.0, 10.0)
        delta_t, sigma_delta_t = excess_temperature_bound(hv, mv, 0.95)
        assert delta_t == pytest.approx(-20.0)
        assert sigma_delta_t == pytest.approx(1.96 * math.hypot(10.0, 10.0), rel=1e-3)

    def test_missing_uncertainty(self):
        with pytest.raises(ConfigError):
            excess_temperature_bound(
                TemperatureEstimate(297.9), TemperatureEstimate(291.4, 4.1), 0.95
            )

    def test_confidence_domain(self):
        hv = TemperatureEstimate(297.9, 16.2)
        mv = TemperatureEstimate(291.4, 4.1)
        with pytest.raises(DomainError):
            excess_temperature_bound(hv, mv, 0.3)


class TestExcessForcePsd:
    def test_central_budget(self):
        gamma = 2 * math.pi * 34e-6
        assert math.sqrt(excess_force_psd(6.5, 4.7e-15, gamma)) == pytest.approx(
            1.3e-20, rel=0.05
        )

    def test_confidence_budget(self):
        gamma = 2 * math.pi * 34e-6
        assert math.sqrt(excess_force_psd(40.0, 4.7e-15, gamma)) == pytest.approx(
            3.3e-20, rel=0.05
        )

    def test_zero(self):
        assert excess_force_psd(0.0, 4.7e-15, 1e-3) == 0.0

    def test_negative_clamps_with_warning(self):
        with pytest.warns(ExcessClampWarning):
            assert excess_force_psd(-3.0, 4.7e-15, 1e-3) == 0.0


class TestPipelineClosure:
    def test_parseval_closure_on_simulated_mode(self):
        # fluctuation-dissipation bookkeeping: integrated displacement PSD
        # equals the sample variance
        gamma = 2 * math.pi * 0.4
        traj = simulate(thermal_config(gamma, 298.0, 405.0 / gamma, 41))
        x = traj.steady(0)
        psd = psd_welch(traj, segment_length=16384)
        assert psd.integral() == pytest.approx(x.var(), rel=0.02)

    def test_temperature_and_damping_recovered_together(self):
        # master property: one simulated record yields both the drive
        # temperature (via the Gaussian fit) and the damping rate (via the
        # energy autocorrelation) within their statistical tolerances
        gamma = 2 * math.pi * 0.4
        temperature = 298.0
        traj = simulate(thermal_config(gamma, temperature, 4005.0 / gamma, 43))
        x = traj.steady(0)
        fit = fit_gaussian(x)
        t_hat = effective_temperature(fit.sigma, MODE, SPHERE.mass).t_eff
        sigma_t = temperature_uncertainty(temperature, gamma, x.size * traj.dt)
        assert abs(t_hat - temperature) < 3 * sigma_t
        env = envelope_squared(traj, 12.9, 2.5, gamma=gamma)
        estimate = fit_damping_from_envelope(env, 2.5)
        assert estimate.gamma == pytest.approx(gamma, rel=0.10)


class TestNonlinearSignature:
    def test_non_lorentzian_broadening_and_asymmetry(self):
        # published high-vacuum damping with the fitted nonlinear couplings:
        # the linewidth is far wider than gamma/2pi and skewed to low
        # frequency, so a width-based damping estimate overshoots wildly
        from csltrap.pipeline import table2_config

        gamma_hz = 4e-4
        config = table2_config("hv", True, full=True, seed=4321)
        config = replace(
            config,
            duration=5.0 / config.gamma + 2600.0,
            dt=default_timestep(config.modes),
        )
        traj = simulate(config)
        psd = psd_welch(traj, segment_length=2**19, mode=0)
        freqs = psd.frequencies
        values = psd.values
        peak_region = (freqs > 11.9) & (freqs < 13.4)
        peak_idx = np.argmax(values * peak_region)
        half = values[peak_idx] / 2
        above = np.flatnonzero((values >= half) & peak_region)
        f_lo, f_hi = freqs[above[0]], freqs[above[-1]]
        fwhm = f_hi - f_lo
        assert fwhm > 10 * gamma_hz
        # softening spring: spectral weight spreads to lower frequencies
        left = freqs[peak_idx] - f_lo
        right = f_hi - freqs[peak_idx]
        assert left > right
