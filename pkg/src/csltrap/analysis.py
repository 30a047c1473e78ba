"""Measurement pipeline applied to trajectories: spectral estimation, Gaussian
position fits, effective temperature, envelope extraction, energy
autocorrelation, damping fits, radius estimates, and the uncertainty model.

Displacement PSDs are reported in the one-sided display convention, normalized
so that the integral over frequency equals the series variance.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import signal
from scipy.optimize import curve_fit
from scipy.stats import norm

from .errors import ConfigError, DomainError, FitError, SizeError, ExcessClampWarning
from .model import CONSTANTS, OscillatorMode
from .dynamics import Trajectory

# Convention used by excess_temperature_bound, embedded in every report:
# the central difference is clamped at the physical boundary delta_t >= 0 and
# the two-sided Gaussian quantile of the quadrature-summed uncertainties is
# added on top.
EXCESS_BOUND_CONVENTION = "max(delta_t,0) + z_twosided(conf) * sqrt(s_hv^2 + s_mv^2)"

# Low-pass settling margin trimmed from each end of the demodulated envelope,
# in units of 1/bandwidth.
ENVELOPE_SETTLE_CYCLES = 4.0

# Demodulation low-pass order. Applied forward-backward, so the effective
# roll-off is twice this; kept low so the filter's correlation tail stays
# short compared to 1/bandwidth.
ENVELOPE_FILTER_ORDER = 2

WELCH_WINDOW = "hann"
WELCH_OVERLAP = 0.5
WELCH_CORRELATION_TIMES = 16


@dataclass(frozen=True)
class SampledSeries:
    """A uniformly sampled time series."""

    dt: float
    values: np.ndarray
    start_time: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.dt <= 0:
            raise ConfigError("dt must be strictly positive")

    @property
    def times(self) -> np.ndarray:
        return self.start_time + self.dt * np.arange(self.values.size)


@dataclass(frozen=True)
class PsdEstimate:
    """One-sided displacement PSD from averaged windowed periodograms."""

    frequencies: np.ndarray   # Hz, increasing from 0 to Nyquist
    values: np.ndarray        # m^2/Hz
    segment_length: int
    window: str
    overlap: float

    def __post_init__(self) -> None:
        f = np.asarray(self.frequencies, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if f.size != v.size:
            raise ConfigError("frequencies and values must have equal length")
        if np.any(np.diff(f) <= 0) or f[0] != 0.0:
            raise ConfigError("frequencies must increase strictly from 0")
        if np.any(v < 0):
            raise ConfigError("PSD values must be non-negative")
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "values", v)

    def integral(self) -> float:
        """Total power, m^2 (equals the series variance by normalization)."""
        return float(np.trapezoid(self.values, self.frequencies))


@dataclass(frozen=True)
class TemperatureEstimate:
    """Effective temperature with statistical uncertainty and duration."""

    t_eff: float                  # K
    sigma_1s: float | None = None  # K, one standard deviation
    t_mea: float | None = None     # s
    mode_label: str = ""

    def __post_init__(self) -> None:
        if self.t_eff <= 0:
            raise DomainError("t_eff must be strictly positive")
        if self.sigma_1s is not None and self.sigma_1s < 0:
            raise DomainError("sigma_1s must be non-negative")

    def with_uncertainty(self, sigma_1s: float, t_mea: float) -> "TemperatureEstimate":
        return TemperatureEstimate(self.t_eff, sigma_1s, t_mea, self.mode_label)


@dataclass(frozen=True)
class DampingEstimate:
    """Damping rate from an exponential fit to the energy autocorrelation."""

    gamma: float          # angular rate, s^-1
    tau: float            # 1/gamma, s
    fit_residual: float   # rms residual of the fit, dimensionless
    fit_window: float     # s

    def __post_init__(self) -> None:
        if self.gamma <= 0:
            raise DomainError("gamma must be strictly positive")
        if not math.isclose(self.tau * self.gamma, 1.0, rel_tol=1e-9):
            raise DomainError("tau must equal 1/gamma")


@dataclass(frozen=True)
class GaussianFit:
    mean: float
    sigma: float
    sigma_stderr: float


def welch_segment_length(gamma: float, dt: float, n_samples: int) -> int:
    """Default Welch segment: 16 energy-correlation times (2/gamma each),
    rounded to a power of two and clamped to the available record."""
    if gamma <= 0 or dt <= 0:
        raise DomainError("gamma and dt must be strictly positive")
    target = WELCH_CORRELATION_TIMES * (2.0 / gamma) / dt
    power = int(round(math.log2(max(target, 16.0))))
    return int(min(2**power, n_samples))


def psd_welch(
    traj: Trajectory,
    segment_length: int | None = None,
    overlap: float = WELCH_OVERLAP,
    window: str = WELCH_WINDOW,
    mode: int = 0,
) -> PsdEstimate:
    """Averaged windowed periodogram of one mode's post-burn-in record."""
    x = traj.steady(mode)
    if segment_length is None:
        segment_length = int(2 ** max(4, math.floor(math.log2(max(x.size // 8, 16)))))
        segment_length = min(segment_length, x.size)
    if segment_length > x.size:
        raise SizeError(
            f"segment_length {segment_length} exceeds series length {x.size}"
        )
    if not 0.0 <= overlap <= 0.9:
        raise DomainError("overlap must lie in [0, 0.9]")
    freqs, psd = signal.welch(
        x,
        fs=1.0 / traj.dt,
        window=window,
        nperseg=segment_length,
        noverlap=int(overlap * segment_length),
        detrend="constant",
        scaling="density",
    )
    return PsdEstimate(
        frequencies=freqs,
        values=psd,
        segment_length=segment_length,
        window=window,
        overlap=overlap,
    )


def _integrated_autocorrelation_steps(y: np.ndarray) -> float:
    """Integrated autocorrelation time of y in sample units.

    Uses Sokal's self-consistent window: tau is the cumulative sum
    1 + 2 sum_k rho(k) evaluated at the smallest window W >= 5 tau(W), which
    stays robust for oscillatory autocorrelations where truncating at the
    first zero crossing would grossly underestimate the correlation time.
    """
    n = y.size
    centred = y - y.mean()
    var = float(np.dot(centred, centred))
    if var == 0.0:
        return 1.0
    nfft = 1 << int(math.ceil(math.log2(2 * n)))
    spectrum = np.fft.rfft(centred, nfft)
    acov = np.fft.irfft(spectrum * np.conj(spectrum), nfft)[: max(n // 4, 2)]
    rho = acov / acov[0]
    tau_cumulative = 1.0 + 2.0 * np.cumsum(rho[1:])
    windows = np.arange(1, tau_cumulative.size + 1)
    eligible = np.flatnonzero(windows >= 5.0 * tau_cumulative)
    if eligible.size:
        tau = float(tau_cumulative[eligible[0]])
    else:
        tau = float(tau_cumulative[-1])
    return min(max(tau, 1.0), float(n))


def fit_gaussian(samples: Sequence[float] | np.ndarray) -> GaussianFit:
    """Maximum-likelihood Gaussian fit with an effective-sample-size corrected
    standard error on sigma.

    The correction estimates the integrated autocorrelation time of the
    squared fluctuations, so correlated oscillator records report honest
    (inflated) uncertainties while i.i.d. input recovers sigma/sqrt(2N).
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1:
        raise ConfigError("samples must be one-dimensional")
    if x.size < 100:
        raise SizeError(f"need at least 100 samples, got {x.size}")
    mean = float(x.mean())
    sigma = float(x.std(ddof=0))
    if sigma == 0.0:
        raise DomainError("degenerate input: zero variance")
    y = (x - mean) ** 2
    tau_steps = _integrated_autocorrelation_steps(y)
    n_eff = max(x.size / tau_steps, 2.0)
    sigma_stderr = sigma / math.sqrt(2.0 * n_eff)
    return GaussianFit(mean=mean, sigma=sigma, sigma_stderr=sigma_stderr)


def effective_temperature(
    sigma: float, mode: OscillatorMode, mass: float
) -> TemperatureEstimate:
    """Equipartition temperature ``m (2 pi f)^2 sigma^2 / k_B`` (uncertainty unset)."""
    if sigma <= 0:
        raise DomainError("sigma must be strictly positive")
    if mass <= 0:
        raise DomainError("mass must be strictly positive")
    t_eff = mass * mode.omega**2 * sigma**2 / CONSTANTS.k_B
    return TemperatureEstimate(t_eff=t_eff, mode_label=mode.label)


def _demodulate(traj: Trajectory, center_frequency: float, bandwidth: float, mode: int):
    """Low-passed quadrature components of one mode, with settle/decimation info."""
    if bandwidth <= 0:
        raise ConfigError("bandwidth must be strictly positive")
    if bandwidth >= center_frequency / 5.0:
        raise ConfigError(
            f"bandwidth {bandwidth} must be below center_frequency/5 = "
            f"{center_frequency / 5.0}"
        )
    x = traj.steady(mode)
    fs = 1.0 / traj.dt
    phase = (2.0 * math.pi * center_frequency * traj.dt) * np.arange(x.size)
    sos = signal.butter(ENVELOPE_FILTER_ORDER, bandwidth / 2.0, fs=fs, output="sos")
    i_comp = signal.sosfiltfilt(sos, math.sqrt(2.0) * x * np.cos(phase))
    q_comp = signal.sosfiltfilt(sos, math.sqrt(2.0) * x * np.sin(phase))
    settle = int(math.ceil(ENVELOPE_SETTLE_CYCLES / bandwidth / traj.dt))
    if 2 * settle >= x.size:
        raise SizeError("record shorter than the filter settling margin")
    decim = max(1, int(round(1.0 / (4.0 * bandwidth) / traj.dt)))
    return i_comp, q_comp, settle, decim


def envelope_squared(
    traj: Trajectory,
    center_frequency: float,
    bandwidth: float,
    mode: int = 0,
    gamma: float | None = None,
) -> SampledSeries:
    """Squared oscillation envelope X^2(t) by quadrature demodulation.

    The record is mixed with sqrt(2) cos / sqrt(2) sin at ``center_frequency``,
    low-passed at ``bandwidth / 2`` (zero-phase Butterworth), combined as
    X^2 = 2 (I^2 + Q^2), trimmed by the filter settling margin and decimated
    to a sample interval of 1 / (4 * bandwidth).
    """
    if gamma is not None and gamma / (2.0 * math.pi) >= bandwidth:
        raise ConfigError(
            f"bandwidth {bandwidth} must exceed gamma/2pi = {gamma / (2.0 * math.pi)}"
        )
    i_comp, q_comp, settle, decim = _demodulate(traj, center_frequency, bandwidth, mode)
    x2 = 2.0 * (i_comp**2 + q_comp**2)
    return SampledSeries(
        dt=decim * traj.dt,
        values=x2[settle : x2.size - settle : decim],
        start_time=traj.burn_in_s + (settle + 1) * traj.dt,
    )


def quadrature_phase(
    traj: Trajectory,
    center_frequency: float,
    bandwidth: float,
    mode: int = 0,
) -> SampledSeries:
    """Unwrapped demodulation phase (rad); its time derivative over 2 pi is the
    instantaneous frequency offset from ``center_frequency``."""
    i_comp, q_comp, settle, decim = _demodulate(traj, center_frequency, bandwidth, mode)
    angle = np.unwrap(np.angle(i_comp - 1j * q_comp))
    return SampledSeries(
        dt=decim * traj.dt,
        values=angle[settle : angle.size - settle : decim],
        start_time=traj.burn_in_s + (settle + 1) * traj.dt,
    )


def normalized_energy_autocorrelation(
    x_squared: SampledSeries, max_lag: float
) -> SampledSeries:
    """Raw product-moment autocorrelation R(t) = <X^2(t) X^2(0)> / <X^4(0)>.

    Not mean-subtracted: the squared mean of the envelope appears as a floor
    at large lags. Each lag's pair sum is normalized by its pair count, so
    R(0) = 1 exactly and a constant input gives R = 1 at every lag; the
    requirement that the record be at least ten times longer than the lag
    range keeps the count correction small everywhere.
    """
    v = x_squared.values
    n_lags = int(round(max_lag / x_squared.dt))
    if n_lags < 1:
        raise SizeError("max_lag must cover at least one sample interval")
    if v.size < 10 * n_lags:
        raise SizeError(
            f"series length {v.size} must be at least 10x the lag count {n_lags}"
        )
    nfft = 1 << int(math.ceil(math.log2(2 * v.size)))
    spectrum = np.fft.rfft(v, nfft)
    sums = np.fft.irfft(spectrum * np.conj(spectrum), nfft)[: n_lags + 1]
    counts = v.size - np.arange(n_lags + 1)
    raw = sums / counts
    return SampledSeries(dt=x_squared.dt, values=raw / raw[0])


def fit_exponential_decay(
    r: SampledSeries, fit_window: float | None = None, min_lag: float = 0.0
) -> DampingEstimate:
    """Fit a floored exponential to a normalized autocorrelation; gamma = 1/tau.

    The model is ``R(t) = c + a exp(-t / tau)`` with a free asymptote c (the
    squared envelope mean floors the raw product moment) and a free amplitude
    a (the demodulation low-pass rescales the decaying term relative to the
    floor; pinning a = 1 - c converts that rescaling into a tau bias). When
    ``fit_window`` is omitted it defaults to the lag where R first drops below
    c + 0.05 (1 - c), with c pre-estimated from the tail. ``min_lag`` excludes
    filter-distorted initial lags from the fit.
    """
    values = r.values
    t = r.dt * np.arange(values.size)
    if values.size < 6:
        raise SizeError("autocorrelation series too short to fit")

    tail = values[-max(values.size // 4, 2):]
    c0 = float(np.clip(tail.mean(), 0.0, 0.95))

    skip = min(int(round(min_lag / r.dt)), values.size - 6)
    skip = max(skip, 0)
    if fit_window is None:
        threshold = c0 + 0.05 * (1.0 - c0)
        below = np.flatnonzero(values < threshold)
        idx = int(below[0]) if below.size else values.size - 1
    else:
        idx = int(round(fit_window / r.dt))
        if idx >= values.size:
            raise SizeError(f"fit window {fit_window} s outside the series support")
    idx = min(max(idx, skip + 5), values.size - 1)
    window_s = t[idx]

    e_level = c0 + (1.0 - c0) / math.e
    below_e = np.flatnonzero(values < e_level)
    tau0 = float(t[below_e[0]]) if below_e.size else window_s / 3.0
    tau0 = max(tau0, r.dt)

    def model(tt, c, a, tau):
        return c + a * np.exp(-tt / tau)

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            popt, _ = curve_fit(
                model,
                t[skip : idx + 1],
                values[skip : idx + 1],
                p0=(c0, 1.0 - c0, tau0),
                maxfev=20000,
            )
    except (RuntimeError, ValueError) as exc:
        raise FitError(f"exponential fit failed: {exc}") from exc
    c_fit, a_fit, tau = (float(p) for p in popt)
    if not math.isfinite(tau) or tau <= 0 or a_fit <= 0:
        raise FitError(f"non-decaying input: fitted tau = {tau!r}, amplitude = {a_fit!r}")
    residual = float(
        np.sqrt(
            np.mean(
                (values[skip : idx + 1] - model(t[skip : idx + 1], c_fit, a_fit, tau))
                ** 2
            )
        )
    )
    return DampingEstimate(
        gamma=1.0 / tau, tau=tau, fit_residual=residual, fit_window=window_s
    )


def radius_from_damping(
    gamma: float, pressure: float, mean_speed: float, density: float
) -> float:
    """Sphere radius from gas-kinetic damping: R = (16/pi) P / (nu gamma rho)."""
    for name, value in (
        ("gamma", gamma),
        ("pressure", pressure),
        ("mean_speed", mean_speed),
        ("density", density),
    ):
        if value <= 0:
            raise DomainError(f"{name} must be strictly positive")
    return (16.0 / math.pi) * pressure / (mean_speed * gamma * density)


def radius_from_equipartition(
    sigma: float, frequency: float, density: float, temperature: float
) -> float:
    """Sphere radius from 4 pi sigma^2 rho R^3 w0^2 = 3 k_B T with w0 = 2 pi f."""
    for name, value in (
        ("sigma", sigma),
        ("frequency", frequency),
        ("density", density),
        ("temperature", temperature),
    ):
        if value <= 0:
            raise DomainError(f"{name} must be strictly positive")
    omega = 2.0 * math.pi * frequency
    cube = 3.0 * CONSTANTS.k_B * temperature / (
        4.0 * math.pi * sigma**2 * density * omega**2
    )
    return cube ** (1.0 / 3.0)


def temperature_uncertainty(t_eff: float, gamma: float, t_mea: float) -> float:
    """One-standard-deviation uncertainty T_eff * sqrt(2 / (gamma t_mea))."""
    for name, value in (("t_eff", t_eff), ("gamma", gamma), ("t_mea", t_mea)):
        if value <= 0:
            raise DomainError(f"{name} must be strictly positive")
    return t_eff * math.sqrt(2.0 / (gamma * t_mea))


def two_sided_quantile(confidence: float) -> float:
    """z such that a Gaussian lies within +/- z sigma with the given probability."""
    return float(norm.ppf(0.5 * (1.0 + confidence)))


def excess_temperature_bound(
    hv: TemperatureEstimate, mv: TemperatureEstimate, confidence: float
) -> tuple[float, float]:
    """Excess temperature and its confidence bound from two estimates.

    Returns (delta_t, sigma_delta_t) with
    sigma_delta_t = max(delta_t, 0) + z(confidence) * sqrt(s_hv^2 + s_mv^2),
    clamping the central value at the physical boundary delta_t >= 0
    (see EXCESS_BOUND_CONVENTION).
    """
    if hv.sigma_1s is None or mv.sigma_1s is None:
        raise ConfigError("both temperature estimates must carry uncertainties")
    if not 0.5 < confidence < 1.0:
        raise DomainError("confidence must lie in (0.5, 1)")
    delta_t = hv.t_eff - mv.t_eff
    z = two_sided_quantile(confidence)
    sigma_delta_t = max(delta_t, 0.0) + z * math.hypot(hv.sigma_1s, mv.sigma_1s)
    return delta_t, sigma_delta_t


def excess_force_psd(delta_t: float, mass: float, gamma: float) -> float:
    """Excess force PSD ``2 gamma m k_B delta_t``; a negative excess is clamped
    to zero with an :class:`ExcessClampWarning` so batch runs never abort."""
    if mass <= 0:
        raise DomainError("mass must be strictly positive")
    if gamma <= 0:
        raise DomainError("gamma must be strictly positive")
    if delta_t < 0:
        warnings.warn(
            f"negative excess temperature {delta_t!r} K clamped to zero budget",
            ExcessClampWarning,
            stacklevel=2,
        )
        return 0.0
    return 2.0 * gamma * mass * CONSTANTS.k_B * delta_t
