"""Orchestration of the virtual experiment: medium-vacuum calibration,
high-vacuum measurement, excess-budget statistics, bound inversion, and
one-command reproduction of the bundled benchmark tables.

The excess budget converted into a collapse-rate bound is the confidence
bound sigma_delta_t, not the central delta_t.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .errors import ConfigError
from .model import (
    Environment,
    NoiseConfig,
    OscillatorMode,
    SphereParams,
    thermal_force_psd,
)
from .csl import (
    SMALL_SPHERE_RATIO_THRESHOLD,
    ExclusionCurve,
    collapse_rate_upper_bound,
    exclusion_curve,
)
from .dynamics import (
    BURN_IN_DAMPING_TIMES,
    SimulationConfig,
    default_timestep,
    simulate,
)
from . import analysis
from .analysis import (
    EXCESS_BOUND_CONVENTION,
    TemperatureEstimate,
    effective_temperature,
    envelope_squared,
    excess_force_psd,
    excess_temperature_bound,
    fit_exponential_decay,
    fit_gaussian,
    normalized_energy_autocorrelation,
    temperature_uncertainty,
    two_sided_quantile,
)

# Number of blocks used for the data-driven medium-vacuum uncertainty.
MV_UNCERTAINTY_BLOCKS = 16

# Demodulation bandwidth used when the caller does not specify one.
DEFAULT_BANDWIDTH_FRACTION = 0.1   # of the mode frequency

# --- bundled benchmark inputs ----------------------------------------------

BENCH_SPHERE = SphereParams.from_radius_mass(radius=1.0e-6, mass=4.7e-15,
                                             susceptibility=-9.1e-6)
BENCH_MODE_1 = OscillatorMode(frequency=12.9, duffing_alpha=-6.4, label="axis1")
BENCH_MODE_2 = OscillatorMode(frequency=9.3, duffing_alpha=-2.1, label="axis2")
BENCH_COUPLING_BETA = 6.4
BENCH_GAMMA_HV = 2.0 * math.pi * 34e-6     # s^-1
BENCH_ENVIRONMENT = Environment(temperature=298.0, pressure=1.0e-2)

# Drive level for the nonlinear two-mode benchmark runs. The softening
# quartic makes the potential unbounded along each axis; this temperature
# keeps the mode-1 escape barrier (m w1^2)^2 / (4 |alpha1|) at ~30 k_B T so
# runs stay bounded while the nonlinear broadening still dominates the
# high-vacuum linewidth.
TABLE2_DRIVE_TEMPERATURE = 0.09            # K
TABLE2_GAMMA_MV = 2.0 * math.pi * 0.4
TABLE2_GAMMA_HV_CI = 2.0 * math.pi * 0.04
TABLE2_GAMMA_HV_FULL = 2.0 * math.pi * 4e-4
TABLE2_BANDWIDTH_MV = 2.5                  # Hz
TABLE2_BANDWIDTH_HV = 1.5                  # Hz
# Record lengths in damping times. The CI preset trades quality factor for
# statistics; the full-fidelity replay keeps the published 50-tau record and
# averages the fit over an ensemble of runs instead.
TABLE2_CI_DAMPING_TIMES = {"mv": 8000.0, "hv": 2000.0}
TABLE2_FULL_DAMPING_TIMES = 50.0
TABLE2_FULL_ENSEMBLE = 12

# Initial autocorrelation lags excluded from damping fits, in units of
# 1/bandwidth: the demodulation low-pass decorrelates only beyond this scale.
ACF_MIN_LAG_CYCLES = 0.6

TABLE1_REFERENCE = {
    "delta_t_k": 6.5,
    "sigma_delta_t_k": 40.0,
    "sqrt_excess_psd_n_per_sqrt_hz": 1.3e-20,
    "sqrt_excess_psd_bound_n_per_sqrt_hz": 3.3e-20,
    "log10_lambda_at_rc_1e-07": -6.4,
    "log10_lambda_at_rc_1e-06": -7.4,
}
TABLE2_REFERENCE_FITTED = {
    ("mv", False): 0.38,
    ("mv", True): 0.39,
    ("hv", False): 0.00038,
    ("hv", True): 0.00037,
}
TABLE3_REFERENCE = {
    "t_eff_hv_k": 297.9,
    "sigma_t_eff_hv_k": 16.2,
    "t_eff_mv_k": 291.4,
    "sigma_t_eff_mv_k": 4.1,
    "delta_t_k": 6.5,
    "sigma_delta_t_k": 40.0,
    "t_mea_hv_s": 9.5e5,
    "t_mea_mv_s": 7.5e4,
}
PROJECTION_REFERENCE_LOG10_LAMBDA = -11.9


def design_constants() -> dict:
    """Design-decision constants embedded verbatim in every report."""
    return {
        "psd_convention": "two-sided white: <f(t) f(s)> = S delta(t-s)",
        "excess_bound_convention": EXCESS_BOUND_CONVENTION,
        "z_two_sided_0p95": two_sided_quantile(0.95),
        "burn_in_damping_times": BURN_IN_DAMPING_TIMES,
        "bracket_series_threshold": SMALL_SPHERE_RATIO_THRESHOLD,
        "welch_window": analysis.WELCH_WINDOW,
        "welch_overlap": analysis.WELCH_OVERLAP,
        "welch_correlation_times": analysis.WELCH_CORRELATION_TIMES,
        "mv_uncertainty_blocks": MV_UNCERTAINTY_BLOCKS,
        "envelope_settle_cycles": analysis.ENVELOPE_SETTLE_CYCLES,
    }


@dataclass(frozen=True)
class ReplayInputs:
    """Analysis-only inputs: measured temperatures replayed through the
    excess-budget and bound-inversion chain without any simulation."""

    sphere: SphereParams
    gamma: float
    t_eff_hv: float
    sigma_hv: float
    t_eff_mv: float
    sigma_mv: float
    r_c_grid: tuple[float, ...]
    confidence: float = 0.95

    def digest(self) -> str:
        payload = json.dumps(
            {
                "radius_m": self.sphere.radius,
                "mass_kg": self.sphere.mass,
                "gamma_rad_per_s": self.gamma,
                "t_eff_hv_k": self.t_eff_hv,
                "sigma_hv_k": self.sigma_hv,
                "t_eff_mv_k": self.t_eff_mv,
                "sigma_mv_k": self.sigma_mv,
                "r_c_grid_m": list(self.r_c_grid),
                "confidence": self.confidence,
            },
            sort_keys=True,
        ).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()


TABLE1_REPLAY = ReplayInputs(
    sphere=BENCH_SPHERE,
    gamma=BENCH_GAMMA_HV,
    t_eff_hv=297.9,
    sigma_hv=16.2,
    t_eff_mv=291.4,
    sigma_mv=4.1,
    r_c_grid=(1.0e-7, 1.0e-6),
)


@dataclass(frozen=True)
class BoundReport:
    """Excess-noise budget and the resulting collapse-rate exclusion curve."""

    delta_t: float
    sigma_delta_t: float
    excess_psd: float
    excess_psd_bound: float
    curve: ExclusionCurve | None
    confidence: float
    convention: str
    inputs_digest: str
    flags: tuple[str, ...] = ()
    details: dict = field(default_factory=dict)
    constants: dict = field(default_factory=design_constants)

    def __post_init__(self) -> None:
        if self.delta_t >= 0 and self.excess_psd_bound < self.excess_psd:
            raise ConfigError("excess_psd_bound must be >= excess_psd for delta_t >= 0")
        if self.excess_psd_bound > 0 and self.curve is None:
            raise ConfigError("curve required whenever excess_psd_bound > 0")

    def to_dict(self) -> dict:
        return {
            "tool": "csltrap",
            "version": __version__,
            "convention": self.convention,
            "confidence": self.confidence,
            "delta_t_k": self.delta_t,
            "sigma_delta_t_k": self.sigma_delta_t,
            "excess_psd_n2_per_hz": self.excess_psd,
            "excess_psd_bound_n2_per_hz": self.excess_psd_bound,
            "sqrt_excess_psd_n_per_sqrt_hz": math.sqrt(self.excess_psd),
            "sqrt_excess_psd_bound_n_per_sqrt_hz": math.sqrt(self.excess_psd_bound),
            "curve": None
            if self.curve is None
            else {
                "confidence_level": self.curve.confidence_level,
                "source": self.curve.source,
                "points": [
                    {"r_c_m": r, "lambda_upper_per_s": lam}
                    for r, lam in self.curve.points
                ],
            },
            "flags": list(self.flags),
            "inputs_digest": self.inputs_digest,
            "details": self.details,
            "constants": self.constants,
        }


def replay_bound(inputs: ReplayInputs) -> BoundReport:
    """Run the excess-budget statistics and bound inversion on fixed inputs."""
    hv = TemperatureEstimate(inputs.t_eff_hv, inputs.sigma_hv, mode_label="hv")
    mv = TemperatureEstimate(inputs.t_eff_mv, inputs.sigma_mv, mode_label="mv")
    return _bound_from_estimates(
        hv=hv,
        mv=mv,
        gamma=inputs.gamma,
        sphere=inputs.sphere,
        r_c_grid=inputs.r_c_grid,
        confidence=inputs.confidence,
        inputs_digest=inputs.digest(),
        details={
            "mode": "replay",
            "t_eff_hv_k": inputs.t_eff_hv,
            "sigma_hv_k": inputs.sigma_hv,
            "t_eff_mv_k": inputs.t_eff_mv,
            "sigma_mv_k": inputs.sigma_mv,
            "gamma_rad_per_s": inputs.gamma,
            "pressure_note": "pressures quoted in Pa; divide by 100 for mbar",
        },
    )


def _bound_from_estimates(
    hv: TemperatureEstimate,
    mv: TemperatureEstimate,
    gamma: float,
    sphere: SphereParams,
    r_c_grid: tuple[float, ...],
    confidence: float,
    inputs_digest: str,
    details: dict,
) -> BoundReport:
    flags: list[str] = []
    delta_t, sigma_delta_t = excess_temperature_bound(hv, mv, confidence)
    if delta_t < 0:
        flags.append("negative-delta-t-clamped")
        excess = 0.0
    else:
        excess = excess_force_psd(delta_t, sphere.mass, gamma)
    excess_bound = excess_force_psd(sigma_delta_t, sphere.mass, gamma)
    if delta_t > sigma_delta_t - max(delta_t, 0.0):
        # central value alone exceeds the statistical band
        flags.append("excess-detected-at-confidence")
    curve = (
        exclusion_curve(excess_bound, sphere, r_c_grid, confidence, source="this-work")
        if excess_bound > 0
        else None
    )
    if curve is None:
        flags.append("zero-excess-budget")
    return BoundReport(
        delta_t=delta_t,
        sigma_delta_t=sigma_delta_t,
        excess_psd=excess,
        excess_psd_bound=excess_bound,
        curve=curve,
        confidence=confidence,
        convention=EXCESS_BOUND_CONVENTION,
        inputs_digest=inputs_digest,
        flags=tuple(flags),
        details=details,
    )


def fit_damping_from_envelope(env, bandwidth: float):
    """Damping estimate from a squared-envelope record, two-pass.

    A first fit over the longest permitted lag range locates the decay time;
    the autocorrelation is then recomputed over ~20 fitted decay times, so
    the fitted window and the floor region sit at well-resolved lags, and
    refit. Initial lags within ACF_MIN_LAG_CYCLES / bandwidth are excluded
    as filter-distorted.
    """
    min_lag = ACF_MIN_LAG_CYCLES / bandwidth
    coarse = normalized_energy_autocorrelation(env, (env.values.size // 10) * env.dt)
    first = fit_exponential_decay(coarse, min_lag=min_lag)
    estimate = first
    for _ in range(2):
        lags = min(env.values.size // 10, max(int(round(20.0 * estimate.tau / env.dt)), 10))
        refined = fit_exponential_decay(
            normalized_energy_autocorrelation(env, lags * env.dt), min_lag=min_lag
        )
        converged = 0.5 < refined.tau / estimate.tau < 2.0
        estimate = refined
        if converged:
            break
    return estimate


def run_virtual_experiment(
    mv_config: SimulationConfig,
    hv_config: SimulationConfig,
    r_c_grid: tuple[float, ...] | list[float],
    confidence: float = 0.95,
    envelope_bandwidth: float | None = None,
    mode: int = 0,
) -> BoundReport:
    """Simulate both vacuum regimes and run the full estimation chain.

    The medium-vacuum run calibrates the environment temperature (its
    uncertainty comes from the spread of block estimates); the high-vacuum
    run provides the effective temperature, the fitted damping rate, and the
    excess budget. Fully deterministic given the two config seeds.
    """
    if mv_config.sphere != hv_config.sphere:
        raise ConfigError("medium- and high-vacuum configs must share the sphere")
    if mv_config.modes != hv_config.modes:
        raise ConfigError("medium- and high-vacuum configs must share the modes")
    if mv_config.gamma < 100.0 * hv_config.gamma * (1.0 - 1e-9):
        raise ConfigError(
            "medium-vacuum damping must be gas dominated: gamma_MV >= 100 gamma_HV"
        )
    sphere = hv_config.sphere
    mode_obj = hv_config.modes[mode]

    mv_traj = simulate(mv_config)
    hv_traj = simulate(hv_config)

    # medium vacuum: calibrate T_env; uncertainty from block spread
    mv_samples = mv_traj.steady(mode)
    mv_fit = fit_gaussian(mv_samples)
    mv_est = effective_temperature(mv_fit.sigma, mode_obj, sphere.mass)
    blocks = np.array_split(mv_samples, MV_UNCERTAINTY_BLOCKS)
    block_t = [
        effective_temperature(float(b.std(ddof=0)), mode_obj, sphere.mass).t_eff
        for b in blocks
    ]
    sigma_mv = float(np.std(block_t, ddof=1) / math.sqrt(len(block_t)))
    t_mea_mv = mv_samples.size * mv_traj.dt
    mv_est = mv_est.with_uncertainty(sigma_mv, t_mea_mv)

    # high vacuum: effective temperature, fitted damping, E1 uncertainty
    hv_fit = fit_gaussian(hv_traj.steady(mode))
    hv_est = effective_temperature(hv_fit.sigma, mode_obj, sphere.mass)
    bandwidth = envelope_bandwidth or DEFAULT_BANDWIDTH_FRACTION * mode_obj.frequency
    env = envelope_squared(
        hv_traj, mode_obj.frequency, bandwidth, mode=mode, gamma=hv_config.gamma
    )
    damping = fit_damping_from_envelope(env, bandwidth)
    t_mea_hv = hv_traj.steady(mode).size * hv_traj.dt
    sigma_hv = temperature_uncertainty(hv_est.t_eff, damping.gamma, t_mea_hv)
    hv_est = hv_est.with_uncertainty(sigma_hv, t_mea_hv)

    digest_payload = json.dumps(
        {
            "mv": mv_config.digest(),
            "hv": hv_config.digest(),
            "r_c_grid": [float(r) for r in r_c_grid],
            "confidence": confidence,
        },
        sort_keys=True,
    ).encode("utf-8")

    return _bound_from_estimates(
        hv=hv_est,
        mv=mv_est,
        gamma=damping.gamma,
        sphere=sphere,
        r_c_grid=tuple(float(r) for r in r_c_grid),
        confidence=confidence,
        inputs_digest=hashlib.sha256(digest_payload).hexdigest(),
        details={
            "mode": "virtual-experiment",
            "t_eff_hv_k": hv_est.t_eff,
            "sigma_hv_k": sigma_hv,
            "t_mea_hv_s": t_mea_hv,
            "t_eff_mv_k": mv_est.t_eff,
            "sigma_mv_k": sigma_mv,
            "t_mea_mv_s": t_mea_mv,
            "gamma_fit_rad_per_s": damping.gamma,
            "gamma_fit_over_2pi_hz": damping.gamma / (2.0 * math.pi),
            "gamma_fit_residual": damping.fit_residual,
            "envelope_bandwidth_hz": bandwidth,
            "mv_sigma_method": "block-spread",
            "hv_sigma_method": "sqrt(2/(gamma t)) with fitted gamma",
        },
    )


# --- benchmark presets ------------------------------------------------------


def thermal_noise_for(gamma: float, temperature: float, n_modes: int = 2,
                      csl_psd: float = 0.0, parametric: float = 0.0) -> tuple[NoiseConfig, ...]:
    """Per-mode noise with the thermal PSD implied by gamma and temperature."""
    s_th = thermal_force_psd(gamma, BENCH_SPHERE.mass, temperature)
    return tuple(
        NoiseConfig(thermal_psd=s_th, csl_psd=csl_psd, parametric_strength=parametric)
        for _ in range(n_modes)
    )


def table2_config(vacuum: str, nonlinear: bool, full: bool = False,
                  seed: int = 20260810) -> SimulationConfig:
    """Two-mode benchmark run for the damping-recovery comparison."""
    if vacuum == "mv":
        gamma = TABLE2_GAMMA_MV
    elif vacuum == "hv":
        gamma = TABLE2_GAMMA_HV_FULL if full else TABLE2_GAMMA_HV_CI
    else:
        raise ConfigError("vacuum must be 'mv' or 'hv'")
    modes = (
        BENCH_MODE_1 if nonlinear else replace(BENCH_MODE_1, duffing_alpha=0.0),
        BENCH_MODE_2 if nonlinear else replace(BENCH_MODE_2, duffing_alpha=0.0),
    )
    if full and vacuum == "hv":
        record = TABLE2_FULL_DAMPING_TIMES
    else:
        record = TABLE2_CI_DAMPING_TIMES[vacuum]
    duration = (BURN_IN_DAMPING_TIMES + record) / gamma
    if vacuum == "hv":
        dt = 1.0 / (100.0 * modes[0].frequency)
    else:
        dt = default_timestep(modes)
    return SimulationConfig(
        sphere=BENCH_SPHERE,
        modes=modes,
        gamma=gamma,
        noise=thermal_noise_for(gamma, TABLE2_DRIVE_TEMPERATURE),
        duration=duration,
        dt=dt,
        seed=seed,
        coupling_beta=BENCH_COUPLING_BETA if nonlinear else 0.0,
    )


def table2_fit(config: SimulationConfig, vacuum: str) -> float:
    """Fitted gamma/2pi (Hz) from a benchmark run via the energy method."""
    traj = simulate(config)
    bandwidth = TABLE2_BANDWIDTH_MV if vacuum == "mv" else TABLE2_BANDWIDTH_HV
    env = envelope_squared(
        traj, config.modes[0].frequency, bandwidth, mode=0, gamma=config.gamma
    )
    return fit_damping_from_envelope(env, bandwidth).gamma / (2.0 * math.pi)


@dataclass(frozen=True)
class TableRow:
    label: str
    reference: float | None
    computed: float | None
    note: str = ""

    @property
    def rel_dev(self) -> float | None:
        if self.reference in (None, 0.0) or self.computed is None:
            return None
        return (self.computed - self.reference) / abs(self.reference)


@dataclass(frozen=True)
class TableReport:
    title: str
    rows: tuple[TableRow, ...]
    meta: dict = field(default_factory=dict)

    def render(self) -> str:
        width = max(len(r.label) for r in self.rows)
        lines = [self.title, "-" * len(self.title)]
        header = f"{'cell':<{width}}  {'reference':>12}  {'computed':>12}  {'rel dev':>9}"
        lines.append(header)
        for row in self.rows:
            ref = "-" if row.reference is None else f"{row.reference:.4g}"
            com = "-" if row.computed is None else f"{row.computed:.4g}"
            dev = "-" if row.rel_dev is None else f"{row.rel_dev:+.2%}"
            line = f"{row.label:<{width}}  {ref:>12}  {com:>12}  {dev:>9}"
            if row.note:
                line += f"  ({row.note})"
            lines.append(line)
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "tool": "csltrap",
            "version": __version__,
            "title": self.title,
            "rows": [
                {
                    "label": r.label,
                    "reference": r.reference,
                    "computed": r.computed,
                    "rel_dev": r.rel_dev,
                    "note": r.note,
                }
                for r in self.rows
            ],
            "meta": self.meta,
        }


def _table1_report() -> TableReport:
    report = replay_bound(TABLE1_REPLAY)
    ref = TABLE1_REFERENCE
    rows = [
        TableRow("delta_t_k", ref["delta_t_k"], report.delta_t),
        TableRow("sigma_delta_t_k", ref["sigma_delta_t_k"], report.sigma_delta_t),
        TableRow(
            "sqrt_excess_psd_n_per_sqrt_hz",
            ref["sqrt_excess_psd_n_per_sqrt_hz"],
            math.sqrt(report.excess_psd),
        ),
        TableRow(
            "sqrt_excess_psd_bound_n_per_sqrt_hz",
            ref["sqrt_excess_psd_bound_n_per_sqrt_hz"],
            math.sqrt(report.excess_psd_bound),
        ),
    ]
    assert report.curve is not None
    for (r_c, lam) in report.curve.points:
        label = f"log10_lambda_at_rc_{r_c:.0e}"
        rows.append(TableRow(label, ref.get(label), math.log10(lam)))
    return TableReport(
        title="Upper-bound replay (benchmark table 1)",
        rows=tuple(rows),
        meta={"inputs_digest": report.inputs_digest, "constants": report.constants},
    )


def _table2_report(full: bool, seed: int) -> TableReport:
    rows = []
    for i, vacuum in enumerate(("mv", "hv")):
        for j, nonlinear in enumerate((False, True)):
            cell_seed = seed + 7 * i + j
            if full and vacuum == "hv":
                # published-record-length runs are fit-noise limited: pool an
                # ensemble of independent realisations via the median (the
                # mean of 1/tau estimates is biased upward by fit scatter)
                fits = [
                    table2_fit(
                        table2_config(vacuum, nonlinear, full=True,
                                      seed=cell_seed + 1000 * k),
                        vacuum,
                    )
                    for k in range(TABLE2_FULL_ENSEMBLE)
                ]
                fitted = float(np.median(fits))
                spread = float(np.std(fits, ddof=1) / math.sqrt(len(fits)))
                extra = f"; ensemble of {len(fits)}, sem {spread:.2g} Hz"
            else:
                config = table2_config(vacuum, nonlinear, full=full, seed=cell_seed)
                fitted = table2_fit(config, vacuum)
                extra = ""
            input_hz = (
                TABLE2_GAMMA_MV if vacuum == "mv"
                else (TABLE2_GAMMA_HV_FULL if full else TABLE2_GAMMA_HV_CI)
            ) / (2.0 * math.pi)
            kind = "nonlinear" if nonlinear else "linear"
            published_fit = TABLE2_REFERENCE_FITTED[(vacuum, nonlinear)]
            note = f"input {input_hz:g} Hz"
            if vacuum == "mv" or full:
                note += f"; published fit {published_fit:g} Hz"
            rows.append(
                TableRow(f"{vacuum}-{kind}-gamma_over_2pi_hz", input_hz, fitted, note + extra)
            )
    return TableReport(
        title="Damping-rate recovery (benchmark table 2"
        + (", full fidelity)" if full else ", CI preset)"),
        rows=tuple(rows),
        meta={"full": full, "seed": seed,
              "drive_temperature_k": TABLE2_DRIVE_TEMPERATURE},
    )


def _table3_report() -> TableReport:
    ref = TABLE3_REFERENCE
    gamma_hv = BENCH_GAMMA_HV
    # gas-kinetic damping at the medium-vacuum pressure
    from .model import mean_gas_speed

    nu = mean_gas_speed(BENCH_ENVIRONMENT.temperature, BENCH_ENVIRONMENT.gas_molar_mass)
    gamma_mv = (16.0 / math.pi) * BENCH_ENVIRONMENT.pressure / (
        nu * BENCH_SPHERE.radius * BENCH_SPHERE.density
    )
    sigma_hv_e1 = temperature_uncertainty(ref["t_eff_hv_k"], gamma_hv, ref["t_mea_hv_s"])
    sigma_mv_e1 = temperature_uncertainty(ref["t_eff_mv_k"], gamma_mv, ref["t_mea_mv_s"])
    hv = TemperatureEstimate(ref["t_eff_hv_k"], ref["sigma_t_eff_hv_k"])
    mv = TemperatureEstimate(ref["t_eff_mv_k"], ref["sigma_t_eff_mv_k"])
    delta_t, sigma_delta_t = excess_temperature_bound(hv, mv, 0.95)
    rows = (
        TableRow("t_eff_hv_k", ref["t_eff_hv_k"], None, "fixed measured input"),
        TableRow(
            "sigma_t_eff_hv_k", ref["sigma_t_eff_hv_k"], sigma_hv_e1,
            "1-sigma from sqrt(2/(gamma t)); quoted value labelled 95%",
        ),
        TableRow("t_eff_mv_k", ref["t_eff_mv_k"], None, "fixed measured input"),
        TableRow(
            "sigma_t_eff_mv_k", ref["sigma_t_eff_mv_k"], sigma_mv_e1,
            f"1-sigma with gas-kinetic gamma/2pi = {gamma_mv / (2 * math.pi):.3g} Hz",
        ),
        TableRow("delta_t_k", ref["delta_t_k"], delta_t),
        TableRow("sigma_delta_t_k", ref["sigma_delta_t_k"], sigma_delta_t),
    )
    return TableReport(
        title="Effective-temperature replay (benchmark table 3)",
        rows=rows,
        meta={"gamma_mv_rad_per_s": gamma_mv},
    )


def _projection_report() -> TableReport:
    sphere = SphereParams.from_radius_density(0.3e-6, 1100.0)
    gamma = 2.0 * math.pi * 1e-6
    delta_t = 0.01
    excess = excess_force_psd(delta_t, sphere.mass, gamma)
    lam = collapse_rate_upper_bound(excess, 1.0e-7, sphere)
    rows = (
        TableRow(
            "log10_lambda_at_rc_1e-07",
            PROJECTION_REFERENCE_LOG10_LAMBDA,
            math.log10(lam),
            "R=0.3 um, gamma/2pi=1e-6 Hz, delta_t=10 mK",
        ),
    )
    return TableReport(title="Cryogenic projection", rows=rows)


def reproduce_benchmark_tables(which: str, full: bool = False, seed: int = 20260810) -> TableReport:
    """Recompute one of the bundled benchmark tables.

    ``which`` is one of ``table1``, ``table2``, ``table3-replay``,
    ``projection``. Every row carries the published reference number, the
    computed number, and the relative deviation where both exist.
    """
    if which == "table1":
        return _table1_report()
    if which == "table2":
        return _table2_report(full=full, seed=seed)
    if which == "table3-replay":
        return _table3_report()
    if which == "projection":
        return _projection_report()
    raise ConfigError(
        f"unknown table {which!r}; expected table1, table2, table3-replay or projection"
    )
