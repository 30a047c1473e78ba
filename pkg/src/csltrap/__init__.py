"""csltrap: virtual levitated micro-oscillator experiment for CSL bounds.

Simulates the stochastic (thermal / parametric / collapse-noise) dynamics of
a levitated micro-sphere oscillator, runs the noise-thermometry estimation
pipeline on the resulting trajectories, and converts excess-noise budgets
into collapse-rate upper bounds over the (lambda, r_c) plane.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    CslTrapError,
    DomainError,
    ExcessClampWarning,
    FitError,
    NumericError,
    SizeError,
)
from .model import (
    CONSTANTS,
    Environment,
    NoiseConfig,
    OscillatorMode,
    PhysicalConstants,
    SphereParams,
    mean_gas_speed,
    thermal_force_psd,
)
from .csl import (
    CslParams,
    DiffusionConstant,
    ExclusionCurve,
    available_reference_curves,
    collapse_rate_upper_bound,
    csl_force_psd,
    csl_temperature_rise,
    diffusion_constant_numeric,
    diffusion_constant_sphere,
    exclusion_curve,
    load_reference_curve,
    sphere_fourier_intensity,
)
from .dynamics import (
    SimulationConfig,
    Trajectory,
    default_timestep,
    iter_simulate,
    simulate,
    stationary_position_density,
)
from .analysis import (
    DampingEstimate,
    GaussianFit,
    PsdEstimate,
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
    radius_from_damping,
    radius_from_equipartition,
    temperature_uncertainty,
)
from .pipeline import (
    BoundReport,
    ReplayInputs,
    TableReport,
    replay_bound,
    reproduce_benchmark_tables,
    run_virtual_experiment,
)

__all__ = [
    "__version__",
    "CONSTANTS",
    "BoundReport",
    "ConfigError",
    "CslParams",
    "CslTrapError",
    "DampingEstimate",
    "DiffusionConstant",
    "DomainError",
    "Environment",
    "ExcessClampWarning",
    "ExclusionCurve",
    "FitError",
    "GaussianFit",
    "NoiseConfig",
    "NumericError",
    "OscillatorMode",
    "PhysicalConstants",
    "PsdEstimate",
    "ReplayInputs",
    "SampledSeries",
    "SimulationConfig",
    "SizeError",
    "SphereParams",
    "TableReport",
    "TemperatureEstimate",
    "Trajectory",
    "available_reference_curves",
    "collapse_rate_upper_bound",
    "csl_force_psd",
    "csl_temperature_rise",
    "default_timestep",
    "diffusion_constant_numeric",
    "diffusion_constant_sphere",
    "effective_temperature",
    "envelope_squared",
    "exclusion_curve",
    "excess_force_psd",
    "excess_temperature_bound",
    "fit_exponential_decay",
    "fit_gaussian",
    "iter_simulate",
    "load_reference_curve",
    "mean_gas_speed",
    "normalized_energy_autocorrelation",
    "psd_welch",
    "radius_from_damping",
    "radius_from_equipartition",
    "replay_bound",
    "reproduce_benchmark_tables",
    "run_virtual_experiment",
    "simulate",
    "sphere_fourier_intensity",
    "stationary_position_density",
    "temperature_uncertainty",
    "thermal_force_psd",
]
