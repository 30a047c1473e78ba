"""Physical constants, experiment configuration types, and closed-form relations.

All quantities are SI. Force noise uses the two-sided white convention
``<f(t) f(s)> = S * delta(t - s)``; one-sided displays multiply by 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA constants. A single module-level instance is used everywhere;
    the values are not user-configurable."""

    hbar: float = 1.054571817e-34       # reduced Planck constant, J s
    k_B: float = 1.380649e-23           # Boltzmann constant, J/K
    m0: float = 1.66053906660e-27       # atomic mass unit, kg
    gas_constant: float = 8.314462618   # molar gas constant, J/(mol K)

    def __post_init__(self) -> None:
        for name in ("hbar", "k_B", "m0", "gas_constant"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be strictly positive")


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class SphereParams:
    """Geometry and material of the levitated sphere.

    ``mass`` is always derived from radius and density; the constructor
    enforces consistency to 1e-12 relative. ``susceptibility`` is carried
    as metadata only and never used in any computation.
    """

    radius: float                        # m
    density: float                       # kg/m^3
    mass: float                          # kg
    susceptibility: float | None = None  # dimensionless, metadata

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise DomainError("radius must be strictly positive")
        if self.density <= 0:
            raise DomainError("density must be strictly positive")
        expected = (4.0 / 3.0) * math.pi * self.density * self.radius**3
        if not math.isclose(self.mass, expected, rel_tol=1e-12):
            raise DomainError(
                f"mass {self.mass!r} inconsistent with (4/3)*pi*density*radius^3 "
                f"= {expected!r}; construct via from_radius_density or from_radius_mass"
            )

    @classmethod
    def from_radius_density(
        cls, radius: float, density: float, susceptibility: float | None = None
    ) -> "SphereParams":
        if radius <= 0:
            raise DomainError("radius must be strictly positive")
        if density <= 0:
            raise DomainError("density must be strictly positive")
        mass = (4.0 / 3.0) * math.pi * density * radius**3
        return cls(radius=radius, density=density, mass=mass, susceptibility=susceptibility)

    @classmethod
    def from_radius_mass(
        cls, radius: float, mass: float, susceptibility: float | None = None
    ) -> "SphereParams":
        """Build from radius and total mass, deriving the density."""
        if radius <= 0:
            raise DomainError("radius must be strictly positive")
        if mass <= 0:
            raise DomainError("mass must be strictly positive")
        density = mass / ((4.0 / 3.0) * math.pi * radius**3)
        return cls(radius=radius, density=density, mass=mass, susceptibility=susceptibility)

    @property
    def volume(self) -> float:
        return (4.0 / 3.0) * math.pi * self.radius**3


@dataclass(frozen=True)
class OscillatorMode:
    """One trap mode: resonance frequency (Hz, i.e. omega/2pi) and cubic stiffness."""

    frequency: float           # Hz
    duffing_alpha: float = 0.0  # cubic stiffness, kg m^-2 s^-2 (N/m^3)
    label: str = ""

    def __post_init__(self) -> None:
        if self.frequency <= 0:
            raise DomainError("frequency must be strictly positive")

    @property
    def omega(self) -> float:
        """Angular resonance frequency, rad/s."""
        return 2.0 * math.pi * self.frequency

    def spring_constant(self, mass: float) -> float:
        """k = m * (2 pi f)^2 for the given oscillator mass."""
        if mass <= 0:
            raise DomainError("mass must be strictly positive")
        return mass * self.omega**2


@dataclass(frozen=True)
class Environment:
    """Gas environment of the trap."""

    temperature: float                 # K
    pressure: float                    # Pa
    gas_molar_mass: float = 0.02897    # kg/mol, air by default

    def __post_init__(self) -> None:
        if self.temperature <= 0:
            raise DomainError("temperature must be strictly positive")
        if self.pressure < 0:
            raise DomainError("pressure must be non-negative")
        if self.gas_molar_mass <= 0:
            raise DomainError("gas_molar_mass must be strictly positive")

    @property
    def pressure_mbar(self) -> float:
        return self.pressure / 100.0


@dataclass(frozen=True)
class NoiseConfig:
    """Per-mode noise levels: additive force PSDs (two-sided, N^2/Hz) and the
    white parametric spring-constant fluctuation intensity (s^1/2)."""

    thermal_psd: float = 0.0
    csl_psd: float = 0.0
    extra_additive_psd: float = 0.0
    parametric_strength: float = 0.0

    def __post_init__(self) -> None:
        for name in ("thermal_psd", "csl_psd", "extra_additive_psd", "parametric_strength"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be non-negative")

    @property
    def total_additive_psd(self) -> float:
        return self.thermal_psd + self.csl_psd + self.extra_additive_psd

    @property
    def is_active(self) -> bool:
        return self.total_additive_psd > 0.0 or self.parametric_strength > 0.0


def thermal_force_psd(gamma: float, mass: float, temperature: float) -> float:
    """Thermal Brownian force PSD ``S_th = 2 gamma m k_B T`` (two-sided, N^2/Hz).

    ``gamma`` is the angular damping rate in s^-1. ``temperature = 0`` is
    allowed and returns 0.
    """
    if gamma <= 0:
        raise DomainError("gamma must be strictly positive")
    if mass <= 0:
        raise DomainError("mass must be strictly positive")
    if temperature < 0:
        raise DomainError("temperature must be non-negative")
    return 2.0 * gamma * mass * CONSTANTS.k_B * temperature


def mean_gas_speed(temperature: float, gas_molar_mass: float) -> float:
    """Maxwell-Boltzmann mean speed ``sqrt(8 R T / (pi M))`` of the background gas, m/s."""
    if temperature <= 0:
        raise DomainError("temperature must be strictly positive")
    if gas_molar_mass <= 0:
        raise DomainError("gas_molar_mass must be strictly positive")
    return math.sqrt(8.0 * CONSTANTS.gas_constant * temperature / (math.pi * gas_molar_mass))
