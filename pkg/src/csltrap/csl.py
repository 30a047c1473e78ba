"""Collapse-noise physics: diffusion constants, force PSD, temperature rise,
and collapse-rate upper bounds over the (lambda, r_c) plane.

The closed-form diffusion constant for a homogeneous sphere of radius R and
mass m is

    eta = (6 r_c^4 lambda m^2 / (m0^2 R^6)) * B(x),
    B(x) = exp(-x) - 1 + (x/2) * (exp(-x) + 1),    x = R^2 / r_c^2,

and the general form for an arbitrary spherically symmetric mass
distribution reduces, with k_i^2 -> k^2/3, to a single radial quadrature

    eta = (4 lambda / (3 sqrt(pi) m0^2 r_c^2)) * Int_0^K u^4 |mu(u/r_c)|^2 exp(-u^2) du.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Iterable, Sequence

from scipy.integrate import quad

from .errors import DomainError, NumericError
from .model import CONSTANTS, SphereParams

# Below this value of x = (R/r_c)^2 the bracket B(x) is evaluated by its
# Taylor series: the closed form loses ~12*eps/x^2 relative accuracy to
# cancellation, which at 1e-2 is ~3e-12 for both branches.
SMALL_SPHERE_RATIO_THRESHOLD = 1e-2

# Dimensionless radial cutoff for the quadrature; exp(-K^2) ~ 1e-174 makes
# the truncated tail irrelevant (validated by doubling-cutoff tests).
RADIAL_CUTOFF = 20.0

_QUAD_RELATIVE_TOLERANCE = 1e-8


@dataclass(frozen=True)
class CslParams:
    """The two phenomenological collapse parameters."""

    lam: float   # collapse rate, s^-1
    r_c: float   # correlation length, m

    def __post_init__(self) -> None:
        if self.lam < 0:
            raise DomainError("lam must be non-negative")
        if self.r_c <= 0:
            raise DomainError("r_c must be strictly positive")


@dataclass(frozen=True)
class DiffusionConstant:
    """Momentum-diffusion strength induced on a mass distribution, m^-2 s^-1."""

    eta: float
    provenance: str = "closed-form"    # "closed-form" | "numeric-integral"

    def __post_init__(self) -> None:
        if self.eta < 0:
            raise DomainError("eta must be non-negative")
        if self.provenance not in ("closed-form", "numeric-integral"):
            raise DomainError(f"unknown provenance {self.provenance!r}")


@dataclass(frozen=True)
class ExclusionCurve:
    """Collapse-rate upper bounds versus correlation length at fixed confidence."""

    points: tuple[tuple[float, float], ...]   # (r_c in m, lambda upper bound in s^-1)
    confidence_level: float
    source: str

    def __post_init__(self) -> None:
        r_last = 0.0
        for r_c, lam in self.points:
            if r_c <= r_last:
                raise DomainError("r_c grid must be strictly increasing and positive")
            if lam <= 0:
                raise DomainError("lambda_upper must be strictly positive at every point")
            r_last = r_c

    @property
    def r_c_values(self) -> tuple[float, ...]:
        return tuple(p[0] for p in self.points)

    @property
    def lambda_values(self) -> tuple[float, ...]:
        return tuple(p[1] for p in self.points)


def _bracket(x: float) -> float:
    """B(x) = exp(-x) - 1 + (x/2)(exp(-x) + 1), series-stabilised for small x."""
    if x < 0:
        raise DomainError("x must be non-negative")
    if x < SMALL_SPHERE_RATIO_THRESHOLD:
        # B(x) = x^3/12 - x^4/24 + x^5/80 - x^6/360 + x^7/2016 - ...
        return x**3 * (
            1.0 / 12.0
            + x * (-1.0 / 24.0 + x * (1.0 / 80.0 + x * (-1.0 / 360.0 + x / 2016.0)))
        )
    em = math.expm1(-x)    # exp(-x) - 1
    return em + 0.5 * x * (em + 2.0)


def diffusion_constant_sphere(csl: CslParams, sphere: SphereParams) -> DiffusionConstant:
    """Closed-form diffusion constant for a homogeneous sphere."""
    x = (sphere.radius / csl.r_c) ** 2
    prefactor = (
        6.0 * csl.r_c**4 * csl.lam * sphere.mass**2
        / (CONSTANTS.m0**2 * sphere.radius**6)
    )
    return DiffusionConstant(eta=prefactor * _bracket(x), provenance="closed-form")


def sphere_fourier_intensity(sphere: SphereParams) -> Callable[[float], float]:
    """Return k -> |mu(k)|^2 for a homogeneous sphere.

    mu(k) = 3 m [sin(kR) - kR cos(kR)] / (kR)^3, finite (= m) at k = 0.
    """

    radius = sphere.radius
    mass = sphere.mass

    def intensity(k: float) -> float:
        u = k * radius
        if u < 1e-4:
            # 3(sin u - u cos u)/u^3 = 1 - u^2/10 + u^4/280 - ...
            form = 1.0 - u * u / 10.0 + u**4 / 280.0
        else:
            form = 3.0 * (math.sin(u) - u * math.cos(u)) / u**3
        return (mass * form) ** 2

    return intensity


def diffusion_constant_numeric(
    mass_density_fourier: Callable[[float], float], csl: CslParams
) -> DiffusionConstant:
    """Diffusion constant from a radial |mu(k)|^2 profile by adaptive quadrature.

    The profile must be spherically symmetric, non-negative and finite at
    k = 0. Raises :class:`NumericError` if the quadrature cannot reach
    1e-8 relative accuracy.
    """
    if csl.lam == 0.0:
        return DiffusionConstant(eta=0.0, provenance="numeric-integral")

    r_c = csl.r_c

    def integrand(u: float) -> float:
        return u**4 * mass_density_fourier(u / r_c) * math.exp(-u * u)

    value, abserr = quad(
        integrand, 0.0, RADIAL_CUTOFF, epsabs=0.0, epsrel=1e-10, limit=2000
    )
    if value < 0:
        raise NumericError(f"radial quadrature returned a negative value {value!r}")
    if value > 0 and abserr / value > _QUAD_RELATIVE_TOLERANCE:
        raise NumericError(
            f"radial quadrature did not converge: achieved relative residual "
            f"{abserr / value:.3e} > {_QUAD_RELATIVE_TOLERANCE:.1e}"
        )
    eta = 4.0 * csl.lam * value / (3.0 * math.sqrt(math.pi) * CONSTANTS.m0**2 * r_c**2)
    return DiffusionConstant(eta=eta, provenance="numeric-integral")


def csl_force_psd(eta: DiffusionConstant | float) -> float:
    """Collapse force PSD ``hbar^2 * eta`` (two-sided, N^2/Hz)."""
    value = eta.eta if isinstance(eta, DiffusionConstant) else float(eta)
    if value < 0:
        raise DomainError("eta must be non-negative")
    return CONSTANTS.hbar**2 * value


def csl_temperature_rise(
    eta: DiffusionConstant | float, mass: float, gamma: float
) -> float:
    """Steady-state temperature rise ``hbar^2 eta / (2 gamma m k_B)`` in K."""
    value = eta.eta if isinstance(eta, DiffusionConstant) else float(eta)
    if value < 0:
        raise DomainError("eta must be non-negative")
    if mass <= 0:
        raise DomainError("mass must be strictly positive")
    if gamma <= 0:
        raise DomainError("gamma must be strictly positive")
    return CONSTANTS.hbar**2 * value / (2.0 * gamma * mass * CONSTANTS.k_B)


def collapse_rate_upper_bound(
    excess_force_psd: float, r_c: float, sphere: SphereParams
) -> float:
    """Largest collapse rate compatible with the excess force-noise budget.

    Uses the linearity of the diffusion constant in the collapse rate:
    lambda = (delta_S / hbar^2) / eta(lambda = 1).
    """
    if excess_force_psd <= 0:
        raise DomainError("no positive excess budget; bound undefined")
    eta_unit = diffusion_constant_sphere(CslParams(lam=1.0, r_c=r_c), sphere).eta
    return (excess_force_psd / CONSTANTS.hbar**2) / eta_unit


def exclusion_curve(
    excess_force_psd: float,
    sphere: SphereParams,
    r_c_grid: Sequence[float] | Iterable[float],
    confidence: float,
    source: str = "computed",
) -> ExclusionCurve:
    """Apply :func:`collapse_rate_upper_bound` over an increasing r_c grid."""
    grid = tuple(float(r) for r in r_c_grid)
    if not grid:
        raise DomainError("r_c grid must not be empty")
    if any(r <= 0 for r in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise DomainError("r_c grid must be strictly increasing and positive")
    points = tuple(
        (r_c, collapse_rate_upper_bound(excess_force_psd, r_c, sphere)) for r_c in grid
    )
    return ExclusionCurve(points=points, confidence_level=confidence, source=source)


# ---------------------------------------------------------------------------
# Bundled third-party reference curves (digitized, for overlay output only)

_REFERENCE_PACKAGE = "csltrap.data.reference_curves"


def available_reference_curves() -> list[str]:
    """Names of the bundled digitized reference curves."""
    root = resources.files("csltrap").joinpath("data/reference_curves")
    return sorted(
        p.name[: -len(".csv")] for p in root.iterdir() if p.name.endswith(".csv")
    )


def load_reference_curve(name: str) -> ExclusionCurve:
    """Load a bundled reference curve by name (see :func:`available_reference_curves`).

    These are approximate digitizations of third-party published bounds,
    shipped only so exclusion plots can be overlaid; they are not computed
    by this package.
    """
    path = resources.files("csltrap").joinpath(f"data/reference_curves/{name}.csv")
    if not path.is_file():
        raise DomainError(f"unknown reference curve {name!r}")
    points: list[tuple[float, float]] = []
    source = name
    with path.open("r", encoding="utf-8") as handle:
        rows = csv.reader(line for line in handle if not line.startswith("#"))
        header = next(rows)
        if header != ["r_c_m", "lambda_upper_per_s", "source"]:
            raise DomainError(f"malformed reference curve file {name!r}")
        for row in rows:
            points.append((float(row[0]), float(row[1])))
            source = row[2]
    return ExclusionCurve(points=tuple(points), confidence_level=0.95, source=source)
