"""Exception hierarchy shared across the package."""


class CslTrapError(Exception):
    """Base class for every error raised by this package."""


class DomainError(CslTrapError, ValueError):
    """An input value lies outside the physical domain of an operation."""


class ConfigError(CslTrapError, ValueError):
    """A configuration object or file is malformed or internally inconsistent."""


class SizeError(CslTrapError, ValueError):
    """An input series is too short for the requested operation."""


class NumericError(CslTrapError, ArithmeticError):
    """A numerical procedure did not converge or produced non-finite values."""


class FitError(CslTrapError, RuntimeError):
    """A model fit failed or returned an unphysical parameter."""


class ExcessClampWarning(UserWarning):
    """A negative excess-temperature budget was clamped to zero."""
