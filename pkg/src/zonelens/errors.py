"""Exception types shared across the platform."""


class ZonelensError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(ZonelensError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ConfigError(ZonelensError, ValueError):
    """A configuration value violates an invariant."""


class ScenarioError(ZonelensError, ValueError):
    """A scenario file or waypoint script is malformed."""


class ResourceError(ZonelensError):
    """A requested computation exceeds a configured resource budget."""


class ContractError(ZonelensError, ValueError):
    """Inputs violate an operation's calling contract (shape, window, ...)."""


class NumericalError(ZonelensError):
    """Integration produced a non-finite state; carries the last valid sample."""

    def __init__(self, message, last_sample=None):
        super().__init__(message)
        self.last_sample = last_sample


class DegenerateBeamError(ZonelensError):
    """Beam statistics requested for a bundle with no surviving rays."""


class CalibrationError(ZonelensError):
    """The amplitude stream ended before calibration completed."""
