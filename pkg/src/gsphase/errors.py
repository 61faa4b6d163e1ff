"""Exception types raised by the simulation engine."""

from __future__ import annotations


class GsphaseError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(GsphaseError, ValueError):
    """A physical or numerical parameter is outside its allowed domain."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ConfigError(GsphaseError):
    """A configuration file is missing, malformed or inconsistent."""


class NumericalError(GsphaseError):
    """Base class for failures of the numerical pipeline."""


class ConvergenceError(NumericalError):
    """The deterministic solver did not reach a period-1 limit cycle.

    The last integrated period is kept in ``trajectory`` (its ``converged``
    flag is False) so callers can inspect what the laser was doing.
    """

    def __init__(self, message: str, trajectory=None):
        self.trajectory = trajectory
        super().__init__(message)


class NoStablePulsationError(NumericalError):
    """No candidate bias current produced stable pulsation."""


class ReferenceUnderflowError(NumericalError):
    """The reference intensity dropped below the noise-amplitude floor."""


class DegenerateEnsembleError(NumericalError):
    """All ensemble samples are identical although noise is switched on."""


class BelowThresholdError(NumericalError):
    """An above-threshold formula was evaluated at or below threshold."""


class TooFewSamplesError(NumericalError):
    """A statistic was requested for too small a sample."""


class AllPointsUnstableError(NumericalError):
    """Every grid point of a sweep curve was skipped."""
