"""Exception types shared across the package."""


class DualhomError(Exception):
    """Base class for all package errors."""


class ConfigError(DualhomError):
    """A run configuration is missing, malformed, or inconsistent."""


class InvalidMaterialError(DualhomError):
    """Material coefficients violate symmetry/positivity requirements."""


class OutOfDomainError(DualhomError):
    """A query point lies outside the meshed domain."""


class SolverFailure(DualhomError):
    """A linear solve did not reach its residual contract."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class BlowupError(DualhomError):
    """Time integration produced a non-finite state."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class UndefinedMetricError(DualhomError):
    """A relative error is undefined because the reference norm vanishes."""
