"""Exception hierarchy shared by every module."""


class BoundsError(Exception):
    """Base class for all package errors."""


class DomainError(BoundsError, ValueError):
    """An argument lies outside the domain of an operation."""


class IntegrationDomainError(DomainError):
    """The quadrature box misses a non-negligible amount of probability mass."""


class AbsoluteContinuityError(DomainError):
    """nu puts mass where the reference measure mu vanishes."""


class ModelEvaluationError(BoundsError):
    """A parametric model could not be evaluated stably."""


class CapabilityError(BoundsError):
    """A request exceeds the desk-scale limits of a brute-force oracle."""


class InvariantViolation(BoundsError):
    """An input violates a structural invariant (e.g. K*P > 1)."""


class IterationError(BoundsError):
    """A fixed-point iteration failed to converge."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace if trace is not None else []


class ContractionViolation(IterationError):
    """The measured contraction factor is not below one."""


class ConfigError(BoundsError):
    """Scenario configuration is malformed or inconsistent."""


class ConfigParseError(ConfigError):
    """Scenario configuration text is not valid TOML."""
