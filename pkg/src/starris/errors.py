"""Exception and warning types shared across the package."""


class StarRisError(Exception):
    """Base class for all package errors."""


class DomainError(StarRisError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class UndefinedPhaseError(DomainError):
    pass


class ConfigError(StarRisError, ValueError):
    """Invalid or incomplete configuration. ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class ResolutionError(StarRisError):
    """A discretisation grid is too coarse for the requested accuracy."""


class ApproximationWarning(UserWarning):
    """An approximation is being evaluated outside its regime of validity."""


class SeriesTruncationWarning(UserWarning):
    """A truncated series hit its index cap before meeting its tolerance."""
