"""Exception types raised across the package."""


class GaussblabError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(GaussblabError, ValueError):
    pass


class SingularMatrixError(GaussblabError, ValueError):
    pass


class NoClosedFormError(GaussblabError):
    """Raised when ``engine="closed_form"`` is requested for a body without one."""


class UnsupportedEngineError(GaussblabError):
    pass


class UnresolvableMassError(GaussblabError):
    """The Gaussian mass of a body is below what the sample size can resolve."""


class DomainError(GaussblabError, ValueError):
    pass


class StallError(GaussblabError):
    """Backtracking hit the step floor without an accepted step."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class SchemaError(GaussblabError, ValueError):
    """Invalid body JSON; ``field`` names the offending key."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field
