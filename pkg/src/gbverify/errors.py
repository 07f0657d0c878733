"""Exception hierarchy shared by every module."""


class GBVerifyError(Exception):
    """Base class for all library errors."""


class ValidationError(GBVerifyError, ValueError):
    """An input violates a documented precondition.

    ``field`` optionally names the offending config field (``divisor[0].order``).
    """

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class DomainError(GBVerifyError, ValueError):
    """A point lies outside the domain where an operation is defined."""


class StencilCollisionError(DomainError):
    """A finite-difference stencil touches a singular point."""


class UnsupportedConfigurationError(GBVerifyError):
    """The request is well formed but outside the supported model class."""


class NumericalError(GBVerifyError, ArithmeticError):
    """Non-finite samples were produced during a computation."""

    def __init__(self, message: str, location: complex | None = None, chart: str | None = None):
        self.location = location
        self.chart = chart
        where = ""
        if location is not None:
            where = f" at {chart or '?'}={complex(location)!r}"
        super().__init__(message + where)
