"""Exception hierarchy shared across the package."""


class RothmanError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(RothmanError, ValueError):
    """A value (point, weight vector, probability) is outside the domain
    required by the requested operation."""


class ContourRangeError(DomainError):
    """A contour leaves the unit square at the requested x."""


class ModificationError(DomainError):
    """Stratum points do not share a common measure value, so a
    collapsibility verdict is undefined."""

    def __init__(self, message: str, values: tuple[float, ...]):
        super().__init__(message)
        self.values = values


class TableParseError(RothmanError, ValueError):
    """CSV input could not be parsed; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class ConvergenceError(RothmanError, RuntimeError):
    """Model fitting failed to converge; carries the last iterate."""

    def __init__(self, message: str, coefficients=None, loglik=None, iterations=None):
        super().__init__(message)
        self.coefficients = coefficients
        self.loglik = loglik
        self.iterations = iterations
