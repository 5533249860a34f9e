"""Exception types raised across the package."""


class GaussDivError(Exception):
    """Base class for all package errors."""


class DomainViolation(GaussDivError, ValueError):
    """An input leaves the domain of a formula.

    ``quantity`` names what failed (for instance ``"min eig(I - S)"``) and
    ``value`` carries the offending number when there is one.
    """

    def __init__(self, message, quantity=None, value=None):
        super().__init__(message)
        self.quantity = quantity
        self.value = value


class NotEquivalent(DomainViolation):
    """Two Gaussian measures are not equivalent at the working truncation."""


class NonConvergence(GaussDivError, ArithmeticError):
    """The symmetric eigensolver failed to converge."""


class ConfigError(GaussDivError, ValueError):
    """Malformed problem description or invalid configuration value."""
