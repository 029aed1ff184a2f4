"""Exception hierarchy.

Validation problems (bad inputs, infeasible requests) derive from
``ValidationError``; failures of a numerical procedure derive from
``NumericError``. The CLI maps the two families to exit codes 1 and 2.
"""


class ChargerError(Exception):
    """Base class for all package errors."""


class ValidationError(ChargerError, ValueError):
    """An input violates a documented precondition or invariant."""


class ConfigError(ValidationError):
    """A configuration document is malformed or fails validation."""


class InfeasibleOperatingPointError(ValidationError):
    """No duty cycle in [0, 1] realizes the requested operating point."""


class NumericError(ChargerError, ArithmeticError):
    """A numerical procedure could not produce a meaningful result."""


class DivergenceError(NumericError):
    """A time-domain simulation produced a non-finite state."""

    def __init__(self, t: float, message: str | None = None):
        self.t = t
        super().__init__(message or f"simulation diverged at t = {t:.9g} s")


class NoCrossingError(NumericError):
    """A magnitude curve never crosses 0 dB inside the sampled range."""


class DegeneratePolynomialError(NumericError):
    """Leading coefficients cancel, so the polynomial degree collapses."""
