from typing import Optional


class FrakgeoError(Exception):
    """Root of every error raised by the engine."""


class DomainError(FrakgeoError, ValueError):
    """Argument outside the domain of an operation (negative exponent, bad order, bad chart)."""


class OffGridError(DomainError):
    """Quadrature point before the terminal or not on the sample grid."""


class DegreeError(DomainError):
    """Form degree outside the supported range."""


class ChartDomainError(DomainError):
    """A sampled curve leaves the chart (goes below a terminal)."""


class SingularityError(FrakgeoError, ArithmeticError):
    """Evaluation of a field that is singular at a terminal, at that terminal."""


class RegularityError(FrakgeoError):
    """The Hessian metric degenerates on the evaluation nodes."""

    def __init__(self, message: str, det_min: Optional[float] = None):
        super().__init__(message)
        self.det_min = det_min


class BasisMismatchError(FrakgeoError):
    """Forms on different charts or cobases were combined."""


class ConfigError(FrakgeoError):
    """A job configuration could not be read or validated."""
