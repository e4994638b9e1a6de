import math

import numpy as np
from scipy.special import gamma, gammaln

from ..core.errors import DomainError


def _is_nonpositive_integer(v: float) -> bool:
    return v <= 0 and float(v).is_integer()


def gamma_ratio(a: float, b: float) -> float:
    """Γ(a) / Γ(b) for the positive arguments the power rule produces.

    Poles (non-positive integers) are rejected with a DomainError instead of
    returning inf or nan.
    """
    if _is_nonpositive_integer(a) or _is_nonpositive_integer(b):
        raise DomainError(f"gamma pole in ratio Γ({a})/Γ({b})")
    if a > 0 and b > 0:
        if max(a, b) > 20.0:
            return float(np.exp(gammaln(a) - gammaln(b)))
        return float(gamma(a) / gamma(b))
    return float(gamma(a) / gamma(b))


def reciprocal_gamma(a: float) -> float:
    """1/Γ(a), zero at the poles (used by the Riemann-Liouville boundary term)."""
    if _is_nonpositive_integer(a):
        return 0.0
    return float(1.0 / gamma(a))


def gamma_value(a: float) -> float:
    if _is_nonpositive_integer(a):
        raise DomainError(f"gamma pole at {a}")
    return float(gamma(a))


def isclose_integer(v: float, tol: float = 1e-12) -> bool:
    return math.isclose(v, round(v), abs_tol=tol)
