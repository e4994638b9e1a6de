"""Left Caputo derivatives (order 0 < alpha <= 1, terminal at the axis start).

Closed form on power fields, L1 and spline-kernel quadrature on sampled data.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Optional, Union

import numpy as np

from ..adapters.special import gamma_ratio, gamma_value, isclose_integer, reciprocal_gamma
from ..adapters.spline import cardinal_spline_coefficients
from ..core.errors import DomainError, OffGridError, SingularityError
from ..core.logging import get_logger
from ..models.fields import FractionalOrder, GridField, Lattice, PowerField, as_order

logger = get_logger("caputo")

Order = Union[float, FractionalOrder]

SCHEMES = ("spline", "l1")


def _power_rule_coefficient(p: float, alpha: float) -> float:
    b = p + 1.0 - alpha
    if b <= 0.5 and isclose_integer(b):
        # 1/Gamma vanishes at the poles: t^(alpha-1) is annihilated
        return 0.0
    return gamma_ratio(p + 1.0, b)


def caputo_power(p: float, alpha: Order, x_rel: float) -> float:
    """Caputo derivative of (x - terminal)^p evaluated at x_rel = x - terminal."""
    a = as_order(alpha).alpha
    if p < 0:
        raise DomainError(f"power rule needs p >= 0, got {p}")
    if x_rel < 0:
        raise DomainError(f"x_rel must be non-negative, got {x_rel}")
    if p == 0:
        return 0.0
    e = p - a
    if e < 0 and x_rel == 0:
        raise SingularityError(f"D^{a} x^{p} is singular at the terminal")
    return gamma_ratio(p + 1.0, p + 1.0 - a) * float(x_rel) ** e


def caputo_partial_power(field: PowerField, axis: int, alpha: Order) -> PowerField:
    """Monomial-wise power rule along one chart axis; exact and linear.

    Exponents in (-1, 0), which appear once a metric coefficient is singular
    at a fibre terminal, follow the same rule; the result is the
    Riemann-Liouville value and may fall below -1, after which the field can
    be sampled off the terminal but not differentiated along that axis again.
    """
    a = as_order(alpha).alpha
    field.chart.check_axis(axis)
    pairs = []
    for exps, coeff in field.terms:
        p = exps[axis]
        if p == 0.0:
            continue
        if p <= -1.0:
            raise DomainError(
                f"cannot differentiate {field.chart.label(axis)}^{p:g}: not locally integrable at the terminal"
            )
        factor = _power_rule_coefficient(p, a)
        if factor == 0.0:
            continue
        new = list(exps)
        new[axis] = p - a
        pairs.append((tuple(new), coeff * factor))
    return PowerField._raw(field.chart, pairs)


def _grid_index(at: float, terminal: float, upper: float, m: int) -> int:
    if at < terminal:
        raise OffGridError(f"point {at} precedes the terminal {terminal}")
    h = (upper - terminal) / (m - 1)
    pos = (at - terminal) / h
    j = int(round(pos))
    if j > m - 1 or abs(pos - j) > 1e-9 * max(1.0, pos):
        raise OffGridError(f"point {at} is not a node of the grid [{terminal}, {upper}] with {m} points")
    return j


def _check_samples(samples) -> np.ndarray:
    f = np.asarray(samples, dtype=float)
    if f.ndim != 1:
        raise DomainError("quadrature samples must be one-dimensional")
    if f.size < 3:
        raise DomainError(f"quadrature needs at least 3 samples, got {f.size}")
    return f


def _l1_weights(nodes: np.ndarray, alpha: float, j: int) -> np.ndarray:
    """Weights w_k, k < j, multiplying f(t_{k+1}) - f(t_k) at node j."""
    h = nodes[1] - nodes[0]
    dist = nodes[j] - nodes[: j + 1]
    powered = np.power(dist, 1.0 - alpha)
    return (powered[:-1] - powered[1:]) / (gamma_value(2.0 - alpha) * h)


def caputo_quadrature(samples, alpha: Order, at: float, *, terminal: float = 0.0, upper: float = 1.0) -> float:
    """L1 approximation of the Caputo derivative of uniformly sampled data at a grid node.

    ``samples`` are values at the ``m`` equispaced nodes of [terminal, upper].
    At alpha = 1 this is the backward difference (forward at the terminal).
    """
    a = as_order(alpha).alpha
    f = _check_samples(samples)
    m = f.size
    j = _grid_index(at, terminal, upper, m)
    nodes = np.linspace(terminal, upper, m)
    if a == 1.0:
        k = max(j, 1)
        return float((f[k] - f[k - 1]) / (nodes[1] - nodes[0]))
    if j == 0:
        return 0.0
    w = _l1_weights(nodes, a, j)
    return float(np.dot(w, np.diff(f[: j + 1])))


def rl_left_reference(samples, alpha: Order, at: float, *, terminal: float = 0.0, upper: float = 1.0) -> float:
    """Left Riemann-Liouville derivative: the L1 Caputo value plus the boundary term f(t0)(t - t0)^-alpha / Gamma(1 - alpha).

    Reference only; the geometry never uses it. A constant keeps a nonzero derivative.
    """
    a = as_order(alpha).alpha
    f = _check_samples(samples)
    caputo = caputo_quadrature(f, a, at, terminal=terminal, upper=upper)
    rg = reciprocal_gamma(1.0 - a)
    if rg == 0.0 or f[0] == 0.0:
        return caputo
    dist = at - terminal
    if dist == 0.0:
        raise SingularityError("RL derivative of data with f(terminal) != 0 is singular at the terminal")
    return caputo + f[0] * dist ** (-a) * rg


def _l1_matrix(nodes: np.ndarray, alpha: float) -> np.ndarray:
    m = nodes.size
    h = nodes[1] - nodes[0]
    weights = np.zeros((m, m - 1))
    if alpha == 1.0:
        weights[0, 0] = 1.0 / h
        weights[np.arange(1, m), np.arange(m - 1)] = 1.0 / h
    else:
        for j in range(1, m):
            weights[j, :j] = _l1_weights(nodes, alpha, j)
    diff = np.zeros((m - 1, m))
    diff[np.arange(m - 1), np.arange(m - 1)] = -1.0
    diff[np.arange(m - 1), np.arange(1, m)] = 1.0
    return weights @ diff


def _spline_matrix(nodes: np.ndarray, alpha: float) -> np.ndarray:
    m = nodes.size
    c = cardinal_spline_coefficients(nodes)
    cubic, quad, lin = c[0], c[1], c[2]
    if alpha == 1.0:
        out = np.empty((m, m))
        out[:-1] = lin
        h = nodes[-1] - nodes[-2]
        out[-1] = 3.0 * cubic[-1] * h ** 2 + 2.0 * quad[-1] * h + lin[-1]
        return out

    tj = nodes[:, None]
    lo = np.clip(tj - nodes[None, :-1], 0.0, None)
    hi = np.clip(tj - nodes[None, 1:], 0.0, None)
    below = np.arange(m)[:, None] > np.arange(m - 1)[None, :]

    def primitive(q: int) -> np.ndarray:
        r = q + 1.0 - alpha
        return (lo ** r - hi ** r) / r

    p0, p1, p2 = primitive(0), primitive(1), primitive(2)
    i0 = np.where(below, p0, 0.0)
    i1 = np.where(below, lo * p0 - p1, 0.0)
    i2 = np.where(below, lo ** 2 * p0 - 2.0 * lo * p1 + p2, 0.0)
    return (i0 @ lin + 2.0 * i1 @ quad + 3.0 * i2 @ cubic) * reciprocal_gamma(1.0 - alpha)


@lru_cache(maxsize=256)
def _cached_matrix(terminal: float, upper: float, m: int, alpha: float, scheme: str) -> np.ndarray:
    logger.debug("building %s Caputo matrix: m=%d alpha=%g on [%g, %g]", scheme, m, alpha, terminal, upper)
    nodes = np.linspace(terminal, upper, m)
    mat = _l1_matrix(nodes, alpha) if scheme == "l1" else _spline_matrix(nodes, alpha)
    mat.flags.writeable = False
    return mat


def _resolve_scheme(scheme: Optional[str]) -> str:
    if scheme is None:
        from ..core.config import get_settings

        scheme = get_settings().grid_scheme
    if scheme not in SCHEMES:
        raise DomainError(f"unknown quadrature scheme {scheme!r}; expected one of {SCHEMES}")
    return scheme


def caputo_matrix(terminal: float, upper: float, m: int, alpha: Order, scheme: Optional[str] = None) -> np.ndarray:
    """Dense operator mapping samples on [terminal, upper] to Caputo derivatives at the nodes.

    ``l1`` is lower triangular and reproduces :func:`caputo_quadrature` row by row. ``spline`` integrates the
    kernel exactly against the derivative of the not-a-knot cubic interpolant, so it
    is exact on cubics; at alpha = 1 it is the spline derivative.
    """
    if m < 3:
        raise DomainError(f"Caputo matrix needs at least 3 nodes, got {m}")
    if upper <= terminal:
        raise DomainError("upper bound must exceed the terminal")
    return _cached_matrix(float(terminal), float(upper), int(m), as_order(alpha).alpha, _resolve_scheme(scheme))


def apply_along_axis(matrix: np.ndarray, values: np.ndarray, axis: int) -> np.ndarray:
    return np.moveaxis(np.tensordot(matrix, values, axes=([1], [axis])), 0, axis)


def caputo_partial_grid(field: GridField, axis: int, alpha: Order, scheme: Optional[str] = None) -> GridField:
    """Quadrature derivative along every lattice line of one axis.

    NaN samples at the terminal of ``axis`` spread along their line.
    """
    lattice = field.lattice
    lattice.chart.check_axis(axis)
    mat = caputo_matrix(lattice.chart.terminals[axis], lattice.upper[axis], lattice.points[axis], alpha, scheme)
    return GridField(lattice, apply_along_axis(mat, field.values, axis))


def caputo_partial(field, axis: int, alpha: Order, scheme: Optional[str] = None):
    """Dispatch on the field carrier: symbolic for PowerField, quadrature for GridField."""
    if isinstance(field, PowerField):
        return caputo_partial_power(field, axis, alpha)
    if isinstance(field, GridField):
        return caputo_partial_grid(field, axis, alpha, scheme)
    raise DomainError(f"cannot differentiate {type(field).__name__}")


def lattice_derivative_values(values: np.ndarray, lattice: Lattice, axis: int, alpha: Order, scheme: Optional[str] = None) -> np.ndarray:
    """Caputo derivative of raw lattice-shaped arrays, including stacked ones with trailing index axes."""
    mat = caputo_matrix(lattice.chart.terminals[axis], lattice.upper[axis], lattice.points[axis], alpha, scheme)
    return apply_along_axis(mat, values, axis)


def partial_values(field, axis: int, alpha: Order, lattice: Lattice, scheme: Optional[str] = None) -> np.ndarray:
    """Lattice values of the Caputo partial of any field carrier.

    Power fields are differentiated exactly and then sampled (NaN at the
    terminals where the result is singular); grid fields and raw arrays,
    possibly with trailing index axes, go through the quadrature matrix.
    """
    if isinstance(field, PowerField):
        return caputo_partial_power(field, axis, alpha).sample(lattice, strict=False).values
    if isinstance(field, GridField):
        return lattice_derivative_values(field.values, lattice, axis, alpha, scheme)
    return lattice_derivative_values(np.asarray(field, dtype=float), lattice, axis, alpha, scheme)
