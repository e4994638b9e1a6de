from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from ..core.config import get_settings
from ..core.errors import ChartDomainError, DomainError, RegularityError
from ..core.logging import get_logger
from ..models.fields import GridField, Lattice, PowerField, as_order
from ..models.geometry import HessianMetric, Lagrangian, SemiSpray
from .caputo import caputo_matrix, caputo_partial_grid, caputo_partial_power

logger = get_logger("lagrange")


def hessian_components(lag: Lagrangian) -> Tuple[Tuple[PowerField, ...], ...]:
    """g_ij = 1/4 (D_{y^i} D_{y^j} + D_{y^j} D_{y^i}) L, exact."""
    n, a, chart = lag.n, lag.alpha, lag.chart
    rows = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            yi, yj = chart.vertical(i), chart.vertical(j)
            ij = caputo_partial_power(caputo_partial_power(lag.L, yj, a), yi, a)
            ji = caputo_partial_power(caputo_partial_power(lag.L, yi, a), yj, a)
            rows[i][j] = rows[j][i] = (ij + ji) * 0.25
    return tuple(tuple(r) for r in rows)


def invert_metric(values: np.ndarray, tol: float) -> Tuple[np.ndarray, np.ndarray]:
    """Pointwise inverse and |det|; pseudo-inverse where |det| < tol, NaN where g is not finite."""
    finite = np.all(np.isfinite(values), axis=(-2, -1))
    det = np.full(values.shape[:-2], np.nan)
    det[finite] = np.abs(np.linalg.det(values[finite]))
    regular = finite & (det >= tol)
    degenerate = finite & ~regular
    inverse = np.full(values.shape, np.nan)
    if regular.any():
        inverse[regular] = np.linalg.inv(values[regular])
    if degenerate.any():
        logger.debug("pseudo-inverting %d degenerate nodes", int(degenerate.sum()))
        inverse[degenerate] = np.linalg.pinv(values[degenerate])
    return inverse, det


# Distance from a singular terminal, in cells, at which terminal limits are taken.
_TERMINAL_OFFSET = 1e-60


def _stack(fields, lattice: Lattice) -> np.ndarray:
    n = len(fields)
    out = np.empty(lattice.shape + (n, n))
    for i in range(n):
        for j in range(n):
            out[..., i, j] = fields[i][j].sample(lattice, strict=False).values
    return out


def _terminal_limit(fields, lattice: Lattice, nodes: np.ndarray) -> np.ndarray:
    """The metric at the given nodes, evaluated just inside every singular terminal.

    g blows up there while g^-1 has a finite limit, which the spray and the
    nonlocal derivatives of G need at the start of each fibre line.
    """
    chart = lattice.chart
    singular = sorted({k for row in fields for f in row for k in f.singular_axes()})
    points = lattice.mesh()[nodes]
    for k in singular:
        t = chart.terminals[k]
        points[:, k] = np.where(points[:, k] == t, t + _TERMINAL_OFFSET * lattice.spacing(k), points[:, k])
    n = len(fields)
    out = np.empty((len(points), n, n))
    for i in range(n):
        for j in range(n):
            out[:, i, j] = fields[i][j].evaluate(points)
    return out


def hessian_metric(
    lag: Lagrangian,
    lattice: Lattice,
    *,
    regularity_tol: Optional[float] = None,
    margin: Optional[int] = None,
) -> HessianMetric:
    if lattice.chart != lag.chart:
        raise DomainError("lattice and Lagrangian live on different charts")
    tol = get_settings().regularity_tol if regularity_tol is None else regularity_tol
    chart = lag.chart
    if not any(lag.L.depends_on(chart.vertical(b)) for b in range(chart.n)):
        raise RegularityError("Hessian metric vanishes: L does not depend on any fibre coordinate y", det_min=0.0)
    g_lower = hessian_components(lag)
    values = _stack(g_lower, lattice)
    g_upper, det = invert_metric(values, tol)
    singular = ~np.all(np.isfinite(values), axis=(-2, -1))
    if singular.any():
        logger.debug("taking g^-1 as a terminal limit at %d nodes", int(singular.sum()))
        g_upper[singular], _ = invert_metric(_terminal_limit(g_lower, lattice, singular), tol)
    mask = lattice.interior_mask(margin)
    det_min = float(np.min(det[mask]))
    if not np.isfinite(det_min) or det_min < tol:
        raise RegularityError(
            f"Hessian metric degenerates: min |det g| = {det_min:.3e} below {tol:.1e}", det_min=det_min
        )
    logger.debug("hessian: min |det g| = %.6g over %d nodes", det_min, int(mask.sum()))
    return HessianMetric(lattice, g_lower, values, g_upper, det_min, mask)


def spray_brackets(lag: Lagrangian) -> Tuple[PowerField, ...]:
    """y^i D_{y^j} D_{x^i} L - D_{x^j} L for each free index j."""
    n, a, chart = lag.n, lag.alpha, lag.chart
    dx = [caputo_partial_power(lag.L, i, a) for i in range(n)]
    out = []
    for j in range(n):
        yj = chart.vertical(j)
        acc = -dx[j]
        for i in range(n):
            acc = acc + PowerField.coordinate_value(chart, chart.vertical(i)) * caputo_partial_power(dx[i], yj, a)
        out.append(acc)
    return tuple(out)


def semi_spray(lag: Lagrangian, metric: HessianMetric) -> SemiSpray:
    """G^k = 1/4 g^{kj} (y^i D_{y^j} D_{x^i} L - D_{x^j} L) on the metric's lattice."""
    brackets = spray_brackets(lag)
    lattice = metric.lattice
    rhs = np.stack([b.sample(lattice, strict=False).values for b in brackets], axis=-1)
    values = 0.25 * np.einsum("...kj,...j->...k", metric.g_upper, rhs)
    return SemiSpray(metric, brackets, values)


def grid_path_spray(lag: Lagrangian, lattice: Lattice, *, scheme: Optional[str] = None) -> np.ndarray:
    """G^k computed from the sampled Lagrangian with quadrature derivatives only.

    Independent of the power rule; used to cross-check :func:`semi_spray`.
    """
    n, a, chart = lag.n, lag.alpha, lag.chart
    L = lag.L.sample(lattice)

    def d(f: GridField, axis: int) -> GridField:
        return caputo_partial_grid(f, axis, a, scheme)

    g = np.empty(lattice.shape + (n, n))
    for i in range(n):
        for j in range(n):
            yi, yj = chart.vertical(i), chart.vertical(j)
            g[..., i, j] = 0.25 * (d(d(L, yj), yi).values + d(d(L, yi), yj).values)
    g_upper, _ = invert_metric(g, get_settings().regularity_tol)
    dx = [d(L, i) for i in range(n)]
    rhs = np.empty(lattice.shape + (n,))
    for j in range(n):
        yj = chart.vertical(j)
        acc = -dx[j].values
        for i in range(n):
            acc = acc + lattice.coordinate(chart.vertical(i)) * d(dx[i], yj).values
        rhs[..., j] = acc
    return 0.25 * np.einsum("...kj,...j->...k", g_upper, rhs)


def euler_lagrange_residual(
    lag: Lagrangian,
    curve,
    spray: SemiSpray,
    *,
    tau_upper: float = 1.0,
    scheme: Optional[str] = None,
) -> float:
    """max over tau-nodes after the first of |D_tau D_tau x^k + 2 G^k(x, D_tau x)|.

    ``curve`` holds x(tau) on the uniform grid of [0, tau_upper], shape (m,) or (m, n).
    """
    x = np.asarray(curve, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    chart = lag.chart
    if x.shape[1] != chart.n:
        raise DomainError(f"curve needs {chart.n} components, got {x.shape[1]}")
    m = x.shape[0]
    D = caputo_matrix(0.0, tau_upper, m, lag.alpha, scheme)
    y = D @ x
    acc = D @ y
    points = np.concatenate([_inside(x, chart.terminals_x, "x"), _inside(y, chart.terminals_y, "y")], axis=1)
    # the first node sits on the fibre terminal at fractional order
    G = spray.at(points[1:])
    residual = np.abs(acc[1:] + 2.0 * G)
    return float(np.max(residual))


def _inside(values: np.ndarray, terminals, label: str) -> np.ndarray:
    t = np.asarray(terminals)
    scale = max(1.0, float(np.max(np.abs(values))))
    if np.any(values < t - 1e-9 * scale):
        raise ChartDomainError(f"curve leaves the chart: {label} below its terminal")
    return np.maximum(values, t)


def euler_defect(f: PowerField, degree: float) -> PowerField:
    """y^i d_{y^i} f - degree * f at integer order; zero exactly when f is degree-homogeneous in y."""
    chart = f.chart
    euler = -float(degree) * f
    for i in range(chart.n):
        yi = chart.vertical(i)
        euler = euler + PowerField.coordinate_value(chart, yi) * caputo_partial_power(f, yi, 1.0)
    return euler


def homogeneity_residual(lag: Lagrangian, lattice: Lattice, *, margin: Optional[int] = None) -> float:
    """Euler identity y^i d_{y^i} L - 2L (integer order), max |.| over the interior nodes."""
    euler = euler_defect(lag.L, 2.0)
    if euler.is_zero:
        return 0.0
    return euler.sample(lattice, strict=False).max_abs(lattice.interior_mask(margin))


def root_homogeneity_residual(
    numerator: PowerField, degree: float, lattice: Lattice, *, margin: Optional[int] = None
) -> float:
    """Euler 2-homogeneity residual of F^2 = P^(2/degree) for a polynomial P, through P alone.

    y^i d_{y^i} F^2 - 2 F^2 = (2/degree) P^(2/degree - 1) (y^i d_{y^i} P - degree P).
    """
    mask = lattice.interior_mask(margin)
    euler = euler_defect(numerator, degree)
    if euler.is_zero:
        return 0.0
    P = numerator.sample(lattice).values
    if np.any(P[mask] <= 0.0):
        raise DomainError("numerator must be positive on the interior nodes")
    defect = euler.sample(lattice).values
    residual = (2.0 / degree) * P[mask] ** (2.0 / degree - 1.0) * defect[mask]
    return float(np.max(np.abs(residual)))


def homogeneity_residual_grid(F2: GridField, *, scheme: Optional[str] = None, margin: Optional[int] = None) -> float:
    """Relative Euler residual of sampled data, for fundamental functions with no power-field form."""
    lattice = F2.lattice
    chart = lattice.chart
    euler = F2 * -2.0
    for i in range(chart.n):
        yi = chart.vertical(i)
        euler = euler + lattice.coordinate(yi) * caputo_partial_grid(F2, yi, as_order(1.0), scheme).values
    mask = lattice.interior_mask(margin)
    scale = F2.max_abs(mask)
    return euler.max_abs(mask) / scale if scale > 0 else euler.max_abs(mask)
