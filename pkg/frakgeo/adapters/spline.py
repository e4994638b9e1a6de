from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline, RegularGridInterpolator


def cardinal_spline_coefficients(nodes: np.ndarray) -> np.ndarray:
    """Piecewise-cubic coefficients of the not-a-knot cardinal splines on ``nodes``.

    Returns ``c`` of shape (4, m-1, m): ``c[p, k, i]`` is the coefficient of
    ``(t - t_k) ** (3 - p)`` on interval k of the spline interpolating the unit
    vector e_i. Applying a linear functional to these columns gives the matrix
    of that functional acting on spline interpolants.
    """
    nodes = np.asarray(nodes, dtype=float)
    spline = CubicSpline(nodes, np.eye(nodes.size), axis=0, bc_type="not-a-knot")
    return np.asarray(spline.c)


def multilinear(axes: Sequence[np.ndarray], values: np.ndarray, points) -> np.ndarray:
    """Multilinear interpolation of lattice values at points of shape (..., d)."""
    interp = RegularGridInterpolator(tuple(axes), values, method="linear", bounds_error=True)
    pts = np.asarray(points, dtype=float)
    return interp(pts.reshape(-1, pts.shape[-1])).reshape(pts.shape[:-1])
