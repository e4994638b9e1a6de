from __future__ import annotations

from typing import Optional

import numpy as np

from ..core.logging import get_logger
from ..models.fields import GridField, PowerField, as_order
from ..models.geometry import AdaptedFrame, NConnection, NonholonomyData, SemiSpray
from .caputo import Order, partial_values

logger = get_logger("nconnection")


def canonical_nconnection(spray: SemiSpray, alpha: Order, scheme: Optional[str] = None) -> NConnection:
    """N^a_j = D_{y^j} G^a, by quadrature along each fibre axis."""
    lattice = spray.metric.lattice
    chart = lattice.chart
    n = chart.n
    N = np.empty(lattice.shape + (n, n))
    for j in range(n):
        N[..., :, j] = partial_values(spray.values, chart.vertical(j), alpha, lattice, scheme)
    return NConnection(chart, as_order(alpha), lattice, N, scheme)


def adapted_frame(nconnection: NConnection) -> AdaptedFrame:
    return AdaptedFrame(nconnection)


def frame_derivative(frame: AdaptedFrame, which: int, f) -> np.ndarray:
    """Values of e_which applied to ``f``; raw arrays may carry trailing index axes."""
    nc = frame.nconnection
    lattice, n = nc.lattice, nc.chart.n
    nc.chart.check_axis(which)
    base = partial_values(f, which, nc.alpha, lattice, nc.scheme)
    if which >= n or nc.is_zero:
        return base
    for a in range(n):
        Na = nc.N[..., a, which]
        dv = partial_values(f, n + a, nc.alpha, lattice, nc.scheme)
        base = base - Na.reshape(Na.shape + (1,) * (dv.ndim - Na.ndim)) * dv
    return base


def frame_apply(frame: AdaptedFrame, which: int, f) -> GridField:
    """e_j f = D_j f - N^a_j D_{n+a} f for horizontal j; D_b f for vertical b."""
    return GridField(frame.lattice, frame_derivative(frame, which, f))


def nonholonomy(frame: AdaptedFrame) -> NonholonomyData:
    nc = frame.nconnection
    lattice, n = nc.lattice, nc.chart.n
    N = nc.N
    W = np.empty(lattice.shape + (n, n, n))
    for b in range(n):
        W[..., b] = partial_values(N, n + b, nc.alpha, lattice, nc.scheme)
    eN = np.empty(lattice.shape + (n, n, n))  # eN[..., a, j, i] = e_i N^a_j
    for i in range(n):
        eN[..., i] = frame_derivative(frame, i, N)
    Omega = eN - np.swapaxes(eN, -1, -2)
    Omega = np.swapaxes(Omega, -1, -2)
    B = np.swapaxes(W, -1, -2)
    return NonholonomyData(W=W, Omega=Omega, B=B)


def duality_residual(frame: AdaptedFrame, mask: Optional[np.ndarray] = None) -> float:
    """max |<e^beta, e_gamma> - delta^beta_gamma|."""
    E = frame.coframe_matrix()
    F = frame.frame_matrix()
    pairing = np.einsum("...bm,...gm->...bg", E, F) - np.eye(E.shape[-1])
    dev = np.max(np.abs(pairing), axis=(-2, -1))
    return float(np.max(dev if mask is None else dev[mask]))


def default_probe(frame: AdaptedFrame) -> PowerField:
    """x^1 y^n: a probe with both horizontal and vertical dependence."""
    chart = frame.chart
    return PowerField.coordinate(chart, 0) * PowerField.coordinate(chart, chart.dim - 1)


def commutator_residual(
    frame: AdaptedFrame,
    nh: NonholonomyData,
    probe: Optional[PowerField] = None,
    mask: Optional[np.ndarray] = None,
) -> float:
    """max over frame pairs of |[e_alpha, e_beta] f - W^gamma_{alpha beta} e_gamma f|."""
    probe = default_probe(frame) if probe is None else probe
    dim = frame.chart.dim
    first = [frame_derivative(frame, k, probe) for k in range(dim)]
    W = nh.structure_functions()
    worst = 0.0
    for a in range(dim):
        for b in range(a + 1, dim):
            lhs = frame_derivative(frame, a, first[b]) - frame_derivative(frame, b, first[a])
            rhs = sum(W[..., g, a, b] * first[g] for g in range(dim))
            dev = np.abs(lhs - rhs)
            worst = float(np.maximum(worst, np.max(dev if mask is None else dev[mask])))
    logger.debug("commutator residual %.3e", worst)
    return worst
