from __future__ import annotations

from typing import List, Optional, Tuple

import numpy as np

from ..core.logging import get_logger
from ..models.fields import GridField
from ..models.forms import Basis, FormField
from ..models.geometry import (
    AdaptedFrame,
    CurvatureForms,
    DConnection,
    HessianMetric,
    NonholonomyData,
    SasakiMetric,
    TorsionForms,
)
from .exterior import basis_forms, exterior_derivative, wedge
from .nconnection import frame_derivative

logger = get_logger("dconnection")


def sasaki_metric(metric: HessianMetric, frame: AdaptedFrame) -> SasakiMetric:
    return SasakiMetric(metric, frame)


def metric_derivatives(metric: HessianMetric, frame: AdaptedFrame) -> np.ndarray:
    """eg[..., i, j, gamma] = e_gamma g_ij for every adapted frame direction."""
    n = frame.chart.n
    eg = np.empty(metric.lattice.shape + (n, n, 2 * n))
    for i in range(n):
        for j in range(i, n):
            for gamma in range(2 * n):
                eg[..., i, j, gamma] = frame_derivative(frame, gamma, metric.g_lower[i][j])
            eg[..., j, i, :] = eg[..., i, j, :]
    return eg


def _christoffel(g_upper: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """1/2 g^{ir} (d_k g_jr + d_j g_kr - d_r g_jk) with dg[..., i, j, k] = d_k g_ij."""
    lowered = 0.5 * (
        np.einsum("...jrk->...rjk", dg) + np.einsum("...krj->...rjk", dg) - np.einsum("...jkr->...rjk", dg)
    )
    return np.einsum("...ir,...rjk->...ijk", g_upper, lowered)


def canonical_dconnection(
    metric: HessianMetric, frame: AdaptedFrame, eg: Optional[np.ndarray] = None
) -> DConnection:
    """L^i_{jk} from horizontal frame derivatives of g, C^a_{bc} from vertical ones."""
    n = frame.chart.n
    eg = metric_derivatives(metric, frame) if eg is None else eg
    Lhat = _christoffel(metric.g_upper, eg[..., :n])
    Chat = _christoffel(metric.g_upper, eg[..., n:])
    return DConnection(metric.lattice, Lhat, Chat)


def metricity_tensor(D: DConnection, gm: SasakiMetric, eg: Optional[np.ndarray] = None) -> np.ndarray:
    """(D_{e_gamma} g)_{alpha beta} for the Sasaki metric, all index blocks."""
    n = gm.frame.chart.n
    eg = metric_derivatives(gm.metric, gm.frame) if eg is None else eg
    G = gm.adapted_matrix()
    eG = np.zeros(G.shape + (2 * n,))
    eG[..., :n, :n, :] = eg
    eG[..., n:, n:, :] = eg
    gamma = D.gamma_full()
    return (
        eG
        - np.einsum("...dag,...db->...abg", gamma, G)
        - np.einsum("...dbg,...ad->...abg", gamma, G)
    )


def metricity_residual(
    D: DConnection,
    gm: SasakiMetric,
    mask: Optional[np.ndarray] = None,
    eg: Optional[np.ndarray] = None,
) -> float:
    dev = np.max(np.abs(metricity_tensor(D, gm, eg)), axis=(-3, -2, -1))
    mask = gm.metric.mask if mask is None else mask
    return float(np.max(dev[mask]))


def torsion_forms(D: DConnection, frame: AdaptedFrame, nh: NonholonomyData) -> TorsionForms:
    """T^i = C^i_{jc} e^j ^ e^{n+c};  T^a = -1/2 Omega^a_{ij} e^i ^ e^j + (d_b N^a_i - L^a_{bi}) e^i ^ e^{n+b}."""
    lattice, n = frame.lattice, frame.chart.n
    chart = frame.chart

    def grid(values) -> GridField:
        return GridField(lattice, values)

    horizontal = []
    for i in range(n):
        comps = {(j, n + c): grid(D.Chat[..., i, j, c]) for j in range(n) for c in range(n)}
        horizontal.append(FormField(2, chart, comps, Basis.ADAPTED, lattice))
    vertical = []
    for a in range(n):
        comps = {}
        for i in range(n):
            for j in range(i + 1, n):
                comps[(i, j)] = grid(-nh.Omega[..., a, i, j])
            for b in range(n):
                comps[(i, n + b)] = grid(nh.W[..., a, i, b] - D.Lhat[..., a, b, i])
        vertical.append(FormField(2, chart, comps, Basis.ADAPTED, lattice))
    return TorsionForms(tuple(horizontal), tuple(vertical))


def connection_forms(D: DConnection, frame: AdaptedFrame) -> List[List[FormField]]:
    """Gamma^i_j = L^i_{jk} e^k + C^i_{jc} e^{n+c}, indexed [i][j]."""
    lattice, n, chart = frame.lattice, frame.chart.n, frame.chart
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            comps = {(k,): GridField(lattice, D.Lhat[..., i, j, k]) for k in range(n)}
            comps.update({(n + c,): GridField(lattice, D.Chat[..., i, j, c]) for c in range(n)})
            row.append(FormField(1, chart, comps, Basis.ADAPTED, lattice))
        out.append(row)
    return out


def structure_equation_residuals(
    D: DConnection,
    frame: AdaptedFrame,
    T: TorsionForms,
    mask: Optional[np.ndarray] = None,
) -> Tuple[float, float, CurvatureForms]:
    """Residuals of d e - e ^ Gamma = -T for both blocks, and R = -(dGamma - Gamma ^ Gamma)."""
    lattice, n, chart = frame.lattice, frame.chart.n, frame.chart
    alpha, scheme = frame.alpha, frame.nconnection.scheme
    e = basis_forms(chart, Basis.ADAPTED, lattice)
    gamma = connection_forms(D, frame)

    def d(form: FormField) -> FormField:
        return exterior_derivative(form, alpha, frame, scheme)

    first = []
    second = []
    for i in range(n):
        lhs = d(e[i])
        for k in range(n):
            lhs = lhs - wedge(e[k], gamma[i][k])
        first.append((lhs + T.horizontal[i]).max_abs(mask, lattice))
    for a in range(n):
        lhs = d(e[n + a])
        for b in range(n):
            lhs = lhs - wedge(e[n + b], gamma[a][b])
        second.append((lhs + T.vertical[a]).max_abs(mask, lattice))

    R = []
    for i in range(n):
        row = []
        for j in range(n):
            form = d(gamma[i][j])
            for k in range(n):
                form = form - wedge(gamma[k][j], gamma[i][k])
            row.append(-form)
        R.append(tuple(row))
    first_res, second_res = float(np.max(first)), float(np.max(second))
    logger.debug("structure equations: first %.3e, second %.3e", first_res, second_res)
    return first_res, second_res, CurvatureForms(tuple(R))
