from __future__ import annotations

from typing import Dict, Optional

import numpy as np

from ..core.config import get_settings
from ..core.errors import DomainError
from ..core.logging import get_logger
from ..models.fields import GridField, Lattice
from ..models.forms import Basis, FormField
from ..models.geometry import (
    AdaptedFrame,
    AlmostComplex,
    DConnection,
    HessianMetric,
    Lagrangian,
    NonholonomyData,
    SasakiMetric,
    SymplecticData,
)
from .caputo import caputo_partial_power
from .dconnection import canonical_dconnection, metric_derivatives, metricity_residual, sasaki_metric
from .exterior import basis_forms, exterior_derivative, form_matrix_at, to_adapted, wedge
from .lagrange import hessian_metric, homogeneity_residual, semi_spray
from .nconnection import adapted_frame, canonical_nconnection

logger = get_logger("kahler")


def build_almost_complex(frame: AdaptedFrame) -> AlmostComplex:
    J = AlmostComplex(frame.chart.n)
    if J.square_residual() != 0.0:
        raise DomainError("almost complex structure does not square to -I")
    return J


def theta_probe_residual(
    theta: FormField,
    gm: SasakiMetric,
    J: AlmostComplex,
    *,
    seed: int,
    pairs: Optional[int] = None,
    nodes: Optional[int] = None,
    mask: Optional[np.ndarray] = None,
) -> float:
    """max |theta(X, Y) - g(JX, Y)| over seeded random vectors at random points between interior nodes.

    Each point lies less than half a cell below a random interior node on every
    axis. X and Y are drawn in the coordinate basis and carried to the adapted
    one by the coframe at the point, built from the interpolated N.
    """
    settings = get_settings()
    pairs = settings.probe_pairs if pairs is None else pairs
    nodes = settings.probe_nodes if nodes is None else nodes
    lattice = gm.metric.lattice
    mask = gm.metric.mask if mask is None else mask
    rng = np.random.default_rng(seed)
    candidates = np.argwhere(mask)
    picked = candidates[rng.choice(len(candidates), size=min(nodes, len(candidates)), replace=False)]
    dim = lattice.chart.dim
    spacing = np.array([lattice.spacing(k) for k in range(dim)])
    corners = np.stack([lattice.axis(k)[picked[:, k]] for k in range(dim)], axis=-1)
    points = corners - rng.uniform(0.0, 0.5, size=corners.shape) * spacing
    Theta = form_matrix_at(theta, points)
    G = gm.adapted_matrix(points)
    E = gm.frame.coframe_matrix_at(points)
    X = np.einsum("nab,npb->npa", E, rng.standard_normal((len(picked), pairs, dim)))
    Y = np.einsum("nab,npb->npa", E, rng.standard_normal((len(picked), pairs, dim)))
    lhs = np.einsum("npa,nab,npb->np", X, Theta, Y)
    rhs = np.einsum("npa,nab,npb->np", J.apply(X), G, Y)
    return float(np.max(np.abs(lhs - rhs)))


def cartan_forms(
    lag: Lagrangian,
    metric: HessianMetric,
    frame: AdaptedFrame,
    J: Optional[AlmostComplex] = None,
    *,
    seed: Optional[int] = None,
) -> SymplecticData:
    """omega = 1/2 D_{y^i} L e^i and theta = g_ij e^{n+i} ^ e^j, with their exterior derivatives."""
    chart, lattice, n = lag.chart, metric.lattice, lag.n
    alpha, scheme = lag.alpha, frame.nconnection.scheme
    omega = FormField(
        1, chart, {(i,): 0.5 * caputo_partial_power(lag.L, chart.vertical(i), alpha) for i in range(n)},
        Basis.COORDINATE, lattice,
    )
    theta = FormField(
        2, chart, {(j, chart.vertical(i)): -metric.g_lower[i][j] for i in range(n) for j in range(n)},
        Basis.ADAPTED, lattice,
    )
    d_omega = to_adapted(exterior_derivative(omega, alpha, scheme=scheme), frame)
    d_theta = exterior_derivative(theta, alpha, frame, scheme)
    J = build_almost_complex(frame) if J is None else J
    seed = get_settings().probe_seed if seed is None else seed
    probe = theta_probe_residual(theta, sasaki_metric(metric, frame), J, seed=seed)
    return SymplecticData(omega, theta, d_omega, d_theta, probe)


def _cyclic(A: np.ndarray) -> np.ndarray:
    return A + np.einsum("...jki->...ijk", A) + np.einsum("...kij->...ijk", A)


def closure_checks(
    sd: SymplecticData,
    metric: HessianMetric,
    frame: AdaptedFrame,
    nh: NonholonomyData,
    *,
    eg: Optional[np.ndarray] = None,
    mask: Optional[np.ndarray] = None,
) -> Dict[str, float]:
    """Residuals of d omega = theta, d theta = 0 and the three identities behind d theta = 0."""
    n, lattice = frame.chart.n, frame.lattice
    mask = metric.mask if mask is None else mask
    eg = metric_derivatives(metric, frame) if eg is None else eg
    g = metric.values

    def peak(arr: np.ndarray) -> float:
        return float(np.max(np.abs(arr)[mask]))

    g_omega = np.einsum("...li,...ljk->...ijk", g, nh.Omega)
    cyclic = _cyclic(g_omega)
    g_par = (
        eg[..., :n]
        - np.einsum("...sik,...sj->...ijk", nh.B, g)
        - np.einsum("...sjk,...is->...ijk", nh.B, g)
    )
    parallel = g_par - np.swapaxes(g_par, -1, -2)
    vertical = eg[..., n:] - np.swapaxes(eg[..., n:], -1, -2)

    e = basis_forms(frame.chart, Basis.ADAPTED, lattice)
    expansion = FormField.zero(3, frame.chart, Basis.ADAPTED, lattice)
    for i in range(n):
        for j in range(n):
            for k in range(n):
                terms = (
                    (cyclic[..., i, j, k] / 6.0, (i, j, k)),
                    (0.5 * parallel[..., i, j, k], (n + i, j, k)),
                    (0.5 * vertical[..., j, i, k], (n + k, n + i, j)),
                )
                for coeff, (p, q, r) in terms:
                    if p == q or q == r or p == r:
                        continue
                    expansion = expansion + wedge(wedge(e[p], e[q]), e[r]).scale(GridField(lattice, coeff))

    out = {
        "d_omega_minus_theta": (sd.d_omega - sd.theta).max_abs(mask, lattice),
        "d_theta": sd.d_theta.max_abs(mask, lattice),
        "d_theta_expansion": expansion.max_abs(mask, lattice),
        "omega_cyclic": peak(cyclic),
        "g_parallel": peak(parallel),
        "vertical_symmetry": peak(vertical),
    }
    logger.debug("closure residuals: %s", out)
    return out


def dj_residual(D: DConnection, J: AlmostComplex, mask: np.ndarray) -> float:
    """max |(D_{e_gamma} J)^alpha_beta| = |Gamma^alpha_{delta gamma} J^delta_beta - J^alpha_delta Gamma^delta_{beta gamma}|."""
    gamma = D.gamma_full()
    DJ = np.einsum("...adg,db->...abg", gamma, J.matrix) - np.einsum("ad,...dbg->...abg", J.matrix, gamma)
    dev = np.max(np.abs(DJ), axis=(-3, -2, -1))
    return float(np.max(dev[mask]))


def compatibility_check(
    D: DConnection,
    gm: SasakiMetric,
    J: AlmostComplex,
    sd: Optional[SymplecticData] = None,
    *,
    eg: Optional[np.ndarray] = None,
    mask: Optional[np.ndarray] = None,
) -> Dict[str, float]:
    """Dg = 0 and DJ = 0 for the given d-connection."""
    mask = gm.metric.mask if mask is None else mask
    return {
        "metricity": metricity_residual(D, gm, mask, eg),
        "dj": dj_residual(D, J, mask),
    }


def finsler_mode(
    lag: Lagrangian,
    lattice: Lattice,
    *,
    margin: Optional[int] = None,
    scheme: Optional[str] = None,
) -> Dict[str, float]:
    """Full pipeline for L = F^2 plus the integer-order Euler 2-homogeneity residual."""
    if not lag.finsler:
        raise DomainError("finsler mode needs a Lagrangian flagged as F^2")
    metric = hessian_metric(lag, lattice, margin=margin)
    spray = semi_spray(lag, metric)
    frame = adapted_frame(canonical_nconnection(spray, lag.alpha, scheme))
    eg = metric_derivatives(metric, frame)
    D = canonical_dconnection(metric, frame, eg)
    report = {"homogeneity": homogeneity_residual(lag, lattice, margin=margin)}
    report.update(compatibility_check(D, sasaki_metric(metric, frame), build_almost_complex(frame), eg=eg))
    return report
