"""Objects produced by the geometry pipeline.

Index-carrying coefficients are stored as arrays whose leading axes are the
lattice axes and whose trailing axes are the tensor indices, in the order
the attribute names give (``N[..., a, j]`` is N^a_j).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from ..core.errors import DomainError
from .fields import ChartSpec, FractionalOrder, GridField, Lattice, PowerField, as_order
from .forms import FormField


@dataclass(frozen=True)
class Lagrangian:
    chart: ChartSpec
    alpha: FractionalOrder
    L: PowerField
    finsler: bool = False

    def __post_init__(self):
        object.__setattr__(self, "alpha", as_order(self.alpha))
        if self.L.chart != self.chart:
            raise DomainError("Lagrangian lives on another chart")
        if self.L.singular:
            raise DomainError("Lagrangian must not be singular at the terminals")

    @property
    def n(self) -> int:
        return self.chart.n


@dataclass(frozen=True, eq=False)
class HessianMetric:
    lattice: Lattice
    g_lower: Tuple[Tuple[PowerField, ...], ...]
    values: np.ndarray
    g_upper: np.ndarray
    det_samples: float
    mask: np.ndarray

    def lower(self, i: int, j: int) -> PowerField:
        return self.g_lower[i][j]

    def upper(self, i: int, j: int) -> GridField:
        return GridField(self.lattice, self.g_upper[..., i, j])

    def at(self, points) -> np.ndarray:
        """g_ij at arbitrary chart points (..., 2n), evaluated exactly."""
        pts = np.asarray(points, dtype=float)
        n = len(self.g_lower)
        out = np.empty(pts.shape[:-1] + (n, n))
        for i in range(n):
            for j in range(n):
                out[..., i, j] = self.g_lower[i][j].evaluate(pts)
        return out

    def inverse_residual(self) -> float:
        n = self.values.shape[-1]
        prod = np.einsum("...ij,...jk->...ik", self.g_upper, self.values)
        return float(np.max(np.abs(prod - np.eye(n))[self.mask]))


@dataclass(frozen=True, eq=False)
class SemiSpray:
    metric: HessianMetric
    brackets: Tuple[PowerField, ...]
    values: np.ndarray

    def field(self, k: int) -> GridField:
        return GridField(self.metric.lattice, self.values[..., k])

    def at(self, points) -> np.ndarray:
        """G at arbitrary chart points (..., 2n): the metric and bracket are evaluated exactly, then solved."""
        pts = np.asarray(points, dtype=float)
        g = self.metric.at(pts)
        rhs = np.stack([b.evaluate(pts) for b in self.brackets], axis=-1)
        return 0.25 * np.einsum("...kj,...j->...k", np.linalg.pinv(g), rhs)


@dataclass(frozen=True, eq=False)
class NConnection:
    chart: ChartSpec
    alpha: FractionalOrder
    lattice: Lattice
    N: np.ndarray
    scheme: Optional[str] = None

    def field(self, a: int, j: int) -> GridField:
        return GridField(self.lattice, self.N[..., a, j])

    @property
    def is_zero(self) -> bool:
        return bool(np.all(self.N == 0.0))

    def interpolate(self, points) -> np.ndarray:
        """N^a_j at off-node points by multilinear interpolation of the cached lattice values."""
        n = self.chart.n
        out = np.empty(np.asarray(points).shape[:-1] + (n, n))
        for a in range(n):
            for j in range(n):
                out[..., a, j] = self.field(a, j).interpolate(points)
        return out


@dataclass(frozen=True, eq=False)
class AdaptedFrame:
    """e_j = d_j - N^a_j d_{n+a}, e_{n+b} = d_{n+b}; dual coframe e^j = dx^j, e^{n+b} = dy^b + N^b_k dx^k."""

    nconnection: NConnection

    @property
    def chart(self) -> ChartSpec:
        return self.nconnection.chart

    @property
    def lattice(self) -> Lattice:
        return self.nconnection.lattice

    @property
    def alpha(self) -> FractionalOrder:
        return self.nconnection.alpha

    def _blocks(
        self,
        lower_left: Optional[np.ndarray] = None,
        upper_right: Optional[np.ndarray] = None,
        shape: Optional[Tuple[int, ...]] = None,
    ) -> np.ndarray:
        n = self.chart.n
        shape = self.lattice.shape if shape is None else shape
        out = np.zeros(shape + (2 * n, 2 * n))
        out[..., np.arange(2 * n), np.arange(2 * n)] = 1.0
        if lower_left is not None:
            out[..., n:, :n] = lower_left
        if upper_right is not None:
            out[..., :n, n:] = upper_right
        return out

    def frame_matrix(self) -> np.ndarray:
        """F with e_alpha = F[alpha, beta] d_beta."""
        return self._blocks(upper_right=-np.swapaxes(self.nconnection.N, -1, -2))

    def coframe_matrix(self) -> np.ndarray:
        """E with e^alpha = E[alpha, beta] du^beta."""
        return self._blocks(lower_left=self.nconnection.N)

    def coframe_matrix_at(self, points) -> np.ndarray:
        """E at off-node points (..., 2n), with N interpolated from the lattice."""
        N = self.nconnection.interpolate(points)
        return self._blocks(lower_left=N, shape=N.shape[:-2])

    def inverse_coframe_matrix(self) -> np.ndarray:
        """du^beta = Einv[beta, alpha] e^alpha."""
        return self._blocks(lower_left=-self.nconnection.N)


@dataclass(frozen=True, eq=False)
class NonholonomyData:
    """W^a_{ib} = d_b N^a_i, Omega^a_{ij} = e_i N^a_j - e_j N^a_i, B^s_{ik} = d_{y^i} N^s_k.

    The commutators of the adapted frame are [e_i, e_j] = Omega^a_{ji} e_a and
    [e_i, e_{n+b}] = W^a_{ib} e_a; vertical fields commute.
    """

    W: np.ndarray
    Omega: np.ndarray
    B: np.ndarray

    def structure_functions(self) -> np.ndarray:
        """W[..., gamma, alpha, beta] with [e_alpha, e_beta] = W^gamma_{alpha beta} e_gamma."""
        n = self.W.shape[-1]
        out = np.zeros(self.W.shape[:-3] + (2 * n, 2 * n, 2 * n))
        out[..., n:, :n, :n] = np.swapaxes(self.Omega, -1, -2)
        out[..., n:, :n, n:] = self.W
        out[..., n:, n:, :n] = -np.swapaxes(self.W, -1, -2)
        return out


@dataclass(frozen=True, eq=False)
class SasakiMetric:
    """g_kj e^k e^j + g_cb e^c e^b with both blocks equal to the Hessian metric."""

    metric: HessianMetric
    frame: AdaptedFrame

    def adapted_matrix(self, points=None) -> np.ndarray:
        """Block-diagonal (g, g) on the lattice, or at off-node ``points`` when given."""
        g = self.metric.values if points is None else self.metric.at(points)
        n = g.shape[-1]
        out = np.zeros(g.shape[:-2] + (2 * n, 2 * n))
        out[..., :n, :n] = g
        out[..., n:, n:] = g
        return out

    def coordinate_matrix(self) -> np.ndarray:
        """The same metric on du^beta du^gamma: E^T G E."""
        E = self.frame.coframe_matrix()
        return np.einsum("...ab,...ac,...cd->...bd", E, self.adapted_matrix(), E)

    def evaluate(self, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """g(X, Y) for adapted-basis component vectors (..., 2n)."""
        return np.einsum("...a,...ab,...b->...", X, self.adapted_matrix(), Y)


@dataclass(frozen=True, eq=False)
class DConnection:
    """Lhat[..., i, j, k] = L^i_{jk}, Chat[..., a, b, c] = C^a_{bc}."""

    lattice: Lattice
    Lhat: np.ndarray
    Chat: np.ndarray

    def gamma_full(self) -> np.ndarray:
        """Gamma[..., delta, alpha, gamma] with D_{e_gamma} e_alpha = Gamma^delta_{alpha gamma} e_delta.

        Horizontal and vertical index ranges are identified by the offset n.
        """
        n = self.Lhat.shape[-1]
        out = np.zeros(self.Lhat.shape[:-3] + (2 * n, 2 * n, 2 * n))
        out[..., :n, :n, :n] = self.Lhat
        out[..., n:, n:, :n] = self.Lhat
        out[..., :n, :n, n:] = self.Chat
        out[..., n:, n:, n:] = self.Chat
        return out

    def perturbed(self, lhat_scale: float = 1.0, lhat_shift: float = 0.0) -> "DConnection":
        return replace(self, Lhat=self.Lhat * lhat_scale + lhat_shift)


@dataclass(frozen=True, eq=False)
class TorsionForms:
    horizontal: Tuple[FormField, ...]
    vertical: Tuple[FormField, ...]

    def max_abs(self, mask: Optional[np.ndarray] = None, lattice: Optional[Lattice] = None) -> float:
        return float(np.max([t.max_abs(mask, lattice) for t in self.horizontal + self.vertical]))


@dataclass(frozen=True, eq=False)
class CurvatureForms:
    R: Tuple[Tuple[FormField, ...], ...]

    def max_abs(self, mask: Optional[np.ndarray] = None, lattice: Optional[Lattice] = None) -> float:
        return float(np.max([r.max_abs(mask, lattice) for row in self.R for r in row]))


@dataclass(frozen=True)
class AlmostComplex:
    """J(e_i) = -e_{n+i}, J(e_{n+i}) = e_i, as a column-action matrix in the adapted basis."""

    n: int
    matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        eye = np.eye(self.n)
        zero = np.zeros((self.n, self.n))
        object.__setattr__(self, "matrix", np.block([[zero, eye], [-eye, zero]]))

    def apply(self, X: np.ndarray) -> np.ndarray:
        return np.einsum("ab,...b->...a", self.matrix, X)

    def square_residual(self) -> float:
        return float(np.max(np.abs(self.matrix @ self.matrix + np.eye(2 * self.n))))


@dataclass(frozen=True, eq=False)
class SymplecticData:
    omega: FormField
    theta: FormField
    d_omega: FormField
    d_theta: FormField
    probe_residual: float
