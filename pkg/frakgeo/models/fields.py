"""Charts, lattices and the two scalar-field carriers.

``PowerField`` is a finite sum of shifted-power monomials
``c * prod_beta (u^beta - terminal_beta) ** p_beta``; it is closed under left
Caputo derivatives taken from the chart terminals. ``GridField`` holds samples
on a uniform lattice whose axes start exactly at the terminals, which is what
the nonlocal quadrature needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from numbers import Real
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.errors import DomainError, SingularityError

Exponents = Tuple[float, ...]

# Relative size below which a merged coefficient counts as cancelled.
_PRUNE = 1e-14


@dataclass(frozen=True)
class FractionalOrder:
    alpha: float

    def __post_init__(self):
        a = float(self.alpha)
        if not (0.0 < a <= 1.0):
            raise DomainError(f"fractional order must lie in (0, 1], got {self.alpha}")
        object.__setattr__(self, "alpha", a)

    @property
    def is_integer(self) -> bool:
        return self.alpha == 1.0

    def __float__(self) -> float:
        return self.alpha


def as_order(alpha: Union[float, FractionalOrder]) -> FractionalOrder:
    return alpha if isinstance(alpha, FractionalOrder) else FractionalOrder(float(alpha))


@dataclass(frozen=True)
class ChartSpec:
    """Local chart u = (x^1..x^n, y^1..y^n) with lower Caputo terminals.

    Axes are 0-based: x^j is axis j, y^b is axis n + b.
    """

    n: int
    terminals_x: Tuple[float, ...] = ()
    terminals_y: Tuple[float, ...] = ()

    def __post_init__(self):
        if int(self.n) < 1:
            raise DomainError(f"base dimension must be positive, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        tx = tuple(float(t) for t in self.terminals_x) or (0.0,) * self.n
        ty = tuple(float(t) for t in self.terminals_y) or (0.0,) * self.n
        if len(tx) != self.n or len(ty) != self.n:
            raise DomainError(f"terminal arrays must have length n={self.n}")
        object.__setattr__(self, "terminals_x", tx)
        object.__setattr__(self, "terminals_y", ty)

    @property
    def dim(self) -> int:
        return 2 * self.n

    @property
    def terminals(self) -> Tuple[float, ...]:
        return self.terminals_x + self.terminals_y

    def vertical(self, i: int) -> int:
        """Axis of y^i paired with x^i (the fixed h/v index identification)."""
        return self.n + i

    def is_vertical(self, axis: int) -> bool:
        return axis >= self.n

    def label(self, axis: int) -> str:
        return f"y{axis - self.n + 1}" if self.is_vertical(axis) else f"x{axis + 1}"

    def check_axis(self, axis: int) -> int:
        if not 0 <= axis < self.dim:
            raise DomainError(f"axis {axis} outside chart of dimension {self.dim}")
        return axis


@dataclass(frozen=True)
class Lattice:
    """Uniform rectangular lattice; axis k runs from its terminal to ``upper[k]``."""

    chart: ChartSpec
    upper: Tuple[float, ...]
    points: Tuple[int, ...]

    def __post_init__(self):
        upper = tuple(float(u) for u in self.upper)
        points = tuple(int(p) for p in self.points)
        if len(upper) != self.chart.dim or len(points) != self.chart.dim:
            raise DomainError(f"lattice needs {self.chart.dim} axes")
        for k, (t, u, m) in enumerate(zip(self.chart.terminals, upper, points)):
            if m < 3:
                raise DomainError(f"axis {self.chart.label(k)} needs at least 3 points, got {m}")
            if u <= t:
                raise DomainError(f"axis {self.chart.label(k)}: upper bound {u} must exceed terminal {t}")
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "points", points)

    @classmethod
    def uniform(cls, chart: ChartSpec, upper: float = 1.0, points: int = 17) -> "Lattice":
        return cls(chart, tuple(t + upper for t in chart.terminals), (points,) * chart.dim)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.points

    @property
    def size(self) -> int:
        return int(np.prod(self.points))

    def axis(self, k: int) -> np.ndarray:
        return np.linspace(self.chart.terminals[k], self.upper[k], self.points[k])

    def axes(self) -> Tuple[np.ndarray, ...]:
        return tuple(self.axis(k) for k in range(self.chart.dim))

    def spacing(self, k: int) -> float:
        return (self.upper[k] - self.chart.terminals[k]) / (self.points[k] - 1)

    def coordinate(self, k: int) -> np.ndarray:
        """Axis k reshaped to broadcast against lattice-shaped arrays."""
        shape = [1] * self.chart.dim
        shape[k] = self.points[k]
        return self.axis(k).reshape(shape)

    def mesh(self) -> np.ndarray:
        """All nodes as an array of shape (*shape, 2n)."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def interior_mask(self, margin: Optional[int] = None) -> np.ndarray:
        """Evaluation nodes: off the terminal (null section) and ``margin`` cells from the upper end."""
        if margin is None:
            from ..core.config import get_settings

            margin = get_settings().boundary_margin
        mask = np.ones(self.shape, dtype=bool)
        for k, m in enumerate(self.points):
            keep = np.zeros(m, dtype=bool)
            keep[1:max(1, m - margin)] = True
            shape = [1] * self.chart.dim
            shape[k] = m
            mask &= keep.reshape(shape)
        if not mask.any():
            raise DomainError("lattice too coarse: no interior nodes left")
        return mask


def _exponent_key(exps: Iterable[float]) -> Exponents:
    return tuple(0.0 if abs(e) < 1e-13 else round(float(e), 12) for e in exps)


def _canonical(
    chart: ChartSpec,
    pairs: Iterable[Tuple[Sequence[float], float]],
    allow_singular: bool,
    integrable: bool = True,
):
    acc: dict = {}
    for exps, coeff in pairs:
        if len(exps) != chart.dim:
            raise DomainError(f"monomial needs {chart.dim} exponents, got {len(exps)}")
        key = _exponent_key(exps)
        if integrable and any(e <= -1.0 for e in key):
            raise DomainError(f"exponent vector {key} is not locally integrable")
        if not allow_singular and any(e < 0 for e in key):
            raise DomainError(f"negative exponent in {key}")
        total, scale = acc.get(key, (0.0, 0.0))
        acc[key] = (total + float(coeff), scale + abs(float(coeff)))
    return tuple(
        (key, total) for key, (total, scale) in sorted(acc.items())
        if total != 0.0 and abs(total) > _PRUNE * scale
    )


@dataclass(frozen=True)
class PowerField:
    chart: ChartSpec
    terms: Tuple[Tuple[Exponents, float], ...] = field(default=())

    # construction

    @classmethod
    def from_terms(
        cls,
        chart: ChartSpec,
        terms: Iterable[Tuple[float, Sequence[float]]],
        *,
        allow_singular: bool = False,
    ) -> "PowerField":
        """Build from ``(coeff, exponents)`` pairs; exponents ordered as the chart axes."""
        return cls(chart, _canonical(chart, ((e, c) for c, e in terms), allow_singular))

    @classmethod
    def _raw(cls, chart: ChartSpec, pairs: Iterable[Tuple[Sequence[float], float]]) -> "PowerField":
        # derivatives of singular fields may drop below -1; they still sample and evaluate
        return cls(chart, _canonical(chart, pairs, allow_singular=True, integrable=False))

    @classmethod
    def constant(cls, chart: ChartSpec, value: float) -> "PowerField":
        return cls._raw(chart, [((0.0,) * chart.dim, value)])

    @classmethod
    def monomial(cls, chart: ChartSpec, coeff: float, exponents: Sequence[float]) -> "PowerField":
        return cls.from_terms(chart, [(coeff, exponents)])

    @classmethod
    def coordinate(cls, chart: ChartSpec, axis: int) -> "PowerField":
        """The shifted coordinate u^axis - terminal."""
        exps = [0.0] * chart.dim
        exps[chart.check_axis(axis)] = 1.0
        return cls._raw(chart, [(exps, 1.0)])

    @classmethod
    def coordinate_value(cls, chart: ChartSpec, axis: int) -> "PowerField":
        """The coordinate u^axis itself, as (u - terminal) + terminal."""
        return cls.coordinate(chart, axis) + chart.terminals[axis]

    # inspection

    @property
    def singular(self) -> bool:
        """True when some exponent is negative (the field blows up at a terminal)."""
        return bool(self.singular_axes())

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def singular_axes(self) -> Tuple[int, ...]:
        """Axes along which some monomial has a negative exponent."""
        return tuple(sorted({k for exps, _ in self.terms for k, e in enumerate(exps) if e < 0}))

    def depends_on(self, axis: int) -> bool:
        return any(exps[axis] != 0.0 for exps, _ in self.terms)

    def max_abs_coefficient(self) -> float:
        return max((abs(c) for _, c in self.terms), default=0.0)

    # algebra

    def _check_chart(self, other: "PowerField"):
        if other.chart != self.chart:
            raise DomainError("power fields live on different charts")

    def __add__(self, other):
        if isinstance(other, PowerField):
            self._check_chart(other)
            return PowerField._raw(self.chart, self.terms + other.terms)
        if isinstance(other, Real):
            return self + PowerField.constant(self.chart, float(other))
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return PowerField(self.chart, tuple((e, -c) for e, c in self.terms))

    def __sub__(self, other):
        if isinstance(other, (PowerField, Real)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, Real):
            return (-self) + other
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Real):
            if other == 0:
                return PowerField(self.chart)
            return PowerField(self.chart, tuple((e, c * float(other)) for e, c in self.terms))
        if isinstance(other, PowerField):
            self._check_chart(other)
            pairs = [
                (tuple(a + b for a, b in zip(ea, eb)), ca * cb)
                for ea, ca in self.terms
                for eb, cb in other.terms
            ]
            return PowerField._raw(self.chart, pairs)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Real):
            return self * (1.0 / float(other))
        return NotImplemented

    # evaluation

    def evaluate(self, points) -> Union[float, np.ndarray]:
        """Evaluate at absolute coordinates; ``points`` has shape (..., 2n)."""
        pts = np.asarray(points, dtype=float)
        if pts.shape[-1] != self.chart.dim:
            raise DomainError(f"points need {self.chart.dim} coordinates")
        rel = pts - np.asarray(self.chart.terminals)
        if np.any(rel < 0):
            raise DomainError("point lies below a chart terminal")
        out = np.zeros(pts.shape[:-1])
        for exps, coeff in self.terms:
            val = np.full(pts.shape[:-1], coeff)
            for k, e in enumerate(exps):
                if e == 0.0:
                    continue
                r = rel[..., k]
                if e < 0 and np.any(r == 0):
                    raise SingularityError(
                        f"field singular at terminal of {self.chart.label(k)} (exponent {e})"
                    )
                val = val * r ** e
            out = out + val
        return float(out) if out.ndim == 0 else out

    __call__ = evaluate

    def sample(self, lattice: Lattice, *, strict: bool = True) -> "GridField":
        """Sample on a lattice.

        With ``strict=False`` a singular field gets NaN at the terminal nodes
        instead of raising; those nodes are outside every evaluation mask.
        """
        if lattice.chart != self.chart:
            raise DomainError("lattice and field live on different charts")
        values = np.zeros(lattice.shape)
        for exps, coeff in self.terms:
            val = np.asarray(coeff)
            for k, e in enumerate(exps):
                if e == 0.0:
                    continue
                rel = lattice.coordinate(k) - self.chart.terminals[k]
                if e < 0:
                    if strict:
                        raise SingularityError(
                            f"cannot sample singular field at terminal of {self.chart.label(k)}"
                        )
                    with np.errstate(divide="ignore"):
                        p = rel ** e
                    p = np.where(rel == 0, np.nan, p)
                else:
                    p = rel ** e
                val = val * p
            values = values + val
        return GridField(lattice, np.broadcast_to(values, lattice.shape).copy())

    def __repr__(self) -> str:
        if not self.terms:
            return "PowerField(0)"
        parts = []
        for exps, coeff in self.terms:
            factors = [
                f"{self.chart.label(k)}^{e:g}" for k, e in enumerate(exps) if e != 0.0
            ]
            parts.append("*".join([f"{coeff:.6g}"] + factors))
        return "PowerField(" + " + ".join(parts) + ")"


@dataclass(frozen=True, eq=False)
class GridField:
    lattice: Lattice
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != self.lattice.shape:
            raise DomainError(f"values shape {values.shape} does not match lattice {self.lattice.shape}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, lattice: Lattice) -> "GridField":
        return cls(lattice, np.zeros(lattice.shape))

    @property
    def chart(self) -> ChartSpec:
        return self.lattice.chart

    @property
    def is_zero(self) -> bool:
        return bool(np.all(self.values == 0.0))

    def _coerce(self, other):
        if isinstance(other, GridField):
            if other.lattice != self.lattice:
                raise DomainError("grid fields live on different lattices")
            return other.values
        if isinstance(other, PowerField):
            return other.sample(self.lattice, strict=False).values
        if isinstance(other, Real):
            return float(other)
        if isinstance(other, np.ndarray) and other.shape == self.lattice.shape:
            return other
        return None

    def _wrap(self, values) -> "GridField":
        return GridField(self.lattice, values)

    def __add__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is None else self._wrap(self.values + v)

    __radd__ = __add__

    def __sub__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is None else self._wrap(self.values - v)

    def __rsub__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is None else self._wrap(v - self.values)

    def __mul__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is None else self._wrap(self.values * v)

    __rmul__ = __mul__

    def __truediv__(self, other):
        v = self._coerce(other)
        return NotImplemented if v is None else self._wrap(self.values / v)

    def __neg__(self):
        return self._wrap(-self.values)

    def max_abs(self, mask: Optional[np.ndarray] = None) -> float:
        vals = self.values if mask is None else self.values[mask]
        return float(np.max(np.abs(vals))) if vals.size else 0.0

    def interpolate(self, points) -> np.ndarray:
        """Multilinear interpolation at off-node points of shape (..., 2n)."""
        from ..adapters.spline import multilinear

        return multilinear(self.lattice.axes(), self.values, points)


ScalarField = Union[PowerField, GridField]


def sample_values(f: Union[ScalarField, float], lattice: Lattice) -> np.ndarray:
    """Lattice values of any scalar field; singular PowerFields get NaN at terminals."""
    if isinstance(f, GridField):
        if f.lattice != lattice:
            raise DomainError("grid field lives on a different lattice")
        return np.asarray(f.values)
    if isinstance(f, PowerField):
        return f.sample(lattice, strict=False).values
    return np.full(lattice.shape, float(f))
