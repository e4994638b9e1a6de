from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..core.errors import BasisMismatchError, DegreeError, DomainError
from .fields import ChartSpec, GridField, Lattice, PowerField, ScalarField, sample_values

Index = Tuple[int, ...]

MAX_DEGREE = 3


class Basis(str, Enum):
    COORDINATE = "coordinate"  # (du^beta)^alpha
    ADAPTED = "adapted"  # e^j = dx^j, e^{n+b} = dy^b + N^b_k dx^k


def sort_with_sign(indices: Sequence[int]) -> Tuple[int, Index]:
    """Sign of the sorting permutation and the sorted tuple; sign 0 on a repeated index."""
    idx = list(indices)
    if len(set(idx)) != len(idx):
        return 0, tuple(sorted(idx))
    sign = 1
    for i in range(len(idx)):
        for j in range(len(idx) - 1 - i):
            if idx[j] > idx[j + 1]:
                idx[j], idx[j + 1] = idx[j + 1], idx[j]
                sign = -sign
    return sign, tuple(idx)


@dataclass(frozen=True, eq=False)
class FormField:
    """A k-form with scalar-field coefficients, stored once per increasing index tuple."""

    degree: int
    chart: ChartSpec
    components: Mapping[Index, ScalarField] = field(default_factory=dict)
    basis: Basis = Basis.COORDINATE
    lattice: Optional[Lattice] = None

    def __post_init__(self):
        if not 0 <= self.degree <= MAX_DEGREE:
            raise DegreeError(f"form degree must lie in [0, {MAX_DEGREE}], got {self.degree}")
        lattice = self.lattice
        comps: Dict[Index, ScalarField] = {}
        for key, f in self.components.items():
            key = tuple(int(k) for k in key)
            if len(key) != self.degree:
                raise DegreeError(f"index {key} does not fit a {self.degree}-form")
            if any(not 0 <= k < self.chart.dim for k in key) or list(key) != sorted(set(key)):
                raise DomainError(f"component index {key} must be strictly increasing chart axes")
            if isinstance(f, GridField):
                if lattice is None:
                    lattice = f.lattice
                elif f.lattice != lattice:
                    raise BasisMismatchError("form components live on different lattices")
            elif isinstance(f, PowerField):
                if f.chart != self.chart:
                    raise BasisMismatchError("form component lives on another chart")
            else:
                raise DomainError(f"unsupported component type {type(f).__name__}")
            if not f.is_zero:
                comps[key] = f
        object.__setattr__(self, "components", dict(sorted(comps.items())))
        object.__setattr__(self, "basis", Basis(self.basis))
        object.__setattr__(self, "lattice", lattice)

    @classmethod
    def zero(cls, degree: int, chart: ChartSpec, basis: Basis = Basis.COORDINATE, lattice: Optional[Lattice] = None) -> "FormField":
        return cls(degree, chart, {}, basis, lattice)

    @classmethod
    def scalar(cls, f: ScalarField, basis: Basis = Basis.COORDINATE) -> "FormField":
        lattice = f.lattice if isinstance(f, GridField) else None
        return cls(0, f.chart, {(): f}, basis, lattice)

    @classmethod
    def coframe(cls, chart: ChartSpec, axis: int, basis: Basis = Basis.COORDINATE, lattice: Optional[Lattice] = None) -> "FormField":
        """The basis 1-form of index ``axis`` in the given cobasis."""
        return cls(1, chart, {(chart.check_axis(axis),): PowerField.constant(chart, 1.0)}, basis, lattice)

    @classmethod
    def from_signed(
        cls,
        degree: int,
        chart: ChartSpec,
        items: Iterable[Tuple[Sequence[int], ScalarField]],
        basis: Basis = Basis.COORDINATE,
        lattice: Optional[Lattice] = None,
    ) -> "FormField":
        """Accumulate coefficients given on arbitrary index orderings."""
        acc: Dict[Index, ScalarField] = {}
        for indices, f in items:
            sign, key = sort_with_sign(indices)
            if sign == 0:
                continue
            term = f if sign > 0 else -f
            acc[key] = acc[key] + term if key in acc else term
        return cls(degree, chart, acc, basis, lattice)

    def component(self, *indices: int) -> ScalarField:
        sign, key = sort_with_sign(indices)
        if len(key) != self.degree:
            raise DegreeError(f"{self.degree}-form indexed with {len(key)} indices")
        f = self.components.get(key) if sign else None
        if f is None:
            return PowerField.constant(self.chart, 0.0)
        return f if sign > 0 else -f

    def _require_lattice(self, lattice: Optional[Lattice]) -> Lattice:
        lattice = lattice or self.lattice
        if lattice is None:
            raise DomainError("a lattice is needed to sample this form")
        return lattice

    def component_values(self, lattice: Optional[Lattice] = None) -> Dict[Index, np.ndarray]:
        lattice = self._require_lattice(lattice)
        return {key: sample_values(f, lattice) for key, f in self.components.items()}

    def values_at(self, points) -> Dict[Index, np.ndarray]:
        """Coefficients at off-node points (..., 2n); grid components are interpolated multilinearly."""
        return {
            key: f.interpolate(points) if isinstance(f, GridField) else np.asarray(f.evaluate(points))
            for key, f in self.components.items()
        }

    def max_abs(self, mask: Optional[np.ndarray] = None, lattice: Optional[Lattice] = None) -> float:
        """Largest coefficient magnitude over the nodes in ``mask`` (NaN if any is NaN)."""
        if not self.components:
            return 0.0
        lattice = self._require_lattice(lattice)
        peaks = [
            np.max(np.abs(vals if mask is None else vals[mask]))
            for vals in self.component_values(lattice).values()
        ]
        return float(np.max(peaks))

    def _check_compatible(self, other: "FormField"):
        if other.chart != self.chart or other.basis != self.basis:
            raise BasisMismatchError(f"cannot combine {self.basis.value} and {other.basis.value} forms")
        if other.degree != self.degree:
            raise DegreeError(f"cannot add a {self.degree}-form and a {other.degree}-form")

    def _merged_lattice(self, other: "FormField") -> Optional[Lattice]:
        if self.lattice is not None and other.lattice is not None and self.lattice != other.lattice:
            raise BasisMismatchError("forms live on different lattices")
        return self.lattice or other.lattice

    def __add__(self, other: "FormField") -> "FormField":
        if not isinstance(other, FormField):
            return NotImplemented
        self._check_compatible(other)
        acc = dict(self.components)
        for key, f in other.components.items():
            acc[key] = acc[key] + f if key in acc else f
        return FormField(self.degree, self.chart, acc, self.basis, self._merged_lattice(other))

    def __neg__(self) -> "FormField":
        return FormField(self.degree, self.chart, {k: -f for k, f in self.components.items()}, self.basis, self.lattice)

    def __sub__(self, other: "FormField") -> "FormField":
        if not isinstance(other, FormField):
            return NotImplemented
        return self + (-other)

    def scale(self, f) -> "FormField":
        """Multiply every coefficient by a scalar field or number."""
        lattice = self.lattice
        if isinstance(f, GridField):
            if lattice is not None and lattice != f.lattice:
                raise BasisMismatchError("scaling field lives on a different lattice")
            lattice = f.lattice
        comps = {k: (f * c if isinstance(f, GridField) else c * f) for k, c in self.components.items()}
        return FormField(self.degree, self.chart, comps, self.basis, lattice)

    def __repr__(self) -> str:
        keys = ", ".join(str(k) for k in self.components)
        return f"FormField(degree={self.degree}, basis={self.basis.value}, components=[{keys}])"
