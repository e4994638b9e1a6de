"""Wedge products, the fractional exterior derivative and cobasis changes of forms."""

from __future__ import annotations

from itertools import combinations
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..core.errors import BasisMismatchError, DegreeError
from ..models.fields import GridField, Lattice, ScalarField
from ..models.forms import MAX_DEGREE, Basis, FormField, sort_with_sign
from ..models.geometry import AdaptedFrame
from .caputo import Order, caputo_partial


def _accumulate(acc: Dict[Tuple[int, ...], ScalarField], key, term: ScalarField):
    acc[key] = acc[key] + term if key in acc else term


def wedge(a: FormField, b: FormField) -> FormField:
    """Graded-antisymmetric product: wedge(a, b) = (-1)^(deg a deg b) wedge(b, a)."""
    if a.chart != b.chart or a.basis != b.basis:
        raise BasisMismatchError(f"cannot wedge a {a.basis.value} form with a {b.basis.value} form")
    degree = a.degree + b.degree
    if degree > MAX_DEGREE:
        raise DegreeError(f"wedge product of degree {degree} exceeds {MAX_DEGREE}")
    lattice = a._merged_lattice(b)
    acc: Dict[Tuple[int, ...], ScalarField] = {}
    for ka, fa in a.components.items():
        for kb, fb in b.components.items():
            sign, key = sort_with_sign(ka + kb)
            if sign == 0:
                continue
            prod = fb * fa if isinstance(fb, GridField) else fa * fb
            _accumulate(acc, key, prod if sign > 0 else -prod)
    return FormField(degree, a.chart, acc, a.basis, lattice)


def _coordinate_derivative(form: FormField, alpha: Order, scheme: Optional[str]) -> FormField:
    acc: Dict[Tuple[int, ...], ScalarField] = {}
    for key, f in form.components.items():
        for beta in range(form.chart.dim):
            if beta in key:
                continue
            sign, new_key = sort_with_sign((beta,) + key)
            df = caputo_partial(f, beta, alpha, scheme)
            if df.is_zero:
                continue
            _accumulate(acc, new_key, df if sign > 0 else -df)
    return FormField(form.degree + 1, form.chart, acc, Basis.COORDINATE, form.lattice)


def exterior_derivative(
    form: FormField,
    alpha: Order,
    frame: Optional[AdaptedFrame] = None,
    scheme: Optional[str] = None,
) -> FormField:
    """d(f du^I) = sum_beta D_beta f du^beta ^ du^I with Caputo partials D_beta.

    Adapted-basis forms are expanded to the coordinate cobasis, differentiated
    there and re-expressed in the adapted cobasis of ``frame``.
    """
    if form.degree >= MAX_DEGREE:
        raise DegreeError(f"exterior derivative of a {form.degree}-form is not supported")
    if form.basis is Basis.COORDINATE:
        return _coordinate_derivative(form, alpha, scheme)
    if frame is None:
        raise BasisMismatchError("an adapted frame is needed to differentiate an adapted-basis form")
    return to_adapted(_coordinate_derivative(to_coordinate(form, frame), alpha, scheme), frame)


def _minor(matrix: np.ndarray, rows: Tuple[int, ...], cols: Tuple[int, ...]) -> np.ndarray:
    if not rows:
        return np.ones(matrix.shape[:-2])
    return np.linalg.det(matrix[..., list(rows), :][..., list(cols)])


def _change_basis(form: FormField, matrix: np.ndarray, lattice: Lattice, target: Basis) -> FormField:
    """Re-express sum_I f_I b^I where b^I = sum_K det(matrix[I, K]) c^K."""
    dim = form.chart.dim
    acc: Dict[Tuple[int, ...], ScalarField] = {}
    for key, f in form.components.items():
        for cols in combinations(range(dim), form.degree):
            minor = _minor(matrix, key, cols)
            if np.all(minor == 0.0):
                continue
            if np.all(minor == 1.0):
                term = f
            else:
                term = GridField(lattice, minor) * f
            _accumulate(acc, cols, term)
    return FormField(form.degree, form.chart, acc, target, lattice)


def to_coordinate(form: FormField, frame: AdaptedFrame) -> FormField:
    if form.basis is Basis.COORDINATE:
        return form
    return _change_basis(form, frame.coframe_matrix(), frame.lattice, Basis.COORDINATE)


def to_adapted(form: FormField, frame: AdaptedFrame) -> FormField:
    if form.basis is Basis.ADAPTED:
        return form
    return _change_basis(form, frame.inverse_coframe_matrix(), frame.lattice, Basis.ADAPTED)


def basis_forms(chart, basis: Basis, lattice: Optional[Lattice] = None) -> List[FormField]:
    """The 2n basis 1-forms of a cobasis."""
    return [FormField.coframe(chart, k, basis, lattice) for k in range(chart.dim)]


def form_matrix(form: FormField, lattice: Lattice) -> np.ndarray:
    """Antisymmetric coefficient matrix (..., 2n, 2n) of a 2-form, so that form(X, Y) = X^T M Y."""
    if form.degree != 2:
        raise DegreeError(f"coefficient matrix needs a 2-form, got degree {form.degree}")
    dim = form.chart.dim
    out = np.zeros(lattice.shape + (dim, dim))
    for (a, b), vals in form.component_values(lattice).items():
        out[..., a, b] = vals
        out[..., b, a] = -vals
    return out


def form_matrix_at(form: FormField, points) -> np.ndarray:
    """:func:`form_matrix` at off-node points of shape (..., 2n)."""
    if form.degree != 2:
        raise DegreeError(f"coefficient matrix needs a 2-form, got degree {form.degree}")
    dim = form.chart.dim
    pts = np.asarray(points, dtype=float)
    out = np.zeros(pts.shape[:-1] + (dim, dim))
    for (a, b), vals in form.values_at(pts).items():
        out[..., a, b] = vals
        out[..., b, a] = -vals
    return out
