import numpy as np
import pytest

from frakgeo.models.fields import GridField, Lattice, PowerField
from frakgeo.models.forms import FormField
from frakgeo.services.caputo import caputo_partial_power
from frakgeo.services.dconnection import (
    canonical_dconnection,
    connection_forms,
    metric_derivatives,
    metricity_residual,
    sasaki_metric,
    structure_equation_residuals,
    torsion_forms,
)
from frakgeo.services.nconnection import (
    commutator_residual,
    duality_residual,
    frame_apply,
    nonholonomy,
)

from .conftest import build_frame, make_lagrangian


def test_flat_nconnection_vanishes(flat1, lattice1):
    metric, _, frame = build_frame(flat1, lattice1)
    assert frame.nconnection.is_zero
    nh = nonholonomy(frame)
    assert not np.any(nh.W) and not np.any(nh.Omega) and not np.any(nh.B)
    f = PowerField.monomial(flat1.chart, 1.0, [2, 1])
    np.testing.assert_array_equal(
        frame_apply(frame, 0, f).values, caputo_partial_power(f, 0, 1.0).sample(lattice1).values
    )


def test_curved_nconnection(curved1, lattice1):
    metric, _, frame = build_frame(curved1, lattice1)
    mesh = lattice1.mesh()
    x, y = mesh[..., 0], mesh[..., 1]
    N = frame.nconnection.N[..., 0, 0]
    np.testing.assert_allclose(N, y / (2.0 * (1.0 + x)), atol=1e-10)

    y1 = PowerField.coordinate(curved1.chart, 1)
    np.testing.assert_allclose(frame_apply(frame, 0, y1).values, -N, atol=1e-12)
    assert frame_apply(frame, 1, PowerField.constant(curved1.chart, 4.0)).is_zero

    nh = nonholonomy(frame)
    assert np.max(np.abs(nh.Omega)) == 0.0
    assert duality_residual(frame, metric.mask) < 1e-14


def test_fractional_nconnection_is_finite(chart1, lattice1):
    lag = make_lagrangian(chart1, [(1.0, [0, 2]), (1.0, [1, 2])], alpha=0.5)
    metric, _, frame = build_frame(lag, lattice1)
    assert np.all(np.isfinite(frame.nconnection.N[metric.mask]))


def test_commutator_with_cross_term(cross2, lattice2):
    metric, _, frame = build_frame(cross2, lattice2)
    nh = nonholonomy(frame)
    assert duality_residual(frame, metric.mask) < 1e-14
    assert commutator_residual(frame, nh, mask=metric.mask) <= 1e-4


def test_sasaki_blocks(curved1, lattice1):
    metric, _, frame = build_frame(curved1, lattice1)
    gm = sasaki_metric(metric, frame)
    e = np.eye(2)
    np.testing.assert_allclose(gm.evaluate(e[0], e[0]), metric.values[..., 0, 0])
    np.testing.assert_allclose(gm.evaluate(e[1], e[1]), metric.values[..., 0, 0])
    assert np.max(np.abs(gm.evaluate(e[0], e[1]))) == 0.0


def test_flat_dconnection(flat1, lattice1):
    metric, _, frame = build_frame(flat1, lattice1)
    D = canonical_dconnection(metric, frame)
    assert np.max(np.abs(D.Lhat)) < 1e-12 and np.max(np.abs(D.Chat)) < 1e-12
    T = torsion_forms(D, frame, nonholonomy(frame))
    assert T.max_abs(metric.mask, lattice1) < 1e-12
    first, second, R = structure_equation_residuals(D, frame, T, metric.mask)
    assert first <= 1e-10 and second <= 1e-10
    assert R.max_abs(metric.mask, lattice1) <= 1e-10


def test_curved_dconnection(curved1, lattice1):
    metric, _, frame = build_frame(curved1, lattice1)
    eg = metric_derivatives(metric, frame)
    D = canonical_dconnection(metric, frame, eg)
    x = lattice1.mesh()[..., 0]
    np.testing.assert_allclose(D.Lhat[..., 0, 0, 0], 1.0 / (2.0 * (1.0 + x)), atol=1e-10)
    assert np.max(np.abs(D.Chat)) < 1e-10

    gm = sasaki_metric(metric, frame)
    assert metricity_residual(D, gm, eg=eg) <= 1e-6
    assert metricity_residual(D.perturbed(lhat_scale=1.1), gm, eg=eg) > 1e-2


def test_perturbed_flat_connection_is_detected(flat1, lattice1):
    metric, _, frame = build_frame(flat1, lattice1)
    D = canonical_dconnection(metric, frame)
    gm = sasaki_metric(metric, frame)
    assert metricity_residual(D, gm) <= 1e-12
    assert metricity_residual(D.perturbed(lhat_shift=0.1), gm) > 1e-2


@pytest.mark.parametrize("alpha, tol", [(1.0, 1e-6), (0.5, 1e-3)])
def test_metricity_of_canonical_connection(chart1, lattice1, alpha, tol):
    lag = make_lagrangian(chart1, [(1.0, [0, 2]), (1.0, [1, 2])], alpha=alpha)
    metric, _, frame = build_frame(lag, lattice1)
    D = canonical_dconnection(metric, frame)
    assert metricity_residual(D, sasaki_metric(metric, frame)) <= tol


def test_curved_torsion_and_structure_equations(curved1, lattice1):
    metric, _, frame = build_frame(curved1, lattice1)
    nh = nonholonomy(frame)
    D = canonical_dconnection(metric, frame)
    T = torsion_forms(D, frame, nh)
    assert T.horizontal[0].max_abs(metric.mask) < 1e-10
    mixed = T.vertical[0].component(0, 1).values
    np.testing.assert_allclose(mixed, nh.W[..., 0, 0, 0] - D.Lhat[..., 0, 0, 0])

    first, second, _ = structure_equation_residuals(D, frame, T, metric.mask)
    assert first <= 1e-4 and second <= 1e-4


def test_structure_equations_at_fractional_order(chart1, lattice1):
    lag = make_lagrangian(chart1, [(1.0, [0, 2]), (1.0, [1, 2])], alpha=0.6)
    metric, _, frame = build_frame(lag, lattice1)
    D = canonical_dconnection(metric, frame)
    T = torsion_forms(D, frame, nonholonomy(frame))
    first, second, _ = structure_equation_residuals(D, frame, T, metric.mask)
    assert first <= 5e-3 and second <= 5e-3


def test_connection_forms_shape(cross2, lattice2):
    metric, _, frame = build_frame(cross2, lattice2)
    gamma = connection_forms(canonical_dconnection(metric, frame), frame)
    assert len(gamma) == 2 and all(len(row) == 2 for row in gamma)
    assert all(f.degree == 1 for row in gamma for f in row)


def test_grid_interpolation_is_exact_on_linear_fields(lattice1):
    mesh = lattice1.mesh()
    field = GridField(lattice1, 2.0 + 3.0 * mesh[..., 0] - mesh[..., 1])
    pts = np.array([[0.01, 0.99], [0.5, 0.123], [0.77, 0.3]])
    np.testing.assert_allclose(field.interpolate(pts), 2.0 + 3.0 * pts[:, 0] - pts[:, 1], atol=1e-13)


def test_nconnection_interpolates_between_nodes(curved1, lattice1):
    _, _, frame = build_frame(curved1, lattice1)
    nc = frame.nconnection
    mesh = lattice1.mesh()
    np.testing.assert_allclose(nc.interpolate(mesh[3:6, 4:8]), nc.N[3:6, 4:8], atol=1e-14)

    h = lattice1.spacing(0)
    mid = mesh[2:30, 2:30] + 0.5 * h
    x, y = mid[..., 0], mid[..., 1]
    assert np.max(np.abs(nc.interpolate(mid)[..., 0, 0] - y / (2.0 * (1.0 + x)))) <= 1e-3

    form = FormField(1, curved1.chart, {(0,): nc.field(0, 0), (1,): PowerField.coordinate(curved1.chart, 1)})
    values = form.values_at(mid)
    np.testing.assert_allclose(values[(0,)], nc.interpolate(mid)[..., 0, 0])
    np.testing.assert_allclose(values[(1,)], y)
