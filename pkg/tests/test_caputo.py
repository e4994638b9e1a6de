import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frakgeo.core.errors import DomainError, OffGridError
from frakgeo.models.fields import ChartSpec, GridField, Lattice, PowerField
from frakgeo.services.caputo import (
    caputo_matrix,
    caputo_partial,
    caputo_partial_grid,
    caputo_partial_power,
    caputo_power,
    caputo_quadrature,
    rl_left_reference,
)


@pytest.mark.parametrize(
    "p, alpha, x, expected",
    [
        (0.0, 0.5, 2.0, 0.0),
        (2.0, 1.0, 3.0, 6.0),
        (1.0, 0.5, 1.0, 2.0 / math.sqrt(math.pi)),
    ],
)
def test_power_rule_values(p, alpha, x, expected):
    assert caputo_power(p, alpha, x) == pytest.approx(expected, abs=1e-12)


def test_power_rule_rejects_bad_order():
    with pytest.raises(DomainError):
        caputo_power(1.0, 1.5, 1.0)
    with pytest.raises(DomainError):
        caputo_power(1.0, 0.0, 1.0)


def test_partial_power_examples(chart1):
    five = PowerField.constant(chart1, 5.0)
    assert caputo_partial_power(five, 0, 0.5).is_zero

    y2 = PowerField.monomial(chart1, 1.0, [0, 2])
    dy = caputo_partial_power(y2, 1, 1.0)
    assert dy.terms == (((0.0, 1.0), 2.0),)

    f = PowerField.monomial(chart1, 1.0, [1, 2])
    df = caputo_partial_power(f, 0, 0.5)
    pts = np.array([[0.2, 0.3], [0.5, 0.5], [0.9, 0.1], [0.1, 0.8], [0.7, 0.7]])
    expected = (1.0 / math.gamma(1.5)) * pts[:, 0] ** 0.5 * pts[:, 1] ** 2
    np.testing.assert_allclose(df(pts), expected, rtol=1e-12)
    for (x, y), v in zip(pts, df(pts)):
        samples = np.linspace(0.0, x, 2049) * y**2
        assert caputo_quadrature(samples, 0.5, x, upper=x) == pytest.approx(v, abs=2e-3)


def test_partial_power_integer_limit_is_derivative(chart1):
    f = PowerField.from_terms(chart1, [(3.0, [3, 1]), (-2.0, [1, 0]), (4.0, [0, 2])])
    df = caputo_partial_power(f, 0, 1.0)
    pts = np.array([[0.3, 0.4], [0.8, 0.9]])
    np.testing.assert_allclose(df(pts), 9.0 * pts[:, 0] ** 2 * pts[:, 1] - 2.0, rtol=1e-12)


@settings(max_examples=30, deadline=None)
@given(
    a=st.floats(-3, 3, allow_nan=False),
    b=st.floats(-3, 3, allow_nan=False),
    alpha=st.sampled_from([0.25, 0.5, 0.8, 1.0]),
)
def test_partial_power_is_linear(a, b, alpha):
    chart = ChartSpec(1)
    f = PowerField.from_terms(chart, [(1.0, [2, 1]), (0.5, [0.5, 0])])
    g = PowerField.from_terms(chart, [(2.0, [3, 0]), (-1.0, [1, 2])])
    lhs = caputo_partial_power(f * a + g * b, 0, alpha)
    rhs = caputo_partial_power(f, 0, alpha) * a + caputo_partial_power(g, 0, alpha) * b
    pts = np.array([[0.3, 0.7], [0.9, 0.2]])
    np.testing.assert_allclose(lhs(pts), rhs(pts), atol=1e-9)


def test_quadrature_constant_vanishes():
    samples = np.full(65, 7.0)
    for at in (0.0, 0.25, 1.0):
        assert abs(caputo_quadrature(samples, 0.5, at)) < 1e-12


def test_quadrature_converges_to_power_rule():
    t = np.linspace(0.0, 1.0, 4096)
    assert caputo_quadrature(t, 0.5, 1.0) == pytest.approx(1.12838, abs=1e-4)
    assert caputo_quadrature(t**2, 1.0, 1.0) == pytest.approx(2.0, abs=1e-3)


def test_quadrature_rejects_off_grid_points():
    samples = np.linspace(0.0, 1.0, 11)
    with pytest.raises(OffGridError):
        caputo_quadrature(samples, 0.5, 0.33)
    with pytest.raises(OffGridError):
        caputo_quadrature(samples, 0.5, -0.1)


def test_rl_reference():
    x, alpha = 0.8, 0.5
    samples = np.full(257, 3.0)
    expected = 3.0 * x**-alpha / math.gamma(1 - alpha)
    assert rl_left_reference(samples, alpha, x, upper=x) == pytest.approx(expected, rel=0.02)

    t = np.linspace(0.0, 1.0, 2049)
    assert rl_left_reference(t, 1.0, 1.0) == pytest.approx(1.0, abs=1e-3)
    assert rl_left_reference(t, 0.5, 1.0) == pytest.approx(1.12838, abs=1e-3)


def test_l1_matrix_reproduces_quadrature():
    t = np.linspace(0.0, 1.0, 17)
    f = np.sin(3 * t)
    M = caputo_matrix(0.0, 1.0, 17, 0.6, "l1")
    for j in (0, 5, 16):
        assert M[j] @ f == pytest.approx(caputo_quadrature(f, 0.6, t[j]), abs=1e-13)
    assert np.allclose(np.triu(M, 1), 0.0)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 1.0])
def test_spline_matrix_is_exact_on_cubics(alpha):
    t = np.linspace(0.0, 1.0, 33)
    M = caputo_matrix(0.0, 1.0, 33, alpha, "spline")
    expected = np.array([caputo_power(3.0, alpha, x) for x in t])
    np.testing.assert_allclose(M @ t**3, expected, atol=1e-8)


def test_caputo_matrix_rejects_small_grids():
    with pytest.raises(DomainError):
        caputo_matrix(0.0, 1.0, 2, 0.5)


def test_grid_partial_matches_symbolic():
    chart = ChartSpec(1)
    lattice = Lattice(chart, (1.0, 1.0), (257, 5))
    x = PowerField.coordinate(chart, 0)

    const = caputo_partial_grid(PowerField.constant(chart, 2.0).sample(lattice), 1, 0.5)
    assert const.max_abs() < 1e-12

    grid = caputo_partial_grid(x.sample(lattice), 0, 0.5)
    exact = caputo_partial_power(x, 0, 0.5).sample(lattice)
    assert (grid - exact).max_abs() < 1e-3

    cube = caputo_partial(x * x * x, 0, 1.0)
    grid_cube = caputo_partial((x * x * x).sample(lattice), 0, 1.0)
    mask = lattice.interior_mask()
    assert (grid_cube - cube).max_abs(mask) < 1e-3
    assert isinstance(grid_cube, GridField)


@pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
def test_quadrature_matches_power_rule_on_fine_grid(p, alpha):
    t = np.linspace(0.0, 1.0, 4096)
    for at in (t[1024], 1.0):
        err = abs(caputo_quadrature(t**p, alpha, at) - caputo_power(p, alpha, at))
        assert err <= 1e-4


@pytest.mark.parametrize("p", [2.0, 3.0])
def test_quadrature_error_shrinks_under_refinement(p):
    def error(m):
        t = np.linspace(0.0, 1.0, m)
        return abs(caputo_quadrature(t**p, 0.5, 1.0) - caputo_power(p, 0.5, 1.0))

    assert error(2048) / error(4096) >= 1.3


def test_integer_order_power_rule_is_classical_on_monomial_corpus():
    chart = ChartSpec(2)
    rng = np.random.default_rng(2024)
    corpus = [
        (float(rng.uniform(0.5, 3.0)) * rng.choice([-1.0, 1.0]), [int(e) for e in rng.integers(0, 5, size=4)])
        for _ in range(50)
    ]
    for coeff, exps in corpus:
        f = PowerField.monomial(chart, coeff, exps)
        for axis in range(chart.dim):
            df = caputo_partial_power(f, axis, 1.0)
            p = exps[axis]
            if p == 0:
                assert df.is_zero
                continue
            ((key, c),) = df.terms
            expected = [float(e) for e in exps]
            expected[axis] -= 1.0
            assert key == tuple(expected)
            assert c == pytest.approx(coeff * p, rel=1e-13)

    total = PowerField.from_terms(chart, corpus)
    pts = np.array([[0.3, 0.7, 0.2, 0.9], [0.8, 0.1, 0.6, 0.4]])
    for axis in range(chart.dim):
        lhs = caputo_partial_power(total, axis, 1.0)(pts)
        rhs = sum(caputo_partial_power(PowerField.monomial(chart, c, e), axis, 1.0)(pts) for c, e in corpus)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75, 1.0])
def test_constants_are_annihilated_everywhere(alpha, chart1):
    assert caputo_partial_power(PowerField.constant(chart1, 3.5), 1, alpha).is_zero
    M = caputo_matrix(0.0, 1.0, 65, alpha, "l1")
    assert np.max(np.abs(M @ np.full(65, 3.5))) <= 1e-12
    S = caputo_matrix(0.0, 1.0, 65, alpha, "spline")
    assert np.max(np.abs(S @ np.full(65, 3.5))) <= 1e-10


def test_partial_power_continues_below_zero(chart1, lattice1):
    f = PowerField.from_terms(chart1, [(1.0, [0, 0.25])])
    g = caputo_partial_power(f, 1, 0.75)
    assert g.singular_axes() == (1,)
    h = caputo_partial_power(g, 1, 0.75)
    ((key, c),) = h.terms
    assert key == (0.0, -1.25)
    assert c == pytest.approx(math.gamma(1.25) / math.gamma(-0.25), rel=1e-12)

    values = h.sample(lattice1, strict=False).values
    assert np.isnan(values[:, 0]).all()
    assert np.isfinite(values[:, 1:]).all()
    with pytest.raises(DomainError):
        caputo_partial_power(h, 1, 0.5)
    with pytest.raises(DomainError):
        PowerField.from_terms(chart1, [(1.0, [0, -1.25])], allow_singular=True)
