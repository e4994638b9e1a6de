import json

import pytest

from frakgeo.models.fields import ChartSpec, Lattice, PowerField
from frakgeo.models.geometry import Lagrangian
from frakgeo.services.lagrange import hessian_metric, semi_spray
from frakgeo.services.nconnection import adapted_frame, canonical_nconnection


def make_lagrangian(chart, terms, alpha=1.0, finsler=False):
    return Lagrangian(chart, alpha, PowerField.from_terms(chart, terms), finsler=finsler)


def build_frame(lag, lattice):
    metric = hessian_metric(lag, lattice)
    spray = semi_spray(lag, metric)
    return metric, spray, adapted_frame(canonical_nconnection(spray, lag.alpha))


@pytest.fixture
def chart1():
    return ChartSpec(1)


@pytest.fixture
def chart2():
    return ChartSpec(2)


@pytest.fixture
def lattice1(chart1):
    return Lattice.uniform(chart1, upper=1.0, points=33)


@pytest.fixture
def lattice2(chart2):
    return Lattice.uniform(chart2, upper=0.5, points=17)


@pytest.fixture
def flat1(chart1):
    """L = (y^1)^2."""
    return make_lagrangian(chart1, [(1.0, [0, 2])])


@pytest.fixture
def curved1(chart1):
    """L = (1 + x^1)(y^1)^2."""
    return make_lagrangian(chart1, [(1.0, [0, 2]), (1.0, [1, 2])])


@pytest.fixture
def cross2(chart2):
    """L = (y^1)^2 + (y^2)^2 + x^1 y^1 y^2, regular for x^1 < 2."""
    return make_lagrangian(chart2, [(1.0, [0, 0, 2, 0]), (1.0, [0, 0, 0, 2]), (1.0, [1, 0, 1, 1])])


@pytest.fixture
def write_config(tmp_path):
    def _write(data, name="job.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return str(path)

    return _write


def job(dimension, monomials, alpha=1.0, points=17, upper=1.0, **extra):
    data = {
        "schema_version": 1,
        "dimension": dimension,
        "alpha": alpha,
        "lagrangian": [{"coeff": c, "x_exponents": xe, "y_exponents": ye} for c, xe, ye in monomials],
        "lattice": [{"upper_bound": upper, "points": points} for _ in range(2 * dimension)],
    }
    data.update(extra)
    return data
