import math

import numpy as np
import pytest

from gstress.catalog import (
    DEFAULT_MARGIN,
    catalog_get,
    catalog_names,
    check_full_rank,
    eval_immersion,
    load_definition,
    parse_definition,
    resolve,
)
from gstress.errors import (
    CatalogError,
    ChartDomainError,
    DegenerateImmersionError,
    ExprSyntaxError,
    UnknownIdentifierError,
)

REQUIRED = {"plane", "sphere", "ellipsoid", "ellipsoid4", "torus", "clifford_torus", "catenoid", "product_spheres", "graph"}


def test_required_entries_present():
    assert REQUIRED <= set(catalog_names())


def test_sphere_example():
    s = catalog_get("sphere", {"m": 2, "r": 2})
    p = np.array([0.7, 1.1])
    np.testing.assert_allclose(
        s.evaluate(p), [2 * math.sin(0.7) * math.cos(1.1), 2 * math.sin(0.7) * math.sin(1.1), 2 * math.cos(0.7)]
    )
    (lo1, hi1), (lo2, hi2) = s.bounds()
    assert lo1 == pytest.approx(DEFAULT_MARGIN) and hi1 == pytest.approx(math.pi - DEFAULT_MARGIN)
    assert (lo2, hi2) == (0.0, 2 * math.pi) and s.periodic == (False, True)
    np.testing.assert_allclose(eval_immersion(s, np.array([math.pi / 2, 0.0])).value, [2, 0, 0], atol=1e-15)


def test_sphere_pole_is_outside_chart():
    s = catalog_get("sphere", {"r": 2})
    with pytest.raises(ChartDomainError):
        eval_immersion(s, np.array([0.0, 1.0]))


def test_plane_jets():
    s = catalog_get("plane")
    phi = eval_immersion(s, np.array([0.25, 0.5]))
    np.testing.assert_allclose(phi.value, [0.25, 0.5, 0.0])
    np.testing.assert_allclose(phi.coeffs[:, 1:3], [[1, 0], [0, 1], [0, 0]])
    assert np.all(phi.coeffs[:, 3:] == 0)


@pytest.mark.parametrize("name,params", [
    ("torus", {"R": 1, "r": 2}),
    ("sphere", {"r": -1}),
    ("ellipsoid", {"a": 0}),
    ("nosuch", {}),
    ("sphere", {"m": 7}),
])
def test_invalid_parameters(name, params):
    with pytest.raises(CatalogError):
        catalog_get(name, params)


def test_dimensions():
    dims = {name: (catalog_get(name).m, catalog_get(name).n) for name in catalog_names()}
    assert dims["sphere"] == (2, 3) and dims["ellipsoid4"] == (4, 5) and dims["product_spheres"] == (4, 6)
    assert catalog_get("sphere", {"m": 4}).n == 5
    assert dims["clifford_torus"] == (2, 4)


@pytest.mark.parametrize("name", sorted(REQUIRED))
def test_full_rank_random_points(name):
    spec = catalog_get(name)
    pts = spec.sample(100, np.random.default_rng(11))
    assert check_full_rank(spec, pts).min() > 1e-8


@pytest.mark.parametrize("name", sorted(REQUIRED))
def test_jet_constant_terms_match_ast(name):
    spec = catalog_get(name)
    pts = spec.sample(10, np.random.default_rng(2))
    np.testing.assert_allclose(eval_immersion(spec, pts).value, spec.evaluate(pts), rtol=1e-15, atol=1e-15)


def test_margin_override_and_entry_defaults():
    assert catalog_get("plane").margin == 0.0
    assert catalog_get("sphere").margin == DEFAULT_MARGIN
    assert catalog_get("sphere", margin=0.1).bounds()[0][0] == pytest.approx(0.1)


def test_graph_entry():
    s = catalog_get("graph", {"expr": "a*u1*u2", "a": 3.0})
    np.testing.assert_allclose(s.evaluate(np.array([0.5, -0.5])), [0.5, -0.5, -0.75])


DEFINITION = """
# paraboloid of revolution, shifted along x2
m = 2
n = 3
param k = 0.5
chart u1 = -1 1
chart u2 = 0 2*pi periodic
x1 = u1*cos(u2)
x2 = u1*sin(u2) + 2
x3 = k*u1^2
"""


def test_definition_file(tmp_path):
    path = tmp_path / "cone.gsi"
    path.write_text(DEFINITION.replace("chart u1 = -1 1", "chart u1 = 0.5 1.5"), encoding="utf-8")
    spec = load_definition(path)
    assert (spec.m, spec.n, spec.name) == (2, 3, "cone")
    assert spec.params == {"k": 0.5}
    assert spec.chart[1].periodic and spec.chart[1].hi == pytest.approx(2 * math.pi)
    np.testing.assert_allclose(spec.evaluate(np.array([1.0, 0.0])), [1.0, 2.0, 0.5])
    assert resolve(str(path)).name == "cone"


def test_definition_errors():
    with pytest.raises(ExprSyntaxError) as err:
        parse_definition("m = 2\nn = 3\nwhat is this\n")
    assert err.value.line == 3
    with pytest.raises(UnknownIdentifierError):
        parse_definition("m = 1\nn = 2\nchart u1 = 0 1\nx1 = u1\nx2 = q*u1\n")
    with pytest.raises(CatalogError):
        parse_definition("m = 2\nn = 3\nchart u1 = 0 1\nx1 = u1\nx2 = u1\nx3 = u1\n")


def test_degenerate_definition_rejected():
    # every component depends on u1 + u2 only
    text = "m = 2\nn = 3\nchart u1 = -1 1\nchart u2 = -1 1\nx1 = u1+u2\nx2 = (u1+u2)^2\nx3 = sin(u1+u2)\n"
    with pytest.raises(DegenerateImmersionError):
        parse_definition(text)


def test_chart_must_be_nonempty_after_margin():
    with pytest.raises(CatalogError):
        parse_definition("m = 1\nn = 2\nchart u1 = 0 0.01\nx1 = u1\nx2 = u1^2\n")
