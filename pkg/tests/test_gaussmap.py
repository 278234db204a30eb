import math

import numpy as np
import pytest

from gstress import gaussmap
from gstress.catalog import catalog_get, catalog_names
from gstress.errors import CatalogError
from gstress.fdcheck import richardson_derivative
from gstress.gaussmap import gauss_fields, gauss_map_at
from gstress.shape import point_geometry

SEED = 7


def sample(spec, k=20):
    return spec.sample(k, np.random.default_rng(SEED))


def interior(spec):
    lo, hi = np.array(spec.bounds()).T
    return lo + (hi - lo) * np.array([0.35, 0.55, 0.4, 0.65])[: spec.m]


@pytest.mark.parametrize("name", catalog_names())
def test_plucker_coordinates_have_unit_norm(name):
    spec = catalog_get(name)
    geom = point_geometry(spec, sample(spec))
    p = gaussmap.gauss_plucker(geom).value
    np.testing.assert_allclose(np.linalg.norm(p, axis=-1), 1.0, atol=1e-12)
    assert p.shape[-1] == math.comb(spec.n, spec.m)


def test_plane_gauss_map_is_constant():
    geom, fields = gauss_map_at(catalog_get("plane"), np.array([0.3, 0.7]))
    assert np.abs(fields.dG).max() == 0 and np.abs(fields.tau).max() == 0
    np.testing.assert_allclose(np.abs(fields.plucker.value), [1, 0, 0], atol=1e-15)


@pytest.mark.parametrize("name", ["sphere", "ellipsoid", "torus", "catenoid", "graph"])
def test_hodge_dual_is_unit_normal(name):
    spec = catalog_get(name)
    geom = point_geometry(spec, sample(spec))
    nu = gaussmap.hypersurface_normal_from_plucker(geom, gaussmap.gauss_plucker(geom))
    normal = geom.normal_frame[..., 0, :]
    np.testing.assert_allclose(np.abs(np.sum(nu * normal, axis=-1)), 1.0, atol=1e-12)


def test_hodge_needs_hypersurface():
    geom = point_geometry(catalog_get("clifford_torus"), np.array([0.5, 1.0]))
    with pytest.raises(CatalogError):
        gaussmap.hypersurface_normal_from_plucker(geom, gaussmap.gauss_plucker(geom))


def test_sphere_gauss_map_energy():
    r = 1.5
    geom, fields = gauss_map_at(catalog_get("sphere", {"r": r}), np.array([0.9, 2.0]))
    # |dG(e_1)|^2 = |B(e_1, e_1)|^2 = 1/r^2 with e_1 = d_1 phi / r
    assert np.sum(fields.dG[0] ** 2) / r**2 == pytest.approx(1 / r**2, rel=1e-12)
    assert np.sum(fields.dG_plucker[0] ** 2) / r**2 == pytest.approx(1 / r**2, rel=1e-12)


@pytest.mark.parametrize("name", catalog_names())
def test_canonical_metric_three_ways(name):
    spec = catalog_get(name)
    geom = point_geometry(spec, sample(spec, 10))
    res = gaussmap.canonical_metric_residual(geom, gauss_fields(geom, with_plucker=True))
    scale = np.maximum(np.abs(res["direct"]).max(axis=(-2, -1)), 1.0)
    assert np.all(res["plucker"] <= 1e-9 * scale)
    assert np.all(res["tn"] <= 1e-9 * scale)


def test_dG_plucker_matches_fd_of_wedge():
    spec = catalog_get("torus")
    p = interior(spec)
    geom, fields = gauss_map_at(spec, p)

    def wedge_at(q):
        return gaussmap.gauss_plucker(point_geometry(spec, np.asarray(q, dtype=float), 2)).value

    for k in range(2):
        alpha = (1, 0) if k == 0 else (0, 1)
        fd = np.asarray(richardson_derivative(wedge_at, p, alpha, 1e-3), dtype=float)
        np.testing.assert_allclose(fields.dG_plucker[k], fd, atol=1e-8)


@pytest.mark.parametrize("name", ["ellipsoid", "torus", "graph", "clifford_torus", "ellipsoid4"])
def test_ruh_vilms(name):
    spec = catalog_get(name)
    geom = point_geometry(spec, sample(spec, 10))
    fields = gauss_fields(geom, with_plucker=True)
    res = gaussmap.ruh_vilms_residual(geom, fields)
    scale = np.maximum(np.linalg.norm(fields.tau, axis=(-2, -1)), 1.0)
    assert np.all(res <= 1e-7 * scale)


def test_ruh_vilms_nontrivial_on_ellipsoid():
    spec = catalog_get("ellipsoid")
    geom = point_geometry(spec, sample(spec, 10))
    assert np.linalg.norm(gaussmap.gauss_tension(geom), axis=(-2, -1)).min() > 1e-3


@pytest.mark.parametrize("name,params", [
    ("sphere", {}),
    ("sphere", {"m": 4, "r": 1.3}),
    ("catenoid", {}),
    ("product_spheres", {}),
    ("clifford_torus", {}),
])
def test_parallel_mean_curvature_gives_harmonic_gauss_map(name, params):
    spec = catalog_get(name, params)
    geom = point_geometry(spec, sample(spec, 10))
    fields = gauss_fields(geom, with_plucker=True)
    assert np.linalg.norm(fields.tau, axis=(-2, -1)).max() <= 1e-9
    assert np.linalg.norm(gaussmap.plucker_tension(geom, fields.plucker), axis=(-2, -1)).max() <= 1e-9


def test_nabla_tau_vanishes_when_tau_does():
    for name in ["sphere", "catenoid"]:
        spec = catalog_get(name)
        geom = point_geometry(spec, sample(spec, 10))
        assert np.abs(gaussmap.gauss_nabla_tau(geom)).max() <= 1e-9


@pytest.mark.parametrize("name", ["ellipsoid", "torus"])
def test_nabla_tau_against_projected_fd(name):
    # independent oracle: nabla_l tau = P_T (d_l tau) P_N for tau viewed as an ambient matrix
    spec = catalog_get(name)
    p = interior(spec)
    geom, fields = gauss_map_at(spec, p, with_plucker=False)

    def tau_at(q):
        return gaussmap.gauss_tension(point_geometry(spec, np.asarray(q, dtype=float)))

    for k in range(spec.m):
        alpha = tuple(1 if i == k else 0 for i in range(spec.m))
        d_tau = np.asarray(richardson_derivative(tau_at, p, alpha, 1e-3), dtype=float)
        expected = geom.proj_tangent @ d_tau @ geom.proj_normal
        np.testing.assert_allclose(fields.nabla_tau[k], expected, atol=1e-4 * max(np.abs(expected).max(), 1.0))


def test_tau_lies_in_t_tensor_n():
    spec = catalog_get("ellipsoid4")
    geom, fields = gauss_map_at(spec, sample(spec, 5), with_plucker=False)
    t = fields.tau
    proj = np.einsum("...ab,...bc,...cd->...ad", geom.proj_tangent, t, geom.proj_normal)
    np.testing.assert_allclose(proj, t, atol=1e-12)


@pytest.mark.parametrize("name", catalog_names())
def test_dG_factorizes_through_B(name):
    # dG(d_i) maps tangent vectors to B: dG(d_i)^T d_j phi = B_ij
    spec = catalog_get(name)
    geom = point_geometry(spec, sample(spec, 10))
    fields = gauss_fields(geom)
    got = np.einsum("...iab,...ja->...ijb", fields.dG, geom.dphi.value)
    np.testing.assert_allclose(got, geom.B, atol=1e-10 * max(np.abs(geom.B).max(), 1.0))


def test_gauss_fields_need_order_four():
    geom = point_geometry(catalog_get("sphere"), np.array([0.5, 0.5]), 3)
    with pytest.raises(ValueError):
        gauss_fields(geom)
