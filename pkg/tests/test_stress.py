import numpy as np
import pytest

from gstress import stress
from gstress.catalog import catalog_get, catalog_names
from gstress.errors import CatalogError
from gstress.fdcheck import richardson_derivative
from gstress.shape import point_geometry

SEED = 3


def fields(name, params=None, k=15, kind="immersion"):
    spec = catalog_get(name, params)
    geom = point_geometry(spec, spec.sample(k, np.random.default_rng(SEED)))
    return stress.immersion_fields(geom) if kind == "immersion" else stress.gauss_map_fields(geom)


KINDS = ["immersion", "gauss"]


def test_energy_density_of_immersion_is_m():
    for name in catalog_names():
        f = fields(name, k=5)
        np.testing.assert_allclose(stress.energy_density(f), f.m, rtol=1e-12)


def test_sphere_immersion_closed_form():
    # tau = H = -(2/r^2) phi, nabla tau = -(2/r^2) dphi, so <dphi, nabla tau> = -4/r^2
    r = 2.0
    f = fields("sphere", {"r": r})
    np.testing.assert_allclose(stress.tau_norm2(f), 1.0, rtol=1e-12)
    np.testing.assert_allclose(stress.dphi_nabla_tau(f), -4 / r**2, rtol=1e-12)
    # <dphi_i, nabla_j tau> = -(2/r^2) g_ij
    expected = (0.5 - 4 / r**2 + 4 / r**2) * f.g
    np.testing.assert_allclose(stress.biharmonic_S2(f), expected, atol=1e-12)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("name", catalog_names())
def test_trace_and_reform_identities(name, kind):
    f = fields(name, kind=kind)
    scale = np.maximum(np.abs(stress.tau_norm2(f)) + np.abs(stress.dphi_nabla_tau(f)), 1.0)
    assert np.all(stress.s2_trace_identity_residual(f) <= 1e-9 * scale)
    assert np.all(stress.reform_identity_residual(f) <= 1e-8 * scale)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("name", ["ellipsoid", "torus", "ellipsoid4", "product_spheres"])
def test_tensors_are_symmetric(name, kind):
    f = fields(name, kind=kind)
    for t in (stress.harmonic_S(f), stress.biharmonic_S2(f), stress.reform_tensor(f)):
        assert np.abs(t - np.swapaxes(t, -1, -2)).max() <= 1e-12 * max(np.abs(t).max(), 1.0)


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("name", ["sphere", "ellipsoid", "torus", "graph", "clifford_torus", "ellipsoid4"])
def test_conservation_law(name, kind):
    f = fields(name, k=8, kind=kind)
    scale = max(np.abs(f.tau).max() * np.abs(f.dmap).max(), 1.0)
    assert np.all(stress.div_S_residual(f) <= 1e-7 * scale)


def test_div_S_against_fd():
    # independent oracle: coordinate divergence of S^i_j by central differences plus Christoffel terms
    spec = catalog_get("ellipsoid")
    p = np.array([0.9, 2.3])

    def mixed(q):
        geom = point_geometry(spec, np.asarray(q, dtype=float))
        f = stress.immersion_fields(geom)
        return np.einsum("...ik,...kj->...ij", geom.g_inv, stress.harmonic_S(f))

    geom = point_geometry(spec, p)
    s_mixed = mixed(p)
    d = [np.asarray(richardson_derivative(mixed, p, a, 1e-3), dtype=float) for a in ((1, 0), (0, 1))]
    div = d[0][0] + d[1][1]
    gam = geom.gamma
    div = div + np.einsum("iik,kj->j", gam, s_mixed) - np.einsum("kij,ik->j", gam, s_mixed)
    np.testing.assert_allclose(stress.div_S(stress.immersion_fields(geom)), div, atol=1e-6)


@pytest.mark.parametrize("name,params", [("catenoid", {}), ("plane", {})])
def test_minimal_surface_gauss_map_is_biharmonic_flat(name, params):
    f = fields(name, params, kind="gauss")
    assert np.abs(stress.biharmonic_S2(f)).max() <= 1e-9
    assert np.abs(stress.tau_norm2(f)).max() <= 1e-18


def test_harmonic_immersion_fields_vanish_on_plane():
    f = fields("plane", k=5)
    assert np.abs(stress.biharmonic_S2(f)).max() == 0


def test_gauss_trace_chain():
    spec = catalog_get("ellipsoid4")
    geom = point_geometry(spec, spec.sample(8, np.random.default_rng(SEED)))
    chain = stress.s2_gauss_trace_chain(geom)
    scale = max(np.abs(chain["half_trace"]).max(), 1.0)
    assert np.all(stress.s2_gauss_trace_chain_residual(geom) <= 1e-6 * scale)
    assert np.abs(chain["half_trace"]).max() > 1e-3


def test_gauss_trace_chain_needs_four_manifold():
    geom = point_geometry(catalog_get("ellipsoid"), np.array([0.5, 0.5]))
    with pytest.raises(CatalogError):
        stress.s2_gauss_trace_chain(geom)


def test_bitension_on_spheres():
    # H = -(m/r^2) phi is an eigenfunction: Laplacian H = -(m/r^2) H, so tau_2 = (m/r^2) H
    for m, r in [(2, 1.0), (2, 2.0), (4, 1.5)]:
        f = fields("sphere", {"m": m, "r": r}, k=5)
        np.testing.assert_allclose(stress.bitension_flat(f), (m / r**2) * f.tau, atol=1e-10)


def test_bitension_rejects_gauss_map():
    with pytest.raises(CatalogError):
        stress.bitension_flat(fields("sphere", k=2, kind="gauss"))
