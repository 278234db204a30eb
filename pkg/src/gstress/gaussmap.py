"""Gauss map through the Pluecker embedding and its T(M) (x) N(M) fields.

The Grassmannian of m-planes in R^n is never given charts.  A plane spanned
by an orthonormal frame ``e_1..e_m`` is the unit m-vector ``e_1 ^ ... ^ e_m``
in the exterior power, with coordinates indexed by increasing index tuples
in lexicographic order.  The canonical metric is the Euclidean metric of
the exterior power restricted to those decomposable unit vectors.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import jets
from .catalog import ImmersionSpec
from .errors import CatalogError
from .jets import Jet
from .shape import PointGeometry, gram_schmidt, laplacian, normal_derivative, point_geometry


def plucker_tuples(n: int, m: int) -> list[tuple[int, ...]]:
    return list(itertools.combinations(range(n), m))


def _perm_sign(p) -> int:
    p = list(p)
    sign = 1
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                sign = -sign
    return sign


def wedge(frame):
    """Pluecker coordinates of the rows of ``frame[..., m, n]`` (arrays or jets)."""
    m, n = frame.shape[-2:]
    cols = np.array(plucker_tuples(n, m))
    if not isinstance(frame, Jet):
        minors = np.asarray(frame)[..., :, cols]  # (..., m, C, m)
        return np.linalg.det(np.moveaxis(minors, -3, -2))
    minors = frame[..., :, cols]  # (..., m, C, m)
    out = None
    for perm in itertools.permutations(range(m)):
        term = minors[..., 0, :, perm[0]]
        for k in range(1, m):
            term = term * minors[..., k, :, perm[k]]
        out = term * _perm_sign(perm) if out is None else out + term * _perm_sign(perm)
    return out


@dataclass
class PluckerPoint:
    coords: Jet  # (..., C)
    tuples: list

    @property
    def value(self) -> np.ndarray:
        return self.coords.value


def gauss_plucker(geom: PointGeometry) -> PluckerPoint:
    """Wedge of the jet-valued Gram-Schmidt tangent frame."""
    frame = gram_schmidt(geom.dphi)
    return PluckerPoint(wedge(frame), plucker_tuples(geom.n, geom.m))


def hodge_normal(coords: np.ndarray, n: int) -> np.ndarray:
    """Hodge dual of a Pluecker (n-1)-vector as an ambient vector."""
    tuples = plucker_tuples(n, n - 1)
    out = np.zeros(coords.shape[:-1] + (n,))
    for k, t in enumerate(tuples):
        r = next(i for i in range(n) if i not in t)
        out[..., r] = (-1) ** (n - 1 - r) * coords[..., k]
    return out


def tangent_space_basis(tangent: np.ndarray, normal: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the Grassmannian tangent space at ``e_1 ^ ... ^ e_m``.

    Entry ``[..., j, a, :]`` is the wedge with slot ``j`` replaced by normal ``a``.
    """
    m = tangent.shape[-2]
    k = normal.shape[-2]
    out = []
    for j in range(m):
        row = []
        for a in range(k):
            f = tangent.copy()
            f[..., j, :] = normal[..., a, :]
            row.append(wedge(f))
        out.append(np.stack(row, axis=-2))
    return np.stack(out, axis=-3)


@dataclass
class GaussFields:
    dG: np.ndarray  # (..., m, n, n)   dG(d_i) in T (x) N
    tau: np.ndarray  # (..., n, n)
    nabla_tau: np.ndarray  # (..., m, n, n)  nabla_{d_l} tau(G)
    dG_jet: Jet  # order p-2
    tau_components: Jet  # (..., m, n): V^j with tau = sum_j d_j phi (V^j)^T, order p-3
    nabla_H: Jet  # (..., m, n): normal derivatives of H, order p-3
    plucker: PluckerPoint | None = None

    @property
    def dG_plucker(self) -> np.ndarray:
        if self.plucker is None:
            raise ValueError("Pluecker data was not requested")
        return jets.stack([self.plucker.coords.derivative(i) for i in range(self.dG.shape[-3])], axis=-2).value


def tn_from_components(geom: PointGeometry, comps):
    """sum_j d_j phi (comps[j])^T for components ``comps[..., j, n]``."""
    if isinstance(comps, Jet):
        dphi = geom.dphi.truncate(comps.order)
        return (dphi[..., :, :, None] * comps[..., :, None, :]).sum(-3)
    return np.einsum("...ja,...jb->...ab", geom.dphi.value, comps)


def tn_covariant_derivative(geom: PointGeometry, comps: Jet) -> np.ndarray:
    """Product connection nabla^M (x) nabla^perp on sum_j d_j phi (x) V^j.

    Returns ``[..., l, n, n]`` at the expansion point: Levi-Civita correction
    on the tangent factor plus the normal connection on each V^j.
    """
    v0 = comps.value
    dv = jets.stack([comps.derivative(l) for l in range(geom.m)], axis=-3).value  # [l, j, b]
    nabla_v = np.einsum("...bc,...ljc->...ljb", geom.proj_normal, dv)
    dphi0 = geom.dphi.value
    tangent_part = np.einsum("...klj,...ka,...jb->...lab", geom.gamma, dphi0, v0)
    normal_part = np.einsum("...ja,...ljb->...lab", dphi0, nabla_v)
    return tangent_part + normal_part


def gauss_differential(geom: PointGeometry) -> tuple[np.ndarray, Jet]:
    """dG(d_i) = sum_jk g^jk d_j phi B_ik^T, as values and as order p-2 jets."""
    q = geom.order - 2
    t = jets.matmul(geom.g_inv_jet.truncate(q), geom.dphi.truncate(q))  # [k, a]
    dG = (t[..., None, :, :, None] * geom.B_jet[..., :, :, None, :]).sum(-3)
    return dG.value, dG


def mean_curvature_gradient(geom: PointGeometry) -> Jet:
    """nabla^perp_{d_i} H for every chart direction, stacked as ``[..., i, n]``."""
    return jets.stack([normal_derivative(geom, geom.H_jet, i) for i in range(geom.m)], axis=-2)


def gauss_tension(geom: PointGeometry) -> np.ndarray:
    """tau(G) = sum_ij g^ij d_j phi (nabla^perp_i H)^T."""
    return tn_from_components(geom, _tension_components(geom, mean_curvature_gradient(geom))).value


def _tension_components(geom: PointGeometry, nabla_h: Jet) -> Jet:
    return jets.matmul(geom.g_inv_jet.truncate(nabla_h.order), nabla_h)


def gauss_fields(geom: PointGeometry, with_plucker: bool = False) -> GaussFields:
    if geom.order < 4:
        raise ValueError("Gauss-map fields need jets of order >= 4")
    dG, dG_jet = gauss_differential(geom)
    nabla_h = mean_curvature_gradient(geom)
    comps = _tension_components(geom, nabla_h)
    tau = tn_from_components(geom, comps).value
    return GaussFields(
        dG=dG,
        tau=tau,
        nabla_tau=tn_covariant_derivative(geom, comps),
        dG_jet=dG_jet,
        tau_components=comps,
        nabla_H=nabla_h,
        plucker=gauss_plucker(geom) if with_plucker else None,
    )


def gauss_nabla_tau(geom: PointGeometry) -> np.ndarray:
    return gauss_fields(geom).nabla_tau


def plucker_tension(geom: PointGeometry, plucker: PluckerPoint | None = None) -> np.ndarray:
    """tau(G) computed extrinsically in the exterior power.

    Laplace-Beltrami of the Pluecker coordinates, projected on the tangent
    space of the Grassmannian and mapped to T (x) N through the frame basis.
    """
    plucker = plucker or gauss_plucker(geom)
    lap = laplacian(geom, plucker.coords).value
    basis = tangent_space_basis(geom.tangent_frame, geom.normal_frame)  # [j, a, C]
    c = np.einsum("...jaC,...C->...ja", basis, lap)
    return np.einsum("...ja,...jp,...aq->...pq", c, geom.tangent_frame, geom.normal_frame)


def ruh_vilms_residual(geom: PointGeometry, fields: GaussFields | None = None) -> np.ndarray:
    """Frobenius distance between tau(G) from nabla^perp H and from the Pluecker Laplacian."""
    tau = fields.tau if fields is not None else gauss_tension(geom)
    plucker = fields.plucker if fields is not None else None
    return np.linalg.norm(tau - plucker_tension(geom, plucker), axis=(-2, -1))


def frame_coefficients(geom: PointGeometry) -> np.ndarray:
    """Matrix c with e_i = sum_p c[i, p] d_p phi for the orthonormal tangent frame."""
    return np.einsum("...ia,...pa->...ip", geom.tangent_frame, geom.dphi.value) @ geom.g_inv


def canonical_metric_residual(geom: PointGeometry, fields: GaussFields) -> dict:
    """Compare three expressions of g_can(dG(e_i), dG(e_k)) in an orthonormal frame.

    Returns the max deviations of the Pluecker-induced and T (x) N Frobenius
    Gram matrices from sum_j <B(e_i, e_j), B(e_k, e_j)>.
    """
    c = frame_coefficients(geom)
    b_on = np.einsum("...ip,...jq,...pqa->...ija", c, c, geom.B)
    direct = np.einsum("...ija,...kja->...ik", b_on, b_on)
    pl = np.einsum("...ip,...pC->...iC", c, fields.dG_plucker)
    gram_pl = np.einsum("...iC,...kC->...ik", pl, pl)
    tn = np.einsum("...ip,...pab->...iab", c, fields.dG)
    gram_tn = np.einsum("...iab,...kab->...ik", tn, tn)
    return {
        "plucker": np.abs(gram_pl - direct).max(axis=(-2, -1)),
        "tn": np.abs(gram_tn - direct).max(axis=(-2, -1)),
        "direct": direct,
    }


def gauss_map_at(spec: ImmersionSpec, point, order: int = 4, with_plucker: bool = True):
    """Convenience: geometry and Gauss-map fields at chart points."""
    geom = point_geometry(spec, point, order)
    return geom, gauss_fields(geom, with_plucker=with_plucker)


def hypersurface_normal_from_plucker(geom: PointGeometry, plucker: PluckerPoint) -> np.ndarray:
    if geom.n != geom.m + 1:
        raise CatalogError("Hodge identification needs a hypersurface")
    return hodge_normal(plucker.value, geom.n)
