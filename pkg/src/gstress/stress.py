"""Stress-energy tensors of a map, shared by the immersion and its Gauss map.

A :class:`MapFields` instance collects, at chart points, the domain metric,
``dphi(d_i)``, ``tau(phi)`` and ``nabla_{d_i} tau(phi)`` as flattened target
vectors.  Both target inner products used here (the Euclidean dot product on
R^n and the Frobenius product on T (x) N matrices) are the sum of entrywise
products of the flattened arrays, so every tensor below is assembled by one
code path.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from .errors import CatalogError
from .gaussmap import GaussFields, gauss_fields, tn_from_components
from .jets import Jet
from .shape import PointGeometry, divergence_1form, divergence_2tensor, laplacian


@dataclass
class MapFields:
    kind: str  # "immersion" or "gauss"
    g: np.ndarray
    g_inv: np.ndarray
    dmap: np.ndarray  # (..., m, D)
    tau: np.ndarray  # (..., D)
    nabla_tau: np.ndarray  # (..., m, D)
    target_shape: tuple
    geom: PointGeometry | None = None
    dmap_jet: Jet | None = None  # (..., m, D), order >= 1, for the divergence of S
    extra: GaussFields | None = None

    @property
    def m(self) -> int:
        return self.g.shape[-1]

    def inner(self, a, b):
        return np.sum(a * b, axis=-1)


def _flat(a, k):
    return a.reshape(a.shape[: a.ndim - k] + (-1,))


def immersion_fields(geom: PointGeometry) -> MapFields:
    """phi itself: dphi = d_i phi, tau = H, nabla_i tau = d_i H (flat pull-back connection)."""
    dh = jets.stack([geom.H_jet.derivative(i) for i in range(geom.m)], axis=-2).value
    return MapFields(
        kind="immersion",
        g=geom.g,
        g_inv=geom.g_inv,
        dmap=geom.dphi.value,
        tau=geom.H,
        nabla_tau=dh,
        target_shape=(geom.n,),
        geom=geom,
        dmap_jet=geom.dphi,
    )


def gauss_map_fields(geom: PointGeometry, fields: GaussFields | None = None) -> MapFields:
    """The Gauss map with values in T (x) N and the product connection."""
    fields = fields or gauss_fields(geom)
    n = geom.n
    d = fields.dG_jet
    return MapFields(
        kind="gauss",
        g=geom.g,
        g_inv=geom.g_inv,
        dmap=_flat(fields.dG, 2),
        tau=_flat(fields.tau, 2),
        nabla_tau=_flat(fields.nabla_tau, 2),
        target_shape=(n, n),
        geom=geom,
        dmap_jet=d.reshape(d.shape[:-2] + (n * n,)),
        extra=fields,
    )


def _contract(g_inv, t):
    return np.einsum("...ij,...ij->...", g_inv, t)


def _gram(f: MapFields, a, b):
    return np.einsum("...iD,...jD->...ij", a, b)


def energy_density(f: MapFields) -> np.ndarray:
    """|dphi|^2 = g^kl <dphi_k, dphi_l> (twice the energy density)."""
    return _contract(f.g_inv, _gram(f, f.dmap, f.dmap))


def harmonic_S(f: MapFields) -> np.ndarray:
    """S = 1/2 |dphi|^2 g - phi^* h."""
    return 0.5 * energy_density(f)[..., None, None] * f.g - _gram(f, f.dmap, f.dmap)


def dphi_nabla_tau(f: MapFields) -> np.ndarray:
    """<dphi, nabla tau> = g^kl <dphi_k, nabla_l tau>."""
    return _contract(f.g_inv, _gram(f, f.dmap, f.nabla_tau))


def tau_norm2(f: MapFields) -> np.ndarray:
    return f.inner(f.tau, f.tau)


def _cross(f: MapFields) -> np.ndarray:
    c = _gram(f, f.dmap, f.nabla_tau)  # [i, j] = <dphi_i, nabla_j tau>
    return c + np.swapaxes(c, -1, -2)


def biharmonic_S2(f: MapFields) -> np.ndarray:
    """S2_ij = (1/2|tau|^2 + <dphi, nabla tau>) g_ij - <dphi_i, nabla_j tau> - <dphi_j, nabla_i tau>."""
    scal = 0.5 * tau_norm2(f) + dphi_nabla_tau(f)
    return scal[..., None, None] * f.g - _cross(f)


def reform_tensor(f: MapFields) -> np.ndarray:
    """R_ij = 1/2|tau|^2 g_ij + <dphi_i, nabla_j tau> + <dphi_j, nabla_i tau>."""
    return (0.5 * tau_norm2(f))[..., None, None] * f.g + _cross(f)


def trace(f: MapFields, t: np.ndarray) -> np.ndarray:
    return _contract(f.g_inv, t)


def s2_trace_identity_residual(f: MapFields) -> np.ndarray:
    """|tr S2 - (m/2)|tau|^2 - (m-2)<dphi, nabla tau>|, trace taken of the assembled tensor."""
    lhs = trace(f, biharmonic_S2(f))
    rhs = 0.5 * f.m * tau_norm2(f) + (f.m - 2) * dphi_nabla_tau(f)
    return np.abs(lhs - rhs)


def reform_identity_residual(f: MapFields) -> np.ndarray:
    """max_ij |S2_ij + R_ij - (|tau|^2 + <dphi, nabla tau>) g_ij|."""
    lhs = biharmonic_S2(f) + reform_tensor(f)
    rhs = (tau_norm2(f) + dphi_nabla_tau(f))[..., None, None] * f.g
    return np.abs(lhs - rhs).max(axis=(-2, -1))


def harmonic_S_jet(f: MapFields) -> Jet:
    d = f.dmap_jet
    g, g_inv = f.geom.g_jet.truncate(d.order), f.geom.g_inv_jet.truncate(d.order)
    gram = jets.dot(d[..., :, None, :], d[..., None, :, :])
    e = (g_inv * gram).sum((-2, -1))
    return g * (e * 0.5)[..., None, None] - gram


def div_S(f: MapFields) -> np.ndarray:
    """Covariant divergence of S, one component per chart direction."""
    if f.geom is None or f.dmap_jet is None or f.dmap_jet.order < 1:
        raise ValueError("divergence of S needs jet-valued dphi of order >= 1")
    return divergence_2tensor(f.geom, harmonic_S_jet(f)).value


def div_S_residual(f: MapFields) -> np.ndarray:
    """max_j |(div S)_j + <tau, dphi_j>|."""
    rhs = np.einsum("...D,...jD->...j", f.tau, f.dmap)
    return np.abs(div_S(f) + rhs).max(axis=-1)


def s2_gauss_trace_chain(geom: PointGeometry, fields: GaussFields | None = None) -> dict:
    """The chain of expressions equal to half the trace of S2 of the Gauss map (m = 4).

    ``half_trace``   1/2 tr S2(G) from the assembled tensor
    ``tau_terms``    |tau(G)|^2 + <nabla tau(G), dG>
    ``div_omega``    div of omega_i = <tau(G), dG(d_i)> (Frobenius, jet-valued)
    ``div_omega_b``  div of g^ad <nabla^perp_a H, B_id>
    ``last_line``    div div <H, B> - 1/2 Laplacian |H|^2
    """
    if geom.m != 4:
        raise CatalogError("the Gauss-map trace chain is stated for 4-manifolds")
    fields = fields or gauss_fields(geom)
    f = gauss_map_fields(geom, fields)
    half_trace = 0.5 * trace(f, biharmonic_S2(f))
    tau_terms = tau_norm2(f) + dphi_nabla_tau(f)

    comps = fields.tau_components  # order p-3
    tau_jet = tn_from_components(geom, comps)
    dG = fields.dG_jet.truncate(comps.order)
    omega = (tau_jet[..., None, :, :] * dG).sum((-2, -1))
    div_omega = divergence_1form(geom, omega).value

    q = fields.nabla_H.order
    g_inv = geom.g_inv_jet.truncate(q)
    B = geom.B_jet.truncate(q)
    hb = (fields.nabla_H[..., :, None, None, :] * B[..., None, :, :, :]).sum(-1)  # [a, i, d] = <nabla_a H, B_id>
    omega_b = (g_inv[..., :, None, :] * hb).sum((-3, -1))
    div_omega_b = divergence_1form(geom, omega_b).value

    f_hb = (geom.H_jet[..., None, None, :] * geom.B_jet).sum(-1)  # <H, B_ij>
    double_div = divergence_1form(geom, divergence_2tensor(geom, f_hb)).value
    h2 = (geom.H_jet * geom.H_jet).sum(-1)
    last_line = double_div - 0.5 * laplacian(geom, h2).value

    return {
        "half_trace": half_trace,
        "tau_terms": tau_terms,
        "div_omega": div_omega,
        "div_omega_b": div_omega_b,
        "last_line": last_line,
    }


def s2_gauss_trace_chain_residual(geom: PointGeometry, fields: GaussFields | None = None) -> np.ndarray:
    """Max pairwise difference over the expressions of :func:`s2_gauss_trace_chain`."""
    vals = np.stack(list(s2_gauss_trace_chain(geom, fields).values()), axis=0)
    return vals.max(axis=0) - vals.min(axis=0)


def bitension_flat(f_or_geom) -> np.ndarray:
    """tau_2 = -Laplacian(tau) for an immersion into flat R^n (no curvature term)."""
    geom = f_or_geom.geom if isinstance(f_or_geom, MapFields) else f_or_geom
    if isinstance(f_or_geom, MapFields) and f_or_geom.kind != "immersion":
        raise CatalogError("the flat bitension is only available for maps into Euclidean space")
    return -laplacian(geom, geom.H_jet).value
