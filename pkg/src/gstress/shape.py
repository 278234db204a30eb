"""Pointwise intrinsic and extrinsic geometry of a parametrized immersion.

Index conventions (after any leading batch axes):

* ``dphi[i, a]``      = d_i phi^a                    (m, n)
* ``g[i, j]``         = <d_i phi, d_j phi>           (m, m)
* ``gamma[k, i, j]``  = Christoffel symbol Gamma^k_ij (m, m, m)
* ``B[i, j, a]``      = second fundamental form      (m, m, n)
* ``H[a]``            = g^ij B_ij (trace, not averaged)

Elements of T_pM (x) N_pM are plain ``(n, n)`` arrays ``sum_k X_k xi_k^T``
with tangent columns and normal rows.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from .catalog import RANK_TOL, ImmersionSpec, eval_immersion
from .errors import CatalogError, DegenerateImmersionError, OrderExhaustedError
from .jets import Jet


@dataclass
class PointGeometry:
    point: np.ndarray
    order: int
    phi: Jet
    dphi: Jet
    g_jet: Jet
    g_inv_jet: Jet
    gamma_jet: Jet
    B_jet: Jet
    H_jet: Jet
    proj_tangent_jet: Jet
    g: np.ndarray
    g_inv: np.ndarray
    gamma: np.ndarray
    B: np.ndarray
    H: np.ndarray
    tangent_frame: np.ndarray
    normal_frame: np.ndarray
    vol_density: np.ndarray

    @property
    def m(self) -> int:
        return self.g.shape[-1]

    @property
    def n(self) -> int:
        return self.H.shape[-1]

    @property
    def batch_shape(self) -> tuple:
        return self.g.shape[:-2]

    @property
    def proj_tangent(self) -> np.ndarray:
        return self.proj_tangent_jet.value

    @property
    def proj_normal(self) -> np.ndarray:
        return np.eye(self.n) - self.proj_tangent

    def proj_normal_jet(self, order: int) -> Jet:
        pt = self.proj_tangent_jet.truncate(order)
        return -pt + np.eye(self.n)


def _at(order: int, *js: Jet):
    return [j.truncate(order) for j in js]


def gram_schmidt(vectors):
    """Orthonormalize rows ``vectors[..., k, :]`` in index order (arrays or jets)."""
    out = []
    for k in range(vectors.shape[-2]):
        v = vectors[..., k, :]
        for e in out:
            v = v - jets.dot(v, e)[..., None] * e
        norm = jets.sqrt(jets.dot(v, v))
        out.append(v * jets.reciprocal(norm)[..., None] if isinstance(v, Jet) else v / norm[..., None])
    if isinstance(vectors, Jet):
        return jets.stack(out, axis=-2)
    return np.stack(out, axis=-2)


def complete_normal_frame(tangent: np.ndarray) -> np.ndarray:
    """Extend an orthonormal tangent frame by standard basis vectors.

    At each step the basis vector with the largest residual after projecting
    out the current frame is taken (ties go to the lowest index).
    """
    tangent = np.asarray(tangent, dtype=float)
    m, n = tangent.shape[-2:]
    batch = tangent.shape[:-2]
    frame = tangent.reshape((-1, m, n))
    normals = np.zeros((frame.shape[0], n - m, n))
    basis = np.eye(n)
    for b in range(frame.shape[0]):
        current = list(frame[b])
        for k in range(n - m):
            q = np.array(current)
            resid = basis - (basis @ q.T) @ q
            norms = np.linalg.norm(resid, axis=1)
            pick = int(np.argmax(norms))
            v = resid[pick]
            v = v - q.T @ (q @ v)  # second pass for orthogonality
            v /= np.linalg.norm(v)
            normals[b, k] = v
            current.append(v)
    return normals.reshape(batch + (n - m, n))


def point_geometry(spec: ImmersionSpec, point, order: int = jets.DEFAULT_ORDER) -> PointGeometry:
    """Metric, Christoffel symbols, second fundamental form and frames at chart points.

    ``point`` has shape ``(m,)`` or ``(..., m)``; every field gains the same
    leading batch shape.
    """
    if order < 2:
        raise ValueError("point geometry needs jets of order >= 2")
    m, n = spec.m, spec.n
    point = spec.check_point(point)
    phi = eval_immersion(spec, point, order)
    dphi = jets.stack([phi.derivative(i) for i in range(m)], axis=-2)  # order p-1
    d0 = dphi.value
    smin = np.linalg.svd(d0, compute_uv=False)[..., -1]
    if np.any(~(smin > RANK_TOL)):
        raise DegenerateImmersionError(f"differential is rank deficient (smallest singular value {smin.min():.3g})")

    g = jets.dot(dphi[..., :, None, :], dphi[..., None, :, :])
    g = (g + g.swapaxes(-1, -2)) * 0.5
    g_inv = jets.inv(g)
    g_inv = (g_inv + g_inv.swapaxes(-1, -2)) * 0.5

    q = order - 2
    dg = jets.stack([g.derivative(k) for k in range(m)], axis=-3)  # dg[k,i,j] = d_k g_ij
    first_kind = (dg.permute(2, 0, 1) + dg.permute(2, 1, 0) - dg) * 0.5  # [l,i,j]
    (g_inv_q,) = _at(q, g_inv)
    batch = point.shape[:-1]
    gamma = jets.matmul(g_inv_q, first_kind.reshape(batch + (m, m * m))).reshape(batch + (m, m, m))
    gamma = (gamma + gamma.swapaxes(-1, -2)) * 0.5

    ddphi = jets.stack([dphi.derivative(i) for i in range(m)], axis=-3)  # [i,j,a] = d_i d_j phi^a
    (dphi_q,) = _at(q, dphi)
    tangential = (gamma[..., :, :, :, None] * dphi_q[..., :, None, None, :]).sum(-4)
    B = ddphi - tangential
    B = (B + B.swapaxes(-2, -3)) * 0.5
    H = (g_inv_q[..., :, :, None] * B).sum((-3, -2))

    t = jets.matmul(g_inv, dphi)
    proj_t = (dphi[..., :, :, None] * t[..., :, None, :]).sum(-3)
    proj_t = (proj_t + proj_t.swapaxes(-1, -2)) * 0.5

    tangent_frame = gram_schmidt(d0)
    normal_frame = complete_normal_frame(tangent_frame)
    g0 = g.value
    return PointGeometry(
        point=point,
        order=order,
        phi=phi,
        dphi=dphi,
        g_jet=g,
        g_inv_jet=g_inv,
        gamma_jet=gamma,
        B_jet=B,
        H_jet=H,
        proj_tangent_jet=proj_t,
        g=g0,
        g_inv=g_inv.value,
        gamma=gamma.value,
        B=B.value,
        H=H.value,
        tangent_frame=tangent_frame,
        normal_frame=normal_frame,
        vol_density=np.sqrt(np.linalg.det(g0)),
    )


# covariant calculus on jet-valued component fields ---------------------------

def normal_derivative(geom: PointGeometry, field: Jet, direction: int) -> Jet:
    """Normal connection: normal projection of the ambient derivative of ``field``.

    ``field`` is a jet-valued ambient vector ``(..., n)``; the result has one
    order less.
    """
    if field.order == 0:
        raise OrderExhaustedError("field has no derivative data left")
    d = field.derivative(direction)
    return jets.matmul(geom.proj_normal_jet(d.order), d[..., :, None])[..., 0]


def divergence_1form(geom: PointGeometry, w: Jet) -> Jet:
    """g^ij (d_i w_j - Gamma^k_ij w_k) for a 1-form ``w[..., j]``."""
    q = w.order - 1
    dw = jets.stack([w.derivative(i) for i in range(geom.m)], axis=-2)  # [i, j]
    g_inv, gamma, w_q = _at(q, geom.g_inv_jet, geom.gamma_jet, w)
    corr = (gamma * w_q[..., :, None, None]).sum(-3)  # [i, j]
    return (g_inv * (dw - corr)).sum((-2, -1))


def divergence_2tensor(geom: PointGeometry, t: Jet) -> Jet:
    """(div T)_j = g^ik (d_i T_kj - Gamma^l_ik T_lj - Gamma^l_ij T_kl)."""
    q = t.order - 1
    dt = jets.stack([t.derivative(i) for i in range(geom.m)], axis=-3)  # [i, k, j]
    g_inv, gamma, t_q = _at(q, geom.g_inv_jet, geom.gamma_jet, t)
    # Gamma^l_ik T_lj -> [i, k, j]
    c1 = (gamma[..., :, :, :, None] * t_q[..., :, None, None, :]).sum(-4)
    # Gamma^l_ij T_kl -> [i, k, j]
    c2 = (gamma.permute(1, 0, 2)[..., :, None, :, :] * t_q[..., None, :, :, None]).sum(-2)
    full = dt - c1 - c2
    return (g_inv[..., :, :, None] * full).sum((-3, -2))


def laplacian(geom: PointGeometry, f: Jet) -> Jet:
    """Laplace-Beltrami g^ij (d_i d_j f - Gamma^k_ij d_k f); ``f`` may carry trailing axes."""
    if f.order < 2:
        raise OrderExhaustedError("laplacian needs two orders of derivative data")
    q = f.order - 2
    extra = f.ndim - len(geom.batch_shape)
    df = [f.derivative(k) for k in range(geom.m)]
    hess = jets.stack([jets.stack([df[j].derivative(i) for j in range(geom.m)], axis=-1) for i in range(geom.m)], axis=-1)
    grad = jets.stack([d.truncate(q) for d in df], axis=-1)  # [..., k]
    g_inv, gamma = _at(q, geom.g_inv_jet, geom.gamma_jet)
    for _ in range(extra):
        g_inv = g_inv[..., None, :, :]
        gamma = gamma[..., None, :, :, :]
    corr = (gamma * grad[..., :, None, None]).sum(-3)
    return (g_inv * (hess - corr)).sum((-2, -1))


# scalar diagnostics ------------------------------------------------------------

def pseudo_umbilical_residual(geom: PointGeometry) -> np.ndarray:
    """max_ij |<B_ij, H> - (|H|^2 / m) g_ij|; zero exactly at pseudo-umbilical points."""
    a = np.einsum("...ija,...a->...ij", geom.B, geom.H)
    h2 = np.einsum("...a,...a->...", geom.H, geom.H)
    r = a - (h2 / geom.m)[..., None, None] * geom.g
    return np.abs(r).max(axis=(-2, -1))


def mean_curvature_norm(geom: PointGeometry) -> np.ndarray:
    return np.linalg.norm(geom.H, axis=-1)


def is_minimal(geom: PointGeometry, tol: float = 1e-10) -> np.ndarray:
    return mean_curvature_norm(geom) <= tol


def unit_normal(geom: PointGeometry) -> np.ndarray:
    if geom.n != geom.m + 1:
        raise CatalogError("unit normal is defined for hypersurfaces only")
    return geom.normal_frame[..., 0, :]


def principal_curvatures(geom: PointGeometry) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues of the shape operator g^-1 <B, nu> and the normal nu used."""
    nu = unit_normal(geom)
    b = np.einsum("...ija,...a->...ij", geom.B, nu)
    low = np.linalg.cholesky(geom.g)
    li = np.linalg.inv(low)
    sym = li @ b @ np.swapaxes(li, -1, -2)
    sym = (sym + np.swapaxes(sym, -1, -2)) / 2
    return np.linalg.eigvalsh(sym), nu


def scalar_mean_curvature(geom: PointGeometry) -> np.ndarray:
    """Signed h = <H, nu> for the recorded hypersurface normal."""
    return np.einsum("...a,...a->...", geom.H, unit_normal(geom))


def gauss_curvature(geom: PointGeometry) -> np.ndarray:
    """Intrinsic curvature of a surface from Christoffel symbols and their derivatives."""
    if geom.m != 2:
        raise CatalogError("gauss curvature is implemented for surfaces (m = 2)")
    gam = geom.gamma_jet
    dgam = jets.stack([gam.derivative(k) for k in range(2)], axis=-4).value  # [k, l, i, j]
    G = geom.gamma
    # R^l_{101} = d_0 G^l_11 - d_1 G^l_01 + G^l_0p G^p_11 - G^l_1p G^p_01
    r = (
        dgam[..., 0, :, 1, 1]
        - dgam[..., 1, :, 0, 1]
        + np.einsum("...lp,...p->...l", G[..., :, 0, :], G[..., :, 1, 1])
        - np.einsum("...lp,...p->...l", G[..., :, 1, :], G[..., :, 0, 1])
    )
    r0101 = np.einsum("...l,...l->...", geom.g[..., 0, :], r)
    return r0101 / np.linalg.det(geom.g)


def gauss_curvature_extrinsic(geom: PointGeometry) -> np.ndarray:
    """Gauss equation (B_00 . B_11 - |B_01|^2) / det g for surfaces in any codimension."""
    B = geom.B
    num = np.einsum("...a,...a->...", B[..., 0, 0, :], B[..., 1, 1, :]) - np.einsum(
        "...a,...a->...", B[..., 0, 1, :], B[..., 0, 1, :]
    )
    return num / np.linalg.det(geom.g)


def uniform_grid(spec: ImmersionSpec, per_axis: int) -> np.ndarray:
    """Interior grid of ``per_axis ** m`` chart points (cell midpoints)."""
    axes = []
    for lo, hi in spec.bounds():
        axes.append(lo + (hi - lo) * (np.arange(per_axis) + 0.5) / per_axis)
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, spec.m)


def strict_convexity_check(spec: ImmersionSpec, grid=5, order: int = 2) -> tuple[bool, float]:
    """Whether all principal curvatures share one strict sign at every grid point.

    ``grid`` is either an array of chart points or a per-axis node count.
    Returns the verdict and the smallest ``|lambda_i|`` seen.
    """
    if spec.n != spec.m + 1:
        raise CatalogError("strict convexity is defined for hypersurfaces only")
    pts = uniform_grid(spec, grid) if np.isscalar(grid) else np.asarray(grid, dtype=float)
    geom = point_geometry(spec, pts, order=order)
    lam, _ = principal_curvatures(geom)
    same_sign = np.all(lam > 0, axis=-1) | np.all(lam < 0, axis=-1)
    return bool(np.all(same_sign)), float(np.abs(lam).min())


def tn_factorization_residual(a: np.ndarray, geom: PointGeometry) -> np.ndarray:
    """||P_T A P_N - A|| / max(||A||, 1): relative, with a unit floor for tiny fields."""
    proj = geom.proj_tangent @ a @ geom.proj_normal
    num = np.linalg.norm(proj - a, axis=(-2, -1))
    return num / np.maximum(np.linalg.norm(a, axis=(-2, -1)), 1.0)
