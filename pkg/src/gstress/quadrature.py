"""Tensor-product quadrature over the chart with the Riemannian volume form."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import expr, gaussmap, jets, shape, stress
from .catalog import ImmersionSpec
from .errors import ConfigError

DEFAULT_NODES = {2: (32, 64), 4: (12, 24)}  # (Gauss-Legendre, periodic trapezoid)
CHUNK = 2048


@dataclass(frozen=True)
class QuadratureGrid:
    rules: tuple  # per dimension: ("gauss_legendre" | "trapezoid_periodic", k)
    nodes: tuple  # per dimension node arrays
    weights: tuple  # per dimension weight arrays

    @property
    def size(self) -> int:
        return math.prod(len(x) for x in self.nodes)

    def points(self) -> np.ndarray:
        return np.stack(np.meshgrid(*self.nodes, indexing="ij"), axis=-1).reshape(-1, len(self.nodes))

    def point_weights(self) -> np.ndarray:
        return np.prod(np.stack(np.meshgrid(*self.weights, indexing="ij"), axis=-1), axis=-1).ravel()

    def describe(self) -> list:
        return [f"{r}({k})" for r, k in self.rules]


def default_counts(spec: ImmersionSpec) -> list[int]:
    gl, tr = DEFAULT_NODES.get(spec.m, (12, 24))
    return [tr if p else gl for p in spec.periodic]


def make_grid(spec: ImmersionSpec, counts=None, bounds=None) -> QuadratureGrid:
    """Gauss-Legendre on bounded directions, trapezoid on periodic ones.

    ``counts`` is one node count per chart direction, or a single integer
    applied to every direction; ``None`` takes the defaults.
    """
    if counts is None:
        counts = default_counts(spec)
    elif np.isscalar(counts):
        counts = [int(counts)] * spec.m
    counts = [int(c) for c in counts]
    if len(counts) != spec.m or min(counts) < 1:
        raise ConfigError(f"need {spec.m} positive node counts, got {counts}")
    bounds = bounds or spec.bounds()
    rules, nodes, weights = [], [], []
    for (lo, hi), periodic, k in zip(bounds, spec.periodic, counts):
        if periodic:
            h = (hi - lo) / k
            x = lo + h * np.arange(k)
            w = np.full(k, h)
            rules.append(("trapezoid_periodic", k))
        else:
            t, w = np.polynomial.legendre.leggauss(k)
            x = 0.5 * (hi - lo) * t + 0.5 * (hi + lo)
            w = 0.5 * (hi - lo) * w
            rules.append(("gauss_legendre", k))
        nodes.append(x)
        weights.append(w)
    return QuadratureGrid(tuple(rules), tuple(nodes), tuple(weights))


def doubled(spec: ImmersionSpec, grid: QuadratureGrid) -> QuadratureGrid:
    return make_grid(spec, [2 * k for _, k in grid.rules])


# integrands ----------------------------------------------------------------------

def _gauss(geom):
    return stress.gauss_map_fields(geom)


FIELDS = {
    "one": (2, lambda geom, cache: np.ones(geom.batch_shape)),
    "energy_density": (2, lambda geom, cache: 0.5 * stress.energy_density(cache("imm"))),
    "bienergy_density": (2, lambda geom, cache: 0.5 * stress.tau_norm2(cache("imm"))),
    "gauss_energy_density": (4, lambda geom, cache: 0.5 * stress.energy_density(cache("gauss"))),
    "gauss_bienergy_density": (4, lambda geom, cache: 0.5 * stress.tau_norm2(cache("gauss"))),
    "trace_S2": (4, lambda geom, cache: stress.trace(cache("gauss"), stress.biharmonic_S2(cache("gauss")))),
    "trace_S2_immersion": (4, lambda geom, cache: stress.trace(cache("imm"), stress.biharmonic_S2(cache("imm")))),
    "tau_norm2": (4, lambda geom, cache: stress.tau_norm2(cache("gauss"))),
    "gauss_curvature": (3, lambda geom, cache: shape.gauss_curvature(geom)),
    "div_omega": (4, lambda geom, cache: _div_omega(geom, cache("gauss"))),
    "mean_curvature_norm": (2, lambda geom, cache: shape.mean_curvature_norm(geom)),
}
"""Field id -> (jet order needed, integrand).  Gauss-map fields: ``trace_S2``,
``tau_norm2``, ``gauss_*``, ``div_omega``; immersion fields: ``energy_density``,
``bienergy_density``, ``trace_S2_immersion``."""


def _div_omega(geom, f):
    comps = f.extra.tau_components
    tau_jet = gaussmap.tn_from_components(geom, comps)
    omega = (tau_jet[..., None, :, :] * f.extra.dG_jet.truncate(comps.order)).sum((-2, -1))
    return shape.divergence_1form(geom, omega).value


def evaluate_fields(spec: ImmersionSpec, field_ids, points: np.ndarray) -> dict:
    """Evaluate several integrands at chart points sharing one geometry pass."""
    unknown = [f for f in field_ids if f not in FIELDS]
    if unknown:
        raise ConfigError(f"unknown field id(s) {unknown}; choose from {sorted(FIELDS)}")
    order = max(4, max(FIELDS[f][0] for f in field_ids))
    geom = shape.point_geometry(spec, points, order)
    memo = {}

    def cache(key):
        if key not in memo:
            memo[key] = stress.immersion_fields(geom) if key == "imm" else _gauss(geom)
        return memo[key]

    out = {f: np.broadcast_to(FIELDS[f][1](geom, cache), geom.batch_shape) for f in field_ids}
    out["_vol"] = geom.vol_density
    return out


def _threads() -> int:
    raw = os.environ.get("GSTRESS_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"GSTRESS_THREADS must be an integer, got {raw!r}") from None
    return n if n > 0 else (os.cpu_count() or 1)


def integrate_many(spec: ImmersionSpec, field_ids, grid: QuadratureGrid | None = None, chunk: int = CHUNK) -> dict:
    """Integrals of several scalar fields against the volume form on one grid.

    Nodes are evaluated in chunks (concurrently if ``GSTRESS_THREADS`` allows);
    the reduction is a compensated sum in node order.
    """
    grid = grid or make_grid(spec)
    field_ids = list(field_ids)
    pts = grid.points()
    w = grid.point_weights()
    slices = [slice(i, min(i + chunk, len(pts))) for i in range(0, len(pts), chunk)]

    def work(sl):
        return evaluate_fields(spec, field_ids, pts[sl])

    workers = min(_threads(), len(slices))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(work, slices))
    else:
        parts = [work(sl) for sl in slices]
    vol = np.concatenate([p["_vol"] for p in parts])
    result = {}
    for f in field_ids:
        vals = np.concatenate([p[f] for p in parts])
        result[f] = math.fsum((w * vals * vol).tolist())
    return result


def integrate(spec: ImmersionSpec, field: str, grid: QuadratureGrid | None = None) -> float:
    return integrate_many(spec, [field], grid)[field]


def excluded_measure(spec: ImmersionSpec, nodes: int = 8) -> float:
    """Volume of the chart strips removed by the margin (estimate).

    Each non-periodic direction contributes two strips of width ``margin``;
    corner overlaps are counted twice, so this slightly over-estimates.
    """
    if spec.margin <= 0:
        return 0.0
    total = 0.0
    inner = spec.bounds()
    for k, c in enumerate(spec.chart):
        if c.periodic:
            continue
        for lo, hi in ((c.lo, c.lo + spec.margin), (c.hi - spec.margin, c.hi)):
            b = list(inner)
            b[k] = (lo, hi)
            counts = [nodes if j == k else n for j, n in enumerate(default_counts(spec))]
            grid = make_grid(spec, counts, bounds=b)
            d = _differential(spec, grid.points())
            vol = np.sqrt(np.abs(np.linalg.det(d @ np.swapaxes(d, -1, -2))))
            total += math.fsum((grid.point_weights() * vol).tolist())
    return total


def _differential(spec: ImmersionSpec, pts: np.ndarray) -> np.ndarray:
    # strips lie outside the margined chart, so bypass the chart check
    u = jets.variables(pts, order=1)
    comps = []
    for c in spec.components:
        v = expr.evaluate(c, u)
        comps.append(v.coeffs[..., 1:] if isinstance(v, jets.Jet) else np.zeros(pts.shape[:-1] + (spec.m,)))
    return np.stack(comps, axis=-1)  # (..., m, n)


def theorem1_integral_pair(spec: ImmersionSpec, grid: QuadratureGrid | None = None) -> dict:
    """Integrals of tr S2(G) and ((4 - m)/2) |tau(G)|^2; equal on closed manifolds."""
    grid = grid or make_grid(spec)
    vals = integrate_many(spec, ["trace_S2", "tau_norm2"], grid)
    return {
        "trace_S2": vals["trace_S2"],
        "scaled_tau_norm2": 0.5 * (4 - spec.m) * vals["tau_norm2"],
        "tau_norm2": vals["tau_norm2"],
        "grid": grid.describe(),
    }


def relative_difference(a: float, b: float, floor: float = 0.0) -> float:
    den = max(abs(a), abs(b), floor)
    return 0.0 if den == 0 else abs(a - b) / den
