"""Verification suites: sample chart points, evaluate identities, collect checks."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import fdcheck, gaussmap, quadrature, shape, stress
from .catalog import ImmersionSpec, resolve
from .errors import ConfigError, DegenerateImmersionError, SingularPointError

__version__ = "0.1.0"

SUITES = (
    "jets_fd", "geometry", "gauss_metric", "ruh_vilms", "stress_identities",
    "theorem1", "theorem2", "theorem3_consistency", "theorem4_consistency",
)

# check name -> (default tolerance, comparison, anchor)
CHECKS: dict[str, tuple[float, str, str]] = {
    "jet_fd_partials": (1e-5, "<=", "Taylor-jet partials of phi vs Richardson central differences, |alpha| <= 3"),
    "metric_inverse": (1e-12, "<=", "g g^-1 = I for the induced metric"),
    "second_form_normal": (1e-8, "<=", "B(X, Y) is normal: P_T B = 0"),
    "laplacian_phi_is_H": (1e-6, "<=", "Laplacian of phi equals H = trace B"),
    "gauss_equation": (1e-6, "<=", "intrinsic curvature from Christoffel symbols = Gauss equation from B"),
    "canonical_metric_plucker": (1e-9, "<=", "g_can(dG(e_i), dG(e_k)) = sum_j <B(e_i,e_j), B(e_k,e_j)>, Pluecker side"),
    "canonical_metric_tn": (1e-9, "<=", "dG(e_i) = sum_j e_j (x) B(e_i,e_j) with the Frobenius product"),
    "tn_factorization": (1e-8, "<=", "dG and tau(G) lie in T(M) (x) N(M)"),
    "ruh_vilms": (1e-7, "<=", "tension of the Gauss map identified with nabla^perp H"),
    "trace_identity_immersion": (1e-9, "<=", "trace S2 = (m/2)|tau|^2 + (m-2)<dphi, nabla tau>"),
    "trace_identity_gauss": (1e-9, "<=", "trace S2 = (m/2)|tau|^2 + (m-2)<dphi, nabla tau>"),
    "reform_identity_immersion": (1e-8, "<=", "S2 + R = (|tau|^2 + <dphi, nabla tau>) g"),
    "reform_identity_gauss": (1e-8, "<=", "S2 + R = (|tau|^2 + <dphi, nabla tau>) g"),
    "conservation_law_immersion": (1e-7, "<=", "div S = -<tau(phi), dphi>"),
    "conservation_law_gauss": (1e-7, "<=", "div S = -<tau(phi), dphi>"),
    "S2_symmetry_immersion": (1e-12, "<=", "S2(X, Y) = S2(Y, X)"),
    "S2_symmetry_gauss": (1e-12, "<=", "S2(X, Y) = S2(Y, X)"),
    "gauss_trace_chain": (1e-6, "<=", "trace of S2 of the Gauss map at m = 4 through nabla_i <nabla_j H, B_ij>"),
    "theorem1_integral_scaling": (1e-3, "<=", "integral of trace S2(G) = ((4 - m)/2) integral of |tau(G)|^2"),
    "theorem1_grid_convergence": (1e-3, "<=", "grid doubling changes both integrals by less than the tolerance"),
    "divergence_integral": (1e-3, "<=", "integral of div <tau(G), dG> vanishes on a closed manifold"),
    "pseudo_umbilical": (1e-10, "<=", "<B(X,Y), H> = (|H|^2/m) <X,Y>"),
    "S2_immersion_vanishes": (1e-9, "<=", "S2 of the immersion vanishes iff pseudo-umbilical (m = 4)"),
    "S2_immersion_floor": (0.05, ">=", "S2 of the immersion vanishes iff pseudo-umbilical (m = 4)"),
    "pseudo_umbilical_defect": (0.1, ">=", "<B(X,Y), H> = (|H|^2/m) <X,Y>"),
    "S2_gauss_vanishes": (1e-9, "<=", "S2 of the Gauss map vanishes"),
    "mean_curvature_stdev": (1e-10, "<=", "S2(G) = 0 forces constant mean curvature (m = 4)"),
    "strictly_convex": (0.0, ">", "strictly convex hypersurface: principal curvatures of one strict sign"),
    "umbilic_spread": (1e-8, "<=", "a convex hypersurface with S2(G) = 0 is a round hypersphere"),
    "S2_gauss_floor": (1e-3, ">", "a convex hypersurface with S2(G) = 0 is a round hypersphere"),
}

SINGULAR_FRACTION = 0.01
FLAG_TOL = 1e-10


@dataclass
class SuiteConfig:
    suite: str
    immersion: str = "sphere"
    params: dict = field(default_factory=dict)
    points: int = 50
    grid: tuple | None = None
    order: int = 4
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    margin: float | None = None
    timing: bool = False

    def validate(self) -> None:
        if self.suite not in SUITES + ("all",):
            raise ConfigError(f"unknown suite {self.suite!r}; choose from {', '.join(SUITES + ('all',))}")
        if self.points < 1:
            raise ConfigError("--points must be positive")
        if not 2 <= self.order <= 4:
            raise ConfigError("jet order must be 2, 3 or 4")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        for name, tol in self.tolerances.items():
            if name not in CHECKS:
                raise ConfigError(f"unknown check {name!r} in tolerance overrides")
            if not (isinstance(tol, (int, float)) and math.isfinite(tol) and tol > 0):
                raise ConfigError(f"tolerance for {name!r} must be positive")

    def echo(self) -> dict:
        return {
            "suite": self.suite,
            "immersion": self.immersion,
            "params": dict(sorted(self.params.items())),
            "points": self.points,
            "grid": list(self.grid) if self.grid is not None else None,
            "order": self.order,
            "tolerances": dict(sorted(self.tolerances.items())),
            "margin": self.margin,
        }


@dataclass
class Check:
    name: str
    paper_anchor: str
    max_residual: float
    tolerance: float
    passed: bool
    points: int
    comparison: str = "<="

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "paper_anchor": self.paper_anchor,
            "max_residual": _finite(self.max_residual),
            "tolerance": self.tolerance,
            "pass": self.passed,
            "points": self.points,
            "comparison": self.comparison,
        }


@dataclass
class Integral:
    name: str
    lhs: float
    rhs: float
    rel_diff: float
    grid: list

    def as_dict(self) -> dict:
        return {"name": self.name, "lhs": _finite(self.lhs), "rhs": _finite(self.rhs),
                "rel_diff": _finite(self.rel_diff), "grid": self.grid}


@dataclass
class VerificationReport:
    config: dict
    seed: int
    checks: list = field(default_factory=list)
    integrals: list = field(default_factory=list)
    flags: dict = field(default_factory=dict)
    wall_time_ms: float | None = None
    version: str = __version__

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {
            "version": self.version,
            "config": self.config,
            "checks": [c.as_dict() for c in self.checks],
            "integrals": [i.as_dict() for i in self.integrals],
            "flags": self.flags,
            "wall_time_ms": self.wall_time_ms,
            "seed": self.seed,
        }


def _finite(x):
    x = float(x)
    return x if math.isfinite(x) else None


# point evaluation with per-point singularity bookkeeping -------------------------

_POINT_ERRORS = (SingularPointError, DegenerateImmersionError, np.linalg.LinAlgError)


def pointwise(fn: Callable[[np.ndarray], dict], pts: np.ndarray) -> tuple[dict, int]:
    """Run ``fn`` on a batch; on a singular point fall back to one point at a time.

    ``fn`` returns a dict of per-point arrays.  Returns the concatenated arrays
    over the points that evaluated and the number that raised.
    """
    try:
        return fn(pts), 0
    except _POINT_ERRORS:
        pass
    parts, failed = [], 0
    for p in pts:
        try:
            parts.append(fn(p[None, :]))
        except _POINT_ERRORS:
            failed += 1
    if not parts:
        return {}, failed
    return {k: np.concatenate([np.atleast_1d(d[k]) for d in parts]) for k in parts[0]}, failed


class _Run:
    def __init__(self, cfg: SuiteConfig, spec: ImmersionSpec):
        self.cfg = cfg
        self.spec = spec
        rng = np.random.default_rng(cfg.seed)
        self.points = spec.sample(cfg.points, rng)
        self.report = VerificationReport(config=cfg.echo(), seed=cfg.seed)

    def tol(self, name: str) -> float:
        return float(self.cfg.tolerances.get(name, CHECKS[name][0]))

    def add(self, name: str, values, failed: int = 0, reduce: str | None = None, points: int | None = None):
        default, cmp, anchor = CHECKS[name]
        tol = self.tol(name)
        values = np.asarray(values, dtype=float).ravel()
        total = len(values) + failed
        if reduce is None:
            reduce = "max" if cmp == "<=" else "min"
        if len(values) == 0:
            measured = math.nan
        else:
            measured = float(values.max() if reduce == "max" else values.min())
        ok = math.isfinite(measured) and {
            "<=": measured <= tol, ">=": measured >= tol, ">": measured > tol,
        }[cmp]
        ok = ok and failed <= SINGULAR_FRACTION * total
        count = len(values) if points is None else points
        self.report.checks.append(Check(name, anchor, measured, tol, bool(ok), count, cmp))

    def geometry(self, pts, order=None):
        return shape.point_geometry(self.spec, pts, order or self.cfg.order)

    def need_order4(self):
        if self.cfg.order < 4:
            raise ConfigError(f"suite {self.cfg.suite!r} needs jet order 4")


# suites -------------------------------------------------------------------------

def _jets_fd(run: _Run):
    res = fdcheck.jet_vs_fd(run.spec, run.points, order=min(3, run.cfg.order))
    err = np.max(np.stack([r["rel_err"].max(axis=-1) for r in res.values()]), axis=0)
    run.add("jet_fd_partials", err)


def _geometry(run: _Run):
    def fn(p):
        geom = run.geometry(p)
        eye = np.eye(geom.m)
        out = {
            "inv": np.abs(geom.g @ geom.g_inv - eye).max(axis=(-2, -1)),
            "normal": np.abs(np.einsum("...ab,...ijb->...ija", geom.proj_tangent, geom.B)).max(axis=(-3, -2, -1)),
        }
        if geom.order >= 3:
            lap = shape.laplacian(geom, geom.phi.truncate(geom.order)).value
            out["lap"] = np.abs(lap - geom.H).max(axis=-1)
        if geom.m == 2 and geom.order >= 3:
            out["gauss"] = np.abs(shape.gauss_curvature(geom) - shape.gauss_curvature_extrinsic(geom))
        return out

    vals, failed = pointwise(fn, run.points)
    run.add("metric_inverse", vals.get("inv", []), failed)
    run.add("second_form_normal", vals.get("normal", []), failed)
    if "lap" in vals:
        run.add("laplacian_phi_is_H", vals["lap"], failed)
    if "gauss" in vals:
        run.add("gauss_equation", vals["gauss"], failed)


def _gauss_metric(run: _Run):
    run.need_order4()

    def fn(p):
        geom = run.geometry(p)
        fields = gaussmap.gauss_fields(geom, with_plucker=True)
        res = gaussmap.canonical_metric_residual(geom, fields)
        fact = np.maximum(shape.tn_factorization_residual(fields.tau, geom), _dg_factorization(fields, geom))
        return {"plucker": res["plucker"], "tn": res["tn"], "fact": fact}

    vals, failed = pointwise(fn, run.points)
    run.add("canonical_metric_plucker", vals.get("plucker", []), failed)
    run.add("canonical_metric_tn", vals.get("tn", []), failed)
    run.add("tn_factorization", vals.get("fact", []), failed)


def _dg_factorization(fields, geom) -> np.ndarray:
    pt, pn = geom.proj_tangent[..., None, :, :], geom.proj_normal[..., None, :, :]
    a = fields.dG
    num = np.linalg.norm(pt @ a @ pn - a, axis=(-2, -1))
    return (num / np.maximum(np.linalg.norm(a, axis=(-2, -1)), 1.0)).max(axis=-1)


def _ruh_vilms(run: _Run):
    run.need_order4()

    def fn(p):
        geom = run.geometry(p)
        fields = gaussmap.gauss_fields(geom, with_plucker=True)
        return {"rv": gaussmap.ruh_vilms_residual(geom, fields)}

    vals, failed = pointwise(fn, run.points)
    run.add("ruh_vilms", vals.get("rv", []), failed)


def _s2_asym(f) -> np.ndarray:
    s2 = stress.biharmonic_S2(f)
    return np.abs(s2 - np.swapaxes(s2, -1, -2)).max(axis=(-2, -1))


def _stress_identities(run: _Run):
    run.need_order4()
    chain = run.spec.m == 4

    def fn(p):
        geom = run.geometry(p)
        fields = gaussmap.gauss_fields(geom)
        out = {}
        for kind, f in (("immersion", stress.immersion_fields(geom)), ("gauss", stress.gauss_map_fields(geom, fields))):
            out[f"trace_{kind}"] = stress.s2_trace_identity_residual(f)
            out[f"reform_{kind}"] = stress.reform_identity_residual(f)
            out[f"cons_{kind}"] = stress.div_S_residual(f)
            out[f"sym_{kind}"] = _s2_asym(f)
        if chain:
            out["chain"] = stress.s2_gauss_trace_chain_residual(geom, fields)
        return out

    vals, failed = pointwise(fn, run.points)
    for kind in ("immersion", "gauss"):
        run.add(f"trace_identity_{kind}", vals.get(f"trace_{kind}", []), failed)
        run.add(f"reform_identity_{kind}", vals.get(f"reform_{kind}", []), failed)
        run.add(f"conservation_law_{kind}", vals.get(f"cons_{kind}", []), failed)
        run.add(f"S2_symmetry_{kind}", vals.get(f"sym_{kind}", []), failed)
    if chain:
        run.add("gauss_trace_chain", vals.get("chain", []), failed)


HARMONIC_FLOOR = 1e-8
# doubled grids above this many nodes are skipped by the convergence monitor
MAX_DOUBLED_NODES = 200_000


def _theorem1(run: _Run):
    run.need_order4()
    spec = run.spec
    grid = quadrature.make_grid(spec, run.cfg.grid)
    fields = ["one", "trace_S2", "tau_norm2", "div_omega"]
    vals = quadrature.integrate_many(spec, fields, grid)
    desc = grid.describe()
    factor = 0.5 * (4 - spec.m)
    lhs, rhs = vals["trace_S2"], factor * vals["tau_norm2"]
    # a harmonic Gauss map makes every integral vanish: measure against the area
    floor = HARMONIC_FLOOR * vals["one"]
    # at m = 4 both sides vanish in exact arithmetic; the bienergy sets the scale
    scale = max(vals["tau_norm2"], floor) if spec.m == 4 else floor
    rel = quadrature.relative_difference(lhs, rhs, floor=scale)
    report = run.report
    report.integrals.append(quadrature_record("theorem1_trace_S2_vs_scaled_tau_norm2", lhs, rhs, rel, desc))
    run.add("theorem1_integral_scaling", [rel])

    div_rel = quadrature.relative_difference(vals["div_omega"], 0.0, floor=max(vals["tau_norm2"], floor))
    report.integrals.append(quadrature_record("divergence_of_tau_dG", vals["div_omega"], 0.0, div_rel, desc))
    run.add("divergence_integral", [div_rel])

    excluded = quadrature.excluded_measure(spec)
    report.integrals.append(quadrature_record("excluded_margin_measure", excluded, vals["one"],
                                              excluded / vals["one"] if vals["one"] else 0.0, desc))

    fine = quadrature.doubled(spec, grid)
    if fine.size <= MAX_DOUBLED_NODES:
        v2 = quadrature.integrate_many(spec, ["trace_S2", "tau_norm2"], fine)
        changes = []
        for key in ("trace_S2", "tau_norm2"):
            change = quadrature.relative_difference(v2[key], vals[key], floor=scale)
            changes.append(change)
            report.integrals.append(quadrature_record(f"theorem1_{key}_doubled_grid", v2[key], vals[key], change,
                                                      fine.describe()))
        run.add("theorem1_grid_convergence", changes)


def quadrature_record(name, lhs, rhs, rel, grid) -> Integral:
    return Integral(name, float(lhs), float(rhs), float(rel), list(grid))


def _require_m4(run: _Run, hypersurface: bool = False):
    if run.spec.m != 4:
        raise ConfigError(f"suite {run.cfg.suite!r} applies to 4-dimensional immersions")
    if hypersurface and run.spec.n != 5:
        raise ConfigError(f"suite {run.cfg.suite!r} applies to hypersurfaces in R^5")


def _s2_max(f) -> np.ndarray:
    return np.abs(stress.biharmonic_S2(f)).max(axis=(-2, -1))


def _theorem2(run: _Run):
    _require_m4(run)

    def fn(p):
        geom = run.geometry(p)
        return {"pu": shape.pseudo_umbilical_residual(geom), "s2": _s2_max(stress.immersion_fields(geom))}

    vals, failed = pointwise(fn, run.points)
    pu = vals.get("pu", np.array([]))
    if len(pu) and pu.max() <= run.tol("pseudo_umbilical"):
        run.add("pseudo_umbilical", pu, failed)
        run.add("S2_immersion_vanishes", vals["s2"], failed)
    else:
        run.add("pseudo_umbilical_defect", pu, failed)
        run.add("S2_immersion_floor", vals.get("s2", []), failed)


def _theorem3(run: _Run):
    _require_m4(run)
    run.need_order4()

    def fn(p):
        geom = run.geometry(p)
        return {"s2": _s2_max(stress.gauss_map_fields(geom)), "h": shape.mean_curvature_norm(geom)}

    vals, failed = pointwise(fn, run.points)
    run.add("S2_gauss_vanishes", vals.get("s2", []), failed)
    h = vals.get("h", np.array([]))
    run.add("mean_curvature_stdev", [float(np.std(h))] if len(h) else [], failed, points=len(h))


CONVEXITY_GRID = 5


def _theorem4(run: _Run):
    _require_m4(run, hypersurface=True)
    run.need_order4()
    convex, lam_min = shape.strict_convexity_check(run.spec, CONVEXITY_GRID)
    run.add("strictly_convex", [lam_min if convex else 0.0], points=CONVEXITY_GRID ** run.spec.m)

    def fn(p):
        geom = run.geometry(p)
        lam, _ = shape.principal_curvatures(geom)
        return {"s2": _s2_max(stress.gauss_map_fields(geom)), "spread": lam[..., -1] - lam[..., 0]}

    vals, failed = pointwise(fn, run.points)
    spread = vals.get("spread", np.array([]))
    if len(spread) and spread.max() <= run.tol("umbilic_spread"):
        run.add("umbilic_spread", spread, failed)
        run.add("S2_gauss_vanishes", vals["s2"], failed)
    else:
        run.add("S2_gauss_floor", vals.get("s2", []), failed, reduce="max")


_RUNNERS = {
    "jets_fd": _jets_fd,
    "geometry": _geometry,
    "gauss_metric": _gauss_metric,
    "ruh_vilms": _ruh_vilms,
    "stress_identities": _stress_identities,
    "theorem1": _theorem1,
    "theorem2": _theorem2,
    "theorem3_consistency": _theorem3,
    "theorem4_consistency": _theorem4,
}


def applicable_suites(spec: ImmersionSpec) -> list[str]:
    out = list(SUITES)
    if spec.m != 4:
        out = [s for s in out if not s.startswith("theorem") or s == "theorem1"]
    elif spec.n != 5:
        out.remove("theorem4_consistency")
    return out


def compute_flags(spec: ImmersionSpec, points: np.ndarray) -> dict:
    """Pseudo-umbilical / minimal on the sampled points; convexity on a grid (hypersurfaces)."""

    def fn(p):
        geom = shape.point_geometry(spec, p, order=2)
        return {"pu": shape.pseudo_umbilical_residual(geom), "h": shape.mean_curvature_norm(geom)}

    vals, _ = pointwise(fn, points)
    convex = None
    if spec.n == spec.m + 1:
        try:
            convex = shape.strict_convexity_check(spec)[0]
        except _POINT_ERRORS:
            convex = False
    pu, h = vals.get("pu", np.array([np.inf])), vals.get("h", np.array([np.inf]))
    return {
        "strictly_convex": convex,
        "pseudo_umbilical": bool(pu.max() <= FLAG_TOL),
        "minimal": bool(h.max() <= FLAG_TOL),
    }


def run_suite(cfg: SuiteConfig, spec: ImmersionSpec | None = None) -> VerificationReport:
    """Execute ``cfg.suite`` (or every applicable suite for ``all``).

    Configuration problems raise :class:`ConfigError` before any evaluation;
    failing checks are recorded, never raised.
    """
    cfg.validate()
    if spec is None:
        spec = resolve(cfg.immersion, cfg.params, margin=cfg.margin)
    if cfg.grid is not None and len(cfg.grid) not in (1, spec.m):
        raise ConfigError(f"--grid needs 1 or {spec.m} node counts")
    if cfg.grid is not None and len(cfg.grid) == 1:
        cfg.grid = tuple(cfg.grid) * spec.m
    names = applicable_suites(spec) if cfg.suite == "all" else [cfg.suite]
    start = time.perf_counter()
    run = _Run(cfg, spec)
    run.report.config["immersion_spec"] = spec.describe()
    for name in names:
        _RUNNERS[name](run)
    run.report.flags = compute_flags(spec, run.points)
    if cfg.timing:
        run.report.wall_time_ms = round((time.perf_counter() - start) * 1e3, 3)
    return run.report
