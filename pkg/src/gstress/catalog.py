"""Immersion specifications: built-in catalog, definition files, jet evaluation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from . import expr as ex
from . import jets
from .errors import CatalogError, ChartDomainError, DegenerateImmersionError, ExprSyntaxError

DEFAULT_MARGIN = 1e-2
RANK_TOL = 1e-8
_BOUND_SLACK = 1e-12


@dataclass(frozen=True)
class ChartInterval:
    lo: float
    hi: float
    periodic: bool = False


@dataclass(frozen=True)
class ImmersionSpec:
    """A closed (fully bound) parametrized immersion ``U subset R^m -> R^n``."""

    m: int
    n: int
    components: tuple
    chart: tuple
    params: Mapping[str, float] = field(default_factory=dict)
    margin: float = DEFAULT_MARGIN
    name: str = "custom"
    source: tuple = ()  # component expressions as written, before binding

    def __post_init__(self):
        if not 1 <= self.m <= ex.MAX_VARIABLES:
            raise CatalogError(f"intrinsic dimension must be in 1..{ex.MAX_VARIABLES}, got {self.m}")
        if not self.m < self.n <= 8:
            raise CatalogError(f"ambient dimension must satisfy m < n <= 8, got m={self.m}, n={self.n}")
        if len(self.components) != self.n:
            raise CatalogError(f"expected {self.n} components, got {len(self.components)}")
        if len(self.chart) != self.m:
            raise CatalogError(f"expected {self.m} chart intervals, got {len(self.chart)}")
        for c in self.components:
            bad = [i for i in ex.variables_used(c) if i >= self.m]
            if bad:
                raise CatalogError(f"component uses u{bad[0] + 1} but m = {self.m}")
            if ex.params_used(c):
                raise CatalogError(f"unbound parameters {sorted(ex.params_used(c))}")
        for k, (lo, hi) in enumerate(self.bounds()):
            if not lo < hi:
                raise CatalogError(f"chart interval for u{k + 1} is empty after the margin")

    def bounds(self) -> list[tuple[float, float]]:
        """Usable interval per chart variable (margin applied to non-periodic ones)."""
        out = []
        for c in self.chart:
            if c.periodic:
                out.append((c.lo, c.hi))
            else:
                out.append((c.lo + self.margin, c.hi - self.margin))
        return out

    @property
    def periodic(self) -> tuple[bool, ...]:
        return tuple(c.periodic for c in self.chart)

    def expressions(self) -> list[str]:
        return [ex.to_string(c) for c in self.components]

    def check_point(self, point) -> np.ndarray:
        point = np.asarray(point, dtype=float)
        if point.shape[-1:] != (self.m,):
            raise ChartDomainError(f"expected points with {self.m} coordinates, got shape {point.shape}")
        for k, (lo, hi) in enumerate(self.bounds()):
            u = point[..., k]
            if np.any(~np.isfinite(u)) or np.any(u < lo - _BOUND_SLACK) or np.any(u > hi + _BOUND_SLACK):
                raise ChartDomainError(f"u{k + 1} outside the chart interval [{lo:g}, {hi:g}]")
        return point

    def evaluate(self, point) -> np.ndarray:
        """Plain float evaluation of the components, shape ``(..., n)``."""
        point = np.asarray(point, dtype=float)
        u = [point[..., i] for i in range(self.m)]
        return np.stack(
            [np.broadcast_to(np.asarray(ex.evaluate(c, u), dtype=float), point.shape[:-1]) for c in self.components],
            axis=-1,
        )

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        lo, hi = np.array(self.bounds()).T
        return lo + (hi - lo) * rng.random((count, self.m))

    def describe(self) -> dict:
        return {
            "name": self.name,
            "m": self.m,
            "n": self.n,
            "params": {k: float(v) for k, v in sorted(self.params.items())},
            "chart": [[c.lo, c.hi, c.periodic] for c in self.chart],
            "margin": self.margin,
            "components": self.expressions(),
        }


def eval_immersion(spec: ImmersionSpec, point, order: int = jets.DEFAULT_ORDER) -> jets.Jet:
    """Order-``order`` jets of every ambient coordinate, stacked on the last axis."""
    point = spec.check_point(point)
    u = jets.variables(point, order)
    comps = []
    for c in spec.components:
        v = ex.evaluate(c, u)
        if not isinstance(v, jets.Jet):
            v = jets.constant(np.broadcast_to(v, point.shape[:-1]), spec.m, order)
        comps.append(v)
    return jets.stack(comps, axis=-1)


def check_full_rank(spec: ImmersionSpec, points) -> np.ndarray:
    """Smallest singular value of the differential at each point."""
    phi = eval_immersion(spec, points, order=1)
    d = np.stack([phi.derivative(i).value for i in range(spec.m)], axis=-2)
    return np.linalg.svd(d, compute_uv=False)[..., -1]


# catalog -------------------------------------------------------------------

PI = math.pi
TWO_PI = 2 * math.pi


def _polar_sphere(m: int) -> list[str]:
    """Nested polar coordinates on S^m(r); u1..u(m-1) polar, u_m azimuthal."""
    if m == 1:
        return ["r*cos(u1)", "r*sin(u1)"]
    out = []
    prefix = "r"
    for k in range(1, m):
        out.append(f"{prefix}*cos(u{k})")
        prefix = f"{prefix}*sin(u{k})"
    out.append(f"{prefix}*cos(u{m})")
    out.append(f"{prefix}*sin(u{m})")
    return out


def _sphere_chart(m: int):
    if m == 1:
        return [ChartInterval(0.0, TWO_PI, True)]
    return [ChartInterval(0.0, PI) for _ in range(m - 1)] + [ChartInterval(0.0, TWO_PI, True)]


def _require_positive(params, *names):
    for k in names:
        if k not in params:
            raise CatalogError(f"missing parameter {k!r}")
        if not float(params[k]) > 0:
            raise CatalogError(f"parameter {k!r} must be positive, got {params[k]}")


def _sphere(p):
    m = int(p.get("m", 2))
    if not 1 <= m <= 4:
        raise CatalogError("sphere dimension m must be in 1..4")
    _require_positive(p, "r")
    exprs = _polar_sphere(m)
    if m == 2:
        # the conventional (x, y, z) ordering with the polar axis last
        exprs = ["r*sin(u1)*cos(u2)", "r*sin(u1)*sin(u2)", "r*cos(u1)"]
    return m, exprs, _sphere_chart(m), {"r": p["r"]}


def _plane(p):
    return 2, ["u1", "u2", "0"], [ChartInterval(0.0, 1.0), ChartInterval(0.0, 1.0)], {}


def _ellipsoid(p):
    _require_positive(p, "a", "b", "c")
    exprs = ["a*sin(u1)*cos(u2)", "b*sin(u1)*sin(u2)", "c*cos(u1)"]
    return 2, exprs, _sphere_chart(2), {k: p[k] for k in "abc"}


def _ellipsoid4(p):
    names = ["a1", "a2", "a3", "a4", "a5"]
    _require_positive(p, *names)
    exprs = [e.replace("r*", f"{names[k]}*", 1) for k, e in enumerate(_polar_sphere(4))]
    return 4, exprs, _sphere_chart(4), {k: p[k] for k in names}


def _torus(p):
    _require_positive(p, "R", "r")
    if not float(p["R"]) > float(p["r"]):
        raise CatalogError("torus requires R > r")
    exprs = ["(R+r*cos(u1))*cos(u2)", "(R+r*cos(u1))*sin(u2)", "r*sin(u1)"]
    chart = [ChartInterval(0.0, TWO_PI, True), ChartInterval(0.0, TWO_PI, True)]
    return 2, exprs, chart, {"R": p["R"], "r": p["r"]}


def _clifford_torus(p):
    _require_positive(p, "r")
    exprs = ["r*cos(u1)", "r*sin(u1)", "r*cos(u2)", "r*sin(u2)"]
    chart = [ChartInterval(0.0, TWO_PI, True), ChartInterval(0.0, TWO_PI, True)]
    return 2, exprs, chart, {"r": p["r"]}


def _catenoid(p):
    _require_positive(p, "c")
    exprs = ["c*cosh(u1/c)*cos(u2)", "c*cosh(u1/c)*sin(u2)", "u1"]
    chart = [ChartInterval(-1.0, 1.0), ChartInterval(0.0, TWO_PI, True)]
    return 2, exprs, chart, {"c": p["c"]}


def _product_spheres(p):
    _require_positive(p, "r", "rho")
    exprs = [
        "r*sin(u1)*cos(u2)", "r*sin(u1)*sin(u2)", "r*cos(u1)",
        "rho*sin(u3)*cos(u4)", "rho*sin(u3)*sin(u4)", "rho*cos(u3)",
    ]
    chart = [
        ChartInterval(0.0, PI), ChartInterval(0.0, TWO_PI, True),
        ChartInterval(0.0, PI), ChartInterval(0.0, TWO_PI, True),
    ]
    return 4, exprs, chart, {"r": p["r"], "rho": p["rho"]}


def _graph(p):
    if "expr" not in p:
        raise CatalogError("graph needs an 'expr' string for the height function")
    m = int(p.get("m", 2))
    if not 1 <= m <= 4:
        raise CatalogError("graph dimension m must be in 1..4")
    lo, hi = float(p.get("lo", -1.0)), float(p.get("hi", 1.0))
    exprs = [f"u{k + 1}" for k in range(m)] + [str(p["expr"])]
    bound = {k: v for k, v in p.items() if k not in ("expr", "m", "lo", "hi")}
    return m, exprs, [ChartInterval(lo, hi) for _ in range(m)], bound


CATALOG = {
    "plane": (_plane, {}),
    "sphere": (_sphere, {"m": 2, "r": 1.0}),
    "ellipsoid": (_ellipsoid, {"a": 2.0, "b": 1.5, "c": 1.0}),
    "ellipsoid4": (_ellipsoid4, {"a1": 1.0, "a2": 1.1, "a3": 1.2, "a4": 1.3, "a5": 1.4}),
    "torus": (_torus, {"R": 2.0, "r": 0.5}),
    "clifford_torus": (_clifford_torus, {"r": 1.0}),
    "catenoid": (_catenoid, {"c": 1.0}),
    "product_spheres": (_product_spheres, {"r": 1.0, "rho": 2.0}),
    "graph": (_graph, {"m": 2, "expr": "u1^2+u2^2"}),
}

# Entries whose chart has no coordinate singularity to excise; their bounded
# directions are genuine boundaries and are used in full by default.
ENTRY_MARGIN = {"plane": 0.0, "catenoid": 0.0, "graph": 0.0}


def catalog_names() -> list[str]:
    return list(CATALOG)


def catalog_get(name: str, params: Mapping | None = None, margin: float | None = None, **kw) -> ImmersionSpec:
    """Build a catalog immersion; missing parameters take the listed defaults.

    ``margin=None`` uses the entry default (``ENTRY_MARGIN``, else
    ``DEFAULT_MARGIN``).
    """
    if name not in CATALOG:
        raise CatalogError(f"unknown immersion {name!r}; choose from {', '.join(CATALOG)}")
    builder, defaults = CATALOG[name]
    merged = dict(defaults)
    merged.update(params or {})
    merged.update(kw)
    m, exprs, chart, bound = builder(merged)
    if margin is None:
        margin = ENTRY_MARGIN.get(name, DEFAULT_MARGIN)
    bound = {k: float(v) for k, v in bound.items()}
    try:
        asts = tuple(ex.bind(ex.parse_expression(e, bound), bound) for e in exprs)
    except ExprSyntaxError as err:
        raise CatalogError(f"bad expression in {name!r}: {err}") from err
    spec = ImmersionSpec(
        m=m, n=len(exprs), components=asts, chart=tuple(chart), params=bound,
        margin=margin, name=name, source=tuple(exprs),
    )
    _check_rank_on_grid(spec)
    return spec


def _check_rank_on_grid(spec: ImmersionSpec, per_axis: int = 3):
    axes = [np.linspace(lo, hi, per_axis + 2)[1:-1] for lo, hi in spec.bounds()]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, spec.m)
    smin = check_full_rank(spec, pts)
    if np.any(~(smin > RANK_TOL)):
        raise DegenerateImmersionError(f"immersion {spec.name!r} is rank deficient on its chart")


# definition files ------------------------------------------------------------

def parse_definition(text: str, name: str = "file", margin: float = DEFAULT_MARGIN) -> ImmersionSpec:
    """Parse the line-oriented immersion definition format."""
    m = n = None
    params: dict[str, float] = {}
    charts: dict[int, ChartInterval] = {}
    comps: dict[int, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ExprSyntaxError("expected '<key> = <value>'", lineno, 1)
        key, rhs = (s.strip() for s in line.split("=", 1))
        words = key.split()
        try:
            if key == "m":
                m = int(rhs)
            elif key == "n":
                n = int(rhs)
            elif words[0] == "param" and len(words) == 2:
                params[words[1]] = float(_const_value(rhs, params, lineno))
            elif words[0] == "chart" and len(words) == 2 and words[1][:1] == "u":
                parts = rhs.split()
                periodic = parts[-1] == "periodic"
                if periodic:
                    parts = parts[:-1]
                if len(parts) != 2:
                    raise ExprSyntaxError("chart line needs '<lo> <hi> [periodic]'", lineno, 1)
                lo, hi = (_const_value(s, params, lineno) for s in parts)
                charts[int(words[1][1:]) - 1] = ChartInterval(lo, hi, periodic)
            elif len(words) == 1 and words[0][:1] == "x" and words[0][1:].isdigit():
                comps[int(words[0][1:]) - 1] = (rhs, lineno)
            else:
                raise ExprSyntaxError(f"unrecognized key {key!r}", lineno, 1)
        except ValueError as err:
            if isinstance(err, ExprSyntaxError):
                raise
            raise ExprSyntaxError(str(err), lineno, 1) from err
    if m is None or n is None:
        raise CatalogError("definition must set both m and n")
    if sorted(charts) != list(range(m)):
        raise CatalogError(f"definition needs chart lines for u1..u{m}")
    if sorted(comps) != list(range(n)):
        raise CatalogError(f"definition needs component lines x1..x{n}")
    asts = []
    for j in range(n):
        text_j, lineno = comps[j]
        try:
            asts.append(ex.bind(ex.parse_expression(text_j, params), params))
        except ExprSyntaxError as err:
            raise type(err)(f"x{j + 1}: {err}", lineno, err.column) from err
    spec = ImmersionSpec(
        m=m, n=n, components=tuple(asts), chart=tuple(charts[i] for i in range(m)),
        params=params, margin=margin, name=name, source=tuple(comps[j][0] for j in range(n)),
    )
    _check_rank_on_grid(spec)
    return spec


def _const_value(text: str, params, lineno: int) -> float:
    node = ex.parse_expression(text, params)
    if ex.variables_used(node):
        raise ExprSyntaxError("constant expected, found a chart variable", lineno, 1)
    return float(ex.evaluate(node, [], params))


def load_definition(path, margin: float = DEFAULT_MARGIN) -> ImmersionSpec:
    path = Path(path)
    return parse_definition(path.read_text(encoding="utf-8"), name=path.stem, margin=margin)


def resolve(ref: str, params: Mapping | None = None, margin: float | None = None) -> ImmersionSpec:
    """Catalog name or path to a definition file."""
    if ref in CATALOG:
        return catalog_get(ref, params, margin=margin)
    path = Path(ref)
    if path.exists():
        return load_definition(path, margin=DEFAULT_MARGIN if margin is None else margin)
    raise CatalogError(f"{ref!r} is neither a catalog immersion nor a readable file")
