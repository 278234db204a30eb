"""``gstress`` command line: list, inspect, verify, integrate."""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import gaussmap, jets, quadrature, shape, stress
from .catalog import CATALOG, catalog_get, resolve
from .errors import GStressError
from .report import FORMATS, emit_report
from .suites import SUITES, SuiteConfig, __version__, run_suite

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class _ConfigArgError(GStressError):
    pass


def _scalar(text: str):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


def parse_pairs(text: str | None, what: str) -> dict:
    """``k=v,k=v`` into a dict; numeric values are converted."""
    out = {}
    if not text:
        return out
    for item in text.split(","):
        if "=" not in item:
            raise _ConfigArgError(f"{what}: expected key=value, got {item!r}")
        k, v = (s.strip() for s in item.split("=", 1))
        if not k:
            raise _ConfigArgError(f"{what}: empty key in {item!r}")
        out[k] = _scalar(v)
    return out


def parse_grid(text: str | None):
    if not text:
        return None
    try:
        counts = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise _ConfigArgError(f"--grid expects integers, got {text!r}") from None
    if min(counts) < 1:
        raise _ConfigArgError("--grid counts must be positive")
    return counts


def parse_point(text: str, m: int) -> np.ndarray:
    pairs = parse_pairs(text, "--at")
    point = np.full(m, np.nan)
    for k, v in pairs.items():
        if not (k.startswith("u") and k[1:].isdigit() and 1 <= int(k[1:]) <= m):
            raise _ConfigArgError(f"--at: unknown chart variable {k!r} (have u1..u{m})")
        if isinstance(v, str):
            raise _ConfigArgError(f"--at: {k} must be a number")
        point[int(k[1:]) - 1] = float(v)
    if np.isnan(point).any():
        raise _ConfigArgError(f"--at must give all of u1..u{m}")
    return point


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gstress", description="Stress-energy and Gauss-map verification engine.")
    p.add_argument("--version", action="version", version=f"gstress {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="list catalog immersions")

    def immersion_args(sp):
        sp.add_argument("--immersion", required=True, help="catalog name or definition file")
        sp.add_argument("--params", help="k=v,... parameter overrides")
        sp.add_argument("--margin", type=float, help="chart margin (default: per entry)")

    sp = sub.add_parser("inspect", help="geometry at one chart point")
    immersion_args(sp)
    sp.add_argument("--at", required=True, help="u1=..,u2=..")
    sp.add_argument("--json", action="store_true")
    sp.add_argument("--dump-jets", action="store_true", help="include the Taylor coefficients of phi")

    sp = sub.add_parser("verify", help="run a verification suite")
    sp.add_argument("--suite", required=True, choices=SUITES + ("all",))
    immersion_args(sp)
    sp.add_argument("--points", type=int, default=50)
    sp.add_argument("--grid", help="quadrature node counts N[,N...]")
    sp.add_argument("--order", type=int, default=4)
    sp.add_argument("--tol", help="per-check tolerance overrides name=val,...")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", help="write the report here instead of stdout")
    sp.add_argument("--format", choices=FORMATS, default="json")
    sp.add_argument("--timing", action="store_true", help="record wall time (reports are then not byte-stable)")

    sp = sub.add_parser("integrate", help="integrate a scalar field over the chart")
    immersion_args(sp)
    sp.add_argument("--functional", required=True, help=f"field id: {', '.join(quadrature.FIELDS)}")
    sp.add_argument("--grid")
    sp.add_argument("--json", action="store_true")
    return p


def _resolve(args):
    return resolve(args.immersion, parse_pairs(args.params, "--params"), margin=args.margin)


def _cmd_list(args, out) -> int:
    for name, (_, defaults) in CATALOG.items():
        spec = catalog_get(name)
        params = ", ".join(f"{k}={v}" for k, v in defaults.items())
        out.write(f"{name:<16} m={spec.m} n={spec.n}  {params}\n")
    return EXIT_OK


def _tolist(a):
    return np.asarray(a).tolist()


def inspect_point(spec, point, dump_jets: bool = False) -> dict:
    geom = shape.point_geometry(spec, point[None, :])
    g0 = lambda a: a[0]  # noqa: E731
    out = {
        "immersion": spec.describe(),
        "point": _tolist(point),
        "phi": _tolist(g0(geom.phi.value)),
        "metric": _tolist(g0(geom.g)),
        "christoffel": _tolist(g0(geom.gamma)),
        "second_fundamental_form": _tolist(g0(geom.B)),
        "mean_curvature": _tolist(g0(geom.H)),
        "mean_curvature_norm": float(g0(shape.mean_curvature_norm(geom))),
        "pseudo_umbilical_residual": float(g0(shape.pseudo_umbilical_residual(geom))),
        "volume_density": float(g0(geom.vol_density)),
    }
    if spec.n == spec.m + 1:
        lam, _ = shape.principal_curvatures(geom)
        out["principal_curvatures"] = _tolist(g0(lam))
    if spec.m == 2:
        out["gauss_curvature"] = float(g0(shape.gauss_curvature(geom)))
    fields = gaussmap.gauss_fields(geom, with_plucker=True)
    out["gauss_map_plucker"] = _tolist(g0(fields.plucker.value))
    out["gauss_tension_norm"] = float(np.linalg.norm(g0(fields.tau)))
    out["ruh_vilms_residual"] = float(g0(gaussmap.ruh_vilms_residual(geom, fields)))
    out["S2_immersion"] = _tolist(g0(stress.biharmonic_S2(stress.immersion_fields(geom))))
    out["S2_gauss"] = _tolist(g0(stress.biharmonic_S2(stress.gauss_map_fields(geom, fields))))
    if dump_jets:
        out["phi_jets"] = {
            "multi_indices": [[int(x) for x in a] for a in jets.multi_indices(spec.m, geom.phi.order)],
            "coefficients": _tolist(g0(geom.phi.coeffs)),  # [component, multi-index]
        }
    return out


def _cmd_inspect(args, out) -> int:
    spec = _resolve(args)
    point = parse_point(args.at, spec.m)
    spec.check_point(point)
    data = inspect_point(spec, point, args.dump_jets)
    if args.json:
        out.write(json.dumps(data, indent=2) + "\n")
        return EXIT_OK
    for key, val in data.items():
        if key in ("immersion", "phi_jets"):
            continue
        out.write(f"{key}: {val}\n")
    if "phi_jets" in data:
        coeffs = np.array(data["phi_jets"]["coefficients"])
        for k, alpha in enumerate(data["phi_jets"]["multi_indices"]):
            out.write(f"phi coeff {tuple(alpha)}: {coeffs[:, k].tolist()}\n")
    return EXIT_OK


def _cmd_verify(args, out) -> int:
    cfg = SuiteConfig(
        suite=args.suite,
        immersion=args.immersion,
        params=parse_pairs(args.params, "--params"),
        points=args.points,
        grid=parse_grid(args.grid),
        order=args.order,
        tolerances=parse_pairs(args.tol, "--tol"),
        seed=args.seed,
        margin=args.margin,
        timing=args.timing,
    )
    report = run_suite(cfg)
    blob = emit_report(report, args.format)
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(blob)
    else:
        out.write(blob.decode("utf-8"))
    return EXIT_OK if report.passed else EXIT_FAIL


def _cmd_integrate(args, out) -> int:
    spec = _resolve(args)
    if args.functional not in quadrature.FIELDS:
        raise _ConfigArgError(f"unknown field id {args.functional!r}; choose from {', '.join(quadrature.FIELDS)}")
    grid = quadrature.make_grid(spec, parse_grid(args.grid))
    value = quadrature.integrate(spec, args.functional, grid)
    data = {
        "immersion": spec.name,
        "functional": args.functional,
        "value": value,
        "grid": grid.describe(),
        "excluded_margin_measure": quadrature.excluded_measure(spec),
    }
    if args.json:
        out.write(json.dumps(data, indent=2) + "\n")
    else:
        out.write(f"{args.functional} = {value!r}  grid {' '.join(data['grid'])}"
                  f"  (excluded margin measure {data['excluded_margin_measure']:.3e})\n")
    return EXIT_OK


_COMMANDS = {"list": _cmd_list, "inspect": _cmd_inspect, "verify": _cmd_verify, "integrate": _cmd_integrate}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args, out)
    except (GStressError, ValueError, OSError) as err:
        # everything that escapes a command is a configuration or input problem
        sys.stderr.write(f"gstress: error: {err}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
