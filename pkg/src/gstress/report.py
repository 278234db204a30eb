"""Report serialization: JSON, CSV and a plain-text summary."""
from __future__ import annotations

import csv
import io
import json

from .errors import ConfigError
from .suites import VerificationReport

FORMATS = ("json", "csv", "text")
CSV_COLUMNS = ("name", "paper_anchor", "max_residual", "tolerance", "pass", "points", "comparison")


def emit_report(report: VerificationReport | dict, fmt: str = "json") -> bytes:
    data = report.as_dict() if isinstance(report, VerificationReport) else report
    if fmt == "json":
        return (json.dumps(data, indent=2, allow_nan=False) + "\n").encode("utf-8")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        for row in data["checks"]:
            writer.writerow({k: _csv_value(row.get(k)) for k in CSV_COLUMNS})
        return buf.getvalue().encode("utf-8")
    if fmt == "text":
        return _text(data).encode("utf-8")
    raise ConfigError(f"unknown report format {fmt!r}; choose from {', '.join(FORMATS)}")


def _csv_value(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else v


def _fmt(x) -> str:
    return "n/a" if x is None else f"{x:.3e}"


def _text(data: dict) -> str:
    cfg = data["config"]
    lines = [f"gstress {data['version']}  suite={cfg.get('suite')}  immersion={cfg.get('immersion')}  seed={data['seed']}"]
    for c in data["checks"]:
        glyph = "PASS" if c["pass"] else "FAIL"
        lines.append(
            f"  [{glyph}] {c['name']:<28} {_fmt(c['max_residual'])} {c['comparison']} {c['tolerance']:.1e}"
            f"  ({c['points']} pts)  {c['paper_anchor']}"
        )
    for i in data["integrals"]:
        lines.append(f"  integral {i['name']}: {_fmt(i['lhs'])} vs {_fmt(i['rhs'])}  rel {_fmt(i['rel_diff'])}  grid {' '.join(i['grid'])}")
    flags = ", ".join(f"{k}={v}" for k, v in data["flags"].items())
    if flags:
        lines.append(f"  flags: {flags}")
    ok = all(c["pass"] for c in data["checks"])
    lines.append(f"overall: {'PASS' if ok else 'FAIL'} ({len(data['checks'])} checks)")
    if data.get("wall_time_ms") is not None:
        lines.append(f"wall time: {data['wall_time_ms']:.1f} ms")
    return "\n".join(lines) + "\n"
