"""Report emission: JSON (full fidelity), CSV (one row per scenario), SVG figures.

CSV columns, in order (empty cell when a kind has no such quantity):

``name, kind, status, passed, seed, lambda, p, I0, I1, I_lambda, epsilon,
tau0, tau1, tau_lambda, area0, area1, area_lambda, h0, asym, hausdorff,
flags, failed``

With ``svg`` output, FEM scenarios also get ``NNN_<name>_field.txt`` (the
line-oriented mesh and field dump) and ``NNN_<name>_field.svg``, drawn from
that text.

``flags`` lists ``check=pass|fail|na`` joined by ``;`` and ``failed`` counts
applicable checks that do not hold.  Wall times go to ``timings.csv`` so the
other files depend only on the scenarios.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .runner import SCHEMA, VerificationReport

FORMATS = ("json", "csv", "svg")
CSV_COLUMNS = (
    "name", "kind", "status", "passed", "seed", "lambda", "p",
    "I0", "I1", "I_lambda", "epsilon", "tau0", "tau1", "tau_lambda",
    "area0", "area1", "area_lambda", "h0", "asym", "hausdorff", "flags", "failed",
)


def sanitize(obj: Any) -> Any:
    """Plain JSON types; non-finite floats become the strings ``inf``, ``-inf``, ``nan``."""
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(obj, np.ndarray):
        return sanitize(obj.tolist())
    return obj


def reports_json(reports: Sequence[VerificationReport]) -> str:
    doc = {"schema": SCHEMA, "reports": [r.data for r in reports]}
    return json.dumps(sanitize(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"


def load_reports(text: str) -> list[VerificationReport]:
    doc = json.loads(text)
    if doc.get("schema") != SCHEMA:
        raise ValueError(f"unsupported report schema {doc.get('schema')!r}")
    return [VerificationReport(d) for d in doc["reports"]]


def _flag(c: dict[str, Any]) -> str:
    if not c["applicable"]:
        return "na"
    return "pass" if c["holds"] else "fail"


def csv_row(r: VerificationReport) -> dict[str, Any]:
    d = r.data
    q = d.get("quantities", {})
    sc = d.get("scenario", {})
    row: dict[str, Any] = {k: "" for k in CSV_COLUMNS}
    row.update(name=d["name"], kind=d["kind"], status=d["status"], passed=int(bool(d["passed"])),
               seed=d["seed"], **{"lambda": sc.get("lambda", "")})
    for k in CSV_COLUMNS:
        if k in q and not isinstance(q[k], dict):
            row[k] = q[k]
    if d["kind"] == "urysohn":
        row["tau0"] = q.get("tau", "")
    checks = d.get("checks", {})
    row["flags"] = ";".join(f"{k}={_flag(c)}" for k, c in checks.items())
    row["failed"] = sum(1 for c in checks.values() if c["applicable"] and not c["holds"])
    return {k: _csv_cell(v) for k, v in row.items()}


def _csv_cell(v: Any) -> Any:
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else sanitize(v)
    return v


def reports_csv(reports: Sequence[VerificationReport]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerow(csv_row(r))
    return buf.getvalue()


def timings_csv(reports: Sequence[VerificationReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "kind", "wall_time_s"])
    for r in reports:
        w.writerow([r.name, r.kind, f"{r.wall_time:.6f}"])
    return buf.getvalue()


# -- figures -----------------------------------------------------------------


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "bbl-lab"
    plt.rcParams["svg.fonttype"] = "none"
    return plt


def _save(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_") or "scenario"


BODY_STYLE = {
    "omega0": ("Omega_0", "tab:blue"),
    "omega1": ("Omega_1", "tab:orange"),
    "omega_lambda": ("Omega_lambda", "tab:green"),
    "omega_sharp": ("Omega_sharp", "tab:red"),
}


def bodies_figure(r: VerificationReport, path: Path) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    for key, pts in r.data.get("geometry", {}).items():
        label, color = BODY_STYLE.get(key, (key, "black"))
        xy = np.asarray(pts, dtype=float)
        xy = np.vstack([xy, xy[:1]])
        ax.plot(xy[:, 0], xy[:, 1], color=color, lw=1.2, label=label)
    ax.set_aspect("equal")
    status = "pass" if r.passed else ("error" if r.data["status"] == "error" else "fail")
    ax.set_title(f"{r.name} ({r.kind}, {status})", fontsize=9)
    if r.data.get("geometry"):
        ax.legend(fontsize=7, loc="best")
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def field_figure(dump_text: str, title: str, path: Path) -> None:
    """Filled contours of a dumped P1 field."""
    from ..torsion import load_field

    fld = load_field(dump_text.splitlines())
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.8, 4.2))
    nodes = fld.mesh.nodes
    cs = ax.tricontourf(nodes[:, 0], nodes[:, 1], fld.mesh.triangles, fld.values, levels=12, cmap="viridis")
    fig.colorbar(cs, ax=ax, shrink=0.85)
    ax.set_aspect("equal")
    ax.set_title(title, fontsize=9)
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def _num(v: Any) -> float:
    try:
        return float(v)
    except (TypeError, ValueError):
        return math.nan


def deficit_figure(reports: Sequence[VerificationReport], key: str, path: Path) -> None:
    """Deficit against ``h0`` or ``asym`` on log axes, with each instance's bound curve."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    xlabel = {"h0": "H0(Omega_0, Omega_1)", "asym": "A(Omega_0, Omega_1)"}[key]
    kinds = sorted({r.kind for r in reports if key in r.data.get("bounds", {})})
    colors = dict(zip(kinds, ("tab:blue", "tab:orange", "tab:green", "tab:purple")))
    skipped = 0
    for r in reports:
        b = r.data.get("bounds", {}).get(key)
        if b is None:
            continue
        q = r.data["quantities"]
        x, y = _num(q.get(key)), _num(q.get("deficit"))
        coef, e = _num(b["coef"]), _num(b["exp"])
        col = colors[r.kind]
        if x > 0 and math.isfinite(coef) and coef > 0:
            xs = np.geomspace(x * 1e-2, x, 32)
            ys = coef * xs**e
            keep = ys > 0
            ax.plot(xs[keep], ys[keep], color=col, lw=0.6, alpha=0.5)
        if x > 0 and y > 0:
            ax.scatter([x], [y], s=12, color=col)
        else:
            skipped += 1
    for k in kinds:
        ax.scatter([], [], s=12, color=colors[k], label=f"{k} deficit")
        ax.plot([], [], color=colors[k], lw=0.6, label=f"{k} bound")
    if ax.has_data():
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("deficit")
    title = f"deficit vs {key}"
    if skipped:
        title += f" ({skipped} nonpositive omitted)"
    ax.set_title(title, fontsize=9)
    if kinds:
        ax.legend(fontsize=7, loc="best")
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


# -- entry point -------------------------------------------------------------


def parse_formats(text: str | Iterable[str]) -> tuple[str, ...]:
    items = text.split(",") if isinstance(text, str) else list(text)
    out = []
    for f in (s.strip().lower() for s in items):
        if not f:
            continue
        if f not in FORMATS:
            raise ValueError(f"unknown format {f!r}; choose from {', '.join(FORMATS)}")
        if f not in out:
            out.append(f)
    return tuple(out)


def emit(
    reports: Sequence[VerificationReport],
    formats: Iterable[str] = FORMATS,
    out_dir: str | Path = ".",
) -> list[Path]:
    """Write the requested formats into ``out_dir``; returns the written paths."""
    formats = parse_formats(formats)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: list[Path] = []

    def write(name: str, text: str) -> None:
        p = out / name
        p.write_text(text, encoding="utf-8")
        paths.append(p)

    if "json" in formats:
        write("report.json", reports_json(reports))
    if "csv" in formats:
        write("report.csv", reports_csv(reports))
    if formats:
        write("timings.csv", timings_csv(reports))
    if "svg" in formats:
        for i, r in enumerate(reports):
            stem = f"{i:03d}_{_slug(r.name)}"
            p = out / f"{stem}.svg"
            bodies_figure(r, p)
            paths.append(p)
            if r.field_dump is not None:
                write(f"{stem}_field.txt", r.field_dump)
                p = out / f"{stem}_field.svg"
                field_figure(r.field_dump, f"{r.name}: solution u", p)
                paths.append(p)
        for key in ("h0", "asym"):
            p = out / f"deficit_vs_{key}.svg"
            deficit_figure(reports, key, p)
            paths.append(p)
    return paths
