"""Scenario files: one JSON document ``{"schema": 1, "scenarios": [...]}``.

Every scenario has a ``name`` and a ``kind``.  Bodies are polygon literals
(lists of ``[x, y]``), functions are ``{"domain", "p", "pieces"}`` literals.

======================  ====================================================
kind                    required fields (defaults in parentheses)
======================  ====================================================
``bm``                  ``bodies`` (2), ``lambda`` (0.5), ``seed`` (0)
``bbl``, ``stability``  ``functions`` (2), ``p`` (taken from the functions),
                        ``lambda``, ``quad_tol`` (1e-6), ``seed``
``bm_tau``              ``bodies`` (2), ``lambda``, ``mesh_h`` (0.02), ``seed``
``urysohn``             ``bodies`` (1), ``mesh_h``, ``angle_count`` (360), ``seed``
``poisson_bbl``         ``bodies`` (2), ``lambda``, ``mesh_h``, ``f_pieces``,
                        ``beta_exp`` (1; the string ``"inf"`` is allowed), ``seed``
======================  ====================================================
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .. import pconcave
from ..polytope2d import ConvexPolygon

SCHEMA = 1
KINDS = ("bm", "bbl", "stability", "bm_tau", "urysohn", "poisson_bbl")
BODY_COUNT = {"bm": 2, "bm_tau": 2, "urysohn": 1, "poisson_bbl": 2}
DEFAULTS: dict[str, Any] = {
    "lambda": 0.5,
    "seed": 0,
    "quad_tol": 1e-6,
    "mesh_h": 0.02,
    "angle_count": 360,
    "beta_exp": 1.0,
}
KNOWN_FIELDS = {
    "name", "kind", "bodies", "functions", "p", "lambda", "seed",
    "quad_tol", "mesh_h", "angle_count", "f_pieces", "beta_exp",
}


class ScenarioError(ValueError):
    """Invalid scenario file; the message names the file and the offending field."""


@dataclass(frozen=True)
class Scenario:
    name: str
    kind: str
    lam: float = 0.5
    seed: int = 0
    bodies: tuple[ConvexPolygon, ...] = ()
    functions: tuple[pconcave.PConcaveFn, ...] = ()
    p: float | None = None
    quad_tol: float = 1e-6
    mesh_h: float = 0.02
    angle_count: int = 360
    f_pieces: tuple[tuple[float, float, float], ...] = ()
    beta_exp: float = 1.0
    extra: dict[str, Any] = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"name": self.name, "kind": self.kind, "seed": self.seed}
        if self.kind != "urysohn":
            out["lambda"] = self.lam
        if self.bodies:
            out["bodies"] = [K.to_list() for K in self.bodies]
        if self.functions:
            out["functions"] = [u.to_dict() for u in self.functions]
            out["p"] = self.p
            out["quad_tol"] = self.quad_tol
        if self.kind in ("bm_tau", "urysohn", "poisson_bbl"):
            out["mesh_h"] = self.mesh_h
        if self.kind == "urysohn":
            out["angle_count"] = self.angle_count
        if self.kind == "poisson_bbl":
            out["f_pieces"] = [list(pc) for pc in self.f_pieces]
            out["beta_exp"] = "inf" if self.beta_exp == math.inf else self.beta_exp
        return out


class _Ctx:
    def __init__(self, source: str, where: str):
        self.source, self.where = source, where

    def fail(self, key: str, msg: str):
        raise ScenarioError(f"{self.source}: {self.where}.{key}: {msg}")


def _number(ctx: _Ctx, raw: dict, key: str, lo=None, hi=None, lo_open=False, hi_open=False,
            integer=False, allow_inf=False):
    v = raw.get(key, DEFAULTS.get(key))
    if v is None:
        ctx.fail(key, "missing required field")
    if allow_inf and v == "inf":
        return math.inf
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        ctx.fail(key, f"expected a number, got {v!r}")
    if integer and (not isinstance(v, int)):
        ctx.fail(key, f"expected an integer, got {v!r}")
    if not math.isfinite(v):
        ctx.fail(key, "must be finite")
    if lo is not None and (v < lo or (lo_open and v == lo)):
        ctx.fail(key, f"out of range: {v!r} (must be {'>' if lo_open else '>='} {lo})")
    if hi is not None and (v > hi or (hi_open and v == hi)):
        ctx.fail(key, f"out of range: {v!r} (must be {'<' if hi_open else '<='} {hi})")
    return v


def _polygon(ctx: _Ctx, key: str, raw: Any) -> ConvexPolygon:
    if not isinstance(raw, list) or not all(
        isinstance(p, list) and len(p) == 2
        and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in p)
        for p in raw
    ):
        ctx.fail(key, "polygon must be a list of [x, y] pairs")
    if len(raw) < 3:
        ctx.fail(key, f"polygon needs at least 3 vertices, got {len(raw)}")
    try:
        return ConvexPolygon(raw)
    except ValueError as exc:
        ctx.fail(key, f"invalid polygon: {exc}")
    raise AssertionError  # unreachable


def _pieces(ctx: _Ctx, key: str, raw: Any) -> tuple[tuple[float, float, float], ...]:
    if not isinstance(raw, list) or not raw:
        ctx.fail(key, "expected a nonempty list of [a1, a2, b]")
    out = []
    for i, pc in enumerate(raw):
        if not (isinstance(pc, list) and len(pc) == 3
                and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in pc)):
            ctx.fail(f"{key}[{i}]", "expected [a1, a2, b]")
        if not all(math.isfinite(c) for c in pc):
            ctx.fail(f"{key}[{i}]", "coefficients must be finite")
        out.append((float(pc[0]), float(pc[1]), float(pc[2])))
    return tuple(out)


def _function(ctx: _Ctx, key: str, raw: Any) -> pconcave.PConcaveFn:
    if not isinstance(raw, dict):
        ctx.fail(key, "function literal must be an object with domain, p, pieces")
    for k in ("domain", "p", "pieces"):
        if k not in raw:
            ctx.fail(f"{key}.{k}", "missing required field")
    dom = _polygon(ctx, f"{key}.domain", raw["domain"])
    sub = _Ctx(ctx.source, f"{ctx.where}.{key}")
    p = _number(sub, raw, "p", lo=0.0, lo_open=True)
    pcs = _pieces(ctx, f"{key}.pieces", raw["pieces"])
    try:
        return pconcave.make(dom, p, pcs)
    except ValueError as exc:
        ctx.fail(key, f"invalid function: {exc}")
    raise AssertionError  # unreachable


def scenario_from_dict(raw: Any, where: str = "scenario", source: str = "<input>") -> Scenario:
    ctx = _Ctx(source, where)
    if not isinstance(raw, dict):
        raise ScenarioError(f"{source}: {where}: expected an object")
    unknown = sorted(set(raw) - KNOWN_FIELDS)
    if unknown:
        ctx.fail(unknown[0], "unknown field")
    name = raw.get("name")
    if not isinstance(name, str) or not name:
        ctx.fail("name", "missing or empty name")
    kind = raw.get("kind")
    if kind not in KINDS:
        ctx.fail("kind", f"must be one of {', '.join(KINDS)}, got {kind!r}")
    seed = _number(ctx, raw, "seed", lo=0, hi=2**64 - 1, integer=True)
    kw: dict[str, Any] = {"name": name, "kind": kind, "seed": seed}
    if kind != "urysohn":
        kw["lam"] = float(_number(ctx, raw, "lambda", lo=0.0, hi=1.0, lo_open=True, hi_open=True))

    if kind in BODY_COUNT:
        bodies = raw.get("bodies")
        want = BODY_COUNT[kind]
        if not isinstance(bodies, list):
            ctx.fail("bodies", f"missing required list of {want} polygon(s)")
        if len(bodies) != want:
            ctx.fail("bodies", f"expected {want} polygon(s), got {len(bodies)}")
        kw["bodies"] = tuple(_polygon(ctx, f"bodies[{i}]", b) for i, b in enumerate(bodies))
    else:
        fns = raw.get("functions")
        if not isinstance(fns, list):
            ctx.fail("functions", "missing required list of 2 function literals")
        if len(fns) != 2:
            ctx.fail("functions", f"expected 2 functions, got {len(fns)}")
        kw["functions"] = tuple(_function(ctx, f"functions[{i}]", f) for i, f in enumerate(fns))
        ps = {u.p for u in kw["functions"]}
        p = raw.get("p", kw["functions"][0].p)
        p = float(_number(ctx, {"p": p}, "p", lo=0.0, lo_open=True))
        if ps != {p}:
            ctx.fail("p", f"functions have exponents {sorted(ps)}, scenario says {p}")
        kw["p"] = p
        kw["quad_tol"] = float(_number(ctx, raw, "quad_tol", lo=0.0, hi=1e-2, lo_open=True))

    if kind in ("bm_tau", "urysohn", "poisson_bbl"):
        kw["mesh_h"] = float(_number(ctx, raw, "mesh_h", lo=0.0, hi=0.5, lo_open=True))
        for i, K in enumerate(kw["bodies"]):
            if kw["mesh_h"] >= K.diameter / 4.0:
                ctx.fail("mesh_h", f"too coarse for bodies[{i}] (diameter {K.diameter:.4g})")
    if kind == "urysohn":
        kw["angle_count"] = _number(ctx, raw, "angle_count", lo=8, hi=100_000, integer=True)
    if kind == "poisson_bbl":
        if "f_pieces" not in raw:
            ctx.fail("f_pieces", "missing required field")
        kw["f_pieces"] = _pieces(ctx, "f_pieces", raw["f_pieces"])
        beta = _number(ctx, raw, "beta_exp", lo=1.0, allow_inf=True)
        if beta == math.inf and any(a1 or a2 for a1, a2, _ in kw["f_pieces"]):
            ctx.fail("beta_exp", '"inf" needs constant f_pieces')
        kw["beta_exp"] = float(beta)
    return Scenario(**kw)


def parse_scenarios(text: str, source: str = "<input>") -> list[Scenario]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ScenarioError(f"{source}: top level must be an object with 'schema' and 'scenarios'")
    if doc.get("schema") != SCHEMA:
        raise ScenarioError(f"{source}: schema: expected {SCHEMA}, got {doc.get('schema')!r}")
    items = doc.get("scenarios")
    if not isinstance(items, list):
        raise ScenarioError(f"{source}: scenarios: expected a list")
    out = [scenario_from_dict(raw, f"scenarios[{i}]", source) for i, raw in enumerate(items)]
    names = [s.name for s in out]
    dup = sorted({n for n in names if names.count(n) > 1})
    if dup:
        raise ScenarioError(f"{source}: scenarios: duplicate name {dup[0]!r}")
    return out


def parse_scenario(path: str | Path) -> list[Scenario]:
    """Read and validate a scenario file."""
    path = Path(path)
    return parse_scenarios(path.read_text(encoding="utf-8"), str(path))


def dump_scenarios(scenarios: list[Scenario]) -> str:
    doc = {"schema": SCHEMA, "scenarios": [s.to_dict() for s in scenarios]}
    return json.dumps(doc, indent=2) + "\n"
