"""Seeded random suites and the shipped default suite."""

from __future__ import annotations

import math

import numpy as np

from ..polytope2d import ConvexPolygon
from .generate import random_pconcave, random_polygon
from .scenario import KINDS, Scenario

CONE_DIRECTIONS = 8


def child_seeds(seed: int, count: int) -> list[int]:
    rng = np.random.default_rng(seed)
    return [int(s) for s in rng.integers(0, 2**63 - 1, size=count, dtype=np.int64)]


def cone_pieces(bodies: list[ConvexPolygon], center=(0.0, 0.0)) -> tuple[tuple[float, float, float], ...]:
    """Planes ``g_i(x) = R - d_i.(x - c)`` over 8 unit directions, with ``R`` chosen so
    that ``g >= 1`` on every body; ``min_i g_i`` is a cone with apex over ``c``.
    """
    verts = np.vstack([K.vertices for K in bodies]) - np.asarray(center, dtype=float)
    ang = 2.0 * math.pi * np.arange(CONE_DIRECTIONS) / CONE_DIRECTIONS
    d = np.column_stack([np.cos(ang), np.sin(ang)])
    R = 1.0 + float((verts @ d.T).max())
    cx, cy = center
    return tuple(
        (float(-a1), float(-a2), float(R + a1 * cx + a2 * cy)) for a1, a2 in d.tolist()
    )


def random_scenarios(
    kind: str,
    count: int,
    seed: int,
    p: float = 1.0,
    lam: float = 0.5,
    mesh_h: float = 0.02,
    quad_tol: float = 1e-6,
    angle_count: int = 360,
    vertices: int = 8,
    elongation: float = 1.0,
    beta_exp: float = 1.0,
    prefix: str | None = None,
) -> list[Scenario]:
    """``count`` scenarios of one kind; instance ``i`` depends only on ``(seed, i)``."""
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}")
    if count < 0:
        raise ValueError("count must be nonnegative")
    prefix = prefix or kind
    out = []
    for i, cs in enumerate(child_seeds(seed, count)):
        name = f"{prefix}-{i:03d}"
        s0, s1 = cs, cs ^ 0x5BD1E995
        if kind in ("bbl", "stability"):
            u0 = random_pconcave(s0, p, vertices, elongation=elongation)
            u1 = random_pconcave(s1, p, vertices, elongation=elongation)
            out.append(Scenario(name, kind, lam=lam, seed=cs, functions=(u0, u1), p=p,
                                quad_tol=quad_tol))
            continue
        K0 = random_polygon(s0, vertices, elongation)
        if kind == "urysohn":
            out.append(Scenario(name, kind, seed=cs, bodies=(K0,), mesh_h=mesh_h,
                                angle_count=angle_count))
            continue
        K1 = random_polygon(s1, vertices, elongation)
        if kind == "bm":
            out.append(Scenario(name, kind, lam=lam, seed=cs, bodies=(K0, K1)))
        elif kind == "bm_tau":
            out.append(Scenario(name, kind, lam=lam, seed=cs, bodies=(K0, K1), mesh_h=mesh_h))
        else:
            out.append(Scenario(name, kind, lam=lam, seed=cs, bodies=(K0, K1), mesh_h=mesh_h,
                                f_pieces=cone_pieces([K0, K1]), beta_exp=beta_exp))
    return out


DEFAULT_SEED = 20261016


def default_suite() -> list[Scenario]:
    """A small mixed suite touching every kind; runs in well under a minute."""
    s = DEFAULT_SEED
    return (
        random_scenarios("bm", 3, s, lam=0.5, prefix="default-bm")
        + random_scenarios("bbl", 2, s + 1, p=1.0, prefix="default-bbl-p1")
        + random_scenarios("bbl", 1, s + 2, p=0.5, prefix="default-bbl-p0.5")
        + random_scenarios("bbl", 1, s + 3, p=2.0, prefix="default-bbl-p2")
        + random_scenarios("stability", 1, s + 4, p=1.0, prefix="default-stability")
        + random_scenarios("bm_tau", 1, s + 5, mesh_h=0.05, prefix="default-bm_tau")
        + random_scenarios("urysohn", 1, s + 6, mesh_h=0.05, angle_count=72, prefix="default-urysohn")
        + random_scenarios("poisson_bbl", 1, s + 7, mesh_h=0.05, beta_exp=1.0,
                           prefix="default-poisson_bbl")
    )
