"""Seeded random convex polygons and p-concave functions."""

from __future__ import annotations

import math

import numpy as np

from .. import pconcave
from ..polytope2d import ConvexPolygon, DegeneratePolygonError, from_points

MAX_RETRIES = 16


def random_polygon(seed: int, vertex_budget: int = 8, elongation: float = 1.0) -> ConvexPolygon:
    """Hull of ``vertex_budget`` uniform points in an ellipse with axis ratio ``1:elongation``.

    The ellipse has unit area scale (semi-axes ``sqrt(e)`` and ``1/sqrt(e)``).
    Degenerate draws are retried up to 16 times.
    """
    if vertex_budget < 4:
        raise ValueError("vertex_budget must be at least 4")
    if not (math.isfinite(elongation) and elongation >= 1.0):
        raise ValueError("elongation must be >= 1")
    rng = np.random.default_rng(seed)
    sx, sy = math.sqrt(elongation), 1.0 / math.sqrt(elongation)
    for _ in range(MAX_RETRIES):
        r = np.sqrt(rng.uniform(0.0, 1.0, vertex_budget))
        phi = rng.uniform(0.0, 2.0 * math.pi, vertex_budget)
        pts = np.column_stack([sx * r * np.cos(phi), sy * r * np.sin(phi)])
        try:
            K = from_points(pts)
        except (DegeneratePolygonError, ValueError):
            continue
        if K.area > 1e-6:
            return K
    raise DegeneratePolygonError(f"no nondegenerate polygon after {MAX_RETRIES} draws")


def random_pconcave(
    seed: int,
    p: float,
    vertex_budget: int = 8,
    piece_count: int = 4,
    elongation: float = 1.0,
) -> pconcave.PConcaveFn:
    """A random ``u = (min of affines)^(1/p)`` on a random polygon.

    Every piece is at least ``1`` at the domain centroid, so ``g > 0`` there.
    """
    rng = np.random.default_rng([seed, 1])
    K = random_polygon(seed, vertex_budget, elongation)
    cx, cy = K.centroid
    grads = rng.normal(0.0, 1.0, size=(piece_count, 2))
    heights = 1.0 + rng.uniform(0.0, 0.5, size=piece_count)
    pieces = [
        (a1, a2, h - a1 * cx - a2 * cy) for (a1, a2), h in zip(grads.tolist(), heights.tolist())
    ]
    return pconcave.make(K, p, pieces)
