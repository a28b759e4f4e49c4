"""Shared oracles and strategies; every oracle here is independent of the package code."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import settings, strategies as st

from bbl_lab.lab.generate import random_polygon

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def brute_force_hull(points) -> np.ndarray:
    """O(n^3) hull: an ordered pair (i, j) is a hull edge when every point is on its left.

    Returns the hull vertices (without collinear interior points) in CCW order.
    """
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    n = len(pts)
    edges = {}
    for i, j in itertools.permutations(range(n), 2):
        d = pts[j] - pts[i]
        cross = d[0] * (pts[:, 1] - pts[i, 1]) - d[1] * (pts[:, 0] - pts[i, 0])
        if np.all(cross >= -1e-12):
            # keep only the longest collinear edge from i
            if i not in edges or np.dot(d, d) > np.dot(pts[edges[i]] - pts[i], pts[edges[i]] - pts[i]):
                edges[i] = j
    start = min(edges, key=lambda k: (pts[k, 1], pts[k, 0]))
    order, k = [start], edges[start]
    while k != start:
        order.append(k)
        k = edges[k]
    return pts[order]


def shoelace(xy) -> float:
    xy = np.asarray(xy, dtype=float)
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def inside(xy, pts, tol=0.0) -> np.ndarray:
    """Points inside the CCW convex polygon ``xy``, by edge cross products."""
    xy = np.asarray(xy, dtype=float)
    ok = np.ones(len(pts), dtype=bool)
    for a, b in zip(xy, np.roll(xy, -1, axis=0)):
        d = b - a
        ok &= d[0] * (pts[:, 1] - a[1]) - d[1] * (pts[:, 0] - a[0]) >= -tol
    return ok


def mc_area(test, lo, hi, samples=1_000_000, seed=0):
    """Monte-Carlo area of ``{x in box: test(x)}`` with its standard error."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(lo, hi, size=(samples, 2))
    box = (hi[0] - lo[0]) * (hi[1] - lo[1])
    frac = test(pts).mean()
    return box * frac, box * math.sqrt(frac * (1 - frac) / samples)


seeds = st.integers(min_value=0, max_value=2**32 - 1)


@st.composite
def polygons(draw, min_budget=4, max_budget=12, max_elongation=4.0):
    seed = draw(seeds)
    budget = draw(st.integers(min_budget, max_budget))
    e = draw(st.floats(1.0, max_elongation))
    return random_polygon(seed, budget, e)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance summary ---------------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
