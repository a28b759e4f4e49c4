import itertools

import numpy as np
import pytest

from bbl_lab.simplex import InfeasibleLP, UnboundedLP, lp_maximize


def vertex_enumeration(c, A, b, lower):
    """Best objective over all basic feasible points of ``A x <= b, x >= lower``."""
    n = len(c)
    G = np.vstack([A, -np.eye(n)])
    h = np.r_[b, -np.asarray(lower)]
    best = -np.inf
    for rows in itertools.combinations(range(len(G)), n):
        M = G[list(rows)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, h[list(rows)])
        if np.all(G @ x <= h + 1e-9):
            best = max(best, float(c @ x))
    return best


def test_pyramid_max_min():
    # maximize t subject to t <= 1 -/+ x_i and x in [-1, 1]^2; variables (x1, x2, t)
    A = [[1, 0, 1], [-1, 0, 1], [0, 1, 1], [0, -1, 1], [1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]]
    b = [1, 1, 1, 1, 1, 1, 1, 1]
    r = lp_maximize([0, 0, 1], A, b, lower=[-1, -1, -10])
    assert r.value == pytest.approx(1.0)
    assert r.point[:2] == pytest.approx([0.0, 0.0], abs=1e-12)


def test_one_variable_box():
    assert lp_maximize([1.0], [[1.0]], [3.0], lower=[-2.0]).value == pytest.approx(3.0)
    assert lp_maximize([-1.0], [[1.0]], [3.0], lower=[-2.0]).value == pytest.approx(2.0)


def test_infeasible_and_unbounded():
    with pytest.raises(InfeasibleLP):
        lp_maximize([1, 1], [[1, 1], [-1, -1]], [1, -3])
    with pytest.raises(UnboundedLP):
        lp_maximize([1, 0], [[0, 1]], [1])


def test_degenerate_does_not_cycle():
    # a classic cycling example for the textbook largest-coefficient rule
    c = [10, -57, -9, -24]
    A = [[0.5, -5.5, -2.5, 9], [0.5, -1.5, -0.5, 1], [1, 0, 0, 0]]
    r = lp_maximize(c, A, [0, 0, 1])
    assert r.value == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(60))
def test_random_lps_match_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    m = int(rng.integers(n, 8))
    A = rng.normal(size=(m, n))
    x_feas = rng.uniform(-1, 1, n)
    b = A @ x_feas + rng.uniform(0.0, 1.0, m)
    # a bounding box keeps the region bounded
    A = np.vstack([A, np.eye(n)])
    b = np.r_[b, np.full(n, 3.0)]
    lower = np.full(n, -3.0)
    c = rng.normal(size=n)
    r = lp_maximize(c, A, b, lower)
    assert r.value == pytest.approx(vertex_enumeration(c, A, b, lower), abs=1e-9)
    assert np.all(A @ r.point <= b + 1e-9) and np.all(r.point >= lower - 1e-9)


def test_deterministic():
    rng = np.random.default_rng(9)
    A, b, c = rng.normal(size=(6, 3)), rng.uniform(1, 2, 6), rng.normal(size=3)
    A = np.vstack([A, np.eye(3)])
    b = np.r_[b, np.ones(3)]
    r1, r2 = lp_maximize(c, A, b, [-1, -1, -1]), lp_maximize(c, A, b, [-1, -1, -1])
    assert r1.value == r2.value and np.array_equal(r1.point, r2.point) and r1.pivots == r2.pivots


def test_shape_mismatch():
    with pytest.raises(ValueError):
        lp_maximize([1, 2], [[1, 2, 3]], [1])
