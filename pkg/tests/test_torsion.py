import io
import math

import numpy as np
import pytest

from bbl_lab import means, torsion as T
from bbl_lab import polytope2d as P
from bbl_lab.lab.generate import random_polygon
from bbl_lab.lab.suites import cone_pieces

UNIT = P.box(0, 0, 1, 1)


def rect_tau(a: float, b: float, terms: int = 2001) -> float:
    """Fourier series of int u for -Delta u = 2 on [0,a]x[0,b]:
    sum over odd m, n of 128 a^3 b^3 / (pi^6 m^2 n^2 (m^2 b^2 + n^2 a^2))."""
    k = np.arange(1, terms + 1, 2, dtype=float)
    m, n = np.meshgrid(k, k, indexing="ij")
    s = 1.0 / (m**2 * n**2 * (m**2 * b**2 + n**2 * a**2))
    return float(128.0 * a**3 * b**3 / math.pi**6 * np.sort(s.ravel()).sum())


def test_fourier_oracle_digits():
    # the truncated series agrees with a much longer one to far beyond 6 digits
    assert rect_tau(1, 1) == pytest.approx(rect_tau(1, 1, 6001), rel=1e-9)
    assert rect_tau(1, 1) == pytest.approx(0.0702885074775768, rel=1e-9)
    # a long strip approaches the 1D profile x(1-x), whose integral is 1/6 per unit length
    assert 0.98 / 6 < rect_tau(50, 1) / 50 < 1 / 6


@pytest.fixture(scope="module")
def square_tau():
    return T.tau(UNIT, 0.02)


def test_square_tau(square_tau):
    assert square_tau.richardson == pytest.approx(rect_tau(1, 1), rel=5e-3)
    assert square_tau.richardson == pytest.approx(rect_tau(1, 1), rel=1e-4)
    assert square_tau.err_est > 0


def test_rectangle_tau():
    assert T.tau(P.box(0, 0, 2, 1), 0.04).richardson == pytest.approx(rect_tau(2, 1), rel=1e-3)


def test_disk():
    K = T.disk(1.0, 0.04)
    u = T.solve_poisson(K, T.constant_source(2.0), 0.04)
    assert u(np.array([[0.0, 0.0]]))[0] == pytest.approx(0.5, rel=1e-2)
    assert T.tau(K, 0.04).richardson == pytest.approx(math.pi / 4, rel=5e-3)
    x = np.random.default_rng(0).uniform(-0.6, 0.6, (200, 2))
    assert u(x) == pytest.approx((1 - (x**2).sum(1)) / 2, abs=5e-3)


def test_zero_source_and_linearity():
    K = random_polygon(3, 7)
    mesh = T.triangulate(K, 0.05)
    assert np.all(T.solve_on_mesh(mesh, T.constant_source(0.0)).values == 0.0)
    f1 = lambda x: 1.0 + x[:, 0] ** 2
    f2 = lambda x: 2.0 + 0.0 * x[:, 0]
    a = T.solve_on_mesh(mesh, f1).values
    b = T.solve_on_mesh(mesh, f2).values
    c = T.solve_on_mesh(mesh, lambda x: 3 * f1(x) + 0.5 * f2(x)).values
    assert c == pytest.approx(3 * a + 0.5 * b, abs=1e-8 * np.abs(c).max())


def test_negative_source_rejected():
    with pytest.raises(ValueError):
        T.solve_poisson(UNIT, T.constant_source(-1.0), 0.1)


def test_scaling_degree_four():
    K = random_polygon(4, 6)
    t1 = T.tau(K, 0.04).richardson
    t2 = T.tau(K.transform(2.0), 0.08).richardson
    assert t2 == pytest.approx(16 * t1, rel=1e-2)


def test_domain_monotonicity():
    inner = P.box(0.1, 0.1, 0.9, 0.8)
    assert T.tau(inner, 0.03).richardson < T.tau(UNIT, 0.03).richardson


def test_maximum_principle():
    u = T.solve_poisson(random_polygon(5, 8), T.constant_source(2.0), 0.04)
    assert u.values.min() >= -1e-12
    assert np.all(u.values[u.mesh.boundary_nodes] == 0.0)
    assert u.values[u.mesh.interior_nodes].min() > 0


# -- mesh ----------------------------------------------------------------


@pytest.mark.parametrize("seed", range(4))
def test_mesh_invariants(seed):
    K = random_polygon(seed, 9, 2.0)
    h = K.diameter / 20
    m = T.triangulate(K, h)
    assert m.max_edge <= h
    assert m.area == pytest.approx(K.area, abs=1e-8)
    assert np.all(m.areas > 0)
    hp = np.array(K.halfplanes)
    bnd = m.nodes[m.boundary_nodes]
    depth = (hp[:, 2] - bnd @ hp[:, :2].T).min(axis=1)
    assert np.abs(depth).max() <= 1e-12
    for v in K.vertices:
        assert np.min(np.linalg.norm(m.nodes - v, axis=1)) <= 1e-12
    finer = T.triangulate(K, h / 2)
    assert 3.0 <= len(finer.triangles) / len(m.triangles) <= 5.0


def test_mesh_edge_bound_on_many_bodies():
    # acute corners and long straight edges used to leave long edges and zero-area slivers
    for seed in range(200):
        K = random_polygon(seed, 4 + seed % 9, 1 + seed % 4)
        h = K.diameter / 30
        m = T.triangulate(K, h)
        assert m.max_edge <= h, seed
        assert m.areas.min() >= 1e-3 * h * h, seed
        assert m.area == pytest.approx(K.area, rel=1e-12), seed


def test_mesh_small_and_too_coarse():
    m = T.triangulate(P.box(0, 0, 2, 2), 0.5)
    assert len(m.nodes) >= 9
    with pytest.raises(ValueError):
        T.triangulate(UNIT, 0.5)
    with pytest.raises(ValueError):
        T.triangulate(UNIT, -0.1)


def test_dump_load_round_trip():
    u = T.solve_poisson(random_polygon(1, 5), T.constant_source(2.0), 0.1)
    buf = io.StringIO()
    T.dump_field(u, buf)
    v = T.load_field(io.StringIO(buf.getvalue()), u.mesh.boundary_nodes, u.mesh.h)
    assert np.array_equal(u.values, v.values)
    assert np.array_equal(u.mesh.nodes, v.mesh.nodes)
    assert np.array_equal(u.mesh.triangles, v.mesh.triangles)
    assert v.integral == u.integral


# -- square-root concavity --------------------------------------------------


@pytest.mark.parametrize("K", [UNIT, T.disk(1.0, 0.05), random_polygon(2, 7)], ids=["square", "disk", "random"])
def test_sqrt_concavity(K):
    u = T.solve_poisson(K, T.constant_source(2.0), K.diameter / 40)
    c = T.sqrt_concavity_check(u, 1000, seed=1)
    assert c.holds and c.threshold == pytest.approx(-1e-3 * math.sqrt(u.sup))


def test_sqrt_concavity_detects_nonconcave_field():
    u = T.solve_poisson(UNIT, T.constant_source(2.0), 0.05)
    # u^4 vanishes to high order at the boundary; its square root u^2 is not concave
    bad = T.ScalarField(u.mesh, (u.values / u.sup) ** 4)
    assert not T.sqrt_concavity_check(bad, 1000).holds


# -- Urysohn and the quantitative checks ------------------------------------------


def test_omega_sharp():
    S = T.omega_sharp(UNIT)
    r = np.linalg.norm(S.vertices - np.array([0.5, 0.5]), axis=1)
    assert r == pytest.approx(np.full(len(r), 2 / math.pi))
    assert S.mean_width == pytest.approx(UNIT.mean_width, rel=2e-3)


def test_urysohn_disk_and_square():
    rd = T.verify_urysohn(T.disk(1.0, 0.04), 0.04, angle_count=36)
    assert rd.tau.richardson == pytest.approx(rd.tau_sharp, rel=1e-2)
    assert rd.hausdorff < 1e-3 and rd.ok
    rs = T.verify_urysohn(UNIT, 0.04, angle_count=36)
    assert rs.ok and rs.tau_sharp > rs.tau.richardson
    assert rs.mu == pytest.approx(means.urysohn_constants(2, rs.tau.richardson, UNIT.diameter).mu)


def test_bm_tau_equal_bodies():
    K = random_polygon(7, 6)
    r = T.verify_bm_tau(K, K, 0.5, K.diameter / 25)
    assert r.tau_lambda.richardson == pytest.approx(r.tau0.richardson, rel=1e-12)
    assert r.h0 == pytest.approx(0.0, abs=1e-12)
    assert all(c.ok for c in r.checks.values())


def test_bm_tau_random_pair():
    K0, K1 = random_polygon(8, 7), random_polygon(9, 5, 2.0)
    r = T.verify_bm_tau(K0, K1, 0.5, 0.05)
    assert all(c.ok for c in r.checks.values())
    assert r.tau_lambda.richardson >= r.mean_rhs - r.slack


def test_poisson_bbl_constant_source_reproduces_bm_tau():
    K0, K1 = random_polygon(10, 6), random_polygon(11, 6)
    a = T.verify_poisson_bbl(K0, K1, 0.5, [(0, 0, 2.0)], math.inf, 0.05)
    b = T.verify_bm_tau(K0, K1, 0.5, 0.05)
    assert a.p == 0.5
    assert a.I_lambda.richardson == b.tau_lambda.richardson
    assert a.mean_rhs == pytest.approx(b.mean_rhs, rel=1e-14)


def test_poisson_bbl_cone_source():
    K0, K1 = random_polygon(12, 7), random_polygon(13, 6)
    r = T.verify_poisson_bbl(K0, K1, 0.5, cone_pieces([K0, K1]), 2.0, 0.05)
    assert r.p == pytest.approx(2 / 5) and r.ok


def test_poisson_bbl_rejects_negative_g():
    with pytest.raises(ValueError):
        T.verify_poisson_bbl(UNIT, UNIT, 0.5, [(-1, 0, 0.5)], 1.0, 0.1)
    with pytest.raises(ValueError):
        T.beta_concave_source([(1, 0, 1)], math.inf)
    assert T.poisson_order(1.0) == pytest.approx(1 / 3)
    with pytest.raises(ValueError):
        T.poisson_order(0.5)
