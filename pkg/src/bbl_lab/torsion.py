"""P1 finite elements for ``-Delta u = f`` with zero boundary values on convex polygons.

The torsion function solves the problem with ``f = 2``; ``tau = int u``.  On
top of the solver sit the checks of the Brunn-Minkowski inequality for
``tau`` and its quantitative forms, the quantitative Urysohn inequality, the
concavity of ``sqrt(u)`` and the BBL-type bound for ``Delta u + f = 0`` with a
``beta``-concave ``f``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Sequence, TextIO

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import cg
from scipy.spatial import Delaunay

from . import means
from .distance import h0 as h0_distance
from .distance import hausdorff, rel_asymmetry, rel_asymmetry_rotmax
from .pconcave import Check
from .polytope2d import ConvexPolygon, minkowski_comb, regular_polygon

DIM = 2
#: Interior lattice spacing as a fraction of the target edge length ``h``.
LATTICE_FACTOR = 0.6
#: Vertex count of the disk proxies.
DISK_VERTICES = 512
CG_RTOL = 1e-10
#: Rounds of long-edge splitting in :func:`triangulate`.
MAX_REFINE = 8

Source = Callable[[np.ndarray], np.ndarray]


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class TriMesh:
    nodes: np.ndarray  # (N, 2)
    triangles: np.ndarray  # (T, 3), counterclockwise
    boundary_nodes: np.ndarray  # sorted indices
    h: float

    @cached_property
    def areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @property
    def area(self) -> float:
        return math.fsum(self.areas)

    @cached_property
    def max_edge(self) -> float:
        p = self.nodes[self.triangles]
        return float(np.linalg.norm(p - np.roll(p, 1, axis=1), axis=2).max())

    @cached_property
    def interior_nodes(self) -> np.ndarray:
        mask = np.ones(len(self.nodes), dtype=bool)
        mask[self.boundary_nodes] = False
        return np.flatnonzero(mask)


def _boundary_points(K: ConvexPolygon, spacing: float) -> np.ndarray:
    v = K.vertices
    out = []
    for i in range(len(v)):
        a, b = v[i], v[(i + 1) % len(v)]
        n = max(1, math.ceil(np.linalg.norm(b - a) / spacing))
        s = np.arange(n)[:, None] / n
        out.append(a + s * (b - a))
    return np.vstack(out)


def _lattice_points(K: ConvexPolygon, spacing: float) -> np.ndarray:
    """Triangular lattice through the centroid, kept at distance >= ``spacing/2`` from the boundary."""
    v = K.vertices
    cx, cy = K.centroid
    dy = spacing * math.sqrt(3.0) / 2.0
    lo, hi = v.min(axis=0), v.max(axis=0)
    j0, j1 = math.floor((lo[1] - cy) / dy), math.ceil((hi[1] - cy) / dy)
    i0, i1 = math.floor((lo[0] - cx) / spacing) - 1, math.ceil((hi[0] - cx) / spacing) + 1
    jj, ii = np.meshgrid(np.arange(j0, j1 + 1), np.arange(i0, i1 + 1), indexing="ij")
    x = cx + (ii + 0.5 * (jj % 2)) * spacing
    y = cy + jj * dy
    pts = np.column_stack([x.ravel(), y.ravel()])
    hp = np.array(K.halfplanes)
    depth = (hp[:, 2] - pts @ hp[:, :2].T).min(axis=1)
    return pts[depth >= 0.5 * spacing]


def _delaunay(pts: np.ndarray, h: float) -> np.ndarray:
    """Counterclockwise Delaunay triangles without the zero-area slivers of collinear nodes."""
    tri = Delaunay(pts).simplices
    p = pts[tri]
    e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    area = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    flip = area < 0
    tri[flip] = tri[flip][:, [0, 2, 1]]
    # genuine triangles have area O(h^2)
    return tri[np.abs(area) > 1e-8 * h * h]


def triangulate(K: ConvexPolygon, h: float) -> TriMesh:
    """Delaunay mesh of ``K`` with every edge at most ``h`` long.

    Nodes are boundary points spaced ``0.6 h`` apart, an interior triangular
    lattice and, near acute corners, midpoints of edges that came out longer
    than ``h``.  Every polygon vertex is a node, so the mesh covers ``K``
    exactly; boundary nodes come first.
    """
    if not (h > 0 and math.isfinite(h)):
        raise ValueError("h must be a positive number")
    if h >= K.diameter / 4.0:
        raise ValueError(f"h={h} is too coarse for a body of diameter {K.diameter:.4g}")
    spacing = LATTICE_FACTOR * h
    bnd = _boundary_points(K, spacing)
    pts = np.vstack([bnd, _lattice_points(K, spacing)])
    # near acute corners the lattice margin leaves edges longer than h: split them and retriangulate
    for _ in range(MAX_REFINE):
        tri = _delaunay(pts, h)
        p = pts[tri]
        e = p - np.roll(p, 1, axis=1)
        long = np.linalg.norm(e, axis=2) > h
        if not long.any():
            break
        mids = ((p + np.roll(p, 1, axis=1)) / 2.0)[long]
        pts = np.vstack([pts, np.unique(np.round(mids, 12), axis=0)])
    else:
        raise SolverError(f"mesh refinement did not reach max edge <= {h}")
    mesh = TriMesh(pts, tri, np.arange(len(bnd)), h)
    if abs(mesh.area - K.area) > 1e-9 * K.area:
        raise SolverError(f"mesh covers {mesh.area!r} of a body with area {K.area!r}")
    return mesh


@dataclass(frozen=True)
class ScalarField:
    mesh: TriMesh
    values: np.ndarray

    @cached_property
    def _interp(self):
        from matplotlib.tri import LinearTriInterpolator, Triangulation

        m = self.mesh
        return LinearTriInterpolator(
            Triangulation(m.nodes[:, 0], m.nodes[:, 1], m.triangles), self.values
        )

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        """Linear interpolation; 0 outside the mesh."""
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        out = self._interp(pts[:, 0], pts[:, 1])
        return np.ma.filled(out, 0.0).astype(float)

    @property
    def integral(self) -> float:
        """Exact integral of the piecewise-linear interpolant."""
        v = self.values[self.mesh.triangles]
        return math.fsum(self.mesh.areas * v.sum(axis=1) / 3.0)

    @property
    def sup(self) -> float:
        return float(self.values.max())


def _stiffness(mesh: TriMesh):
    p = mesh.nodes[mesh.triangles]
    x, y = p[..., 0], p[..., 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    area = mesh.areas
    local = (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]) / (4.0 * area[:, None, None])
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    n = len(mesh.nodes)
    return coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def _load(mesh: TriMesh, f: Source) -> np.ndarray:
    """``int f phi_i`` with the edge-midpoint rule (exact for quadratics)."""
    p = mesh.nodes[mesh.triangles]
    mids = np.stack([(p[:, 0] + p[:, 1]) / 2, (p[:, 1] + p[:, 2]) / 2, (p[:, 2] + p[:, 0]) / 2], axis=1)
    fm = np.asarray(f(mids.reshape(-1, 2)), dtype=float).reshape(-1, 3)
    if np.any(fm < 0) or not np.all(np.isfinite(fm)):
        raise ValueError("the source term must be finite and nonnegative")
    # phi_0 is 1/2 at the midpoints of edges 01 and 20, and so on
    w = mesh.areas[:, None] / 3.0 * 0.5
    local = w * np.stack([fm[:, 0] + fm[:, 2], fm[:, 0] + fm[:, 1], fm[:, 1] + fm[:, 2]], axis=1)
    return np.bincount(mesh.triangles.ravel(), local.ravel(), minlength=len(mesh.nodes))


def constant_source(value: float = 2.0) -> Source:
    return lambda pts: np.full(len(pts), float(value))


def solve_on_mesh(mesh: TriMesh, f: Source) -> ScalarField:
    A = _stiffness(mesh)
    rhs = _load(mesh, f)
    inner = mesh.interior_nodes
    u = np.zeros(len(mesh.nodes))
    if np.any(rhs[inner] != 0):
        Ai = A[inner][:, inner]
        diag = Ai.diagonal()
        from scipy.sparse.linalg import LinearOperator

        M = LinearOperator(Ai.shape, matvec=lambda r: r / diag, dtype=float)
        sol, info = cg(Ai, rhs[inner], rtol=CG_RTOL, atol=0.0, maxiter=10 * len(inner), M=M)
        if info != 0:
            raise SolverError(f"conjugate gradient did not converge (info={info})")
        u[inner] = sol
    return ScalarField(mesh, u)


def solve_poisson(K: ConvexPolygon, f: Source, h: float) -> ScalarField:
    """Galerkin P1 solution of ``-Delta u = f`` in ``K``, ``u = 0`` on the boundary."""
    return solve_on_mesh(triangulate(K, h), f)


@dataclass(frozen=True)
class TauEstimate:
    value: float
    richardson: float
    err_est: float


def functional(K: ConvexPolygon, f: Source, h: float) -> TauEstimate:
    """``int u`` on meshes ``h`` and ``h/2`` with the second-order Richardson extrapolation."""
    coarse = solve_poisson(K, f, h).integral
    fine = solve_poisson(K, f, h / 2.0).integral
    return TauEstimate(coarse, fine + (fine - coarse) / 3.0, abs(fine - coarse))


def tau(K: ConvexPolygon, h: float) -> TauEstimate:
    """Torsional rigidity ``int u`` for ``-Delta u = 2``."""
    return functional(K, constant_source(2.0), h)


@dataclass(frozen=True)
class ConcavityCheck:
    min_gap: float
    threshold: float
    holds: bool


def sqrt_concavity_check(field: ScalarField, sample_count: int = 1000, seed: int = 0) -> ConcavityCheck:
    """Midpoint concavity of ``sqrt(u)`` on seeded random pairs of interior points."""
    sup = max(field.sup, 0.0)
    threshold = -1e-3 * math.sqrt(sup)
    if sup == 0.0:
        return ConcavityCheck(0.0, threshold, True)
    nodes = field.mesh.nodes
    bnd = nodes[field.mesh.boundary_nodes]
    hull = ConvexPolygon(bnd[_hull_order(bnd)])
    hp = np.array(hull.halfplanes)
    lo, hi = nodes.min(axis=0), nodes.max(axis=0)
    rng = np.random.default_rng(seed)
    found: list[np.ndarray] = []
    while sum(len(c) for c in found) < 2 * sample_count:
        cand = rng.uniform(lo, hi, size=(4 * sample_count, 2))
        inside = (cand @ hp[:, :2].T - hp[:, 2] < 0).all(axis=1)
        found.append(cand[inside])
    pts = np.vstack(found)[: 2 * sample_count]
    x, y = pts[:sample_count], pts[sample_count:]
    mid = 0.5 * (x + y)
    su = np.sqrt(np.maximum(field(np.vstack([x, y, mid])), 0.0))
    gap = su[2 * sample_count :] - 0.5 * (su[:sample_count] + su[sample_count : 2 * sample_count])
    mg = float(gap.min())
    return ConcavityCheck(mg, threshold, mg >= threshold)


def _hull_order(pts: np.ndarray) -> np.ndarray:
    from scipy.spatial import ConvexHull

    return ConvexHull(pts).vertices


# -- Brunn-Minkowski for tau ------------------------------------------------


@dataclass(frozen=True)
class BMTauReport:
    tau0: TauEstimate
    tau1: TauEstimate
    tau_lambda: TauEstimate
    mean_rhs: float
    slack: float
    h0: float
    asym: float
    constants: means.ConstantsBundle
    checks: dict[str, Check]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks.values())


def _quantitative_checks(
    I0: float, I1: float, I_lam: float, p: float, lam: float, D0: ConvexPolygon, D1: ConvexPolygon,
    slack: float, seed: int,
):
    consts = means.bbl_constants(DIM, p, lam, D0.area, D1.area, D0.diameter, D1.diameter, I0, I1)
    mean_rhs = means.p_mean(I0, I1, lam, means.bbl_order(p, DIM))
    H = h0_distance(D0, D1)
    A = rel_asymmetry(D0, D1, seed=seed).a
    term_h = consts.beta * H ** ((DIM + 1) * (p + 1.0) / p)
    term_a = consts.delta * A ** (2.0 * (p + 1.0) / p)
    checks = {
        "plain": Check(I_lam, mean_rhs, slack),
        "h0": Check(I_lam, mean_rhs + term_h, slack, H < consts.h0_max),
        "asym": Check(I_lam, mean_rhs + term_a, slack, A < consts.a_max),
    }
    return consts, mean_rhs, H, A, checks


def verify_bm_tau(
    K0: ConvexPolygon, K1: ConvexPolygon, lam: float, h: float, seed: int = 0
) -> BMTauReport:
    """``tau(K_lam) >= M_{1/(n+2)}(tau0, tau1)`` plus the ``H0`` and ``A`` refinements (``p = 1/2``).

    Values are the Richardson extrapolations; the slack is three times the
    largest two-mesh difference.
    """
    if not (0.0 < lam < 1.0):
        raise ValueError(f"lambda must lie in (0, 1), got {lam!r}")
    K_lam = minkowski_comb(K0, K1, lam)
    t0, t1, tl = tau(K0, h), tau(K1, h), tau(K_lam, h)
    slack = 3.0 * max(t0.err_est, t1.err_est, tl.err_est)
    consts, mean_rhs, H, A, checks = _quantitative_checks(
        t0.richardson, t1.richardson, tl.richardson, 0.5, lam, K0, K1, slack, seed
    )
    return BMTauReport(t0, t1, tl, mean_rhs, slack, H, A, consts, checks)


# -- quantitative Urysohn -----------------------------------------------------


def disk(radius: float = 1.0, h: float | None = None, center: Sequence[float] = (0.0, 0.0)) -> ConvexPolygon:
    """Disk proxy: the fixed 512-gon, or for ``h`` given the inscribed polygon whose
    side matches the boundary node spacing of :func:`triangulate` (so the
    boundary is resolved at the mesh scale, as in convergence studies).
    """
    if h is None:
        n = DISK_VERTICES
    else:
        n = max(8, math.ceil(2.0 * math.pi * radius / (LATTICE_FACTOR * h)))
    return regular_polygon(n, radius, center)


def omega_sharp(K: ConvexPolygon) -> ConvexPolygon:
    """Disk proxy with the mean width of ``K``, centered at its centroid."""
    return regular_polygon(DISK_VERTICES, K.mean_width / 2.0, K.centroid)


@dataclass(frozen=True)
class UrysohnReport:
    tau: TauEstimate
    tau_sharp: float
    radius: float
    hausdorff: float
    asym: float
    mu: float
    nu: float
    slack: float
    checks: dict[str, Check]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks.values())


def verify_urysohn(
    K: ConvexPolygon, h: float, angle_count: int = 360, seed: int = 0
) -> UrysohnReport:
    """``tau(K) <= tau(K#)`` and the two quantitative forms with ``mu`` and ``nu``.

    ``tau(K#)`` is the closed form ``pi r^4 / 4`` of the disk of radius
    ``r = w(K)/2``.  ``H`` is measured after moving the centroid of ``K`` to
    the origin and ``A`` is the rotation-maximized relative asymmetry.
    """
    t = tau(K, h)
    cx, cy = K.centroid
    Kc = K.translate((-cx, -cy))
    r = K.mean_width / 2.0
    disk = regular_polygon(DISK_VERTICES, r)
    t_sharp = math.pi * r**4 / 4.0
    H = hausdorff(Kc, disk)
    A = rel_asymmetry_rotmax(K, angle_count, seed=seed)
    consts = means.urysohn_constants(DIM, t.richardson, K.diameter)
    slack = 3.0 * t.err_est
    tv = t.richardson
    checks = {
        "plain": Check(t_sharp, tv, slack),
        "hausdorff": Check(t_sharp, tv * (1.0 + consts.mu * H ** (3 * (DIM + 1))), slack),
        "asym": Check(t_sharp, tv * (1.0 + consts.nu * A**6), slack),
    }
    return UrysohnReport(t, t_sharp, r, H, A, consts.mu, consts.nu, slack, checks)


# -- Delta u + f = 0 with beta-concave f ---------------------------------------


def poisson_order(beta_exp: float) -> float:
    """``p = beta / (1 + 2 beta)``; ``1/2`` for ``beta = inf``."""
    if beta_exp == math.inf:
        return 0.5
    if not (beta_exp >= 1.0):
        raise ValueError("beta_exp must be >= 1")
    return beta_exp / (1.0 + 2.0 * beta_exp)


def beta_concave_source(pieces: Sequence[Sequence[float]], beta_exp: float) -> Source:
    """``f = max(g, 0)^(1/beta)`` with ``g`` the minimum of the affine ``pieces``.

    For ``beta = inf`` the pieces must be constant and ``f = g``.
    """
    arr = np.array(pieces, dtype=float).reshape(-1, 3)
    if beta_exp == math.inf:
        if np.any(arr[:, :2] != 0):
            raise ValueError("beta_exp = inf needs constant pieces")
        value = float(arr[:, 2].min())
        if value < 0:
            raise ValueError("the constant source must be nonnegative")
        return constant_source(value)

    def f(pts: np.ndarray) -> np.ndarray:
        g = (np.asarray(pts) @ arr[:, :2].T + arr[:, 2]).min(axis=1)
        return np.maximum(g, 0.0) ** (1.0 / beta_exp)

    return f


@dataclass(frozen=True)
class PoissonBBLReport:
    p: float
    I0: TauEstimate
    I1: TauEstimate
    I_lambda: TauEstimate
    mean_rhs: float
    slack: float
    h0: float
    asym: float
    constants: means.ConstantsBundle
    checks: dict[str, Check]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks.values())


def verify_poisson_bbl(
    K0: ConvexPolygon,
    K1: ConvexPolygon,
    lam: float,
    f_pieces: Sequence[Sequence[float]],
    beta_exp: float,
    h: float,
    seed: int = 0,
) -> PoissonBBLReport:
    """``int u_lam >= M_{p/(np+1)}(int u0, int u1)`` (+ the ``H0``/``A`` terms), ``p = beta/(1+2 beta)``.

    ``f^beta = g`` must be concave on the convex hull of ``K0`` and ``K1``,
    so ``g`` has to be nonnegative at all their vertices.
    """
    if not (0.0 < lam < 1.0):
        raise ValueError(f"lambda must lie in (0, 1), got {lam!r}")
    p = poisson_order(beta_exp)
    arr = np.array(f_pieces, dtype=float).reshape(-1, 3)
    verts = np.vstack([K0.vertices, K1.vertices])
    if ((verts @ arr[:, :2].T + arr[:, 2]).min() < 0):
        raise ValueError("f^beta is not concave on the hull of the bodies (g < 0 at a vertex)")
    f = beta_concave_source(f_pieces, beta_exp)
    K_lam = minkowski_comb(K0, K1, lam)
    e0, e1, el = functional(K0, f, h), functional(K1, f, h), functional(K_lam, f, h)
    slack = 3.0 * max(e0.err_est, e1.err_est, el.err_est)
    consts, mean_rhs, H, A, checks = _quantitative_checks(
        e0.richardson, e1.richardson, el.richardson, p, lam, K0, K1, slack, seed
    )
    return PoissonBBLReport(p, e0, e1, el, mean_rhs, slack, H, A, consts, checks)


# -- text dump -----------------------------------------------------------------


def dump_field(field: ScalarField, out: TextIO) -> None:
    """Line-oriented dump: node count, nodes, triangle count, triangles, values."""
    m = field.mesh
    out.write(f"{len(m.nodes)}\n")
    for x, y in m.nodes.tolist():
        out.write(f"{x!r} {y!r}\n")
    out.write(f"{len(m.triangles)}\n")
    for a, b, c in m.triangles.tolist():
        out.write(f"{a} {b} {c}\n")
    for v in field.values.tolist():
        out.write(f"{v!r}\n")


def load_field(lines: Iterable[str], boundary: Sequence[int] = (), h: float = float("nan")) -> ScalarField:
    it = iter(lines)
    n = int(next(it))
    nodes = np.array([[float(t) for t in next(it).split()] for _ in range(n)])
    k = int(next(it))
    tris = np.array([[int(t) for t in next(it).split()] for _ in range(k)], dtype=int)
    vals = np.array([float(next(it)) for _ in range(n)])
    return ScalarField(TriMesh(nodes, tris, np.asarray(boundary, dtype=int), h), vals)
