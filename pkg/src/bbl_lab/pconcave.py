"""Power-concave functions ``u = g^(1/p)`` with ``g`` a minimum of affine pieces.

Covers the distribution function and layer-cake integral, the equal-area
parametrization, the ``(p, lambda)`` supremal convolution and the checks of
the BBL inequality, its quantitative forms and the support-stability bound.

The convolution is available two ways.  :func:`conv_eval` solves the
pointwise linear program.  :func:`convolve` builds the whole convolution at
once: the hypograph of ``u^p`` is a convex polytope in ``R^3`` and the
hypograph of the convolution is the Minkowski combination of the two
hypographs, whose upper facets are the affine pieces of the result.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Sequence

import numpy as np
from scipy.spatial import ConvexHull

from . import _kernels, means
from .distance import h0 as h0_distance
from .distance import rel_asymmetry
from .polytope2d import (
    ConvexPolygon,
    DegeneratePolygonError,
    clip,
    minkowski_comb,
    polygon_from_clip,
)
from .simplex import InfeasibleLP, lp_maximize

DIM = 2
#: Default relative tolerance of the layer-cake and convolution quadratures.
DEFAULT_TOL = 1e-6
#: Maximum number of integrand evaluations of one adaptive quadrature.
QUAD_BUDGET = 200_000

Piece = tuple[float, float, float]


class QuadratureError(RuntimeError):
    """An adaptive quadrature ran out of budget before reaching its tolerance."""


def _check_lambda(lam: float) -> None:
    if not (0.0 < lam < 1.0):
        raise ValueError(f"lambda must lie in (0, 1), got {lam!r}")


class PConcaveFn:
    """``u(x) = max(g(x), 0)^(1/p)`` on ``domain``, ``g(x) = min_j (a_j . x + b_j)``.

    Build instances with :func:`make`; the constructor trusts its input.
    """

    def __init__(self, domain: ConvexPolygon, p: float, pieces: Sequence[Piece]):
        self.domain = domain
        self.p = float(p)
        self.pieces: tuple[Piece, ...] = tuple(
            (float(a1), float(a2), float(b)) for a1, a2, b in pieces
        )
        arr = np.array(self.pieces, dtype=float).reshape(-1, 3)
        self._grad = arr[:, :2]
        self._off = arr[:, 2]

    def __repr__(self) -> str:
        return f"PConcaveFn(p={self.p}, pieces={len(self.pieces)}, domain={len(self.domain)} vertices)"

    def g(self, x: np.ndarray) -> np.ndarray:
        """The concave piecewise-affine ``g`` at points ``x`` of shape ``(..., 2)``."""
        x = np.asarray(x, dtype=float)
        return (x @ self._grad.T + self._off).min(axis=-1)

    def values(self, x: np.ndarray) -> np.ndarray:
        """Vectorized :func:`eval`."""
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1, 2)
        hp = np.array(self.domain.halfplanes)
        scale = max(1.0, float(np.abs(self.domain.vertices).max()))
        inside = (flat @ hp[:, :2].T - hp[:, 2] <= 1e-12 * scale).all(axis=1)
        out = np.maximum(self.g(flat), 0.0) ** (1.0 / self.p)
        return np.where(inside, out, 0.0).reshape(x.shape[:-1])

    def to_dict(self) -> dict[str, Any]:
        return {
            "domain": self.domain.to_list(),
            "p": self.p,
            "pieces": [list(pc) for pc in self.pieces],
        }

    @cached_property
    def sup_g(self) -> float:
        return _max_g(self.domain, self.pieces)[0]

    @cached_property
    def cells(self) -> list[tuple[int, ConvexPolygon]]:
        """Linearity cells ``(j, C)``: on ``C`` the minimum is attained by piece ``j``."""
        out = []
        pts = self.domain.points
        ref = max(1.0, float(np.abs(self.domain.vertices).max()))
        for j, (a1, a2, b) in enumerate(self.pieces):
            hps = [
                (a1 - c1, a2 - c2, d - b)
                for k, (c1, c2, d) in enumerate(self.pieces)
                if k != j
            ]
            cell = polygon_from_clip(clip(pts, hps), ref)
            if cell is not None:
                out.append((j, cell))
        return out

    @cached_property
    def hypograph_points(self) -> np.ndarray:
        """A generating set of ``{(x, t): x in domain, 0 <= t <= g(x)}``."""
        base = np.column_stack([self.domain.vertices, np.zeros(len(self.domain))])
        tops = []
        for j, cell in self.cells:
            v = cell.vertices
            tops.append(np.column_stack([v, np.maximum(v @ self._grad[j] + self._off[j], 0.0)]))
        return np.unique(np.vstack([base] + tops), axis=0)

    @cached_property
    def _level_arrays(self):
        v = self.domain.vertices
        return (
            np.ascontiguousarray(v[:, 0]),
            np.ascontiguousarray(v[:, 1]),
            np.ascontiguousarray(-self._grad[:, 0]),
            np.ascontiguousarray(-self._grad[:, 1]),
        )

    def area_at_level(self, c: float) -> float:
        """Area of ``{g >= c}`` inside the domain."""
        px, py, m1, m2 = self._level_arrays
        return max(_kernels.clip_area_shifted(px, py, m1, m2, self._off - c, 0.0, 0.0), 0.0)

    @cached_property
    def breakpoints(self) -> np.ndarray:
        """Heights ``s`` at which the level-set combinatorics change."""
        vals = [0.0]
        for j, cell in self.cells:
            vals.extend(np.maximum(cell.vertices @ self._grad[j] + self._off[j], 0.0))
        vals.append(self.sup_g)
        c = np.unique(np.clip(vals, 0.0, self.sup_g))
        return c ** (1.0 / self.p)


def _max_g(domain: ConvexPolygon, pieces: Sequence[Piece]) -> tuple[float, np.ndarray]:
    """``max g`` over ``domain`` by LP in the variables ``(x1, x2, t)``."""
    rows, rhs = [], []
    for a1, a2, b in pieces:
        rows.append((-a1, -a2, 1.0))
        rhs.append(b)
    for n1, n2, c in domain.halfplanes:
        rows.append((n1, n2, 0.0))
        rhs.append(c)
    v = domain.vertices
    g_min = min(min(a1 * x + a2 * y + b for a1, a2, b in pieces) for x, y in v)
    lower = (v[:, 0].min(), v[:, 1].min(), min(g_min, 0.0))
    res = lp_maximize((0.0, 0.0, 1.0), rows, rhs, lower)
    return res.value, res.point[:2]


def _parse_pieces(pieces: Iterable[Sequence[float]]) -> list[Piece]:
    out = []
    for pc in pieces:
        if len(pc) != 3:
            raise ValueError("each piece must be [a1, a2, b]")
        a1, a2, b = (float(v) for v in pc)
        if not all(math.isfinite(v) for v in (a1, a2, b)):
            raise ValueError("piece coefficients must be finite")
        out.append((a1, a2, b))
    if not out:
        raise ValueError("a p-concave function needs at least one affine piece")
    return out


def make(
    domain: ConvexPolygon | Sequence[Sequence[float]],
    p: float,
    pieces: Iterable[Sequence[float]],
) -> PConcaveFn:
    """Validated p-concave function.

    The domain is cut down to ``{g >= 0}`` so that it is the support of
    ``u`` and ``u^p = g`` is concave on it.
    """
    if not (math.isfinite(p) and p > 0):
        raise ValueError(f"p must be finite and > 0, got {p!r}")
    if not isinstance(domain, ConvexPolygon):
        domain = ConvexPolygon(domain)
    pcs = _parse_pieces(pieces)
    top, _ = _max_g(domain, pcs)
    if top <= 0.0:
        raise ValueError("g is nonpositive on the whole domain")
    ref = max(1.0, float(np.abs(domain.vertices).max()))
    support = polygon_from_clip(clip(domain.points, [(-a1, -a2, b) for a1, a2, b in pcs]), ref)
    if support is None:
        raise DegeneratePolygonError("the set {g >= 0} has empty interior")
    return PConcaveFn(support, p, pcs)


def from_dict(data: dict[str, Any]) -> PConcaveFn:
    """Inverse of :meth:`PConcaveFn.to_dict` (the function literal format)."""
    return make(data["domain"], data["p"], data["pieces"])


def eval(u: PConcaveFn, x: Sequence[float]) -> float:  # noqa: A001 - mirrors the math name
    return float(u.values(np.asarray(x, dtype=float)))


def sup_norm(u: PConcaveFn) -> float:
    """``L = max u`` (via the LP for ``max g``)."""
    return max(u.sup_g, 0.0) ** (1.0 / u.p)


def level_set(u: PConcaveFn, t: float) -> ConvexPolygon | None:
    """``{u >= t}``; the whole domain at ``t = 0`` and ``None`` when empty."""
    if t < 0:
        raise ValueError("level must be >= 0")
    if t == 0:
        return u.domain
    c = t**u.p
    ref = max(1.0, float(np.abs(u.domain.vertices).max()))
    hps = [(-a1, -a2, b - c) for a1, a2, b in u.pieces]
    return polygon_from_clip(clip(u.domain.points, hps), ref)


def distribution(u: PConcaveFn, t: float) -> float:
    """``mu(t) = |{u >= t}|``."""
    if t < 0:
        raise ValueError("level must be >= 0")
    if t == 0:
        return u.domain.area
    L = sup_norm(u)
    if t > L:
        return 0.0
    return u.area_at_level(u.sup_g if t == L else min(t**u.p, u.sup_g))


# -- layer cake ------------------------------------------------------------


@dataclass
class _Panel:
    a: float
    b: float
    f: tuple[float, float, float, float, float]  # at a, a+h/4, a+h/2, a+3h/4, b

    @property
    def coarse(self) -> float:
        f = self.f
        return (self.b - self.a) / 6.0 * (f[0] + 4.0 * f[2] + f[4])

    @property
    def fine(self) -> float:
        f = self.f
        return (self.b - self.a) / 12.0 * (f[0] + 4.0 * f[1] + 2.0 * f[2] + 4.0 * f[3] + f[4])

    @property
    def best(self) -> float:
        """Richardson-corrected panel value."""
        return self.fine + (self.fine - self.coarse) / 15.0

    @property
    def err(self) -> float:
        return abs(self.fine - self.coarse) / 15.0


@dataclass(frozen=True)
class LayerCake:
    """Converged layer-cake data: ``integral = int_0^sup mu(s) ds``.

    ``levels``/``areas`` are the panel endpoints and the values of ``mu``
    there, ``error`` the quadrature error estimate.  The quadrature runs in
    the variable ``w`` with ``s = sup * w^exponent``, which removes the
    ``s^p`` singularity of ``mu`` at ``s = 0``.
    """

    levels: np.ndarray
    areas: np.ndarray
    integral: float
    sup: float
    error: float
    exponent: int = 1
    panels: tuple[_Panel, ...] = field(repr=False, default=())
    _f: Any = field(repr=False, default=None)

    def cumulative(self, s: float) -> float:
        """``int_0^s mu``."""
        if s <= 0:
            return 0.0
        if s >= self.sup:
            return self.integral
        w = (s / self.sup) ** (1.0 / self.exponent)
        total = 0.0
        for pn in self.panels:
            if pn.b <= w:
                total += pn.best
                continue
            if pn.a < w:
                a, h = pn.a, w - pn.a
                f = [pn.f[0]] + [self._f(a + k * h / 4.0) for k in range(1, 5)]
                total += h / 12.0 * (f[0] + 4.0 * f[1] + 2.0 * f[2] + 4.0 * f[3] + f[4])
            break
        return total


def _adaptive_simpson(f, breaks: np.ndarray, tol: float, budget: int = QUAD_BUDGET):
    """Globally adaptive Simpson over the panels ``breaks[i]..breaks[i+1]``."""
    heap: list[tuple[float, int, _Panel]] = []
    done: list[_Panel] = []
    evals = 0
    counter = 0

    def panel(a, b, fa=None, fm=None, fb=None):
        nonlocal evals
        h = b - a
        fa = f(a) if fa is None else fa
        fb = f(b) if fb is None else fb
        fm = f(a + h / 2) if fm is None else fm
        fl, fr = f(a + h / 4), f(a + 3 * h / 4)
        evals += 5
        return _Panel(a, b, (fa, fl, fm, fr, fb))

    def push(pn):
        nonlocal counter
        heapq.heappush(heap, (-pn.err, counter, pn))
        counter += 1

    for a, b in zip(breaks[:-1], breaks[1:]):
        if b > a:
            push(panel(a, b))
    while heap:
        total = math.fsum(pn.best for _, _, pn in heap) + math.fsum(pn.best for pn in done)
        err = math.fsum(-e for e, _, _ in heap)
        # the integrand is nonnegative, so a purely relative test is safe for small integrals
        if err <= tol * abs(total) or total == 0.0:
            break
        if evals > budget:
            raise QuadratureError(f"quadrature budget exhausted (error {err:.3g})")
        _, _, pn = heapq.heappop(heap)
        m = 0.5 * (pn.a + pn.b)
        if not (pn.a < m < pn.b):  # cannot split further
            done.append(pn)
            continue
        push(panel(pn.a, m, pn.f[0], pn.f[1], pn.f[2]))
        push(panel(m, pn.b, pn.f[2], pn.f[3], pn.f[4]))
    panels = sorted(done + [pn for _, _, pn in heap], key=lambda pn: pn.a)
    total = math.fsum(pn.best for pn in panels)
    err = math.fsum(pn.err for pn in panels)
    return panels, total, err


def layer_cake(u: PConcaveFn, tol: float = DEFAULT_TOL) -> LayerCake:
    """Distribution function and ``I = int_0^L mu(s) ds`` to relative tolerance ``tol``."""
    if not tol > 0:
        raise ValueError("tol must be > 0")
    cache = u.__dict__.setdefault("_layer_cakes", {})
    if tol in cache:
        return cache[tol]
    L = sup_norm(u)
    top = u.sup_g
    m = max(1, math.ceil(4.0 / u.p))

    def mu(s: float) -> float:
        if s <= 0.0:
            return u.domain.area
        return u.area_at_level(top if s >= L else min(s**u.p, top))

    def f(w: float) -> float:
        return mu(L * w**m) * m * L * w ** (m - 1)

    breaks = np.unique(np.clip(np.append(u.breakpoints / L, 1.0), 0.0, 1.0) ** (1.0 / m))
    panels, total, err = _adaptive_simpson(f, breaks, tol)
    levels = L * np.array([pn.a for pn in panels] + [1.0]) ** m
    areas = np.array([mu(s) for s in levels])
    lc = LayerCake(levels, areas, total, L, err, m, tuple(panels), f)
    cache[tol] = lc
    return lc


def integral(u: PConcaveFn, tol: float = DEFAULT_TOL) -> float:
    """``int u`` via the layer-cake formula."""
    return layer_cake(u, tol).integral


def equal_area_param(u: PConcaveFn, t: float, tol: float = 1e-10) -> float:
    """``s(t)`` with ``(1/I) int_0^s(t) mu = t``, by bisection to ``1e-10 L``."""
    if not (0.0 <= t <= 1.0):
        raise ValueError("t must lie in [0, 1]")
    lc = layer_cake(u, tol)
    if t == 0.0:
        return 0.0
    if t == 1.0:
        return lc.sup
    target = t * lc.integral
    # locate the panel, then bisect inside it
    acc = 0.0
    lo, hi = 0.0, lc.sup
    for pn in lc.panels:
        if acc + pn.best >= target:
            lo, hi = lc.sup * pn.a**lc.exponent, lc.sup * pn.b**lc.exponent
            break
        acc += pn.best
    stop = 1e-10 * lc.sup
    while hi - lo > stop:
        mid = 0.5 * (lo + hi)
        if lc.cumulative(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- exact integration of powers of affine functions --------------------------


def _falling(alpha: float, k: int) -> float:
    out = 1.0
    for i in range(k):
        out *= alpha - i
    return out


def _dd1(x: np.ndarray, y: np.ndarray, alpha: float) -> np.ndarray:
    """First divided difference of ``H(v) = v^(alpha+2) / ((alpha+1)(alpha+2))``."""
    d = y - x
    m = 0.5 * (x + y)
    near = np.abs(d) <= 1e-3 * np.maximum(np.abs(y), np.abs(x))
    safe_d = np.where(near, 1.0, d)
    c = 1.0 / ((alpha + 1.0) * (alpha + 2.0))
    direct = c * (y ** (alpha + 2.0) - x ** (alpha + 2.0)) / safe_d
    with np.errstate(divide="ignore", invalid="ignore"):
        mpos = np.where(m > 0, m, 1.0)
        taylor = (
            mpos ** (alpha + 1.0) / (alpha + 1.0)
            + alpha * mpos ** (alpha - 1.0) * d**2 / 24.0
            + _falling(alpha, 3) * mpos ** (alpha - 3.0) * d**4 / 1920.0
        )
    taylor = np.where(m > 0, taylor, 0.0)
    return np.where(near, taylor, direct)


def _dd2(v: np.ndarray, alpha: float) -> np.ndarray:
    """Second divided difference ``[v1, v2, v3] H`` row-wise for ``v`` of shape ``(k, 3)``."""
    v = np.sort(np.maximum(v, 0.0), axis=1)
    lo, mid, hi = v[:, 0], v[:, 1], v[:, 2]
    spread = hi - lo
    near = spread <= 1e-2 * hi
    safe = np.where(near | (spread == 0), 1.0, spread)
    general = (_dd1(mid, hi, alpha) - _dd1(lo, mid, alpha)) / safe
    # near-constant rows: expand around the mean with complete homogeneous polynomials
    m = v.mean(axis=1)
    d = v - m[:, None]
    power = [np.ones_like(m)] + [(d**i).sum(axis=1) for i in range(1, 9)]
    h = [np.ones_like(m)]
    for k in range(1, 9):
        h.append(sum(power[i] * h[k - i] for i in range(1, k + 1)) / k)
    mpos = np.where(m > 0, m, 1.0)
    series = np.zeros_like(m)
    for k in range(0, 9):
        series += _falling(alpha, k) * mpos ** (alpha - k) / math.factorial(k + 2) * h[k]
    series = np.where(m > 0, series, 0.0)
    return np.where(near, series, general)


def triangle_power_integrals(xy: np.ndarray, vals: np.ndarray, alpha: float) -> np.ndarray:
    """``int_T w^alpha`` for triangles ``xy`` ``(k, 3, 2)`` and affine ``w`` with vertex values ``vals``."""
    xy = np.asarray(xy, dtype=float)
    e1 = xy[:, 1] - xy[:, 0]
    e2 = xy[:, 2] - xy[:, 0]
    area = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    return 2.0 * area * _dd2(np.asarray(vals, dtype=float), alpha)


def exact_integral(u: PConcaveFn) -> float:
    """``int u`` by closed-form integration over the linearity cells."""
    tris, vals = [], []
    for j, cell in u.cells:
        v = cell.vertices
        gv = v @ u._grad[j] + u._off[j]
        for i in range(1, len(v) - 1):
            tris.append(v[[0, i, i + 1]])
            vals.append(gv[[0, i, i + 1]])
    if not tris:
        return 0.0
    return math.fsum(triangle_power_integrals(np.array(tris), np.array(vals), 1.0 / u.p))


# -- the (p, lambda) convolution -------------------------------------------


def _check_pair(u0: PConcaveFn, u1: PConcaveFn, p: float, lam: float) -> None:
    if u0.p != p or u1.p != p:
        raise ValueError(f"both functions must have exponent p={p}, got {u0.p} and {u1.p}")
    _check_lambda(lam)


def conv_eval(u0: PConcaveFn, u1: PConcaveFn, p: float, lam: float, x: Sequence[float]) -> float:
    """``u_{p,lam}(x) = sup{M_p(u0(x0), u1(x1); lam) : x = (1-lam) x0 + lam x1}`` by LP."""
    _check_pair(u0, u1, p, lam)
    mu_, r = 1.0 - lam, (1.0 - lam) / lam
    X = np.asarray(x, dtype=float) / lam
    rows, rhs = [], []
    for a1, a2, b in u0.pieces:
        rows.append((-a1, -a2, 1.0, 0.0))
        rhs.append(b)
    for a1, a2, b in u1.pieces:
        rows.append((r * a1, r * a2, 0.0, 1.0))
        rhs.append(b + a1 * X[0] + a2 * X[1])
    for n1, n2, c in u0.domain.halfplanes:
        rows.append((n1, n2, 0.0, 0.0))
        rhs.append(c)
    for n1, n2, c in u1.domain.halfplanes:
        rows.append((-r * n1, -r * n2, 0.0, 0.0))
        rhs.append(c - n1 * X[0] - n2 * X[1])
    v = u0.domain.vertices
    lower = (v[:, 0].min(), v[:, 1].min(), 0.0, 0.0)
    try:
        res = lp_maximize((0.0, 0.0, mu_, lam), rows, rhs, lower)
    except InfeasibleLP:
        return 0.0
    return max(res.value, 0.0) ** (1.0 / p)


@dataclass(frozen=True)
class Convolution:
    """``u_{p,lam}`` as a p-concave function plus its triangulated graph."""

    fn: PConcaveFn
    triangles: np.ndarray  # (k, 3, 2) projected upper facets
    heights: np.ndarray  # (k, 3) values of u^p at their corners

    @cached_property
    def integral(self) -> float:
        return math.fsum(
            triangle_power_integrals(self.triangles, self.heights, 1.0 / self.fn.p)
        )


def convolve(u0: PConcaveFn, u1: PConcaveFn, p: float, lam: float) -> Convolution:
    """Exact ``u_{p,lam}`` from the Minkowski combination of the two hypographs."""
    _check_pair(u0, u1, p, lam)
    V0, V1 = u0.hypograph_points, u1.hypograph_points
    pts = ((1.0 - lam) * V0[:, None, :] + lam * V1[None, :, :]).reshape(-1, 3)
    pts = np.unique(pts, axis=0)
    domain = minkowski_comb(u0.domain, u1.domain, lam)
    tspan = float(pts[:, 2].max())
    if tspan <= 0.0:
        raise ValueError("both functions vanish identically")
    hull = ConvexHull(pts)
    eq = hull.equations
    upper = eq[:, 2] > 1e-12
    simp = hull.simplices[upper]
    tri = pts[simp]
    heights = np.maximum(tri[:, :, 2], 0.0)
    planes = eq[upper]
    grads = -planes[:, :2] / planes[:, 2:3]
    offs = -planes[:, 3] / planes[:, 2]
    scale = max(1.0, float(np.abs(pts).max()))
    key = np.round(np.column_stack([grads, offs]) / scale, 10)
    _, first = np.unique(key, axis=0, return_index=True)
    pieces = [(grads[i, 0], grads[i, 1], offs[i]) for i in sorted(first)]
    return Convolution(PConcaveFn(domain, p, pieces), tri[:, :, :2], heights)


def _split4(T: np.ndarray) -> list[np.ndarray]:
    m01, m12, m20 = (T[0] + T[1]) / 2, (T[1] + T[2]) / 2, (T[2] + T[0]) / 2
    return [np.array([T[0], m01, m20]), np.array([m01, T[1], m12]),
            np.array([m20, m12, T[2]]), np.array([m01, m12, m20])]


def _triangle_quadrature(f, tris: list[np.ndarray], tol: float, budget: int, presplit: int = 2):
    """Adaptive quadrature on triangles.

    Each triangle's value is the edge-midpoint rule summed over its four
    midpoint children, and its error the difference to the same rule on the
    parent.  The initial triangles are split ``presplit`` times first, so a
    kink cannot be missed by symmetric cancellation on a coarse triangle.
    """
    cache: dict[tuple[float, float], float] = {}

    def val(pt) -> float:
        key = (float(pt[0]), float(pt[1]))
        if key not in cache:
            cache[key] = f(pt)
        return cache[key]

    def mid_rule(T) -> float:
        a = 0.5 * abs((T[1, 0] - T[0, 0]) * (T[2, 1] - T[0, 1]) - (T[1, 1] - T[0, 1]) * (T[2, 0] - T[0, 0]))
        return a / 3.0 * sum(val((T[i] + T[(i + 1) % 3]) / 2) for i in range(3))

    def rule(T):
        fine = math.fsum(mid_rule(C) for C in _split4(T))
        return fine, abs(fine - mid_rule(T))

    for _ in range(presplit):
        tris = [C for T in tris for C in _split4(T)]
    heap = []
    counter = 0
    for T in tris:
        est, err = rule(T)
        heap.append((-err, counter, T, est))
        counter += 1
    heapq.heapify(heap)
    while True:
        total = math.fsum(h[3] for h in heap)
        err = math.fsum(-h[0] for h in heap)
        if err <= tol * max(1.0, abs(total)):
            return total, err
        if len(cache) > budget:
            raise QuadratureError(f"quadrature budget exhausted (error {err:.3g})")
        _, _, T, _ = heapq.heappop(heap)
        for child in _split4(T):
            est, e = rule(child)
            heapq.heappush(heap, (-e, counter, child, est))
            counter += 1


def conv_integral(
    u0: PConcaveFn,
    u1: PConcaveFn,
    p: float,
    lam: float,
    tol: float = DEFAULT_TOL,
    method: str = "hull",
    budget: int = 20_000,
) -> float:
    """``I_lam = int u_{p,lam}`` over ``(1-lam) Omega_0 + lam Omega_1``.

    ``method="hull"`` integrates the exact convolution facet by facet;
    ``method="quadrature"`` refines triangles of the support using pointwise
    LP values until the estimated error is below ``tol * max(1, I)``.
    """
    if method == "hull":
        return convolve(u0, u1, p, lam).integral
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    _check_pair(u0, u1, p, lam)
    domain = minkowski_comb(u0.domain, u1.domain, lam)
    c = np.array(domain.centroid)
    v = domain.vertices
    tris = [np.array([c, v[i], v[(i + 1) % len(v)]]) for i in range(len(v))]
    total, _ = _triangle_quadrature(lambda x: conv_eval(u0, u1, p, lam, x), tris, tol, budget)
    return total


# -- verification ----------------------------------------------------------


@dataclass(frozen=True)
class Check:
    """Inequality ``lhs >= rhs - slack``; not evaluated when ``applicable`` is false."""

    lhs: float
    rhs: float
    slack: float
    applicable: bool = True

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs

    @property
    def holds(self) -> bool:
        return self.lhs >= self.rhs - self.slack

    @property
    def ok(self) -> bool:
        return (not self.applicable) or self.holds

    def to_dict(self) -> dict[str, Any]:
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "margin": self.margin,
            "applicable": self.applicable,
            "holds": self.holds if self.applicable else None,
        }


@dataclass(frozen=True)
class StabilityCheck:
    epsilon: float
    epsilon_eff: float
    area_lambda: float
    mean_area: float
    eta: float
    b_threshold: float
    bound_rhs: float
    applicable: bool
    holds: bool

    @property
    def ok(self) -> bool:
        return (not self.applicable) or self.holds


@dataclass(frozen=True)
class BBLReport:
    I0: float
    I1: float
    I_lambda: float
    mean_rhs: float
    epsilon: float
    error_budget: float
    h0: float
    asym: float
    area0: float
    area1: float
    area_lambda: float
    constants: means.ConstantsBundle
    checks: dict[str, Check]
    stability: StabilityCheck

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks.values()) and self.stability.ok


def stability_check(
    epsilon: float,
    error_budget: float,
    area0: float,
    area1: float,
    area_lambda: float,
    p: float,
    lam: float,
    I0: float,
    I1: float,
    slack: float = 1e-9,
) -> StabilityCheck:
    """Support bound ``|Omega_lam| <= M_{1/n}(|Omega_0|, |Omega_1|)(1 + eta eps^(p/(p+1)))``.

    The deficit is used as ``max(epsilon + error_budget, 0)``, an upper bound
    on the exact deficit; the check only applies when that is at most ``B``.
    """
    eps_eff = max(epsilon + error_budget, 0.0)
    mean_area = means.p_mean(area0, area1, lam, 1.0 / DIM)
    eta = 2.0 * (DIM + 1.0 / means.p_mean(I0, I1, lam, means.bbl_order(p, DIM)))
    b_thr = (1.0 / (2.0 * DIM)) ** ((p + 1.0) / p)
    bound = mean_area * (1.0 + eta * eps_eff ** (p / (p + 1.0)))
    return StabilityCheck(
        epsilon=epsilon,
        epsilon_eff=eps_eff,
        area_lambda=area_lambda,
        mean_area=mean_area,
        eta=eta,
        b_threshold=b_thr,
        bound_rhs=bound,
        applicable=eps_eff <= b_thr,
        holds=area_lambda <= bound + slack,
    )


def _deficit(u0, u1, p, lam, tol):
    lc0, lc1 = layer_cake(u0, tol), layer_cake(u1, tol)
    I0, I1 = lc0.integral, lc1.integral
    conv = convolve(u0, u1, p, lam)
    I_lam = conv.integral
    s = means.bbl_order(p, DIM)
    mean_rhs = means.p_mean(I0, I1, lam, s)
    # propagate the layer-cake error estimates through the mean
    e0, e1 = max(lc0.error, 1e-15 * I0), max(lc1.error, 1e-15 * I1)
    hi = means.p_mean(I0 + e0, I1 + e1, lam, s)
    lo = means.p_mean(max(I0 - e0, 0.0), max(I1 - e1, 0.0), lam, s)
    budget = 0.5 * (hi - lo) + 1e-12 * max(1.0, I_lam)
    return I0, I1, I_lam, mean_rhs, budget, conv


def verify_stability(
    u0: PConcaveFn, u1: PConcaveFn, p: float, lam: float, tol: float = DEFAULT_TOL
) -> StabilityCheck:
    _check_pair(u0, u1, p, lam)
    I0, I1, I_lam, mean_rhs, budget, conv = _deficit(u0, u1, p, lam, tol)
    return stability_check(
        I_lam - mean_rhs, budget, u0.domain.area, u1.domain.area, conv.fn.domain.area,
        p, lam, I0, I1,
    )


def verify_bbl(
    u0: PConcaveFn,
    u1: PConcaveFn,
    p: float,
    lam: float,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
) -> BBLReport:
    """BBL with ``h = u_{p,lam}``, its two quantitative forms and the stability bound.

    ``checks`` holds ``bbl`` (plain inequality), ``h0`` and ``asym`` (the
    quantitative forms, applicable below the smallness radii ``h0_max`` and
    ``a_max``) and ``h0_capped``/``asym_capped`` (the forms with ``min{B, .}``,
    always applicable).  Every check uses the quadrature error budget as slack.
    """
    _check_pair(u0, u1, p, lam)
    I0, I1, I_lam, mean_rhs, budget, conv = _deficit(u0, u1, p, lam, tol)
    D0, D1 = u0.domain, u1.domain
    H = h0_distance(D0, D1)
    A = rel_asymmetry(D0, D1, seed=seed).a
    consts = means.bbl_constants(DIM, p, lam, D0.area, D1.area, D0.diameter, D1.diameter, I0, I1)
    e_h = (DIM + 1) * (p + 1.0) / p
    e_a = 2.0 * (p + 1.0) / p
    term_h = consts.beta * H**e_h
    term_a = consts.delta * A**e_a
    checks = {
        "bbl": Check(I_lam, mean_rhs, budget),
        "h0": Check(I_lam, mean_rhs + term_h, budget, H < consts.h0_max),
        "asym": Check(I_lam, mean_rhs + term_a, budget, A < consts.a_max),
        "h0_capped": Check(I_lam, mean_rhs + min(consts.b_threshold, term_h), budget),
        "asym_capped": Check(I_lam, mean_rhs + min(consts.b_threshold, term_a), budget),
    }
    area_lam = conv.fn.domain.area
    stab = stability_check(
        I_lam - mean_rhs, budget, D0.area, D1.area, area_lam, p, lam, I0, I1
    )
    return BBLReport(
        I0=I0,
        I1=I1,
        I_lambda=I_lam,
        mean_rhs=mean_rhs,
        epsilon=I_lam - mean_rhs,
        error_budget=budget,
        h0=H,
        asym=A,
        area0=D0.area,
        area1=D1.area,
        area_lambda=area_lam,
        constants=consts,
        checks=checks,
        stability=stab,
    )
