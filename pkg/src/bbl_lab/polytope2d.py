"""Planar convex polygons: construction, measures, support data, Minkowski
combinations and intersections.

Vertices are stored counterclockwise with no repeated or collinear vertices.
The hot loops (clipping, areas) work on plain tuples; numpy is used where an
operation is naturally vectorized (support values, Hausdorff distances).
"""

from __future__ import annotations

import math
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

#: Relative collinearity tolerance: |cross| <= COLLINEAR_TOL * scale**2 collapses a vertex.
COLLINEAR_TOL = 1e-12

Point = tuple[float, float]
#: Halfplane ``(a1, a2, c)`` meaning ``a1*x + a2*y <= c``.
Halfplane = tuple[float, float, float]


class DegeneratePolygonError(ValueError):
    """Raised when points do not span a polygon with positive area."""


def _cross(o: Point, a: Point, b: Point) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _scale(pts: Sequence[Point]) -> float:
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    return max(max(xs) - min(xs), max(ys) - min(ys), 1e-300)


def _shoelace(pts: Sequence[Point]) -> float:
    s = 0.0
    n = len(pts)
    for i in range(n):
        x0, y0 = pts[i]
        x1, y1 = pts[(i + 1) % n]
        s += x0 * y1 - x1 * y0
    return 0.5 * s


def _cleanup(pts: list[Point], scale: float | None = None) -> list[Point]:
    """Drop repeated and collinear vertices of a CCW convex cycle."""
    if len(pts) < 3:
        return pts
    if scale is None:
        scale = _scale(pts)
    eps_d = 1e-13 * scale
    tol = COLLINEAR_TOL * scale * scale
    out: list[Point] = []
    for p in pts:
        if out and abs(p[0] - out[-1][0]) <= eps_d and abs(p[1] - out[-1][1]) <= eps_d:
            continue
        out.append(p)
    while len(out) > 1 and (
        abs(out[0][0] - out[-1][0]) <= eps_d and abs(out[0][1] - out[-1][1]) <= eps_d
    ):
        out.pop()
    changed = True
    while changed and len(out) >= 3:
        changed = False
        n = len(out)
        keep = []
        for i in range(n):
            if abs(_cross(out[i - 1], out[i], out[(i + 1) % n])) > tol:
                keep.append(out[i])
            else:
                changed = True
        out = keep
    return out


def convex_hull(points: Iterable[Sequence[float]]) -> list[Point]:
    """Monotone-chain hull, CCW, collinear points removed."""
    pts = sorted({(float(p[0]), float(p[1])) for p in points})
    if len(pts) < 3:
        return pts
    tol = COLLINEAR_TOL * _scale(pts) ** 2

    def half(seq):
        chain: list[Point] = []
        for p in seq:
            while len(chain) >= 2 and _cross(chain[-2], chain[-1], p) <= tol:
                chain.pop()
            chain.append(p)
        return chain

    lower = half(pts)
    upper = half(reversed(pts))
    return lower[:-1] + upper[:-1]


class ConvexPolygon:
    """A convex polygon with positive area.

    The constructor accepts the vertices of a convex cycle in either
    orientation; duplicates and collinear vertices are dropped.  Use
    :func:`from_points` for arbitrary point clouds.
    """

    def __init__(self, vertices: Iterable[Sequence[float]]):
        pts = [(float(v[0]), float(v[1])) for v in vertices]
        if len(pts) < 3:
            raise DegeneratePolygonError("a polygon needs at least 3 vertices")
        if not all(math.isfinite(c) for p in pts for c in p):
            raise ValueError("polygon vertices must be finite")
        if _shoelace(pts) < 0:
            pts.reverse()
        pts = _cleanup(pts)
        if len(pts) < 3:
            raise DegeneratePolygonError("vertices collapse below 3 after normalization")
        tol = COLLINEAR_TOL * _scale(pts) ** 2
        n = len(pts)
        for i in range(n):
            if _cross(pts[i - 1], pts[i], pts[(i + 1) % n]) <= tol:
                raise ValueError("vertices are not in strictly convex position")
        # turning number 1: edge angles must wind exactly once
        total = 0.0
        for i in range(n):
            a, b, c = pts[i - 1], pts[i], pts[(i + 1) % n]
            e0 = (b[0] - a[0], b[1] - a[1])
            e1 = (c[0] - b[0], c[1] - b[1])
            total += math.atan2(e0[0] * e1[1] - e0[1] * e1[0], e0[0] * e1[0] + e0[1] * e1[1])
        if abs(total - 2.0 * math.pi) > 1e-6:
            raise ValueError("vertex cycle is self-intersecting")
        self._pts: list[Point] = pts

    @classmethod
    def _trusted(cls, pts: list[Point]) -> "ConvexPolygon":
        obj = cls.__new__(cls)
        obj._pts = pts
        return obj

    def __repr__(self) -> str:
        return f"ConvexPolygon({self._pts!r})"

    def __len__(self) -> int:
        return len(self._pts)

    def __eq__(self, other) -> bool:
        return isinstance(other, ConvexPolygon) and self._pts == other._pts

    __hash__ = None  # type: ignore[assignment]

    @property
    def points(self) -> list[Point]:
        return list(self._pts)

    @cached_property
    def vertices(self) -> np.ndarray:
        arr = np.array(self._pts, dtype=float)
        arr.flags.writeable = False
        return arr

    def to_list(self) -> list[list[float]]:
        return [[x, y] for x, y in self._pts]

    @cached_property
    def area(self) -> float:
        return _shoelace(self._pts)

    @cached_property
    def perimeter(self) -> float:
        pts = self._pts
        return sum(math.dist(pts[i - 1], pts[i]) for i in range(len(pts)))

    @cached_property
    def centroid(self) -> Point:
        pts = self._pts
        # shift to the first vertex to limit cancellation
        ox, oy = pts[0]
        a = cx = cy = 0.0
        for i in range(1, len(pts) - 1):
            x1, y1 = pts[i][0] - ox, pts[i][1] - oy
            x2, y2 = pts[i + 1][0] - ox, pts[i + 1][1] - oy
            w = x1 * y2 - x2 * y1
            a += w
            cx += w * (x1 + x2)
            cy += w * (y1 + y2)
        return (ox + cx / (3.0 * a), oy + cy / (3.0 * a))

    @cached_property
    def diameter(self) -> float:
        v = self.vertices
        diff = v[:, None, :] - v[None, :, :]
        return float(np.sqrt((diff**2).sum(-1).max()))

    @cached_property
    def halfplanes(self) -> list[Halfplane]:
        """Outward edge halfplanes ``n . x <= c`` with unit normals."""
        pts = self._pts
        out = []
        for i in range(len(pts)):
            x0, y0 = pts[i]
            x1, y1 = pts[(i + 1) % len(pts)]
            ex, ey = x1 - x0, y1 - y0
            norm = math.hypot(ex, ey)
            nx, ny = ey / norm, -ex / norm
            out.append((nx, ny, nx * x0 + ny * y0))
        return out

    def support(self, d: Sequence[float]) -> float:
        """``h(K, d) = max over K of <x, d>``; positively homogeneous in ``d``."""
        return float((self.vertices @ np.asarray(d, dtype=float)).max())

    def width(self, d: Sequence[float]) -> float:
        d = np.asarray(d, dtype=float)
        return self.support(d) + self.support(-d)

    @property
    def mean_width(self) -> float:
        # Cauchy: the mean width of a planar convex body is perimeter / pi
        return self.perimeter / math.pi

    def contains(self, pt: Sequence[float], tol: float = 0.0) -> bool:
        x, y = float(pt[0]), float(pt[1])
        return all(nx * x + ny * y <= c + tol for nx, ny, c in self.halfplanes)

    def transform(self, scale: float, shift: Sequence[float] = (0.0, 0.0)) -> "ConvexPolygon":
        """Homothety ``x -> scale * x + shift``."""
        if not scale > 0:
            raise ValueError(f"scale must be > 0, got {scale!r}")
        sx, sy = float(shift[0]), float(shift[1])
        return ConvexPolygon._trusted([(scale * x + sx, scale * y + sy) for x, y in self._pts])

    def translate(self, shift: Sequence[float]) -> "ConvexPolygon":
        return self.transform(1.0, shift)

    def rotate(self, angle: float, center: Sequence[float] | None = None) -> "ConvexPolygon":
        """Rotate counterclockwise by ``angle`` about ``center`` (default: centroid)."""
        cx, cy = self.centroid if center is None else (float(center[0]), float(center[1]))
        c, s = math.cos(angle), math.sin(angle)
        pts = [
            (cx + c * (x - cx) - s * (y - cy), cy + s * (x - cx) + c * (y - cy))
            for x, y in self._pts
        ]
        return ConvexPolygon._trusted(pts)


def direction(theta: float) -> np.ndarray:
    """Unit vector at angle ``theta``."""
    return np.array([math.cos(theta), math.sin(theta)])


def from_points(points: Iterable[Sequence[float]]) -> ConvexPolygon:
    """Convex hull of ``points`` as a :class:`ConvexPolygon`."""
    hull = convex_hull(points)
    if len(hull) < 3:
        raise DegeneratePolygonError("points are collinear or too few")
    return ConvexPolygon(hull)


def regular_polygon(
    n: int, radius: float = 1.0, center: Sequence[float] = (0.0, 0.0), phase: float = 0.0
) -> ConvexPolygon:
    cx, cy = center
    return ConvexPolygon(
        [
            (cx + radius * math.cos(phase + 2 * math.pi * k / n),
             cy + radius * math.sin(phase + 2 * math.pi * k / n))
            for k in range(n)
        ]
    )


def box(x0: float, y0: float, x1: float, y1: float) -> ConvexPolygon:
    return ConvexPolygon([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])


def _lowest_first(pts: list[Point]) -> list[Point]:
    k = min(range(len(pts)), key=lambda i: (pts[i][1], pts[i][0]))
    return pts[k:] + pts[:k]


def minkowski_sum(K: ConvexPolygon, L: ConvexPolygon) -> ConvexPolygon:
    """``K + L`` by merging the edge sequences in angular order."""
    P = _lowest_first(K._pts)
    Q = _lowest_first(L._pts)
    n, m = len(P), len(Q)
    P = P + P[:2]
    Q = Q + Q[:2]
    i = j = 0
    out: list[Point] = []
    while i < n or j < m:
        out.append((P[i][0] + Q[j][0], P[i][1] + Q[j][1]))
        ex, ey = P[i + 1][0] - P[i][0], P[i + 1][1] - P[i][1]
        fx, fy = Q[j + 1][0] - Q[j][0], Q[j + 1][1] - Q[j][1]
        c = ex * fy - ey * fx
        if j >= m or (i < n and c >= 0):
            step_i = True
        else:
            step_i = False
        step_j = j < m and (i >= n or c <= 0)
        if step_i:
            i += 1
        if step_j:
            j += 1
    return ConvexPolygon(_cleanup(out))


def minkowski_comb(K0: ConvexPolygon, K1: ConvexPolygon, lam: float) -> ConvexPolygon:
    """``(1 - lam) K0 + lam K1``."""
    if not (0.0 <= lam <= 1.0):
        raise ValueError(f"lambda must lie in [0, 1], got {lam!r}")
    if lam == 0.0:
        return K0
    if lam == 1.0:
        return K1
    a = K0.transform(1.0 - lam)
    b = K1.transform(lam)
    return minkowski_sum(a, b)


def clip(pts: list[Point], halfplanes: Iterable[Halfplane]) -> list[Point]:
    """Clip a CCW convex vertex cycle by halfplanes ``a . x <= c`` (Sutherland-Hodgman)."""
    for a1, a2, c in halfplanes:
        if not pts:
            break
        out: list[Point] = []
        n = len(pts)
        vals = [a1 * x + a2 * y - c for x, y in pts]
        for i in range(n):
            p, vp = pts[i], vals[i]
            q, vq = pts[(i + 1) % n], vals[(i + 1) % n]
            if vp <= 0:
                out.append(p)
                if vq > 0:
                    t = vp / (vp - vq)
                    out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
            elif vq <= 0:
                t = vp / (vp - vq)
                out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
        pts = out
    return pts


def clip_area(pts: list[Point], halfplanes: Iterable[Halfplane]) -> float:
    res = clip(pts, halfplanes)
    return _shoelace(res) if len(res) >= 3 else 0.0


def polygon_from_clip(res: list[Point], ref_scale: float) -> ConvexPolygon | None:
    """Turn a clipping result into a polygon, or ``None`` when it has no interior."""
    if len(res) < 3:
        return None
    res = _cleanup(res, ref_scale)
    if len(res) < 3 or _shoelace(res) <= COLLINEAR_TOL * ref_scale * ref_scale:
        return None
    return ConvexPolygon._trusted(res)


def intersect(K: ConvexPolygon, L: ConvexPolygon) -> ConvexPolygon | None:
    """``K ∩ L``, or ``None`` when the two are interior-disjoint."""
    scale = max(_scale(K._pts), _scale(L._pts))
    return polygon_from_clip(clip(list(K._pts), L.halfplanes), scale)


def intersection_area(K: ConvexPolygon, L: ConvexPolygon) -> float:
    return clip_area(list(K._pts), L.halfplanes)
