"""Distances between convex bodies: Hausdorff, normalized Hausdorff ``H0`` and
relative asymmetry ``A``, plus the quantitative Brunn-Minkowski checks that
are written in terms of them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels, means
from .polytope2d import ConvexPolygon, intersection_area, minkowski_comb

#: Number of seeded restarts of the translation search (besides centroid alignment).
DEFAULT_RESTARTS = 8
#: Default angle count for the rotation sweep.
DEFAULT_ANGLES = 360


def _point_to_polygon(points: np.ndarray, K: ConvexPolygon) -> np.ndarray:
    """Euclidean distance from each row of ``points`` to the convex polygon ``K``."""
    v = K.vertices
    w = np.roll(v, -1, axis=0)
    e = w - v  # (m, 2)
    rel = points[:, None, :] - v[None, :, :]  # (k, m, 2)
    cross = e[None, :, 0] * rel[..., 1] - e[None, :, 1] * rel[..., 0]
    inside = (cross >= 0).all(axis=1)
    t = np.clip((rel * e[None]).sum(-1) / (e**2).sum(-1)[None], 0.0, 1.0)
    foot = v[None] + t[..., None] * e[None]
    seg = np.sqrt(((points[:, None, :] - foot) ** 2).sum(-1)).min(axis=1)
    return np.where(inside, 0.0, seg)


def directed_hausdorff(K: ConvexPolygon, L: ConvexPolygon) -> float:
    """``max over x in K of dist(x, L)``; attained at a vertex of ``K``."""
    return float(_point_to_polygon(np.asarray(K.vertices), L).max())


def hausdorff(K: ConvexPolygon, L: ConvexPolygon) -> float:
    return max(directed_hausdorff(K, L), directed_hausdorff(L, K))


@dataclass(frozen=True)
class NormalizedPair:
    K0n: ConvexPolygon
    K1n: ConvexPolygon
    scale0: float
    scale1: float
    shift0: tuple[float, float]
    shift1: tuple[float, float]


def normalize_pair(K: ConvexPolygon, L: ConvexPolygon) -> NormalizedPair:
    """Unit-area copies of ``K`` and ``L`` with centroids at the origin."""

    def unit(P: ConvexPolygon):
        s = 1.0 / math.sqrt(P.area)
        cx, cy = P.centroid
        Q = P.transform(s, (-s * cx, -s * cy))
        # recentre on the recomputed centroid
        qx, qy = Q.centroid
        return Q.translate((-qx, -qy)), s, (-s * cx - qx, -s * cy - qy)

    K0n, s0, t0 = unit(K)
    K1n, s1, t1 = unit(L)
    return NormalizedPair(K0n, K1n, s0, s1, t0, t1)


def h0(K: ConvexPolygon, L: ConvexPolygon) -> float:
    """Hausdorff distance between unit-area, centroid-matched homothetic copies."""
    pair = normalize_pair(K, L)
    return hausdorff(pair.K0n, pair.K1n)


def sym_diff_area(K: ConvexPolygon, L: ConvexPolygon) -> float:
    return max(K.area + L.area - 2.0 * intersection_area(K, L), 0.0)


def _sorted_halfplanes(K: ConvexPolygon, L: ConvexPolygon):
    """Edge halfplanes of ``K`` and ``L`` sorted by edge angle, with a flag marking ``L``'s."""
    h = np.vstack([np.array(K.halfplanes), np.array(L.halfplanes)])
    from_l = np.r_[np.zeros(len(K), dtype=bool), np.ones(len(L), dtype=bool)]
    order = np.argsort(np.arctan2(h[:, 0], -h[:, 1]), kind="stable")
    return (
        np.ascontiguousarray(h[order, 0]),
        np.ascontiguousarray(h[order, 1]),
        np.ascontiguousarray(h[order, 2]),
        np.ascontiguousarray(from_l[order]),
    )


def translated_intersection_area(K: ConvexPolygon, L: ConvexPolygon, shift: Sequence[float]) -> float:
    """``|K cap (L + shift)|`` in linear time."""
    a1, a2, c, from_l = _sorted_halfplanes(K, L)
    return float(_kernels.intersection_area_sorted(a1, a2, c, from_l, float(shift[0]), float(shift[1])))


@dataclass(frozen=True)
class Asymmetry:
    a: float
    argmin_shift: tuple[float, float]


def rel_asymmetry(
    K: ConvexPolygon,
    L: ConvexPolygon,
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
) -> Asymmetry:
    """Relative asymmetry ``inf_x |K Δ (x + s L)| / |K|`` with ``s = sqrt(|K|/|L|)``.

    ``argmin_shift`` is the minimizing ``x``.  The search is Nelder-Mead from
    centroid alignment plus ``restarts`` seeded starts in a box of half-width
    ``diameter(K)``.  Starts without any overlap and runs that exhaust their
    evaluation budget are dropped.
    """
    s = math.sqrt(K.area / L.area)
    Ls = L.transform(s)
    kx, ky = K.centroid
    lx, ly = Ls.centroid
    base = (kx - lx, ky - ly)
    area_k = K.area
    a1, a2, c, from_l = _sorted_halfplanes(K, Ls)

    diam = K.diameter
    rng = np.random.default_rng(seed)
    starts = [base] + [
        (base[0] + u, base[1] + v) for u, v in rng.uniform(-diam, diam, size=(restarts, 2))
    ]
    step = 0.05 * diam
    inter = _kernels.intersection_area_sorted(a1, a2, c, from_l, *base)
    best_val, best_x = max(2.0 - 2.0 * inter / area_k, 0.0), base
    for x0, y0 in starts:
        if _kernels.intersection_area_sorted(a1, a2, c, from_l, x0, y0) <= 0.0:
            continue
        val, x, y, _, converged = _kernels.nelder_mead_asymmetry(
            a1, a2, c, from_l, area_k, x0, y0, step, 1e-11 * diam, 1e-14, 20000
        )
        if converged and val < best_val:
            best_val, best_x = float(val), (float(x), float(y))
    return Asymmetry(best_val, best_x)


def rel_asymmetry_rotmax(
    K: ConvexPolygon,
    angle_count: int = DEFAULT_ANGLES,
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
) -> float:
    """``max over rotations rho of A(K, rho K)`` on ``angle_count`` angles in ``[0, pi)``.

    Rotations are about the centroid of ``K``.
    """
    if angle_count < 8:
        raise ValueError("angle_count must be at least 8")
    return max(rotation_profile(K, angle_count, seed, restarts))


def rotation_profile(
    K: ConvexPolygon, angle_count: int, seed: int = 0, restarts: int = DEFAULT_RESTARTS
) -> list[float]:
    """``A(K, rho_k K)`` for the uniformly spaced angles ``k pi / angle_count``."""
    return [
        rel_asymmetry(K, K.rotate(math.pi * k / angle_count), seed, restarts).a
        for k in range(angle_count)
    ]


@dataclass(frozen=True)
class BMCheck:
    area_lambda: float
    mean_area: float
    bm_lhs: float
    bm_rhs: float
    bm_holds: bool
    h0: float
    omega: float
    groemer_rhs: float
    groemer_holds: bool
    asymmetry: float
    fmp_coefficient: float
    fmp_rhs: float
    fmp_holds: bool


def verify_bm(
    K0: ConvexPolygon, K1: ConvexPolygon, lam: float, slack: float = 1e-9, seed: int = 0,
    asymmetry: float | None = None,
) -> BMCheck:
    """Plain Brunn-Minkowski plus the Groemer (``H0``) and FMP (``A``) refinements in the plane."""
    n = 2
    K_lam = minkowski_comb(K0, K1, lam)
    a0, a1, al = K0.area, K1.area, K_lam.area
    lhs = math.sqrt(al)
    rhs = (1.0 - lam) * math.sqrt(a0) + lam * math.sqrt(a1)
    mean_area = means.p_mean(a0, a1, lam, 1.0 / n)
    dist = h0(K0, K1)
    omega = means.groemer_coefficient(n, lam, a0, a1, K0.diameter, K1.diameter)
    groemer_rhs = mean_area * (1.0 + omega * dist ** (n + 1))
    A = rel_asymmetry(K0, K1, seed=seed).a if asymmetry is None else asymmetry
    coef = means.fmp_coefficient(n, lam, a0, a1)
    fmp_rhs = mean_area * (1.0 + coef * A**2)
    scale = max(1.0, al)
    return BMCheck(
        area_lambda=al,
        mean_area=mean_area,
        bm_lhs=lhs,
        bm_rhs=rhs,
        bm_holds=lhs >= rhs - slack * max(1.0, lhs),
        h0=dist,
        omega=omega,
        groemer_rhs=groemer_rhs,
        groemer_holds=al >= groemer_rhs - slack * scale,
        asymmetry=A,
        fmp_coefficient=coef,
        fmp_rhs=fmp_rhs,
        fmp_holds=al >= fmp_rhs - slack * scale,
    )
