"""Compiled inner loops for the translation search in :mod:`bbl_lab.distance`.

``clip_area_shifted`` is the plain O(nm) clipping kept as a reference;
the search uses the O(n + m) ``intersection_area_sorted``.

Written in the numba-compatible subset of Python; when numba is missing the
same functions run interpreted (slowly, but with identical results).
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


@njit(cache=True)
def clip_area_shifted(px, py, a1, a2, c, dx, dy):
    """Area of polygon ``(px, py)`` clipped by halfplanes ``a . x <= c + a . (dx, dy)``."""
    cap = px.shape[0] + a1.shape[0] + 4
    bx = np.empty(cap)
    by = np.empty(cap)
    ox = np.empty(cap)
    oy = np.empty(cap)
    n = px.shape[0]
    for i in range(n):
        bx[i] = px[i]
        by[i] = py[i]
    for k in range(a1.shape[0]):
        if n == 0:
            break
        ak1 = a1[k]
        ak2 = a2[k]
        ck = c[k] + ak1 * dx + ak2 * dy
        m = 0
        for i in range(n):
            j = i + 1 if i + 1 < n else 0
            vp = ak1 * bx[i] + ak2 * by[i] - ck
            vq = ak1 * bx[j] + ak2 * by[j] - ck
            if vp <= 0.0:
                ox[m] = bx[i]
                oy[m] = by[i]
                m += 1
                if vq > 0.0:
                    t = vp / (vp - vq)
                    ox[m] = bx[i] + t * (bx[j] - bx[i])
                    oy[m] = by[i] + t * (by[j] - by[i])
                    m += 1
            elif vq <= 0.0:
                t = vp / (vp - vq)
                ox[m] = bx[i] + t * (bx[j] - bx[i])
                oy[m] = by[i] + t * (by[j] - by[i])
                m += 1
        n = m
        for i in range(n):
            bx[i] = ox[i]
            by[i] = oy[i]
    if n < 3:
        return 0.0
    s = 0.0
    for i in range(n):
        j = i + 1 if i + 1 < n else 0
        s += bx[i] * by[j] - bx[j] * by[i]
    return 0.5 * s


@njit(cache=True)
def intersection_area_sorted(a1, a2, c, from_l, dx, dy):
    """Area of the intersection of halfplanes ``a . x <= c`` presorted by edge angle.

    Rows with ``from_l`` set are shifted by ``(dx, dy)``.  Runs the deque
    sweep in ``O(k)``; returns 0 when the intersection has no interior.
    """
    k = a1.shape[0]
    cc = np.empty(k)
    for i in range(k):
        cc[i] = c[i] + (a1[i] * dx + a2[i] * dy if from_l[i] else 0.0)
    dq = np.empty(k, dtype=np.int64)
    px = np.empty(k)
    py = np.empty(k)  # px[j], py[j]: vertex between dq[j] and dq[j+1]
    head = 0
    tail = 0  # dq[head:tail]
    for i in range(k):
        if tail - head >= 1:
            b = dq[tail - 1]
            cr = a1[b] * a2[i] - a2[b] * a1[i]
            if abs(cr) <= 1e-14 and a1[b] * a1[i] + a2[b] * a2[i] > 0:
                # parallel, same orientation: keep the tighter one
                if cc[i] >= cc[b]:
                    continue
                tail -= 1
        while tail - head >= 2 and a1[i] * px[tail - 2] + a2[i] * py[tail - 2] > cc[i]:
            tail -= 1
        while tail - head >= 2 and a1[i] * px[head] + a2[i] * py[head] > cc[i]:
            head += 1
        if tail - head >= 1:
            b = dq[tail - 1]
            det = a1[b] * a2[i] - a2[b] * a1[i]
            if det <= 1e-14:
                return 0.0
            px[tail - 1] = (cc[b] * a2[i] - cc[i] * a2[b]) / det
            py[tail - 1] = (a1[b] * cc[i] - a1[i] * cc[b]) / det
        dq[tail] = i
        tail += 1
    while tail - head >= 3:
        f = dq[head]
        if a1[f] * px[tail - 2] + a2[f] * py[tail - 2] > cc[f]:
            tail -= 1
            continue
        b = dq[tail - 1]
        if a1[b] * px[head] + a2[b] * py[head] > cc[b]:
            head += 1
            continue
        break
    n = tail - head
    if n < 3:
        return 0.0
    b = dq[tail - 1]
    f = dq[head]
    det = a1[b] * a2[f] - a2[b] * a1[f]
    if det <= 1e-14:
        return 0.0
    px[tail - 1] = (cc[b] * a2[f] - cc[f] * a2[b]) / det
    py[tail - 1] = (a1[b] * cc[f] - a1[f] * cc[b]) / det
    s = 0.0
    for j in range(head, tail):
        jn = j + 1 if j + 1 < tail else head
        s += px[j] * py[jn] - px[jn] * py[j]
    s *= 0.5
    return s if s > 0.0 else 0.0


@njit(cache=True)
def _asym(a1, a2, c, from_l, area_k, x, y):
    v = 2.0 - 2.0 * intersection_area_sorted(a1, a2, c, from_l, x, y) / area_k
    return v if v > 0.0 else 0.0


@njit(cache=True)
def nelder_mead_asymmetry(a1, a2, c, from_l, area_k, x0, y0, step, xatol, fatol, maxfev):
    """Nelder-Mead on the translation ``(x, y)`` minimizing the normalized symmetric difference.

    Returns ``(value, x, y, nfev, converged)``.  Standard coefficients
    (reflection 1, expansion 2, contraction 1/2, shrink 1/2) and the
    termination rule ``max |x_i - x_0| <= xatol and max |f_i - f_0| <= fatol``.
    """
    sx = np.array([x0, x0 + step, x0])
    sy = np.array([y0, y0, y0 + step])
    f = np.empty(3)
    for i in range(3):
        f[i] = _asym(a1, a2, c, from_l, area_k, sx[i], sy[i])
    nfev = 3
    converged = False
    while nfev < maxfev:
        # sort the three vertices by value
        for i in range(1, 3):
            j = i
            while j > 0 and f[j] < f[j - 1]:
                f[j], f[j - 1] = f[j - 1], f[j]
                sx[j], sx[j - 1] = sx[j - 1], sx[j]
                sy[j], sy[j - 1] = sy[j - 1], sy[j]
                j -= 1
        dxm = max(abs(sx[1] - sx[0]), abs(sx[2] - sx[0]), abs(sy[1] - sy[0]), abs(sy[2] - sy[0]))
        dfm = max(abs(f[1] - f[0]), abs(f[2] - f[0]))
        if dxm <= xatol and dfm <= fatol:
            converged = True
            break
        cx = 0.5 * (sx[0] + sx[1])
        cy = 0.5 * (sy[0] + sy[1])
        rx = 2.0 * cx - sx[2]
        ry = 2.0 * cy - sy[2]
        fr = _asym(a1, a2, c, from_l, area_k, rx, ry)
        nfev += 1
        shrink = False
        if fr < f[0]:
            ex = 3.0 * cx - 2.0 * sx[2]
            ey = 3.0 * cy - 2.0 * sy[2]
            fe = _asym(a1, a2, c, from_l, area_k, ex, ey)
            nfev += 1
            if fe < fr:
                sx[2], sy[2], f[2] = ex, ey, fe
            else:
                sx[2], sy[2], f[2] = rx, ry, fr
        elif fr < f[1]:
            sx[2], sy[2], f[2] = rx, ry, fr
        elif fr < f[2]:
            # outside contraction
            kx = 1.5 * cx - 0.5 * sx[2]
            ky = 1.5 * cy - 0.5 * sy[2]
            fk = _asym(a1, a2, c, from_l, area_k, kx, ky)
            nfev += 1
            if fk <= fr:
                sx[2], sy[2], f[2] = kx, ky, fk
            else:
                shrink = True
        else:
            # inside contraction
            kx = 0.5 * cx + 0.5 * sx[2]
            ky = 0.5 * cy + 0.5 * sy[2]
            fk = _asym(a1, a2, c, from_l, area_k, kx, ky)
            nfev += 1
            if fk < f[2]:
                sx[2], sy[2], f[2] = kx, ky, fk
            else:
                shrink = True
        if shrink:
            for i in range(1, 3):
                sx[i] = sx[0] + 0.5 * (sx[i] - sx[0])
                sy[i] = sy[0] + 0.5 * (sy[i] - sy[0])
                f[i] = _asym(a1, a2, c, from_l, area_k, sx[i], sy[i])
                nfev += 1
    best = 0
    for i in range(1, 3):
        if f[i] < f[best]:
            best = i
    return f[best], sx[best], sy[best], nfev, converged
