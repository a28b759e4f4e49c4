"""Dense two-phase tableau simplex for the small LPs behind sup-convolutions.

Pivoting follows Bland's rule (lowest eligible column enters, ties in the
ratio test leave by lowest basic index), so runs are deterministic and
cannot cycle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

EPS = 1e-11


class LPError(RuntimeError):
    pass


class InfeasibleLP(LPError):
    pass


class UnboundedLP(LPError):
    pass


@dataclass(frozen=True)
class LPResult:
    value: float
    point: np.ndarray
    pivots: int


def _pivot(T: np.ndarray, r: int, c: int) -> None:
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _bland(T: np.ndarray, basis: list[int], ncols: int, max_pivots: int) -> int:
    """Maximize the objective encoded in the last row of ``T``; returns the pivot count."""
    pivots = 0
    m = T.shape[0] - 1
    while True:
        obj = T[-1, :ncols]
        entering = np.flatnonzero(obj < -EPS)
        if entering.size == 0:
            return pivots
        j = int(entering[0])
        col = T[:m, j]
        best_r, best_ratio = -1, np.inf
        for i in range(m):
            if col[i] > EPS:
                ratio = T[i, -1] / col[i]
                if ratio < best_ratio - EPS or (
                    abs(ratio - best_ratio) <= EPS and basis[i] < basis[best_r]
                ):
                    best_r, best_ratio = i, ratio
        if best_r < 0:
            raise UnboundedLP("objective is unbounded above")
        _pivot(T, best_r, j)
        basis[best_r] = j
        pivots += 1
        if pivots > max_pivots:
            raise LPError("pivot budget exhausted")


def lp_maximize(
    c: Sequence[float],
    A_ub: Sequence[Sequence[float]],
    b_ub: Sequence[float],
    lower: Sequence[float] | None = None,
) -> LPResult:
    """Maximize ``c . x`` subject to ``A_ub x <= b_ub`` and ``x >= lower`` (default 0).

    Free variables are handled by passing a finite ``lower`` that is known to
    be inactive (for example a bounding-box corner).
    """
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A_ub, dtype=float))
    b = np.asarray(b_ub, dtype=float)
    n = c.size
    if A.shape != (b.size, n):
        raise ValueError("constraint matrix shape does not match c and b_ub")
    lo = np.zeros(n) if lower is None else np.asarray(lower, dtype=float)
    b = b - A @ lo
    m = b.size

    neg = b < 0
    n_art = int(neg.sum())
    N = n + m + n_art
    T = np.zeros((m + 1, N + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    T[:m][neg] *= -1.0
    basis = list(range(n, n + m))
    art_rows = np.flatnonzero(neg)
    for k, i in enumerate(art_rows):
        T[i, n + m + k] = 1.0
        basis[i] = n + m + k
    max_pivots = 50 * (m + N) + 100
    pivots = 0

    if n_art:
        # phase 1: maximize -(sum of artificials)
        T[-1, n + m : N] = 1.0
        for i in art_rows:
            T[-1] -= T[i]
        pivots += _bland(T, basis, N, max_pivots)
        if T[-1, -1] < -1e-9 * max(1.0, np.abs(b).max()):
            raise InfeasibleLP("constraints admit no feasible point")
        for i in range(m):
            if basis[i] >= n + m:
                row = T[i, : n + m]
                nz = np.flatnonzero(np.abs(row) > EPS)
                if nz.size:
                    _pivot(T, i, int(nz[0]))
                    basis[i] = int(nz[0])
        keep = [i for i in range(m) if basis[i] < n + m]
        T = np.vstack([T[keep][:, list(range(n + m)) + [N]], np.zeros((1, n + m + 1))])
        basis = [basis[i] for i in keep]
        m = len(keep)
    else:
        T = np.delete(T, np.s_[n + m : N], axis=1)

    T[-1, :] = 0.0
    T[-1, :n] = -c
    for i, j in enumerate(basis):
        if T[-1, j] != 0.0:
            T[-1] -= T[-1, j] * T[i]
    pivots += _bland(T, basis, n + m, max_pivots)

    y = np.zeros(n + m)
    for i, j in enumerate(basis):
        y[j] = T[i, -1]
    x = y[:n] + lo
    return LPResult(float(c @ x), x, pivots)
