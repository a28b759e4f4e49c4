"""Weighted power means of two numbers and the explicit stability constants.

``p_mean(a, b, lam, q)`` is the ``lam``-weighted ``q``-mean.  The order ``q``
is an ordinary float where ``math.inf`` and ``-math.inf`` select the max/min
branches; they are dispatched on before any exponent arithmetic happens.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any

#: Below this magnitude a finite order is evaluated with the geometric-mean branch.
TINY_ORDER = 1e-12
#: Default relative slack for inequality checks.
REL_TOL = 1e-12


def _check_unit_interval(lam: float) -> None:
    if not (0.0 < lam < 1.0):
        raise ValueError(f"lambda must lie in (0, 1), got {lam!r}")


def p_mean(a: float, b: float, lam: float, q: float) -> float:
    """Return ``M_q(a, b; lam)``.

    Conventions: ``q = +inf`` gives ``max(a, b)``, ``q = -inf`` gives
    ``min(a, b)`` (both regardless of zeros), ``q = 0`` gives
    ``a**(1-lam) * b**lam`` and any other finite ``q`` gives 0 as soon as
    ``a * b == 0``.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("p_mean needs finite arguments")
    if a < 0 or b < 0:
        raise ValueError("p_mean needs nonnegative arguments")
    _check_unit_interval(lam)
    if math.isnan(q):
        raise ValueError("mean order is NaN")
    if q == math.inf:
        return max(a, b)
    if q == -math.inf:
        return min(a, b)
    if a == 0.0 or b == 0.0:
        return 0.0
    if a == b:
        return a
    if abs(q) < TINY_ORDER:
        return math.exp((1.0 - lam) * math.log(a) + lam * math.log(b))
    # scale by the dominant entry so large |q| cannot overflow
    ref = max(a, b) if q > 0 else min(a, b)
    # expm1/log1p keep full precision when q is small and the inner sum is near 1
    lr = math.log(ref)
    la, lb = math.log(a) - lr, math.log(b) - lr
    inner_m1 = (1.0 - lam) * math.expm1(q * la) + lam * math.expm1(q * lb)
    return ref * math.exp(math.log1p(inner_m1) / q)


def bbl_order(p: float, n: int = 2) -> float:
    """Order ``p / (n p + 1)`` of the mean on the right of the BBL inequality."""
    if p == math.inf:
        return 1.0 / n
    if p == -1.0 / n:
        return -math.inf
    return p / (n * p + 1.0)


@dataclass(frozen=True)
class ProductCheck:
    lhs: float
    rhs: float
    holds: bool


def mean_product_check(
    a: float, b: float, c: float, d: float, lam: float, p: float, q: float
) -> ProductCheck:
    """Check ``M_p(a,b) M_q(c,d) >= M_s(ac, bd)`` with ``s = pq/(p+q)``."""
    if p == 0 and q == 0:
        s = 0.0
    elif p + q > 0:
        s = p * q / (p + q)
    else:
        raise ValueError("mean_product_check needs p + q > 0 or p = q = 0")
    lhs = p_mean(a, b, lam, p) * p_mean(c, d, lam, q)
    rhs = p_mean(a * c, b * d, lam, s)
    return ProductCheck(lhs, rhs, lhs >= rhs - REL_TOL * max(1.0, lhs))


def _check_dim(n: int) -> None:
    if int(n) != n or n < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {n!r}")


def gamma_n(n: int) -> float:
    """Groemer's dimensional factor; always below ``6.00025 n``."""
    _check_dim(n)
    value = (
        (1.0 + 1.0 / (3.0 * 2.0**13))
        * 3.0 ** ((n - 1) / n)
        * 2.0 ** ((n + 2) / (n + 1))
        * n
    )
    assert value < 6.00025 * n
    return value


def theta_n_bound(n: int) -> float:
    """Upper bound ``362 n^7 / (2 - 2^((n-1)/n))^(3/2)`` for the FMP constant."""
    _check_dim(n)
    return 362.0 * n**7 / (2.0 - 2.0 ** ((n - 1) / n)) ** 1.5


def _positive(**values: float) -> None:
    for name, v in values.items():
        if not (math.isfinite(v) and v > 0):
            raise ValueError(f"{name} must be finite and > 0, got {v!r}")


def _body_ratios(n, vol0, vol1, diam0, diam1):
    nu0, nu1 = vol0 ** (1.0 / n), vol1 ** (1.0 / n)
    d_tilde = max(diam0 / nu0, diam1 / nu1)
    return nu0, nu1, d_tilde, max(nu0, nu1), min(nu0, nu1)


def _groemer_base(n, lam, vol0, vol1, diam0, diam1) -> float:
    _, _, d_tilde, big, small = _body_ratios(n, vol0, vol1, diam0, diam1)
    return gamma_n(n) * (big / small / math.sqrt(lam * (1.0 - lam)) + 2.0) * d_tilde


def groemer_coefficient(
    n: int, lam: float, vol0: float, vol1: float, diam0: float, diam1: float
) -> float:
    """Coefficient ``omega`` in Groemer's stability estimate for Brunn-Minkowski."""
    _check_dim(n)
    _check_unit_interval(lam)
    _positive(vol0=vol0, vol1=vol1, diam0=diam0, diam1=diam1)
    return _groemer_base(n, lam, vol0, vol1, diam0, diam1) ** (-(n + 1))


def fmp_coefficient(n: int, lam: float, vol0: float, vol1: float) -> float:
    """Coefficient ``n m / (Lambda M theta_n^2)`` multiplying ``A^2`` in the FMP bound."""
    _check_dim(n)
    _check_unit_interval(lam)
    _positive(vol0=vol0, vol1=vol1)
    nu0, nu1 = vol0 ** (1.0 / n), vol1 ** (1.0 / n)
    big_lam = max(lam / (1.0 - lam), (1.0 - lam) / lam)
    return n * min(nu0, nu1) / (big_lam * max(nu0, nu1)) / theta_n_bound(n) ** 2


@dataclass(frozen=True)
class ConstantsBundle:
    """Explicit constants of the quantitative BBL statements.

    ``provenance`` holds the keyword arguments of :func:`bbl_constants`, so
    ``bbl_constants(**bundle.provenance) == bundle``.
    """

    beta: float
    delta: float
    eta: float
    omega_groemer: float
    gamma_n: float
    theta_n: float
    b_threshold: float
    h0_max: float
    a_max: float
    provenance: dict[str, Any] = field(default_factory=dict, compare=True)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def bbl_constants(
    n: int,
    p: float,
    lam: float,
    vol0: float,
    vol1: float,
    diam0: float,
    diam1: float,
    I0: float,
    I1: float,
) -> ConstantsBundle:
    """Evaluate beta, delta, eta, omega, the threshold B and the smallness radii."""
    _check_dim(n)
    _check_unit_interval(lam)
    _positive(p=p, vol0=vol0, vol1=vol1, diam0=diam0, diam1=diam1, I0=I0, I1=I1)
    e = (p + 1.0) / p
    _, _, _, big, small = _body_ratios(n, vol0, vol1, diam0, diam1)
    mean_I = p_mean(I0, I1, lam, bbl_order(p, n))
    base = _groemer_base(n, lam, vol0, vol1, diam0, diam1)

    # logs keep the smallness radii finite when beta or delta underflow
    big_lam = max(lam / (1.0 - lam), (1.0 - lam) / lam)
    log_beta = -e * (n + 1) * math.log(base) - e * math.log(2.0 * (n + 1.0 / mean_I))
    log_delta = e * (
        math.log(small)
        + 3.0 * math.log(1.0 - 2.0 ** (-1.0 / n))
        - math.log(181.0**2 * n**13 * big_lam * big * (n + 1.0 / mean_I))
    )
    return ConstantsBundle(
        beta=math.exp(log_beta),
        delta=math.exp(log_delta),
        eta=2.0 * (n + 1.0 / mean_I),
        omega_groemer=base ** (-(n + 1)),
        gamma_n=gamma_n(n),
        theta_n=theta_n_bound(n),
        b_threshold=(1.0 / (2.0 * n)) ** e,
        h0_max=math.exp(
            -math.log(2.0 * n) / (n + 1) - p / ((n + 1) * (p + 1)) * log_beta
        ),
        a_max=math.exp(-0.5 * math.log(2.0 * n) - p / (2.0 * (p + 1)) * log_delta),
        provenance=dict(
            n=n, p=p, lam=lam, vol0=vol0, vol1=vol1,
            diam0=diam0, diam1=diam1, I0=I0, I1=I1,
        ),
    )


@dataclass(frozen=True)
class UrysohnConstants:
    mu: float
    nu: float


def urysohn_constants(n: int, tau: float, diam: float) -> UrysohnConstants:
    """Constants ``mu`` (Hausdorff form) and ``nu`` (asymmetry form) of quantitative Urysohn."""
    _check_dim(n)
    _positive(tau=tau, diam=diam)
    mu = tau**2 * (
        2.0 ** (2 * n + 3) * gamma_n(n) ** (n + 1) * diam ** (n + 1) * (n * tau + 1.0)
    ) ** -3
    nu = (1.0 - 2.0 ** (-1.0 / n)) ** 9 * tau**2 / (
        181.0**2 * float(n) ** 39 * (n * tau + 1.0) ** 3
    )
    return UrysohnConstants(mu, nu)
