"""Rank probabilities and order-statistic densities of i.i.d. samples.

All functions take the CDF value ``H(v)`` (and density ``h(v)``) rather than
``v`` itself, so they serve every mixture in the package.  Inputs broadcast
like numpy ufuncs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, gammaln

from .errors import DomainError

__all__ = [
    "OrderStatQuery",
    "binom_coeff",
    "win_prob",
    "orderstat_pdf",
    "orderstat_cdf",
    "orderstat_cdf_sum",
    "psi_kernel",
    "orderstat_identities_check",
]


@dataclass(frozen=True)
class OrderStatQuery:
    """Rank ``j`` (1 = highest) among ``n`` samples."""

    n: int
    j: int

    def __post_init__(self):
        if self.n < 1 or not 1 <= self.j <= self.n:
            raise DomainError(f"need 1 <= j <= n, got n={self.n}, j={self.j}")


def binom_coeff(n: int, k: int) -> float:
    """``C(n, k)`` as a float; via log-gamma above n = 30."""
    if k < 0 or k > n:
        return 0.0
    if n <= 30:
        return float(math.comb(n, k))
    return float(np.exp(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)))


def _prob(x, name="H"):
    x = np.asarray(x, dtype=float)
    if np.any(~((x >= 0.0) & (x <= 1.0))):
        raise DomainError(f"{name} must lie in [0, 1]")
    return x


def _out(x, *like):
    return float(x) if all(np.ndim(a) == 0 for a in like) else x


def win_prob(q: OrderStatQuery, H):
    """Probability that a value with CDF level ``H`` ranks ``j``-th among ``n`` draws."""
    x = _prob(H)
    n, j = q.n, q.j
    val = binom_coeff(n - 1, j - 1) * x ** (n - j) * (1.0 - x) ** (j - 1)
    return _out(val, H)


def orderstat_pdf(q: OrderStatQuery, H, h):
    """Density of the ``j``-th highest of ``n`` i.i.d. draws."""
    x = _prob(H)
    hv = np.asarray(h, dtype=float)
    if np.any(hv < 0):
        raise DomainError("density must be nonnegative")
    n, j = q.n, q.j
    val = n * binom_coeff(n - 1, j - 1) * x ** (n - j) * (1.0 - x) ** (j - 1) * hv
    return _out(val, H, h)


def orderstat_cdf(q: OrderStatQuery, H):
    """CDF of the ``j``-th highest of ``n`` draws: regularised incomplete beta ``I_H(n+1-j, j)``."""
    x = _prob(H)
    return _out(betainc(q.n + 1 - q.j, q.j, x), H)


def orderstat_cdf_sum(q: OrderStatQuery, H):
    """Same CDF as :func:`orderstat_cdf` written as a binomial tail sum."""
    x = _prob(H)
    n = q.n
    total = sum(binom_coeff(n, l) * x ** (n - l) * (1.0 - x) ** l for l in range(q.j))
    return _out(total + 0.0 * x, H)


def psi_kernel(j: int, n: int, x):
    """Derivative of the rank probability ``C(n-1, j-1) x^(n-j) (1-x)^(j-1)`` in ``x``.

    The end ranks are written in closed form so no ``0/0`` appears at x = 0 or 1.
    """
    if n < 2 or not 1 <= j <= n:
        raise DomainError(f"psi_kernel needs n >= 2 and 1 <= j <= n, got n={n}, j={j}")
    t = _prob(x, "x")
    if j == 1:
        val = (n - 1) * t ** (n - 2)
    elif j == n:
        val = -(n - 1) * (1.0 - t) ** (n - 2)
    else:
        val = binom_coeff(n - 1, j - 1) * t ** (n - j - 1) * (1.0 - t) ** (j - 2) * ((n - j) - (n - 1) * t)
    return _out(val, x)


def orderstat_identities_check(q: OrderStatQuery, H, h):
    """Residuals of the two recurrences linking ``n - 1`` and ``n`` sample densities:

    ``H f_{n-1,j} = (n-j)/n f_{n,j}`` and ``(1-H) f_{n-1,j} = j/n f_{n,j+1}``.
    """
    n, j = q.n, q.j
    if j > n - 1:
        raise DomainError("identities need j <= n - 1")
    prev = orderstat_pdf(OrderStatQuery(n - 1, j), H, h)
    r1 = np.abs(np.asarray(H) * prev - (n - j) / n * orderstat_pdf(q, H, h))
    r2 = np.abs((1.0 - np.asarray(H)) * prev - j / n * orderstat_pdf(OrderStatQuery(n, j + 1), H, h))
    return _out(r1, H, h), _out(r2, H, h)
