"""Classical Che approximation for a static Zipf catalogue (IRM traffic).

Content ``m`` (rank 1 = most popular) is requested at rate
``total_rate * p_m`` with ``p_m = m**-alpha / sum_i i**-alpha``. Sums over
catalogues larger than ``EXACT_TERMS`` are split into an exact head and an
Euler-Maclaurin tail.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import _quadrature
from ._validation import check_cache_sizes
from .errors import DomainError

__all__ = [
    "ZipfCatalog",
    "zipf_sum",
    "stationary_occupancy",
    "solve_stationary_tc",
    "stationary_hit_probability",
    "StationaryCheModel",
]

EXACT_TERMS = 100_000


def zipf_sum(f, fprime, M, exact_terms=EXACT_TERMS):
    """``sum_{m=1}^M f(m)`` for smooth, vectorised ``f`` with derivative ``fprime``.

    The head ``m <= exact_terms`` is summed directly; the tail uses
    Euler-Maclaurin with the first derivative correction, the integral being
    taken in ``log m``.
    """
    M = int(M)
    n0 = min(M, exact_terms)
    head = math.fsum(f(np.arange(1, n0 + 1, dtype=float)))
    if M == n0:
        return head
    a, b = float(n0 + 1), float(M)
    ua, ub = math.log(a), math.log(b)

    def g(u):
        x = np.exp(u)
        return f(x) * x

    integral, _ = _quadrature.integrate(g, np.linspace(ua, ub, 33), atol=0.0, rtol=1e-13)
    ends = f(np.array([a, b]))
    slopes = fprime(np.array([a, b]))
    tail = integral + 0.5 * (ends[0] + ends[1]) + (slopes[1] - slopes[0]) / 12.0
    return head + tail


@dataclass(frozen=True)
class ZipfCatalog:
    catalog_size: int
    alpha: float
    total_rate: float = 1.0

    def __post_init__(self):
        if int(self.catalog_size) != self.catalog_size or self.catalog_size < 1:
            raise DomainError(f"catalogue size must be a positive integer, got {self.catalog_size!r}")
        object.__setattr__(self, "catalog_size", int(self.catalog_size))
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise DomainError(f"Zipf exponent must be positive, got {self.alpha!r}")
        if not (self.total_rate > 0 and math.isfinite(self.total_rate)):
            raise DomainError(f"total rate must be positive, got {self.total_rate!r}")

    @property
    def normaliser(self):
        """``H(M) = 1 / sum_i i**-alpha``."""
        a = self.alpha
        return 1.0 / zipf_sum(lambda m: m ** -a, lambda m: -a * m ** (-a - 1), self.catalog_size)

    def probabilities(self):
        m = np.arange(1, self.catalog_size + 1, dtype=float)
        w = m ** -self.alpha
        return w / w.sum()

    def rates(self):
        return self.total_rate * self.probabilities()

    def to_dict(self):
        return {"M": self.catalog_size, "alpha": self.alpha, "total_rate": self.total_rate}


def _rate_scale(cat, tc):
    # lambda_m tc = c m^-alpha
    return cat.total_rate * cat.normaliser * tc


def stationary_occupancy(cat, tc):
    """``sum_m 1 - exp(-lambda_m tc)``: expected number of cached contents."""
    if tc < 0:
        raise DomainError("eviction time must be non-negative")
    if math.isinf(tc):
        return float(cat.catalog_size)
    c, a = _rate_scale(cat, tc), cat.alpha

    def f(m):
        return -np.expm1(-c * m ** -a)

    def fp(m):
        return -np.exp(-c * m ** -a) * c * a * m ** (-a - 1)

    return zipf_sum(f, fp, cat.catalog_size)


def solve_stationary_tc(cat, C):
    """Eviction time (days) at which the expected occupancy is ``C``.

    ``C`` may be real; ``C == M`` returns ``math.inf`` (everything cached).
    """
    M = cat.catalog_size
    if not C > 0:
        raise DomainError(f"cache size must be positive, got {C!r}")
    if C > M:
        raise DomainError(f"cache size {C} exceeds catalogue size {M}")
    if C == M:
        return math.inf
    # 1 - e^{-x} <= x gives occupancy <= total_rate * tc
    lo = C / cat.total_rate
    hi = 2.0 * lo
    while stationary_occupancy(cat, hi) < C:
        lo, hi = hi, 2.0 * hi
    return brentq(lambda t: stationary_occupancy(cat, t) - C, lo, hi, xtol=1e-15 * lo,
                  rtol=1e-14, maxiter=300)


def stationary_hit_probability(cat, tc):
    """``sum_m p_m (1 - exp(-lambda_m tc))``."""
    if tc < 0:
        raise DomainError("eviction time must be non-negative")
    if math.isinf(tc):
        return 1.0
    H = cat.normaliser
    c, a = cat.total_rate * H * tc, cat.alpha

    def f(m):
        return m ** -a * -np.expm1(-c * m ** -a)

    def fp(m):
        e = np.exp(-c * m ** -a)
        return -a * m ** (-a - 1) * (1.0 - e) - m ** -a * e * c * a * m ** (-a - 1)

    return H * zipf_sum(f, fp, cat.catalog_size)


class StationaryCheModel(BaseEstimator):
    """Estimator wrapper around the stationary approximation."""

    def __init__(self, catalog=None):
        self.catalog = catalog

    def fit(self, X=None, y=None):
        if not isinstance(self.catalog, ZipfCatalog):
            raise DomainError("catalog must be a ZipfCatalog")
        self.normaliser_ = self.catalog.normaliser
        return self

    def eviction_time(self, X):
        check_is_fitted(self, "normaliser_")
        return np.array([solve_stationary_tc(self.catalog, c) for c in check_cache_sizes(X)])

    def predict(self, X):
        check_is_fitted(self, "normaliser_")
        return np.array([stationary_hit_probability(self.catalog, tc) for tc in self.eviction_time(X)])
