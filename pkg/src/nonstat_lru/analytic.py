"""Che-style approximation of LRU under non-stationary popularity.

Contents arrive as a Poisson process of rate ``gamma`` (per day). A content of
class ``k`` born at ``t0`` is requested at rate ``V * profile_k(t - t0)``.
With a deterministic eviction time ``tc``, a content is cached at age ``a``
iff it was requested in ``[a - tc, a]``, whose profile mass is
``W_k(a) = profile_k.window_mass(a, tc)``. Then

    C / gamma = sum_k w_k int_0^inf 1 - phi_k(-W_k(a)) da
    p_hit     = sum_k r_k int_0^inf profile_k(a) (1 - phi_k'(-W_k(a)) / E[V_k]) da

where ``w_k`` are content fractions and ``r_k = w_k E[V_k] / sum_j w_j E[V_j]``
is the fraction of *requests* addressed to class ``k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import _quadrature
from ._validation import check_cache_sizes
from .errors import DomainError, NumericError, RegimeError
from .profiles import PopularityProfile, profile_from_dict
from .volumes import VolumeDistribution, volume_from_dict

__all__ = [
    "ContentClass",
    "TrafficMix",
    "ModelSolution",
    "cache_occupancy",
    "solve_eviction_time",
    "hit_probability",
    "asymptote",
    "small_cache_estimate",
    "occupancy_bounds",
    "tail_gap_bound",
    "solve",
    "solve_curve",
    "NonStationaryCheModel",
]

ATOL = 1e-9
RTOL = 1e-7
# Eviction times beyond this many days are reported as infinite.
TC_CAP = 1e12
# Small-cache estimates above this are outside the regime they approximate.
SMALL_CACHE_LIMIT = 0.1
# Solutions whose hit probability is provably this close to the asymptote
# are flagged as large-cache.
LARGE_CACHE_GAP = 1e-6


@dataclass(frozen=True)
class ContentClass:
    weight: float
    profile: PopularityProfile
    volumes: VolumeDistribution

    def __post_init__(self):
        if not (self.weight > 0 and self.weight <= 1):
            raise DomainError(f"class weight must lie in (0, 1], got {self.weight!r}")

    def to_dict(self):
        return {"weight": self.weight, "profile": self.profile.to_dict(),
                "volume": self.volumes.to_dict()}


@dataclass(frozen=True)
class TrafficMix:
    """Content arrival rate plus weighted content classes."""

    gamma: float
    classes: tuple

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise DomainError(f"gamma must be positive, got {self.gamma!r}")
        if not self.classes:
            raise DomainError("a traffic mix needs at least one class")
        total = math.fsum(c.weight for c in self.classes)
        if abs(total - 1.0) > 1e-9:
            raise DomainError(f"class weights must sum to 1, got {total!r}")

    @classmethod
    def single(cls, gamma, profile, volumes):
        return cls(gamma, (ContentClass(1.0, profile, volumes),))

    @property
    def mean_volume(self):
        return math.fsum(c.weight * c.volumes.mean for c in self.classes)

    @property
    def request_shares(self):
        ev = self.mean_volume
        return tuple(c.weight * c.volumes.mean / ev for c in self.classes)

    @property
    def max_lifetime(self):
        return max(c.profile.lifetime for c in self.classes)

    def with_gamma(self, gamma):
        return TrafficMix(gamma, self.classes)

    def to_dict(self):
        return {"gamma": self.gamma, "classes": [c.to_dict() for c in self.classes]}

    @classmethod
    def from_dict(cls, d):
        classes = [ContentClass(float(c["weight"]), profile_from_dict(c["profile"]),
                                volume_from_dict(c["volume"]))
                   for c in d["classes"]]
        return cls(float(d["gamma"]), classes)


@dataclass
class ModelSolution:
    """Solved model quantities for one cache size."""

    cache_size: float
    eviction_time: float
    p_hit: float
    p_hit_asymptote: float
    tc_lower_bound: float
    tail_gap_bound: float
    occupancy_upper: float
    occupancy_lower: Optional[float]
    small_cache_estimate: Optional[float] = None
    quadrature_error_estimate: float = 0.0
    large_cache: bool = False
    error: Optional[str] = None

    def bounds_ok(self, slack=1e-9):
        """Check the occupancy sandwich and asymptote gap at this point."""
        if self.error is not None:
            return False
        C, tc = self.cache_size, self.eviction_time
        tol = slack + self.quadrature_error_estimate
        ok = self.tc_lower_bound <= tc * (1 + 1e-12)
        if math.isfinite(tc):
            ok &= C <= self.occupancy_upper * (1 + 1e-9) + tol
            if self.occupancy_lower is not None:
                ok &= self.occupancy_lower <= C * (1 + 1e-9) + tol
        ok &= self.p_hit <= self.p_hit_asymptote + tol
        ok &= self.p_hit_asymptote - self.p_hit <= self.tail_gap_bound + tol
        return bool(ok)


# --- per-class integrals ---------------------------------------------------

def _breakpoints(profile, tc, end):
    pts = [0.0, end]
    edges = list(profile.kinks)
    if math.isfinite(profile.support_end):
        edges.append(profile.support_end)
    else:
        # geometric seeds so a long unbounded range starts out resolved
        L = profile.lifetime
        edges.extend(L * 2.0 ** np.arange(-8, 64) )
    pts.extend(edges)
    if tc > 0:
        pts.append(tc)
        pts.extend(e + tc for e in edges)
    pts = np.asarray(pts, dtype=float)
    return pts[(pts >= 0) & (pts <= end)]


def _class_range(profile, tc):
    return tc + profile.truncation_horizon()


def _occupancy_class(cls, tc, atol, rtol):
    prof, vol = cls.profile, cls.volumes
    end = _class_range(prof, tc)

    def f(a):
        return vol._mgf_complement(-prof.window_mass(a, tc))

    val, err = _quadrature.integrate(f, _breakpoints(prof, tc, end), atol, rtol)
    if not math.isfinite(prof.support_end):
        # beyond ``end`` the window mass is tiny and 1 - phi(-W) ~ E[V] W,
        # whose integral is exact: int_end^inf W = int_{end-tc}^{end} sf
        tail = vol.mean * prof.sf_window_integral(end - tc, tc)
        w_end = prof.window_mass(end, tc)
        ratio = vol.second_moment / (2.0 * vol.mean) * w_end
        val += tail
        err += tail * min(1.0, ratio)
    return val, err


def _hit_class(cls, tc, atol, rtol):
    prof, vol = cls.profile, cls.volumes
    end = _class_range(prof, tc)
    ev = vol.mean

    def f(a):
        return prof.density(a) * vol._biased_mgf_complement(-prof.window_mass(a, tc))

    val, err = _quadrature.integrate(f, _breakpoints(prof, tc, end), atol, rtol)
    if not math.isfinite(prof.support_end):
        sf_end = prof.sf(end)
        ratio = vol.second_moment / ev * prof.window_mass(end, tc)
        err += sf_end * min(1.0, ratio)
    return val, err


def _sq_window_class(cls, tc, atol, rtol):
    prof = cls.profile
    end = _class_range(prof, tc)

    def f(a):
        return prof.window_mass(a, tc) ** 2

    # the integral is O(tc^2); a fixed absolute tolerance would swamp it
    val, err = _quadrature.integrate(f, _breakpoints(prof, tc, end), atol * tc * tc, rtol)
    if not math.isfinite(prof.support_end):
        # W^2 <= W(end) W on the (decreasing) tail; added so the bound stays valid
        val += prof.window_mass(end, tc) * prof.sf_window_integral(end - tc, tc)
    return val, err


def _check_tc(tc, allow_zero=True):
    if math.isnan(tc) or tc < 0 or (tc == 0 and not allow_zero):
        raise DomainError(f"eviction time must be {'non-negative' if allow_zero else 'positive'}, got {tc!r}")


# --- public operations -----------------------------------------------------

def _occupancy_with_error(mix, tc, atol=ATOL, rtol=RTOL):
    _check_tc(tc)
    if tc == 0:
        return 0.0, 0.0
    if math.isinf(tc):
        return math.inf, 0.0
    val = err = 0.0
    for cls in mix.classes:
        v, e = _occupancy_class(cls, tc, atol, rtol)
        val += cls.weight * v
        err += cls.weight * e
    return mix.gamma * val, mix.gamma * err


def cache_occupancy(mix, tc, atol=ATOL, rtol=RTOL):
    """Expected number of cached contents for eviction time ``tc`` (days)."""
    return _occupancy_with_error(mix, tc, atol, rtol)[0]


def solve_eviction_time(mix, C, atol=ATOL, rtol=RTOL):
    """Eviction time ``tc`` (days) at which the expected occupancy equals ``C``.

    The occupancy is strictly increasing in ``tc`` and never exceeds
    ``gamma E[V] tc``, so ``C / (gamma E[V])`` brackets the root from below;
    the upper end is found by doubling. Returns ``math.inf`` if no root exists
    below ``TC_CAP`` days.
    """
    if not (C > 0 and math.isfinite(C)):
        raise DomainError(f"cache size must be positive and finite, got {C!r}")

    def excess(tc):
        return cache_occupancy(mix, tc, atol, rtol) - C

    lo = C / (mix.gamma * mix.mean_volume)
    if excess(lo) >= 0:
        return lo
    hi = 2.0 * lo
    while excess(hi) < 0:
        lo, hi = hi, 2.0 * hi
        if hi > TC_CAP:
            return math.inf
    tc = brentq(excess, lo, hi, xtol=1e-14 * lo, rtol=1e-13, maxiter=300)
    resid = abs(excess(tc))
    if resid > max(1e-6 * C, 1e-9):
        raise NumericError(f"eviction-time residual {resid:.3g} exceeds tolerance",
                           partial=tc, error=resid)
    return tc


def _hit_with_error(mix, tc, atol=ATOL, rtol=RTOL):
    _check_tc(tc)
    if math.isinf(tc):
        return asymptote(mix), 0.0
    if tc == 0:
        return 0.0, 0.0
    val = err = 0.0
    for share, cls in zip(mix.request_shares, mix.classes):
        v, e = _hit_class(cls, tc, atol, rtol)
        val += share * v
        err += share * e
    return min(max(val, 0.0), 1.0), err


def hit_probability(mix, tc, atol=ATOL, rtol=RTOL):
    """Probability that a request finds its content cached, given ``tc``."""
    return _hit_with_error(mix, tc, atol, rtol)[0]


def asymptote(mix):
    """Large-cache limit of the hit probability.

    Per class only first requests miss, giving ``1 - (1 - phi(-1)) / E[V]``;
    classes combine by request share. Independent of the profiles.
    """
    total = 0.0
    for share, cls in zip(mix.request_shares, mix.classes):
        vol = cls.volumes
        total += share * (1.0 - vol.mgf_complement(-1.0) / vol.mean)
    return total


def small_cache_estimate(mix, C):
    """Closed-form hit probability for small caches.

    Uses ``C ~ gamma E[V] tc`` and the first-order expansion of the MGF
    derivative. Raises :class:`RegimeError` when any class has an infinite
    second volume moment.
    """
    if C < 0:
        raise DomainError("cache size must be non-negative")
    acc = 0.0
    for cls in mix.classes:
        m2 = cls.volumes.second_moment
        if not math.isfinite(m2):
            raise RegimeError("small-cache estimate needs a finite second volume moment")
        acc += cls.weight * m2 * cls.profile.sq_integral
    return acc * C / (mix.gamma * mix.mean_volume ** 2)


def occupancy_bounds(mix, tc, atol=ATOL, rtol=RTOL):
    """Upper and lower bounds on the occupancy at ``tc``.

    ``upper = gamma E[V] tc``; ``lower`` subtracts the second-order term and
    is ``None`` when a class has infinite second volume moment.
    """
    _check_tc(tc)
    upper = mix.gamma * mix.mean_volume * tc
    if tc == 0:
        return 0.0, 0.0
    if any(not math.isfinite(c.volumes.second_moment) for c in mix.classes):
        return upper, None
    correction = 0.0
    for cls in mix.classes:
        sq, _ = _sq_window_class(cls, tc, atol, rtol)
        correction += cls.weight * cls.volumes.second_moment / 2.0 * sq
    return upper, upper - mix.gamma * correction


def tail_gap_bound(mix, tc):
    """Upper bound on ``asymptote(mix) - hit_probability(mix, tc)``."""
    _check_tc(tc)
    if math.isinf(tc):
        return 0.0
    return float(sum(share * cls.profile.sf(tc)
                     for share, cls in zip(mix.request_shares, mix.classes)))


def solve(mix, C, atol=ATOL, rtol=RTOL):
    """Solve the model at one cache size and collect every diagnostic."""
    tc = solve_eviction_time(mix, C, atol, rtol)
    p, p_err = _hit_with_error(mix, tc, atol, rtol)
    if math.isfinite(tc):
        occ, occ_err = _occupancy_with_error(mix, tc, atol, rtol)
        upper, lower = occupancy_bounds(mix, tc, atol, rtol)
        quad_err = p_err + occ_err / max(C, 1.0)
    else:
        upper, lower, quad_err = math.inf, None, 0.0
    try:
        est = small_cache_estimate(mix, C)
        est = est if est <= SMALL_CACHE_LIMIT else None
    except RegimeError:
        est = None
    gap = tail_gap_bound(mix, tc)
    return ModelSolution(
        cache_size=float(C),
        eviction_time=tc,
        p_hit=p,
        p_hit_asymptote=asymptote(mix),
        tc_lower_bound=C / (mix.gamma * mix.mean_volume),
        tail_gap_bound=gap,
        occupancy_upper=upper,
        occupancy_lower=lower,
        small_cache_estimate=est,
        quadrature_error_estimate=quad_err,
        large_cache=gap < LARGE_CACHE_GAP,
    )


def _failed(mix, C, exc):
    nan = math.nan
    return ModelSolution(float(C), nan, nan, asymptote(mix), C / (mix.gamma * mix.mean_volume),
                         nan, nan, None, error=f"{type(exc).__name__}: {exc}")


def solve_curve(mix, cache_sizes: Sequence[float], atol=ATOL, rtol=RTOL):
    """Solve the model along an ascending list of cache sizes.

    A failure at one size is recorded in that point's ``error`` field and the
    sweep carries on.
    """
    sizes = check_cache_sizes(cache_sizes, ascending=True)
    out = []
    for C in sizes:
        try:
            out.append(solve(mix, float(C), atol, rtol))
        except (NumericError, ArithmeticError, ValueError) as exc:
            out.append(_failed(mix, C, exc))
    return out


class NonStationaryCheModel(BaseEstimator):
    """Estimator wrapper: cache sizes in, hit probabilities out.

    Parameters
    ----------
    mix : TrafficMix
        Arrival rate and content classes.
    atol, rtol : float
        Tolerances of the inner quadratures.

    Attributes
    ----------
    asymptote_ : float
        Large-cache hit probability.
    mean_volume_ : float
        Class-averaged expected request volume.
    solutions_ : list of ModelSolution
        Filled by :meth:`fit` when cache sizes are given.
    """

    def __init__(self, mix=None, atol=ATOL, rtol=RTOL):
        self.mix = mix
        self.atol = atol
        self.rtol = rtol

    def fit(self, X=None, y=None):
        if not isinstance(self.mix, TrafficMix):
            raise DomainError("mix must be a TrafficMix")
        self.asymptote_ = asymptote(self.mix)
        self.mean_volume_ = self.mix.mean_volume
        self.solutions_ = [] if X is None else self.solve(X)
        return self

    def solve(self, X):
        sizes = check_cache_sizes(X)
        order = np.argsort(sizes, kind="stable")
        sols = solve_curve(self.mix, sizes[order], self.atol, self.rtol)
        out = [None] * len(sizes)
        for i, s in zip(order, sols):
            out[i] = s
        return out

    def predict(self, X):
        """Hit probability for each cache size in ``X``."""
        check_is_fitted(self, "asymptote_")
        return np.array([s.p_hit for s in self.solve(X)])

    def eviction_time(self, X):
        check_is_fitted(self, "asymptote_")
        sizes = check_cache_sizes(X)
        return np.array([solve_eviction_time(self.mix, float(c), self.atol, self.rtol)
                         for c in sizes])
