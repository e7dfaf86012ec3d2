"""Popularity profiles: the normalised temporal shape of a content's request rate.

Each profile is a probability density on ``[0, inf)`` whose mean is the
content lifetime ``L`` (days). All four shapes expose closed-form primitives,
so the model integrals only ever see differences of survival functions.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "PopularityProfile",
    "ExponentialProfile",
    "PowerLawProfile",
    "UniformProfile",
    "TriangularProfile",
    "make_profile",
    "profile_from_dict",
]

# Unbounded profiles are truncated where the survival function drops below
# these levels; the power law uses a looser one because its quantile explodes.
LIGHT_TAIL_MASS = 1e-9
HEAVY_TAIL_MASS = 1e-6


def _as_float_array(t):
    return np.asarray(t, dtype=float)


def _check_u(u):
    u_arr = _as_float_array(u)
    if np.any((u_arr < 0) | (u_arr >= 1)) or np.any(np.isnan(u_arr)):
        raise DomainError("quantile level must lie in [0, 1)")
    return u_arr


def _ret(x, like):
    """Return a Python float for scalar input, an array otherwise."""
    return float(x) if np.ndim(like) == 0 else x


@dataclass(frozen=True)
class PopularityProfile(ABC):
    """Base class. ``lifetime`` is the mean of the density, in days."""

    lifetime: float

    kind = "abstract"

    def __post_init__(self):
        if not (math.isfinite(self.lifetime) and self.lifetime > 0):
            raise DomainError(f"lifetime must be positive and finite, got {self.lifetime!r}")

    # -- shape specific pieces -------------------------------------------
    @abstractmethod
    def _pdf(self, t): ...

    @abstractmethod
    def _sf(self, t): ...

    @abstractmethod
    def _ppf(self, u): ...

    @abstractmethod
    def _sf_primitive(self, t):
        """``int_0^t sf(s) ds`` for ``t >= 0``."""

    @property
    @abstractmethod
    def sq_integral(self):
        """``int_0^inf density(t)**2 dt`` in closed form (per day)."""

    @property
    def support_end(self):
        return math.inf

    @property
    def kinks(self):
        """Interior points where the density is not smooth."""
        return ()

    # -- public API ------------------------------------------------------
    @property
    def mean(self):
        return self.lifetime

    def density(self, t):
        t_arr = _as_float_array(t)
        out = np.where(t_arr >= 0, self._pdf(np.maximum(t_arr, 0.0)), 0.0)
        return _ret(out, t)

    def sf(self, t):
        t_arr = _as_float_array(t)
        out = np.where(t_arr > 0, self._sf(np.maximum(t_arr, 0.0)), 1.0)
        return _ret(out, t)

    def cdf(self, t):
        t_arr = _as_float_array(t)
        out = np.where(t_arr > 0, 1.0 - self._sf(np.maximum(t_arr, 0.0)), 0.0)
        return _ret(out, t)

    def quantile(self, u):
        u_arr = _check_u(u)
        return _ret(self._ppf(u_arr), u)

    def sf_integral(self, a, b):
        """``int_a^b sf(s) ds`` for ``0 <= a <= b``."""
        return float(self._sf_primitive(max(b, 0.0)) - self._sf_primitive(max(a, 0.0)))

    def sf_window_integral(self, start, width):
        """``int_start^{start+width} sf(s) ds``, accurate even when ``start >> width``."""
        if start < 0 or width < 0:
            raise DomainError("window start and width must be non-negative")
        return float(self._sf_window(float(start), float(width)))

    def _sf_window(self, start, width):
        return self._sf_primitive(start + width) - self._sf_primitive(start)

    def window_mass(self, tau, width):
        """Mass of the density on ``[tau - width, tau]``."""
        w_arr = _as_float_array(width)
        if np.any(w_arr < 0):
            raise DomainError("window width must be non-negative")
        tau_arr = _as_float_array(tau)
        hi = np.maximum(tau_arr, 0.0)
        lo = np.maximum(tau_arr - w_arr, 0.0)
        # the width is carried separately: far out, hi - lo has lost most of it
        span = np.minimum(w_arr, hi)
        out = self._mass_between(lo, hi, span)
        return _ret(np.clip(out, 0.0, 1.0), tau if np.ndim(tau) else width)

    def _mass_between(self, lo, hi, span):
        return self._sf(lo) - self._sf(hi)

    def truncation_horizon(self):
        """Point beyond which the model integrals are handled analytically."""
        if math.isfinite(self.support_end):
            return self.support_end
        return float(self._ppf(np.array(1.0 - LIGHT_TAIL_MASS)))

    def to_dict(self):
        return {"kind": self.kind, "L": self.lifetime}


@dataclass(frozen=True)
class ExponentialProfile(PopularityProfile):
    kind = "exponential"

    def _pdf(self, t):
        return np.exp(-t / self.lifetime) / self.lifetime

    def _sf(self, t):
        return np.exp(-t / self.lifetime)

    def _ppf(self, u):
        return -self.lifetime * np.log1p(-u)

    def _sf_primitive(self, t):
        return -self.lifetime * np.expm1(-t / self.lifetime)

    def _mass_between(self, lo, hi, span):
        # e^{-lo/L} (1 - e^{-span/L}) keeps full relative accuracy in the tail
        return np.exp(-lo / self.lifetime) * -np.expm1(-span / self.lifetime)

    def _sf_window(self, start, width):
        L = self.lifetime
        return L * math.exp(-start / L) * -math.expm1(-width / L)

    @property
    def sq_integral(self):
        return 1.0 / (2.0 * self.lifetime)


@dataclass(frozen=True)
class PowerLawProfile(PopularityProfile):
    """``(zeta-1)/L * (t/L + 1)**(-zeta)``; the mean is finite only for zeta > 2.

    ``lifetime`` is the scale ``L`` appearing in the density; for zeta > 2 the
    mean equals ``L/(zeta-2)``.
    """

    zeta: float = 3.0
    kind = "powerlaw"

    def __post_init__(self):
        super().__post_init__()
        if not (math.isfinite(self.zeta) and self.zeta > 1):
            raise DomainError(f"power-law exponent must exceed 1, got {self.zeta!r}")

    @property
    def mean(self):
        if self.zeta <= 2:
            return math.inf
        return self.lifetime / (self.zeta - 2.0)

    def _pdf(self, t):
        L, z = self.lifetime, self.zeta
        return (z - 1.0) / L * (t / L + 1.0) ** (-z)

    def _sf(self, t):
        return (t / self.lifetime + 1.0) ** (1.0 - self.zeta)

    def _ppf(self, u):
        return self.lifetime * np.expm1(-np.log1p(-u) / (self.zeta - 1.0))

    def _sf_primitive(self, t):
        L, z = self.lifetime, self.zeta
        if z == 2.0:
            return L * np.log1p(t / L)
        return L / (2.0 - z) * ((t / L + 1.0) ** (2.0 - z) - 1.0)

    def _mass_between(self, lo, hi, span):
        L, z = self.lifetime, self.zeta
        ratio_log = np.log1p(span / (lo + L))
        return self._sf(lo) * -np.expm1(-(z - 1.0) * ratio_log)

    def _sf_window(self, start, width):
        L, z = self.lifetime, self.zeta
        ratio_log = math.log1p(width / (start + L))
        if z == 2.0:
            return L * ratio_log
        return L / (2.0 - z) * (start / L + 1.0) ** (2.0 - z) * math.expm1((2.0 - z) * ratio_log)

    @property
    def sq_integral(self):
        z = self.zeta
        return (z - 1.0) ** 2 / (self.lifetime * (2.0 * z - 1.0))

    def truncation_horizon(self):
        return float(self._ppf(np.array(1.0 - HEAVY_TAIL_MASS)))

    def to_dict(self):
        return {"kind": self.kind, "L": self.lifetime, "zeta": self.zeta}


@dataclass(frozen=True)
class UniformProfile(PopularityProfile):
    """Flat on ``[0, 2L]``."""

    kind = "uniform"

    @property
    def support_end(self):
        return 2.0 * self.lifetime

    def _pdf(self, t):
        return np.where(t <= self.support_end, 0.5 / self.lifetime, 0.0)

    def _sf(self, t):
        return np.clip(1.0 - t / self.support_end, 0.0, 1.0)

    def _ppf(self, u):
        return u * self.support_end

    def _sf_primitive(self, t):
        t = np.minimum(t, self.support_end)
        return t - t * t / (4.0 * self.lifetime)

    @property
    def sq_integral(self):
        return 1.0 / (2.0 * self.lifetime)


@dataclass(frozen=True)
class TriangularProfile(PopularityProfile):
    """Linear rise on ``[0, L]``, linear decay on ``[L, 2L]``."""

    kind = "triangular"

    @property
    def support_end(self):
        return 2.0 * self.lifetime

    @property
    def kinks(self):
        return (self.lifetime,)

    def _pdf(self, t):
        L = self.lifetime
        return np.maximum(np.minimum(t, 2.0 * L - t), 0.0) / (L * L)

    def _sf(self, t):
        L = self.lifetime
        rise = 1.0 - t * t / (2.0 * L * L)
        fall = (2.0 * L - t) ** 2 / (2.0 * L * L)
        return np.where(t <= L, rise, np.where(t < 2.0 * L, fall, 0.0))

    def _ppf(self, u):
        L = self.lifetime
        return np.where(u <= 0.5, L * np.sqrt(2.0 * u), 2.0 * L - L * np.sqrt(2.0 * (1.0 - u)))

    def _sf_primitive(self, t):
        L = self.lifetime
        t = np.minimum(t, 2.0 * L)
        cdf_int_rise = t ** 3 / (6.0 * L * L)
        cdf_int_fall = L / 6.0 + (t - L) - (L ** 3 - (2.0 * L - t) ** 3) / (6.0 * L * L)
        return t - np.where(t <= L, cdf_int_rise, cdf_int_fall)

    @property
    def sq_integral(self):
        return 2.0 / (3.0 * self.lifetime)


_KINDS = {
    cls.kind: cls
    for cls in (ExponentialProfile, PowerLawProfile, UniformProfile, TriangularProfile)
}


def make_profile(kind, L, zeta=None):
    """Build a profile from its serialised kind name."""
    try:
        cls = _KINDS[kind]
    except KeyError:
        raise DomainError(f"unknown profile kind {kind!r}; expected one of {sorted(_KINDS)}") from None
    if cls is PowerLawProfile:
        if zeta is None:
            raise DomainError("powerlaw profile requires zeta")
        return PowerLawProfile(float(L), float(zeta))
    if zeta is not None:
        raise DomainError(f"zeta is only meaningful for powerlaw profiles, not {kind!r}")
    return cls(float(L))


def profile_from_dict(d):
    return make_profile(d["kind"], d["L"], d.get("zeta"))
