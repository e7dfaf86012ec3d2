"""Laws of the per-content request volume ``V``.

Only non-positive MGF arguments are ever needed by the model (the argument is
minus a probability mass), so both MGF routines refuse ``x > 0``.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError

__all__ = [
    "VolumeDistribution",
    "ParetoVolume",
    "DeterministicVolume",
    "volume_from_dict",
]

# e^{-z} underflows past this; the MGF and its derivative are then 0.
_Z_UNDERFLOW = 700.0


def _scaled_upper_gamma(a, z):
    """``exp(z) * z**(-a) * Gamma(a, z)`` for ``z > 0`` and any real ``a``.

    For ``z < 1`` negative orders are reached by the downward recurrence
    ``Gamma(a, z) = (Gamma(a+1, z) - z**a e^{-z}) / a`` in scaled form, which
    damps errors there. For ``z >= 1`` that recurrence cancels badly, so the
    Legendre continued fraction is used instead.
    """
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    big = z >= 1.0
    if np.any(big):
        out[big] = _scaled_upper_gamma_cf(a, z[big])
    if np.any(~big):
        out[~big] = _scaled_upper_gamma_rec(a, z[~big])
    return out


def _scaled_upper_gamma_cf(a, z, eps=1e-16, max_iter=500):
    # modified Lentz evaluation of
    # 1 / (z+1-a - 1(1-a) / (z+3-a - 2(2-a) / (z+5-a - ...)))
    tiny = 1e-300
    b = z + 1.0 - a
    c = np.full_like(z, 1.0 / tiny)
    d = 1.0 / b
    h = d.copy()
    live = np.ones(z.shape, dtype=bool)
    for i in range(1, max_iter + 1):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < tiny, tiny, d)
        c = b + an / c
        c = np.where(np.abs(c) < tiny, tiny, c)
        d = 1.0 / d
        delta = d * c
        # converged entries are frozen so results do not depend on batching
        h = np.where(live, h * delta, h)
        live &= np.abs(delta - 1.0) >= eps
        if not live.any():
            break
    return h


def _scaled_upper_gamma_rec(a, z):
    if a > 0:
        steps, a0 = 0, a
    elif a == math.floor(a):
        steps, a0 = int(-a), 0.0
    else:
        steps = math.floor(-a) + 1
        a0 = a + steps
    with np.errstate(over="ignore", invalid="ignore"):
        if a0 == 0.0:
            g = special.exp1(z) * np.exp(z)
        else:
            g = special.gamma(a0) * special.gammaincc(a0, z) * np.exp(z) * z ** (-a0)
    cur = a0
    for _ in range(steps):
        cur -= 1.0
        g = (z * g - 1.0) / cur
    return g


def _check_nonpositive(x):
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr > 0) or np.any(np.isnan(x_arr)):
        raise DomainError("MGF is only evaluated at non-positive arguments")
    return x_arr


class VolumeDistribution(ABC):
    """Law of a content's expected total request count."""

    kind = "abstract"

    @property
    @abstractmethod
    def mean(self): ...

    @property
    @abstractmethod
    def second_moment(self): ...

    def moments(self):
        return self.mean, self.second_moment

    @abstractmethod
    def _mgf(self, x): ...

    @abstractmethod
    def _mgf_deriv(self, x): ...

    @abstractmethod
    def _mgf_complement(self, x): ...

    @abstractmethod
    def _biased_mgf_complement(self, x): ...

    @abstractmethod
    def _ppf(self, u): ...

    def mgf(self, x):
        """``E[exp(x V)]`` for ``x <= 0``."""
        x_arr = _check_nonpositive(x)
        out = self._mgf(x_arr)
        return float(out) if np.ndim(x) == 0 else out

    def mgf_deriv(self, x):
        """``E[V exp(x V)]`` for ``x <= 0``."""
        x_arr = _check_nonpositive(x)
        out = self._mgf_deriv(x_arr)
        return float(out) if np.ndim(x) == 0 else out

    def mgf_complement(self, x):
        """``1 - E[exp(x V)]``, accurate to full relative precision as ``x -> 0``."""
        x_arr = _check_nonpositive(x)
        out = self._mgf_complement(x_arr)
        return float(out) if np.ndim(x) == 0 else out

    def biased_mgf_complement(self, x):
        """``1 - E[V exp(x V)] / E[V]``, without cancellation near ``x = 0``."""
        x_arr = _check_nonpositive(x)
        out = self._biased_mgf_complement(x_arr)
        return float(out) if np.ndim(x) == 0 else out

    def sample(self, u):
        """Inverse-CDF draw at uniform level(s) ``u`` in ``[0, 1)``."""
        u_arr = np.asarray(u, dtype=float)
        if np.any((u_arr < 0) | (u_arr >= 1)):
            raise DomainError("uniform level must lie in [0, 1)")
        out = self._ppf(u_arr)
        return float(out) if np.ndim(u) == 0 else out

    @abstractmethod
    def to_dict(self): ...


@dataclass(frozen=True)
class ParetoVolume(VolumeDistribution):
    """Pareto law with density ``beta v_min**beta / v**(1+beta)`` on ``v >= v_min``.

    ``beta <= 2`` is accepted (infinite variance); the mean needs ``beta > 1``.
    """

    v_min: float = 1.0
    beta: float = 3.0
    kind = "pareto"

    def __post_init__(self):
        if not (math.isfinite(self.v_min) and self.v_min > 0):
            raise DomainError(f"v_min must be positive, got {self.v_min!r}")
        if not (math.isfinite(self.beta) and self.beta > 1):
            raise DomainError(f"beta must exceed 1 for a finite mean, got {self.beta!r}")

    @classmethod
    def from_mean(cls, mean, beta):
        return cls(v_min=mean * (beta - 1.0) / beta, beta=beta)

    @property
    def mean(self):
        return self.beta * self.v_min / (self.beta - 1.0)

    @property
    def second_moment(self):
        if self.beta <= 2:
            return math.inf
        return self.beta * self.v_min ** 2 / (self.beta - 2.0)

    # With z = -x v_min:
    #   E[e^{xV}]   = beta e^{-z} g(-beta)
    #   E[V e^{xV}] = beta v_min e^{-z} g(1 - beta)
    # where g is the scaled upper incomplete gamma function.
    def _incomplete_gamma_form(self, x, order, coef, at_zero):
        z = np.atleast_1d(-x * self.v_min)
        out = np.zeros_like(z)
        out[z == 0] = at_zero
        live = (z > 0) & (z < _Z_UNDERFLOW)
        out[live] = coef * np.exp(-z[live]) * _scaled_upper_gamma(order, z[live])
        return out.reshape(np.shape(x))

    def _mgf(self, x):
        return self._incomplete_gamma_form(x, -self.beta, self.beta, 1.0)

    def _mgf_deriv(self, x):
        return self._incomplete_gamma_form(x, 1.0 - self.beta, self.beta * self.v_min, self.mean)

    # Integrating by parts against the survival function,
    #   1 - E[e^{xV}] = -expm1(-z) + z e^{-z} g(1 - beta)
    # and the size-biased law is Pareto(v_min, beta - 1), so its complement
    # uses g(2 - beta). Both terms are positive: no cancellation for small z.
    def _complement_form(self, x, order):
        z = np.atleast_1d(-x * self.v_min)
        out = -np.expm1(-z)
        live = (z > 0) & (z < _Z_UNDERFLOW)
        zl = z[live]
        out[live] += zl * np.exp(-zl) * _scaled_upper_gamma(order, zl)
        return out.reshape(np.shape(x))

    def _mgf_complement(self, x):
        return self._complement_form(x, 1.0 - self.beta)

    def _biased_mgf_complement(self, x):
        return self._complement_form(x, 2.0 - self.beta)

    def _ppf(self, u):
        return self.v_min * np.exp(-np.log1p(-u) / self.beta)

    def cdf(self, v):
        v = np.asarray(v, dtype=float)
        return np.where(v <= self.v_min, 0.0, 1.0 - (self.v_min / np.maximum(v, self.v_min)) ** self.beta)

    def to_dict(self):
        return {"kind": self.kind, "v_min": self.v_min, "beta": self.beta}


@dataclass(frozen=True)
class DeterministicVolume(VolumeDistribution):
    """Point mass at ``value``; makes every MGF expression elementary."""

    value: float = 1.0
    kind = "deterministic"

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value > 0):
            raise DomainError(f"volume must be positive, got {self.value!r}")

    @property
    def mean(self):
        return self.value

    @property
    def second_moment(self):
        return self.value ** 2

    def _mgf(self, x):
        return np.exp(x * self.value)

    def _mgf_deriv(self, x):
        return self.value * np.exp(x * self.value)

    def _mgf_complement(self, x):
        return -np.expm1(x * self.value)

    _biased_mgf_complement = _mgf_complement

    def _ppf(self, u):
        return np.full_like(u, self.value, dtype=float)

    def to_dict(self):
        return {"kind": self.kind, "value": self.value}


def volume_from_dict(d):
    kind = d.get("kind")
    if kind == "pareto":
        return ParetoVolume(v_min=float(d["v_min"]), beta=float(d["beta"]))
    if kind == "deterministic":
        return DeterministicVolume(value=float(d["value"]))
    raise DomainError(f"unknown volume kind {kind!r}; expected 'pareto' or 'deterministic'")
