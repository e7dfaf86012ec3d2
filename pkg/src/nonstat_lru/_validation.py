"""Input validation shared by the estimators and the experiment runner."""
import numpy as np
from sklearn.utils import check_array

from .errors import DomainError


def check_cache_sizes(X, ascending=False, strict=False):
    """Coerce ``X`` to a 1-D float array of positive, finite cache sizes.

    Accepts a scalar, a sequence, or an ``(n, 1)`` column as produced by the
    usual ``X`` convention.
    """
    arr = np.atleast_1d(np.asarray(X, dtype=float))
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    arr = check_array(arr, ensure_2d=False, dtype=float, input_name="cache sizes")
    if arr.ndim != 1:
        raise DomainError(f"cache sizes must be one-dimensional, got shape {arr.shape}")
    if np.any(arr <= 0):
        raise DomainError("cache sizes must be positive")
    if ascending or strict:
        steps = np.diff(arr)
        if np.any(steps < 0) or (strict and np.any(steps == 0)):
            raise DomainError("cache sizes must be "
                              + ("strictly ascending" if strict else "sorted ascending"))
    return arr


def check_positive(name, value, allow_zero=False):
    value = float(value)
    if not np.isfinite(value) or value < 0 or (value == 0 and not allow_zero):
        raise DomainError(f"{name} must be {'non-negative' if allow_zero else 'positive'}, got {value!r}")
    return value
