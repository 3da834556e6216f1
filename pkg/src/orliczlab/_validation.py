"""Small input validation helpers in the spirit of ``sklearn.utils.validation``."""

import numbers

import numpy as np

from .exceptions import DomainError, ParameterError


def as_float_array(t, name="t"):
    """Return ``(array, was_scalar)`` for a scalar or array-like of floats."""
    arr = np.asarray(t, dtype=float)
    return arr, arr.ndim == 0


def restore(arr, was_scalar):
    if was_scalar:
        return float(arr)
    return arr


def check_nonnegative(t, name="t"):
    """Validate that ``t`` is finite and ``>= 0`` elementwise."""
    arr, scalar = as_float_array(t, name)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite, got {t!r}")
    if np.any(arr < 0):
        raise DomainError(f"{name} must be >= 0, got {t!r}")
    return arr, scalar


def check_real(x, name, *, min_val=None, max_val=None, include_min=True,
               include_max=True, integer=False):
    """Validate a scalar parameter and return it as ``float`` (or ``int``).

    Raises :class:`ParameterError` naming the violated range.
    """
    if integer:
        if isinstance(x, bool) or not isinstance(x, numbers.Integral):
            raise ParameterError(f"{name} must be an integer, got {x!r}")
        x = int(x)
    else:
        if isinstance(x, bool) or not isinstance(x, numbers.Real):
            raise ParameterError(f"{name} must be a real number, got {x!r}")
        x = float(x)
        if not np.isfinite(x):
            raise ParameterError(f"{name} must be finite, got {x!r}")
    if min_val is not None:
        bad = x < min_val if include_min else x <= min_val
        if bad:
            op = ">=" if include_min else ">"
            raise ParameterError(f"{name} must be {op} {min_val}, got {x}")
    if max_val is not None:
        bad = x > max_val if include_max else x >= max_val
        if bad:
            op = "<=" if include_max else "<"
            raise ParameterError(f"{name} must be {op} {max_val}, got {x}")
    return x


def check_dimension_and_exponent(n, p):
    """Validate ``n >= 2`` integer and ``1 <= p < n``."""
    n = check_real(n, "n", min_val=2, integer=True)
    p = check_real(p, "p", min_val=1.0, max_val=n, include_max=False)
    return n, p


def check_random_state(seed):
    """Turn ``None``, an int or a Generator into a ``numpy.random.Generator``."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
