"""Input validation helpers shared by the estimators."""

from __future__ import annotations

import math
import numbers

import numpy as np

from .exceptions import DomainError


def check_scalar(value, name, *, min_val=None, max_val=None, include_min=True, integer=False):
    """Validate a real scalar parameter and return it as float (or int)."""
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise DomainError(f"{name} must be a real number, got {type(value).__name__}")
    if integer and int(value) != value:
        raise DomainError(f"{name} must be an integer, got {value!r}")
    value = int(value) if integer else float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    if min_val is not None:
        if value < min_val or (not include_min and value == min_val):
            op = ">=" if include_min else ">"
            raise DomainError(f"{name} must be {op} {min_val}, got {value!r}")
    if max_val is not None and value > max_val:
        raise DomainError(f"{name} must be <= {max_val}, got {value!r}")
    return value


def check_points(Z, y=None):
    """Coerce evaluation points to matching float arrays ``(x, y)``.

    Accepts a complex array of points ``z``, a real array of shape (n, 2)
    holding ``[x, y]`` rows, or separate ``x`` and ``y`` arrays.
    """
    if y is not None:
        x = np.asarray(Z, dtype=float)
        y = np.asarray(y, dtype=float)
        x, y = np.broadcast_arrays(x, y)
    else:
        arr = np.asarray(Z)
        if np.iscomplexobj(arr) or arr.ndim == 0 or (arr.ndim == 1 and arr.dtype.kind in "fiu"):
            arr = np.asarray(arr, dtype=complex)
            x, y = arr.real, arr.imag
        elif arr.ndim == 2 and arr.shape[1] == 2:
            arr = np.asarray(arr, dtype=float)
            x, y = arr[:, 0], arr[:, 1]
        else:
            raise DomainError("points must be complex z values or an (n, 2) array of [x, y]")
    x = np.ascontiguousarray(x, dtype=float).ravel()
    y = np.ascontiguousarray(y, dtype=float).ravel()
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DomainError("points must be finite")
    return x, y
