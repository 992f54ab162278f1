"""Small argument checks shared by the public entry points."""

import math

import numpy as np

from .errors import ParameterDomainError


def check_finite(name, value):
    value = float(value)
    if not math.isfinite(value):
        raise ParameterDomainError(f"{name} must be finite, got {value!r}")
    return value


def check_positive(name, value, allow_zero=False):
    value = check_finite(name, value)
    if value < 0 or (value == 0 and not allow_zero):
        bound = ">= 0" if allow_zero else "> 0"
        raise ParameterDomainError(f"{name} must be {bound}, got {value!r}")
    return value


def check_in_range(name, value, lo, hi, lo_closed=True, hi_closed=True):
    value = check_finite(name, value)
    lo_ok = value >= lo if lo_closed else value > lo
    hi_ok = value <= hi if hi_closed else value < hi
    if not (lo_ok and hi_ok):
        lb = "[" if lo_closed else "("
        rb = "]" if hi_closed else ")"
        raise ParameterDomainError(f"{name}={value!r} outside {lb}{lo}, {hi}{rb}")
    return value


def as_radii(r):
    """Coerce to a float array of strictly positive radii."""
    arr = np.asarray(r, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise ParameterDomainError("radii must be finite and strictly positive")
    return arr
