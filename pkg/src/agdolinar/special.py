"""Exponentially scaled modified Bessel function of order zero.

``i0e(x) = exp(-|x|) * I0(x)``. The densities in this package always multiply
``I0`` by a decaying exponential of comparable size, so only the scaled form is
ever needed and it never overflows.
"""
from __future__ import annotations

import numpy as np

# Switch point between the ascending series and the large-argument expansion.
_SERIES_LIMIT = 15.0
# Ascending series: at x = 15 the terms fall below 1e-17 of the sum well before 64.
_SERIES_TERMS = 64
# Asymptotic series: terms decrease until k ~ 2x, so 30 terms is the optimal
# truncation at the switch point (relative error ~1e-13) and better beyond it.
_ASYMPTOTIC_TERMS = 30


def _series(x: np.ndarray) -> np.ndarray:
    q = 0.25 * x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, _SERIES_TERMS):
        term = term * q / (k * k)
        total = total + term
    return total * np.exp(-x)


def _asymptotic(x: np.ndarray) -> np.ndarray:
    inv = 1.0 / x
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, _ASYMPTOTIC_TERMS):
        term = term * ((2 * k - 1) ** 2 / (8.0 * k)) * inv
        total = total + term
    return total / np.sqrt(2.0 * np.pi * x)


def i0e(x):
    """Return ``exp(-|x|) I0(x)`` for scalar or array input.

    Relative accuracy is about 1e-13 over the whole real line.
    """
    arr = np.abs(np.asarray(x, dtype=float))
    out = np.empty_like(arr)
    small = arr < _SERIES_LIMIT
    out[small] = _series(arr[small])
    out[~small] = _asymptotic(arr[~small])
    if np.ndim(x) == 0:
        return float(out)
    return out
