"""Truncated Taylor ("jet") arithmetic on numpy arrays.

A jet is an ndarray whose FIRST axis holds the Taylor coefficients of the
quantity along the step, c[m] = dt^m * d^m(.)/dt^m / m!, m = 0..K (i.e.
the expansion of tau -> u(t + tau*dt) around tau = 0).  Trailing axes
broadcast, so whole fields of jets are processed at once.  This is the
reference implementation of the forward-mode arithmetic; the solver's hot
loop uses the compiled twin in ``_kernels`` (the test suite checks they
agree).
"""

from __future__ import annotations

import math

import numpy as np

__all__ = ["jet", "jconst", "jmul", "jdiv", "jsqrt", "jrecip",
           "time_average", "factorials"]


def jet(coeffs):
    """Build a jet from a coefficient sequence (scalars or arrays)."""
    return np.array([np.asarray(c, dtype=float) for c in coeffs])


def jconst(value, K, like=None):
    """Constant jet (value, 0, ..., 0) of order K."""
    value = np.asarray(value, dtype=float)
    shape = value.shape if like is None else np.asarray(like).shape[1:]
    out = np.zeros((K + 1,) + shape)
    out[0] = value
    return out


def jmul(a, b):
    L = a.shape[0]
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    for k in range(L):
        for i in range(k + 1):
            out[k] += a[i] * b[k - i]
    return out


def jdiv(a, b):
    """a / b; requires b[0] != 0 everywhere."""
    if np.any(b[0] == 0.0):
        raise ZeroDivisionError("division by a jet with zero value part")
    L = a.shape[0]
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    out[0] = a[0] / b[0]
    for k in range(1, L):
        acc = a[k].copy() if np.ndim(a[k]) else np.asarray(a[k], dtype=float).copy()
        acc = np.broadcast_to(acc, out[k].shape).copy()
        for i in range(1, k + 1):
            acc = acc - b[i] * out[k - i]
        out[k] = acc / b[0]
    return out


def jrecip(b):
    one = np.zeros_like(b)
    one[0] = 1.0
    return jdiv(one, b)


def jsqrt(a):
    """sqrt(a); requires a[0] > 0 everywhere."""
    if np.any(a[0] <= 0.0):
        raise ValueError("sqrt of a jet with non-positive value part")
    L = a.shape[0]
    out = np.zeros_like(np.asarray(a, dtype=float))
    out[0] = np.sqrt(a[0])
    for k in range(1, L):
        acc = np.array(a[k], dtype=float, copy=True)
        for i in range(1, k):
            acc = acc - out[i] * out[k - i]
        out[k] = acc / (2.0 * out[0])
    return out


def factorials(K):
    return np.array([math.factorial(m) for m in range(K + 1)])


def time_average(a):
    """Average of the jet's Taylor polynomial over one step.

    With Taylor coefficients c[m] this is sum_m c[m]/(m+1), the exact
    integral of tau -> sum c[m] tau^m over tau in [0, 1].
    """
    L = a.shape[0]
    w = 1.0 / np.arange(1, L + 1)
    return np.tensordot(w, a, axes=(0, 0))
