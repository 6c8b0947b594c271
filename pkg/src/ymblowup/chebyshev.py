"""Chebyshev-Lobatto grids and spectral helpers on an interval [a, b].

All grids are ordered increasingly, the endpoints are exact nodes and the
polynomial degree is ``n - 1`` for ``n`` nodes.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.fft import dct


def lobatto(n: int, a: float = 0.0, b: float = 1.0) -> np.ndarray:
    """``n`` Chebyshev-Lobatto nodes on [a, b], increasing, endpoints exact."""
    if n < 2:
        raise ValueError("need at least two nodes")
    k = np.arange(n)
    # sin^2 form keeps full relative accuracy of the nodes next to a
    x = a + (b - a) * np.sin(np.pi * k / (2 * (n - 1))) ** 2
    x[0], x[-1] = a, b
    return x


def to_coeffs(values: np.ndarray) -> np.ndarray:
    """Chebyshev coefficients of the interpolant through Lobatto values.

    Works along the first axis so several functions can be transformed at once.
    """
    v = np.asarray(values)
    n = v.shape[0]
    c = dct(v[::-1], type=1, axis=0) / (n - 1)
    c[0] /= 2
    c[-1] /= 2
    return c


def _t(y, a, b):
    return (2 * np.asarray(y, dtype=float) - (a + b)) / (b - a)


def evaluate(coeffs: np.ndarray, y, a: float = 0.0, b: float = 1.0, deriv: int = 0):
    """Evaluate the series (or its ``deriv``-th derivative) at points ``y``."""
    c = coeffs
    if deriv:
        c = C.chebder(c, deriv) * (2.0 / (b - a)) ** deriv
    return C.chebval(_t(y, a, b), c)


@lru_cache(maxsize=32)
def _inverse_transform(n: int) -> np.ndarray:
    return to_coeffs(np.eye(n))


def eval_matrix(n: int, y, a: float = 0.0, b: float = 1.0, deriv: int = 0) -> np.ndarray:
    """Matrix mapping nodal values on the ``n``-point grid to the
    ``deriv``-th derivative of the interpolant at the points ``y``."""
    t = _t(y, a, b)
    V = C.chebvander(t, n - 1)
    if deriv:
        D = np.zeros((n, n))
        eye = np.eye(n)
        for k in range(n):
            d = C.chebder(eye[k], deriv)
            D[: len(d), k] = d
        V = V @ D * (2.0 / (b - a)) ** deriv
    return V @ _inverse_transform(n)


def diff_matrix(n: int, a: float = 0.0, b: float = 1.0) -> np.ndarray:
    """First-derivative collocation matrix on the Lobatto grid (negative sum trick)."""
    k = np.arange(n)
    t = -np.cos(np.pi * k / (n - 1))
    c = np.ones(n)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** k
    dt = t[:, None] - t[None, :]
    D = np.outer(c, 1 / c) / (dt + np.eye(n))
    D -= np.diag(D.sum(axis=1))
    return D * (2.0 / (b - a))


def clenshaw_curtis_weights(n: int, a: float = 0.0, b: float = 1.0) -> np.ndarray:
    """Quadrature weights integrating the degree ``n-1`` interpolant exactly."""
    c = _inverse_transform(n)
    m = np.arange(n)
    mom = np.where(m % 2 == 0, 2.0 / (1.0 - m.astype(float) ** 2 + (m % 2)), 0.0)
    return (mom @ c) * (b - a) / 2


def exp_filter(n: int, strength: float, order: int = 8) -> np.ndarray:
    """Nodal matrix of the exponential tail filter exp(-strength (k/(n-1))^order)."""
    k = np.arange(n) / (n - 1)
    sig = np.exp(-strength * k ** order)
    V = C.chebvander(_t(lobatto(n, -1.0, 1.0), -1.0, 1.0), n - 1)
    return V @ np.diag(sig) @ _inverse_transform(n)
