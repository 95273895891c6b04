"""Quadrature rules for periodic logarithmic kernels and graded panels.

The spectral tier uses the classical product rule for 2pi-periodic
integrands with a log(4 sin^2((t-s)/2)) factor on a uniform grid of even
size n: the rule integrates trigonometric polynomials of degree < n/2
against the log factor exactly (Fourier symbol -2pi/|m|, zero mean).
"""

from __future__ import annotations

import math

import numpy as np


def kress_log_weights(n: int) -> np.ndarray:
    """Circulant matrix R with sum_j R[i, j] f(t_j) ~ int log(4 sin^2((t_i-s)/2)) f(s) ds.

    Grid t_j = 2 pi j / n, n even. Exact for trigonometric polynomials of
    degree <= n/2 - 1 (and the cos(n t / 2) edge mode).
    """
    if n % 2:
        raise ValueError("log quadrature needs an even grid size")
    j = np.arange(n)
    delta = 2 * math.pi * j / n
    m = np.arange(1, n // 2)
    rho = -(4 * math.pi / n) * np.cos(np.outer(delta, m)) @ (1.0 / m)
    rho -= (4 * math.pi / n**2) * np.cos(n * delta / 2)
    idx = (j[:, None] - j[None, :]) % n
    return rho[idx]


def trig_diff_matrix(n: int) -> np.ndarray:
    """Spectral differentiation d/dt on the uniform 2pi-periodic grid (n even)."""
    if n % 2:
        raise ValueError("trig differentiation needs an even grid size")
    j = np.arange(n)
    diff = j[:, None] - j[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        col = 0.5 * (-1.0) ** diff / np.tan(math.pi * diff / n)
    np.fill_diagonal(col, 0.0)
    return col


def nonuniform_diff_matrix(s: np.ndarray) -> np.ndarray:
    """Three-point first-derivative matrix on a nonuniform 1D grid.

    Central second-order stencils inside, one-sided at the ends.
    """
    s = np.asarray(s, dtype=float)
    n = len(s)
    if n < 3:
        raise ValueError("differentiation needs at least 3 nodes")
    D = np.zeros((n, n))
    for i in range(n):
        if i == 0:
            i0, i1, i2 = 0, 1, 2
        elif i == n - 1:
            i0, i1, i2 = n - 3, n - 2, n - 1
        else:
            i0, i1, i2 = i - 1, i, i + 1
        x0, x1, x2 = s[i0], s[i1], s[i2]
        xi = s[i]
        # derivative of the Lagrange basis through (x0, x1, x2) at xi
        D[i, i0] = (2 * xi - x1 - x2) / ((x0 - x1) * (x0 - x2))
        D[i, i1] = (2 * xi - x0 - x2) / ((x1 - x0) * (x1 - x2))
        D[i, i2] = (2 * xi - x0 - x1) / ((x2 - x0) * (x2 - x1))
    return D


def panel_log_self_integral(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """int_panel log|s| ds for a node at arclength offsets (a, b) from panel edges."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)

    def side(x):
        out = np.zeros_like(x)
        pos = x > 0
        out[pos] = x[pos] * (np.log(x[pos]) - 1.0)
        return out

    return side(a) + side(b)
