"""Hermite polynomials, oscillator eigenfunctions and the two summation identities."""

from __future__ import annotations

import math
from collections.abc import Iterator, Sequence

import numpy as np

__all__ = [
    "MAX_POLY_ORDER",
    "hermite_poly",
    "osc_eigenfunction",
    "osc_eigenfunctions",
    "mehler_kernel",
    "mehler_series",
    "compositions",
    "hermite_sum_sides",
    "verify_hermite_sum",
]

MAX_POLY_ORDER = 300


def hermite_poly(k: int, x):
    """Physicists' Hermite polynomial ``H_k(x)`` by three-term recurrence.

    Orders above ``MAX_POLY_ORDER`` overflow quickly in this raw form; use
    :func:`osc_eigenfunction` there instead.
    """
    if k < 0:
        raise ValueError(f"order must be non-negative, got {k}")
    if k > MAX_POLY_ORDER:
        raise ValueError(
            f"order {k} exceeds {MAX_POLY_ORDER}; use osc_eigenfunction for high orders"
        )
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if k == 0:
        return h_prev[()]
    h = 2.0 * x
    for j in range(1, k):
        h_prev, h = h, 2.0 * x * h - 2.0 * j * h_prev
    return h[()]


def osc_eigenfunctions(k_max: int, x) -> np.ndarray:
    """All normalized oscillator functions ``psi_0 .. psi_{k_max}`` at ``x``.

    Returns an array of shape ``(k_max + 1,) + shape(x)``. The orthonormal
    recurrence keeps every intermediate bounded, so no factorials appear.
    """
    if k_max < 0:
        raise ValueError(f"order must be non-negative, got {k_max}")
    x = np.asarray(x, dtype=float)
    out = np.empty((k_max + 1,) + x.shape)
    out[0] = math.pi ** -0.25 * np.exp(-0.5 * x * x)
    if k_max >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, k_max):
        out[k + 1] = (
            math.sqrt(2.0 / (k + 1)) * x * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
        )
    return out


def osc_eigenfunction(k: int, x):
    """``psi_k(x) = (2^k k! sqrt(pi))^-1/2 H_k(x) exp(-x^2/2)``."""
    return osc_eigenfunctions(k, x)[k][()]


def mehler_kernel(x: float, y, z):
    """Closed form of ``sum_k x^k H_k(y) H_k(z) / (2^k k!)`` for ``|x| < 1``."""
    if not abs(x) < 1.0:
        raise ValueError(f"Mehler kernel requires |x| < 1, got {x}")
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    one_minus = 1.0 - x * x
    expo = (2.0 * x * y * z - (y * y + z * z) * x * x) / one_minus
    return (np.exp(expo) / math.sqrt(one_minus))[()]


def mehler_series(x: float, y: float, z: float, terms: int) -> float:
    """Truncated left-hand series of the Mehler identity, ``terms`` terms.

    Each term is rebuilt from normalized eigenfunctions,
    ``H_k(y) H_k(z) / (2^k k!) = sqrt(pi) e^{(y^2+z^2)/2} psi_k(y) psi_k(z)``,
    so large orders stay finite.
    """
    psi_y = osc_eigenfunctions(terms - 1, y)
    psi_z = osc_eigenfunctions(terms - 1, z)
    powers = x ** np.arange(terms)
    total = math.fsum(powers * psi_y * psi_z)
    return total * math.sqrt(math.pi) * math.exp(0.5 * (y * y + z * z))


def compositions(n: int, r: int) -> Iterator[tuple[int, ...]]:
    """Weak compositions of ``n`` into ``r`` parts, lexicographically ascending."""
    if r < 1:
        raise ValueError("need at least one part")
    if n < 0:
        return
    parts = [0] * (r - 1) + [n]
    while True:
        yield tuple(parts)
        # successor: bump the rightmost head slot that still has mass after it
        j = r - 2
        while j >= 0 and sum(parts[j + 1 :]) == 0:
            j -= 1
        if j < 0:
            return
        parts[j] += 1
        for t in range(j + 1, r - 1):
            parts[t] = 0
        parts[r - 1] = n - sum(parts[: j + 1])


def hermite_sum_sides(f: Sequence[float], coords: Sequence[float], n: int) -> tuple[float, float]:
    """Both sides of the multinomial Hermite addition formula.

    Left: ``(f^2)^{n/2} / n! * H_n(sum f_k x_k / |f|)``.
    Right: sum over compositions of ``n`` of ``prod f_k^{n_k} H_{n_k}(x_k) / n_k!``.
    """
    f = np.asarray(f, dtype=float)
    x = np.asarray(coords, dtype=float)
    if f.shape != x.shape:
        raise ValueError("f and coords must have the same length")
    f2 = float(f @ f)
    if n == 0:
        return 1.0, 1.0
    if f2 == 0.0:
        return 0.0, 0.0
    norm = math.sqrt(f2)
    lhs = norm**n / math.factorial(n) * float(hermite_poly(n, (f @ x) / norm))

    # H_j(x_k) f_k^j / j! tabulated once
    table = np.empty((len(f), n + 1))
    for k in range(len(f)):
        for j in range(n + 1):
            table[k, j] = f[k] ** j * float(hermite_poly(j, x[k])) / math.factorial(j)
    terms = [
        math.prod(table[k, nk] for k, nk in enumerate(comp)) for comp in compositions(n, len(f))
    ]
    return lhs, math.fsum(terms)


def verify_hermite_sum(f: Sequence[float], coords: Sequence[float], n: int) -> float:
    """Absolute residual of the multinomial Hermite addition formula."""
    if n > 20:
        raise ValueError(f"n={n} too large for the direct composition sum (max 20)")
    lhs, rhs = hermite_sum_sides(f, coords, n)
    return abs(lhs - rhs)
