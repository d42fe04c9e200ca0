"""Dense symmetric linear algebra for small matrices.

Everything here works on plain ``numpy`` arrays. Symmetric inputs are
checked and then symmetrized from the lower triangle, so downstream code can
rely on ``a[i, j] == a[j, i]`` holding bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LinAlgError",
    "NotPositiveDefiniteError",
    "ConvergenceError",
    "Spectrum",
    "as_symmetric",
    "eigh_symmetric",
    "cholesky",
    "solve_lower",
    "solve_upper",
    "solve_generalized_eig",
    "determinant",
    "schur_complement",
    "spectral_function",
]

SYMMETRY_RTOL = 1e-10
CONVERGENCE_RTOL = 1e-14
SWEEPS_PER_DIM2 = 30


class LinAlgError(ValueError):
    pass


class NotPositiveDefiniteError(LinAlgError):
    def __init__(self, index: int, pivot: float):
        self.index = index
        self.pivot = pivot
        super().__init__(f"matrix is not positive definite: pivot {index} is {pivot!r}")


class ConvergenceError(LinAlgError):
    def __init__(self, sweeps: int, residual: float):
        self.sweeps = sweeps
        self.residual = residual
        super().__init__(
            f"Jacobi iteration did not converge after {sweeps} sweeps "
            f"(off-diagonal residual {residual:.3e})"
        )


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues in ascending order and the matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __iter__(self):
        yield self.eigenvalues
        yield self.eigenvectors


def as_symmetric(a, name: str = "matrix") -> np.ndarray:
    """Validate ``a`` as a finite square symmetric matrix and return a clean copy.

    The returned array mirrors the lower triangle into the upper one so the
    two stored halves are identical.
    """
    arr = np.array(a, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise LinAlgError(f"{name} must be a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise LinAlgError(f"{name} has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(arr))))
    if np.max(np.abs(arr - arr.T)) > SYMMETRY_RTOL * scale:
        raise LinAlgError(f"{name} is not symmetric")
    low = np.tril(arr)
    return low + np.tril(arr, -1).T


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # largest-magnitude component of every column made positive
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _sorted_spectrum(values: np.ndarray, vectors: np.ndarray) -> Spectrum:
    order = np.argsort(values, kind="stable")
    return Spectrum(values[order].copy(), _fix_signs(vectors[:, order]))


def _off_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a - np.diag(np.diag(a))))


def eigh_symmetric(a) -> Spectrum:
    """Eigendecomposition of a real symmetric matrix by cyclic Jacobi rotations.

    Uses the threshold strategy: during the first three sweeps only
    off-diagonal entries above ``0.2 * off / n**2`` are rotated away; later
    sweeps rotate every entry that is not negligible against its diagonal.

    Raises
    ------
    ConvergenceError
        When the off-diagonal Frobenius norm is still above
        ``1e-14 * ||a||_F`` after ``30 * n**2`` sweeps.
    """
    a = as_symmetric(a)
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return Spectrum(a.diagonal().copy(), v)

    fro = float(np.linalg.norm(a))
    target = CONVERGENCE_RTOL * fro
    max_sweeps = SWEEPS_PER_DIM2 * n * n

    for sweep in range(1, max_sweeps + 1):
        off = _off_norm(a)
        if off <= target or fro == 0.0:
            return _sorted_spectrum(a.diagonal().copy(), v)
        thresh = 0.2 * off / (n * n) if sweep <= 3 else 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                small = 100.0 * abs(apq)
                if (
                    sweep > 4
                    and abs(a[p, p]) + small == abs(a[p, p])
                    and abs(a[q, q]) + small == abs(a[q, q])
                ):
                    a[p, q] = a[q, p] = 0.0
                    continue
                if abs(apq) <= thresh or apq == 0.0:
                    continue
                h = a[q, q] - a[p, p]
                if abs(h) + small == abs(h):
                    t = apq / h
                else:
                    theta = 0.5 * h / apq
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J on rows/cols p, q
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq

    raise ConvergenceError(max_sweeps, _off_norm(a))


def cholesky(a) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == a``."""
    a = as_symmetric(a)
    n = a.shape[0]
    L = np.zeros_like(a)
    for j in range(n):
        pivot = a[j, j] - np.dot(L[j, :j], L[j, :j])
        if not pivot > 0.0:
            raise NotPositiveDefiniteError(j, float(pivot))
        L[j, j] = np.sqrt(pivot)
        for i in range(j + 1, n):
            L[i, j] = (a[i, j] - np.dot(L[i, :j], L[j, :j])) / L[j, j]
    return L


def solve_lower(L: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Forward substitution for lower-triangular ``L``; ``b`` may be a matrix."""
    b = np.array(b, dtype=float)
    x = np.zeros_like(b)
    for i in range(L.shape[0]):
        x[i] = (b[i] - L[i, :i] @ x[:i]) / L[i, i]
    return x


def solve_upper(U: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Back substitution for upper-triangular ``U``."""
    b = np.array(b, dtype=float)
    x = np.zeros_like(b)
    for i in range(U.shape[0] - 1, -1, -1):
        x[i] = (b[i] - U[i, i + 1 :] @ x[i + 1 :]) / U[i, i]
    return x


def solve_generalized_eig(kappa, mu) -> Spectrum:
    """Solve ``kappa @ z = w * mu @ z`` for symmetric ``kappa`` and SPD ``mu``.

    Reduces to a standard problem with ``mu = L L^T``: the symmetric matrix
    ``L^-1 kappa L^-T`` is diagonalized by Jacobi and eigenvectors are mapped
    back through ``z = L^-T y``. The returned columns are mu-orthonormal,
    ``Z.T @ mu @ Z == I``.
    """
    kappa = as_symmetric(kappa, "kappa")
    mu = as_symmetric(mu, "mu")
    if kappa.shape != mu.shape:
        raise LinAlgError(f"dimension mismatch: kappa {kappa.shape} vs mu {mu.shape}")
    L = cholesky(mu)
    half = solve_lower(L, kappa)  # L^-1 kappa
    reduced = solve_lower(L, half.T)  # L^-1 kappa L^-T (kappa symmetric)
    reduced = 0.5 * (reduced + reduced.T)
    values, y = eigh_symmetric(reduced)
    z = solve_upper(L.T, y)
    return Spectrum(values, _fix_signs(z))


def determinant(a) -> float:
    """Product of the eigenvalues."""
    return float(np.prod(eigh_symmetric(a).eigenvalues))


def schur_complement(a, block_index: int) -> np.ndarray:
    """Eliminate row/column ``block_index``: ``a22 - a21 a11^-1 a12``."""
    a = as_symmetric(a)
    n = a.shape[0]
    if not 0 <= block_index < n:
        raise LinAlgError(f"block_index {block_index} out of range for dim {n}")
    pivot = a[block_index, block_index]
    if pivot == 0.0:
        raise LinAlgError(f"zero pivot at index {block_index}")
    keep = [i for i in range(n) if i != block_index]
    col = a[keep, block_index]
    out = a[np.ix_(keep, keep)] - np.outer(col, col) / pivot
    return 0.5 * (out + out.T)


def spectral_function(spectrum: Spectrum, fn) -> np.ndarray:
    """Rebuild ``V diag(fn(D)) V^T`` from an orthonormal eigendecomposition."""
    values, vectors = spectrum
    out = (vectors * fn(values)) @ vectors.T
    return 0.5 * (out + out.T)
