"""Multi-particle EPR-type oscillator states.

A state is seeded by ``r`` real parameters ``f`` inside the unit hypersphere.
Its Schmidt weights factor into a geometric law over the total quantum number
times a multinomial over how that total is shared, and its square is an
``(r+1)``-dimensional Gaussian with unit-determinant precision matrix ``A``.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .hermite import compositions, osc_eigenfunctions
from .linalg import Spectrum, eigh_symmetric, spectral_function

__all__ = [
    "ADMISSIBLE_F2",
    "MAX_TRUNCATION",
    "AdmissibilityError",
    "ParamVector",
    "VacuumForm",
    "AnalyticSpectrum",
    "check_multi_index",
    "multi_indices",
    "log_multinomial",
    "schmidt_weight",
    "schmidt_coefficient",
    "build_matrix_A",
    "analytic_spectrum",
    "covariance",
    "gaussian_density",
    "default_truncation",
    "truncated_wavefunction",
]

ADMISSIBLE_F2 = 1.0 - 1e-9
MAX_TRUNCATION = 60


class AdmissibilityError(ValueError):
    """Parameter vector lies outside the open unit hypersphere."""


@dataclass(frozen=True)
class ParamVector:
    f: tuple[float, ...]

    def __init__(self, f: Iterable[float]):
        values = tuple(float(v) for v in np.atleast_1d(np.asarray(f, dtype=float)))
        if len(values) < 1:
            raise AdmissibilityError("need at least one parameter")
        if not all(math.isfinite(v) for v in values):
            raise AdmissibilityError("parameters must be finite")
        f2 = math.fsum(v * v for v in values)
        if not f2 < ADMISSIBLE_F2:
            raise AdmissibilityError(
                f"parameter outside hypersphere: f^2 = {f2:.6g} must be < 1"
            )
        object.__setattr__(self, "f", values)

    @property
    def r(self) -> int:
        return len(self.f)

    @property
    def f2(self) -> float:
        return math.fsum(v * v for v in self.f)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.f)

    @property
    def weights(self) -> np.ndarray:
        """Sharing probabilities ``p_j = f_j^2 / f^2``."""
        f2 = self.f2
        if f2 == 0.0:
            raise AdmissibilityError("sharing weights undefined for f^2 = 0")
        return self.array**2 / f2


class AnalyticSpectrum(NamedTuple):
    lambda_max: float
    lambda_min: float
    v_max: np.ndarray
    v_min: np.ndarray


@dataclass(frozen=True)
class VacuumForm:
    """Precision matrix ``A`` of the squared vacuum wavefunction."""

    a: np.ndarray
    r: int

    @cached_property
    def spectrum(self) -> Spectrum:
        return eigh_symmetric(self.a)


def check_multi_index(idx: Sequence[int], r: int | None = None) -> tuple[int, ...]:
    out = tuple(int(n) for n in idx)
    if any(n < 0 for n in out) or any(int(n) != n for n in idx):
        raise ValueError(f"occupation numbers must be non-negative integers, got {idx}")
    if r is not None and len(out) != r:
        raise ValueError(f"multi-index has length {len(out)}, expected {r}")
    return out


def multi_indices(r: int, max_total: int) -> Iterator[tuple[int, ...]]:
    """All occupation tuples with total ``<= max_total``, by total then lex."""
    for n in range(max_total + 1):
        yield from compositions(n, r)


def log_multinomial(idx: Sequence[int]) -> float:
    return math.lgamma(sum(idx) + 1) - math.fsum(math.lgamma(n + 1) for n in idx)


def _log_abs_power_product(f: Sequence[float], idx: Sequence[int]) -> float:
    # log prod |f_i|^{n_i}; -inf when a zero parameter carries occupation
    total = 0.0
    for fi, ni in zip(f, idx):
        if ni == 0:
            continue
        if fi == 0.0:
            return -math.inf
        total += ni * math.log(abs(fi))
    return total


def schmidt_weight(f: ParamVector, idx: Sequence[int]) -> float:
    """Weight ``(1 - f^2) prod (f_i^2)^{n_i} * multinomial(n)`` of one product term."""
    idx = check_multi_index(idx, f.r)
    log_pow = _log_abs_power_product(f.f, idx)
    if log_pow == -math.inf:
        return 0.0
    return math.exp(math.log1p(-f.f2) + 2.0 * log_pow + log_multinomial(idx))


def schmidt_coefficient(f: ParamVector, idx: Sequence[int]) -> float:
    """Signed square root of :func:`schmidt_weight`; sign of ``prod f_i^{n_i}``."""
    idx = check_multi_index(idx, f.r)
    negative = sum(n for fi, n in zip(f.f, idx) if fi < 0.0) % 2 == 1
    mag = math.sqrt(schmidt_weight(f, idx))
    return -mag if negative else mag


def build_matrix_A(f: ParamVector) -> VacuumForm:
    r = f.r
    v = f.array
    denom = 1.0 - f.f2
    a = np.empty((r + 1, r + 1))
    a[:r, :r] = np.eye(r) + 2.0 * np.outer(v, v) / denom
    a[:r, r] = a[r, :r] = -2.0 * v / denom
    a[r, r] = (1.0 + f.f2) / denom
    return VacuumForm(a=a, r=r)


def analytic_spectrum(f: ParamVector) -> AnalyticSpectrum:
    """Closed-form extreme eigenpairs of ``A``.

    The remaining ``r - 1`` eigenvalues are 1, with eigenvectors spanning the
    complement of ``f`` inside the first ``r`` coordinates.
    """
    f2 = f.f2
    if f2 == 0.0:
        raise ValueError("extreme eigenvectors undefined for f^2 = 0")
    norm = math.sqrt(f2)
    lam_max = (1.0 + norm) ** 2 / (1.0 - f2)
    lam_min = (1.0 - norm) ** 2 / (1.0 - f2)
    head = f.array / math.sqrt(2.0 * f2)
    tail = 1.0 / math.sqrt(2.0)
    v_max = np.append(-head, tail)
    v_min = np.append(head, tail)
    return AnalyticSpectrum(lam_max, lam_min, v_max, v_min)


def covariance(form: VacuumForm) -> np.ndarray:
    """``Sigma = A^-1 / 2`` via the eigendecomposition."""
    return spectral_function(form.spectrum, lambda d: 0.5 / d)


def gaussian_density(form: VacuumForm, x: Sequence[float]) -> float:
    """``pi^{-(r+1)/2} exp(-x^T A x)``; the prefactor relies on ``det A = 1``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (form.r + 1,):
        raise ValueError(f"point must have length {form.r + 1}")
    q = float(x @ form.a @ x)
    return math.pi ** (-(form.r + 1) / 2.0) * math.exp(-q)


def default_truncation(f: ParamVector, tail: float = 1e-10) -> int:
    """Smallest order with ``(f^2)^{n+1} < tail``, capped at ``MAX_TRUNCATION``."""
    f2 = f.f2
    if f2 == 0.0:
        return 0
    n = math.ceil(math.log(tail) / math.log(f2)) - 1
    while f2 ** (n + 1) >= tail:
        n += 1
    return max(0, min(n, MAX_TRUNCATION))


def truncated_wavefunction(f: ParamVector, x: Sequence[float], n_max: int | None = None) -> float:
    """Partial Schmidt sum over all occupations with total ``<= n_max``.

    The distinguished last particle carries the total quantum number.
    """
    if n_max is None:
        n_max = default_truncation(f)
    if not 0 <= n_max <= MAX_TRUNCATION:
        raise ValueError(f"n_max must lie in [0, {MAX_TRUNCATION}], got {n_max}")
    x = np.asarray(x, dtype=float)
    r = f.r
    if x.shape != (r + 1,):
        raise ValueError(f"point must have length {r + 1}")
    psi = osc_eigenfunctions(n_max, x)  # (n_max+1, r+1)
    terms = []
    for idx in multi_indices(r, n_max):
        c = schmidt_coefficient(f, idx)
        if c == 0.0:
            continue
        prod = c * psi[sum(idx), r]
        for j, n in enumerate(idx):
            prod *= psi[n, j]
        terms.append(prod)
    return math.fsum(terms)
