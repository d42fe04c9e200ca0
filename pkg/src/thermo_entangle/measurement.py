"""Probability laws produced by measuring an EPR-type state, plus samplers.

Measuring the distinguished particle yields a geometric law for the total
quantum number ``n``; given ``n``, the remaining occupations are multinomial
with weights ``p_j = f_j^2 / f^2``. Together they form a thermal joint law
whose one-particle marginals are again geometric.
"""

from __future__ import annotations

import math
import os
from collections import Counter
from collections.abc import Callable, Hashable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import stats

from .epr_state import ParamVector, check_multi_index, log_multinomial

__all__ = [
    "ThermalParams",
    "MeasurementSample",
    "Histogram",
    "scalar_histogram",
    "ChiSquare",
    "ConsistencyError",
    "pmf_total",
    "temperature_from_g",
    "planck_mean",
    "pmf_conditional",
    "pmf_joint",
    "pmf_marginal",
    "marginal_success",
    "mean_occupation",
    "mean_energy",
    "uniforms",
    "sample_arrays",
    "sample",
    "compare_histogram",
    "worker_count",
]

THREADS_ENV = "THERMO_ENTANGLE_THREADS"
MIN_EXPECTED = 5.0
G_MATCH_TOL = 1e-12


class ConsistencyError(ValueError):
    pass


@dataclass(frozen=True)
class ThermalParams:
    """Boltzmann factor ``g`` and energy unit; temperature is derived."""

    g: float
    hbar_omega: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.g < 1.0:
            raise ValueError(f"g must lie in [0, 1), got {self.g}")
        if not self.hbar_omega > 0.0:
            raise ValueError(f"hbar_omega must be positive, got {self.hbar_omega}")

    @classmethod
    def from_state(cls, f: ParamVector, hbar_omega: float = 1.0) -> ThermalParams:
        return cls(f.f2, hbar_omega)

    @classmethod
    def from_temperature(cls, theta: float, hbar_omega: float = 1.0) -> ThermalParams:
        if theta < 0.0:
            raise ValueError("temperature must be non-negative")
        g = 0.0 if theta == 0.0 else math.exp(-hbar_omega / theta)
        return cls(g, hbar_omega)

    @property
    def theta(self) -> float:
        return 0.0 if self.g == 0.0 else temperature_from_g(self.g, self.hbar_omega)


@dataclass(frozen=True)
class MeasurementSample:
    n_total: int
    occupations: tuple[int, ...]

    def __post_init__(self):
        if sum(self.occupations) != self.n_total:
            raise ValueError("occupations must sum to n_total")


@dataclass
class Histogram:
    counts: dict[Hashable, int] = field(default_factory=dict)
    total: int = 0

    @classmethod
    def from_values(cls, values: Iterable[Hashable]) -> Histogram:
        counts = Counter(values)
        return cls(dict(counts), sum(counts.values()))

    def __post_init__(self):
        if sum(self.counts.values()) != self.total:
            raise ValueError("histogram counts do not add up to total")


def scalar_histogram(values: Iterable[int]) -> Histogram:
    return Histogram.from_values(int(v) for v in values)


class ChiSquare(NamedTuple):
    chi2: float
    dof: int
    max_abs_dev: float
    p_value: float


def pmf_total(params: ThermalParams, n: int) -> float:
    """Geometric law ``(1 - g) g^n`` of the distinguished particle's level."""
    if n < 0:
        return 0.0
    if params.g == 0.0:
        return 1.0 if n == 0 else 0.0
    return (1.0 - params.g) * params.g**n


def temperature_from_g(g: float, hbar_omega: float = 1.0) -> float:
    """Temperature ``-hbar_omega / ln g``; ``g = 0`` maps to zero temperature."""
    if g == 0.0:
        return 0.0
    if not 0.0 < g < 1.0:
        raise ValueError(f"g must lie in (0, 1), got {g}")
    return -hbar_omega / math.log(g)


def planck_mean(params: ThermalParams) -> float:
    return params.g / (1.0 - params.g)


def pmf_conditional(f: ParamVector, idx: Sequence[int]) -> float:
    """Multinomial probability of sharing ``sum(idx)`` quanta as ``idx``."""
    idx = check_multi_index(idx, f.r)
    if sum(idx) == 0:
        return 1.0
    if f.f2 == 0.0:
        return 0.0
    log_p = log_multinomial(idx)
    for pj, kj in zip(f.weights, idx):
        if kj == 0:
            continue
        if pj == 0.0:
            return 0.0
        log_p += kj * math.log(pj)
    return math.exp(log_p)


def _check_g(f: ParamVector, params: ThermalParams) -> None:
    if abs(params.g - f.f2) > G_MATCH_TOL:
        raise ConsistencyError(
            f"thermal parameter g = {params.g!r} does not match the state's f^2 = {f.f2!r}"
        )


def pmf_joint(f: ParamVector, params: ThermalParams, idx: Sequence[int]) -> float:
    """Joint thermal law of all ``r`` occupations."""
    _check_g(f, params)
    idx = check_multi_index(idx, f.r)
    return pmf_total(params, sum(idx)) * pmf_conditional(f, idx)


def marginal_success(f: ParamVector, params: ThermalParams, j: int) -> float:
    """Success probability ``(1 - g) / (1 - g q_j)`` of particle ``j``'s geometric marginal.

    ``j`` is 1-based.
    """
    _check_g(f, params)
    if not 1 <= j <= f.r:
        raise IndexError(f"particle index {j} outside 1..{f.r}")
    g = params.g
    if g == 0.0:
        return 1.0
    q = 1.0 - f.weights[j - 1]
    return (1.0 - g) / (1.0 - g * q)


def pmf_marginal(f: ParamVector, params: ThermalParams, j: int, k: int) -> float:
    """Geometric marginal law of particle ``j`` (1-based) at level ``k``."""
    pi_j = marginal_success(f, params, j)
    if k < 0:
        return 0.0
    return pi_j * (1.0 - pi_j) ** k


def mean_occupation(f: ParamVector, params: ThermalParams, j: int) -> float:
    """Planck occupation ``p_j g / (1 - g)`` of particle ``j`` (1-based)."""
    _check_g(f, params)
    if not 1 <= j <= f.r:
        raise IndexError(f"particle index {j} outside 1..{f.r}")
    if params.g == 0.0:
        return 0.0
    return f.weights[j - 1] * planck_mean(params)


def mean_energy(f: ParamVector, params: ThermalParams, j: int) -> float:
    return params.hbar_omega * mean_occupation(f, params, j)


# -- sampling ---------------------------------------------------------------

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def uniforms(seed: int, indices: np.ndarray, draws: int) -> np.ndarray:
    """Uniform variates in ``(0, 1]`` from per-index SplitMix64 sub-streams.

    Split rule: sub-stream ``i`` is seeded with the ``i``-th output of the
    root SplitMix64 stream seeded by ``seed``; draw ``d`` of sub-stream ``i``
    is that stream's ``d``-th output. Every variate is therefore a pure
    function of ``(seed, i, d)``, independent of how indices are batched.
    Returns shape ``(len(indices), draws)``.
    """
    root = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    idx = np.asarray(indices, dtype=np.uint64)
    child = _mix64(root + (idx + np.uint64(1)) * _GAMMA)
    steps = np.arange(1, draws + 1, dtype=np.uint64) * _GAMMA
    bits = _mix64(child[:, None] + steps[None, :])
    return ((bits >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53


def _sample_block(f: ParamVector, g: float, seed: int, start: int, stop: int):
    r = f.r
    u = uniforms(seed, np.arange(start, stop), r)
    count = stop - start
    if g == 0.0:
        return np.zeros(count, dtype=np.int64), np.zeros((count, r), dtype=np.int64)
    # inverse-CDF geometric: P(n >= k) = g^k
    n_total = np.floor(np.log(u[:, 0]) / math.log(g)).astype(np.int64)
    occ = np.zeros((count, r), dtype=np.int64)
    remaining = n_total.copy()
    p = f.weights
    tail = np.concatenate([np.cumsum(p[::-1])[::-1], [0.0]])
    for j in range(r - 1):
        share = 0.0 if tail[j] == 0.0 else min(1.0, p[j] / tail[j])
        if share >= 1.0:
            k = remaining.copy()
        elif share <= 0.0:
            k = np.zeros_like(remaining)
        else:
            k = stats.binom.ppf(u[:, j + 1], remaining, share).astype(np.int64)
            np.minimum(k, remaining, out=k)
        occ[:, j] = k
        remaining -= k
    occ[:, r - 1] = remaining
    return n_total, occ


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValueError(f"{THREADS_ENV} must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


def sample_arrays(
    f: ParamVector,
    params: ThermalParams,
    count: int,
    seed: int,
    workers: int | None = None,
    block: int = 65536,
) -> tuple[np.ndarray, np.ndarray]:
    """Two-stage measurement draws as arrays ``(n_total, occupations)``.

    Stage one draws the total from the geometric law by inverse CDF; stage
    two splits it by sequential conditional binomials. Output depends only
    on ``(f, g, count, seed)``, never on ``workers`` or ``block``.
    """
    _check_g(f, params)
    if count < 1:
        raise ValueError("count must be >= 1")
    if workers is None:
        workers = worker_count()
    spans = [(s, min(s + block, count)) for s in range(0, count, block)]

    def run(span):
        return _sample_block(f, params.g, seed, *span)

    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, spans))
    else:
        parts = [run(s) for s in spans]
    return (
        np.concatenate([p[0] for p in parts]),
        np.concatenate([p[1] for p in parts]),
    )


def sample(
    f: ParamVector, params: ThermalParams, count: int, seed: int, workers: int | None = None
) -> list[MeasurementSample]:
    n_total, occ = sample_arrays(f, params, count, seed, workers)
    return [MeasurementSample(int(n), tuple(int(v) for v in row)) for n, row in zip(n_total, occ)]


# -- goodness of fit --------------------------------------------------------


def compare_histogram(
    h: Histogram,
    pmf: Callable[[Hashable], float],
    support: Iterable[Hashable] | None = None,
    min_expected: float = MIN_EXPECTED,
) -> ChiSquare:
    """Pearson chi-square of a histogram against an analytic law.

    Bins in ``support`` (default: ``0..max key`` for integer keys, else the
    observed keys) with expected count ``>= min_expected`` are tested
    individually; everything else is pooled into a single tail bin, which is
    merged into the smallest kept bin when its own expectation is too small.
    """
    if h.total < 1:
        raise ValueError("histogram is empty")
    if support is None:
        keys = list(h.counts)
        if keys and all(isinstance(k, (int, np.integer)) for k in keys):
            support = range(0, int(max(keys)) + 1)
        else:
            support = sorted(keys)
    kept_keys, expected, observed = [], [], []
    for key in support:
        e = h.total * pmf(key)
        if e >= min_expected:
            kept_keys.append(key)
            expected.append(e)
            observed.append(h.counts.get(key, 0))
    if not expected:
        raise ValueError(
            f"no bin reaches an expected count of {min_expected}; draw a larger sample"
        )
    expected = np.array(expected)
    observed = np.array(observed, dtype=float)
    tail_e = h.total - expected.sum()
    tail_o = h.total - observed.sum()
    if tail_e >= min_expected:
        expected = np.append(expected, tail_e)
        observed = np.append(observed, tail_o)
    else:
        i = int(np.argmin(expected))
        expected[i] += max(tail_e, 0.0)
        observed[i] += tail_o
    chi2 = float(np.sum((observed - expected) ** 2 / expected))
    dof = len(expected) - 1
    dev = float(np.max(np.abs(observed - expected)) / h.total)
    p_value = float(stats.chi2.sf(chi2, dof)) if dof > 0 else (1.0 if chi2 == 0.0 else 0.0)
    return ChiSquare(chi2, dof, dev, p_value)
