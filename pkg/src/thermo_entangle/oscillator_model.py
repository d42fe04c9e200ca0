"""Partition-coupled oscillator model.

``r`` identical oscillators (mass ``m``, rigidity ``k``) and one detector
oscillator (mass ``M``, rigidity ``chi``) hang on a free partition of mass
``m0``. Eliminating the partition coordinate under zero total momentum leaves
an ``(r+1)``-dimensional problem in the spring deformations ``z``.

Frequencies are reported in the dimensionless form ``lambda = omega^2 m / k``.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .linalg import eigh_symmetric, schur_complement, solve_generalized_eig, spectral_function

__all__ = [
    "UNIT_TOL",
    "ModelError",
    "OscillatorSystem",
    "ModeSet",
    "SecularCoefficients",
    "Fig2Row",
    "kinetic_matrix",
    "reduced_mass_matrix",
    "mass_matrix",
    "stiffness_matrix",
    "secular_coefficients",
    "coupled_lambdas",
    "displacement_ratio",
    "normal_modes",
    "vacuum_matrix",
    "mass_weighted",
    "boltzmann_factor_from_xi",
    "temperature_from_xi",
    "fig2_curve",
]

UNIT_TOL = 1e-9
SOFT_MODE_TOL = 1e-12
DISCRIMINANT_TOL = 1e-12


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class OscillatorSystem:
    r: int
    m: float = 1.0
    m0: float = 1.0
    M: float = 1.0
    k: float = 1.0
    chi: float = 1.0

    def __post_init__(self):
        if int(self.r) != self.r or self.r < 1:
            raise ModelError(f"r must be a positive integer, got {self.r}")
        for name in ("m", "m0", "M", "k"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ModelError(f"{name} must be positive, got {value}")
        if not (math.isfinite(self.chi) and self.chi >= 0.0):
            raise ModelError(f"chi must be non-negative, got {self.chi}")

    @property
    def total_mass(self) -> float:
        return self.M + self.r * self.m + self.m0

    @property
    def xi(self) -> float:
        """Ratio ``r m / m0`` of oscillator mass to partition mass."""
        return self.r * self.m / self.m0


class SecularCoefficients(NamedTuple):
    a: float
    b: float
    c: float


@dataclass(frozen=True)
class ModeSet:
    """Normal modes in descending ``lambda`` order.

    ``modes`` holds one displacement vector per column, scaled so its
    largest-magnitude component is ``+1``; modal masses and rigidities are
    the quadratic forms of the mass and stiffness matrices on those columns.
    """

    lambdas: np.ndarray
    modes: np.ndarray
    modal_masses: np.ndarray
    modal_rigidities: np.ndarray
    soft: np.ndarray

    def unit_count(self, tol: float = UNIT_TOL) -> int:
        return int(np.sum(np.abs(self.lambdas - 1.0) <= tol))

    def coupled(self) -> np.ndarray:
        """Mask of modes that move the detector (last component)."""
        return np.abs(self.modes[-1]) > 1e-6


def kinetic_matrix(sys: OscillatorSystem) -> np.ndarray:
    """Kinetic form in ``(x0, z_1..z_r, z_{r+1})`` before eliminating the partition."""
    r, m, M = sys.r, sys.m, sys.M
    K = np.zeros((r + 2, r + 2))
    K[0, 0] = sys.total_mass
    K[0, 1 : r + 1] = K[1 : r + 1, 0] = m
    K[0, r + 1] = K[r + 1, 0] = -M
    K[np.arange(1, r + 1), np.arange(1, r + 1)] = m
    K[r + 1, r + 1] = M
    return K


def reduced_mass_matrix(sys: OscillatorSystem) -> np.ndarray:
    """Mass matrix obtained by eliminating ``x0`` from the kinetic form."""
    return schur_complement(kinetic_matrix(sys), 0)


def mass_matrix(sys: OscillatorSystem) -> np.ndarray:
    r, m, M = sys.r, sys.m, sys.M
    T = sys.total_mass
    mu = np.full((r + 1, r + 1), -m * m / T)
    mu[np.arange(r), np.arange(r)] = m * (1.0 - m / T)
    mu[:r, r] = mu[r, :r] = M * m / T
    mu[r, r] = M * (r * m + sys.m0) / T
    return mu


def stiffness_matrix(sys: OscillatorSystem) -> np.ndarray:
    return np.diag([sys.k] * sys.r + [sys.chi])


def secular_coefficients(sys: OscillatorSystem) -> SecularCoefficients:
    r, m, m0, M = sys.r, sys.m, sys.m0, sys.M
    T = sys.total_mass
    ratio = sys.chi / sys.k
    a = (r * m + m0) / m - M * r / (M + m0)
    b = -T * (ratio / M + (r * m + m0) / (m * (M + m0)))
    c = ratio * T * T / (M * (M + m0))
    return SecularCoefficients(a, b, c)


def coupled_lambdas(sys: OscillatorSystem) -> tuple[float, float]:
    """Roots of the secular quadratic, larger first.

    The larger-magnitude root comes from the cancellation-free branch and
    the other from Vieta, ``c / (a * lambda_1)``.
    """
    a, b, c = secular_coefficients(sys)
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        if disc < -DISCRIMINANT_TOL * b * b:
            raise ModelError(f"negative discriminant {disc!r}: inconsistent model")
        disc = 0.0
    big = (-b + math.copysign(math.sqrt(disc), -b)) / (2.0 * a)
    small = c / (a * big) if big != 0.0 else 0.0
    return (big, small) if big >= small else (small, big)


def displacement_ratio(sys: OscillatorSystem, lam: float) -> float:
    """Detector-to-oscillator amplitude ratio ``z_{r+1} / z_1`` of a coupled mode."""
    if lam == 0.0:
        raise ModelError("soft mode (lambda = 0): displacement ratio is infinite")
    return (sys.total_mass / lam - (sys.M + sys.m0)) / sys.M


def normal_modes(sys: OscillatorSystem) -> ModeSet:
    """Normal modes from the generalized problem ``kappa z = omega^2 mu z``."""
    mu = mass_matrix(sys)
    kappa = stiffness_matrix(sys)
    omega2, z = solve_generalized_eig(kappa, mu)
    lambdas = omega2 * sys.m / sys.k
    soft = np.abs(lambdas) <= SOFT_MODE_TOL * max(1.0, float(np.max(np.abs(lambdas))))
    lambdas = np.where(soft, 0.0, lambdas)

    order = np.argsort(-lambdas, kind="stable")
    lambdas, z, soft = lambdas[order], z[:, order], soft[order]
    peak = z[np.argmax(np.abs(z), axis=0), np.arange(z.shape[1])]
    z = z / peak
    masses = np.einsum("is,ij,js->s", z, mu, z)
    rigidities = np.einsum("is,ij,js->s", z, kappa, z)
    return ModeSet(lambdas, z, masses, rigidities, soft)


def vacuum_matrix(sys: OscillatorSystem, modes: ModeSet | None = None) -> np.ndarray:
    """Vacuum precision matrix ``V sqrt(D) V^T`` of the coupled system.

    ``V`` holds the normal modes normalized to ``v^T (mu / m) v = 1`` and
    ``D`` the dimensionless ``lambda``. With this normalization the matrix
    reduces to the identity for decoupled unit oscillators, and the
    eigenvalues of ``(mu/m)^{1/2} A (mu/m)^{1/2}`` are ``sqrt(lambda)``.
    Soft modes (``chi = 0``) are left out, so ``A`` is then singular.
    """
    if modes is None:
        modes = normal_modes(sys)
    if np.any(modes.lambdas[~modes.soft] <= 0.0):
        raise ModelError("unstable mode: lambda must be positive")
    mu_rel = mass_matrix(sys) / sys.m
    kept = modes.modes[:, ~modes.soft]
    norms = np.sqrt(np.einsum("is,ij,js->s", kept, mu_rel, kept))
    V = kept / norms
    A = (V * np.sqrt(modes.lambdas[~modes.soft])) @ V.T
    return 0.5 * (A + A.T)


def mass_weighted(sys: OscillatorSystem, A: np.ndarray) -> np.ndarray:
    """``(mu/m)^{1/2} A (mu/m)^{1/2}``, whose spectrum is ``sqrt(lambda)``."""
    root = spectral_function(eigh_symmetric(mass_matrix(sys) / sys.m), np.sqrt)
    out = root @ A @ root
    return 0.5 * (out + out.T)


def boltzmann_factor_from_xi(xi: float) -> float:
    """``g = ((1+xi)^{3/2} - 1) / ((1+xi)^{3/2} + 1)``."""
    if not xi > 0.0:
        raise ValueError(f"xi must be positive, got {xi}")
    s = (1.0 + xi) ** 1.5
    return (s - 1.0) / (s + 1.0)


def temperature_from_xi(xi: float, hbar_omega: float = 1.0) -> float:
    """Entanglement temperature of the weakly measured partition system.

    Tends to zero as ``xi -> 0+`` (infinitely heavy partition).
    """
    if not xi > 0.0:
        raise ValueError(f"xi must be positive, got {xi}")
    s = (1.0 + xi) ** 1.5
    return hbar_omega / math.log((s + 1.0) / (s - 1.0))


class Fig2Row(NamedTuple):
    xi: float
    theta: float
    mean_energy: float


def fig2_curve(xi_grid: Sequence[float], hbar_omega: float = 1.0) -> list[Fig2Row]:
    """Temperature and Planck excitation energy along a grid of ``xi``."""
    rows = []
    for xi in xi_grid:
        xi = float(xi)
        if not xi > 0.0:
            raise ValueError(f"xi must be positive, got {xi}")
        theta = temperature_from_xi(xi, hbar_omega)
        g = boltzmann_factor_from_xi(xi)
        rows.append(Fig2Row(xi, theta, hbar_omega * g / (1.0 - g)))
    return rows
