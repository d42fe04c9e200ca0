"""Named invariant checks across all modules.

Each check computes a worst-case error over a deterministic set of probes
and compares it with its tolerance. ``run_checks`` is what ``verify`` runs.
"""

from __future__ import annotations

import math
import time
from collections.abc import Callable
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import gammaln

from . import epr_state as es
from . import hermite as hm
from . import measurement as ms
from . import oscillator_model as om
from .linalg import determinant, eigh_symmetric, solve_generalized_eig

FAULTS = ("detA",)
DEFAULT_SEED = 20240601


@dataclass
class CheckResult:
    name: str
    error: float
    tolerance: float
    passed: bool
    seconds: float

    def to_dict(self) -> dict:
        return asdict(self)


def random_params(rng: np.random.Generator, r: int, f2_max: float = 0.95) -> es.ParamVector:
    """Random parameter vector with ``f^2`` uniform in ``(0.01, f2_max)``."""
    direction = rng.normal(size=r)
    direction /= np.linalg.norm(direction)
    f2 = rng.uniform(0.01, f2_max)
    return es.ParamVector(direction * math.sqrt(f2))


def random_system(rng: np.random.Generator, r_max: int = 8) -> om.OscillatorSystem:
    r = int(rng.integers(1, r_max + 1))
    m, m0, M, k, chi = np.exp(rng.uniform(math.log(0.25), math.log(4.0), size=5))
    return om.OscillatorSystem(r, m, m0, M, k, chi)


# -- check bodies: each returns a worst-case error ---------------------------


def check_det_a(rng, fault=None):
    worst = 0.0
    for _ in range(100):
        f = random_params(rng, int(rng.integers(1, 9)))
        a = es.build_matrix_A(f).a.copy()
        if fault == "detA":
            a[0, 0] += 1e-3
        worst = max(worst, abs(determinant(a) - 1.0))
    return worst


def check_extreme_eigenvalues(rng, fault=None):
    worst = 0.0
    for _ in range(50):
        f = random_params(rng, int(rng.integers(1, 9)))
        values = es.build_matrix_A(f).spectrum.eigenvalues
        lam_max, lam_min, _, _ = es.analytic_spectrum(f)
        worst = max(worst, abs(values[-1] - lam_max), abs(values[0] - lam_min))
    return worst


def check_eigen_product(rng, fault=None):
    worst = 0.0
    for _ in range(50):
        f = random_params(rng, int(rng.integers(1, 9)))
        lam_max, lam_min, _, _ = es.analytic_spectrum(f)
        worst = max(worst, abs(lam_max * lam_min - 1.0))
    return worst


def unit_eigen_error(f: es.ParamVector) -> float:
    """Worst deviation in the unit-eigenvalue block of ``A``.

    Covers the values themselves, a zero last component for every unit
    eigenvector, and orthogonality of that subspace to both analytic
    extreme eigenvectors.
    """
    r = f.r
    values, vectors = es.build_matrix_A(f).spectrum
    analytic = es.analytic_spectrum(f)
    worst = abs(values[-1] - analytic.lambda_max)
    if r == 1:
        return worst
    unit = vectors[:, 1:-1]
    worst = max(worst, float(np.max(np.abs(values[1:-1] - 1.0))))
    worst = max(worst, float(np.max(np.abs(unit[r]))))
    for v in (analytic.v_max, analytic.v_min):
        worst = max(worst, float(np.max(np.abs(unit.T @ v))))
    return worst


def check_unit_eigenvalues(rng, fault=None):
    return max(unit_eigen_error(random_params(rng, int(rng.integers(2, 9)))) for _ in range(50))


def check_schmidt_normalization(rng, fault=None):
    worst = 0.0
    for _ in range(10):
        r = int(rng.integers(1, 4))
        f = random_params(rng, r, 0.9)
        n_cap = int(rng.integers(0, 31))
        total = math.fsum(es.schmidt_weight(f, idx) for idx in es.multi_indices(r, n_cap))
        worst = max(worst, abs(total - (1.0 - f.f2 ** (n_cap + 1))))
    return worst


SCHMIDT_PROBES = {
    1: ([0.7], [(0.0, 0.0), (0.3, 0.3), (-0.5, 0.8), (1.1, -0.2), (0.4, 1.3)]),
    2: (
        [0.5, -0.45],
        [(0.0, 0.0, 0.0), (0.3, -0.2, 0.5), (-0.7, 0.1, 0.2), (1.0, 0.6, -0.4), (0.2, 0.9, 1.1)],
    ),
    3: (
        [0.4, 0.3, 0.2],
        [
            (0.0, 0.0, 0.0, 0.0),
            (0.5, -0.2, 0.1, 0.7),
            (-0.6, 0.4, 0.3, -0.1),
            (0.2, 0.8, -0.5, 0.9),
            (1.0, 0.0, 0.3, 0.6),
        ],
    ),
}


def check_schmidt_identity(rng, fault=None, n_max: int = 40):
    worst = 0.0
    for fvals, probes in SCHMIDT_PROBES.values():
        f = es.ParamVector(fvals)
        form = es.build_matrix_A(f)
        for x in probes:
            psi = es.truncated_wavefunction(f, x, n_max)
            worst = max(worst, abs(psi * psi - es.gaussian_density(form, x)))
    return worst


def check_hermite_sum(rng, fault=None):
    worst = 0.0
    for _ in range(50):
        r = int(rng.integers(1, 5))
        f = random_params(rng, r, 0.99).f
        coords = rng.uniform(-2.0, 2.0, size=r)
        n = int(rng.integers(0, 11))
        worst = max(worst, hm.verify_hermite_sum(f, coords, n))
    return worst


def check_mehler(rng, fault=None):
    worst = 0.0
    for _ in range(30):
        x = rng.uniform(-0.8, 0.8)
        y, z = rng.uniform(-2.0, 2.0, size=2)
        exact = hm.mehler_kernel(x, y, z)
        worst = max(worst, abs(hm.mehler_series(x, y, z, 200) - exact))
    return worst


def check_hermite_orthonormality(rng, fault=None):
    grid = np.linspace(-12.0, 12.0, 200)
    psi = hm.osc_eigenfunctions(12, grid)
    gram = trapezoid(psi[:, None, :] * psi[None, :, :], grid, axis=-1)
    return float(np.max(np.abs(gram - np.eye(13))))


def check_total_normalization(rng, fault=None):
    worst = 0.0
    for g in (0.0, 0.1, 0.5, 0.9, 0.99):
        params = ms.ThermalParams(g)
        for n_cap in (0, 5, 40):
            partial = math.fsum(ms.pmf_total(params, n) for n in range(n_cap + 1))
            worst = max(worst, abs(partial - (1.0 - g ** (n_cap + 1))))
    return worst


def check_joint_factorization(rng, fault=None):
    worst = 0.0
    for _ in range(200):
        r = int(rng.integers(1, 5))
        f = random_params(rng, r, 0.9)
        params = ms.ThermalParams.from_state(f)
        idx = tuple(int(v) for v in rng.integers(0, 6, size=r))
        joint = ms.pmf_joint(f, params, idx)
        factored = ms.pmf_total(params, sum(idx)) * ms.pmf_conditional(f, idx)
        direct = float(joint_law_direct(f, f.f2, np.array([idx]))[0])
        worst = max(worst, abs(joint - factored), abs(joint - direct))
    return worst


def lattice(dims: int, max_total: int) -> np.ndarray:
    """All non-negative integer points of ``dims`` coordinates with sum ``<= max_total``."""
    if dims == 0:
        return np.zeros((1, 0), dtype=np.int64)
    axes = np.meshgrid(*[np.arange(max_total + 1)] * dims, indexing="ij")
    pts = np.stack([a.ravel() for a in axes], axis=1)
    return pts[pts.sum(axis=1) <= max_total]


def joint_law_direct(f: es.ParamVector, g: float, idx: np.ndarray) -> np.ndarray:
    """Joint thermal law evaluated term by term on rows of ``idx``.

    ``(1 - g) * multinomial(k) * g^{sum k} * prod p_j^{k_j}`` in log space,
    without going through the factored geometric-times-multinomial path.
    """
    p = f.weights
    n = idx.sum(axis=1)
    log_terms = gammaln(n + 1) - gammaln(idx + 1).sum(axis=1) + n * math.log(g)
    with np.errstate(divide="ignore"):
        log_terms = log_terms + (idx * np.log(p)).sum(axis=1, where=idx > 0)
    return (1.0 - g) * np.exp(log_terms)


def marginal_by_lattice(f: es.ParamVector, j: int, k: int, total: int) -> float:
    """Sum the joint law over all other occupations, overall total ``<= total``."""
    rest = lattice(f.r - 1, total - k)
    idx = np.insert(rest, j - 1, k, axis=1)
    return math.fsum(joint_law_direct(f, f.f2, idx))


def check_marginal_oracle(rng, fault=None, total: int = 80):
    worst = 0.0
    cases = [(1, 0.7), (2, 0.5), (3, 0.3), (4, 0.2)]
    for r, g in cases:
        direction = rng.uniform(0.2, 1.0, size=r)
        f = es.ParamVector(direction / np.linalg.norm(direction) * math.sqrt(g))
        params = ms.ThermalParams.from_state(f)
        for j in range(1, r + 1):
            for k in (0, 1, 3):
                summed = marginal_by_lattice(f, j, k, total)
                worst = max(worst, abs(summed - ms.pmf_marginal(f, params, j, k)))
    return worst


def check_mean_consistency(rng, fault=None):
    worst = 0.0
    for _ in range(50):
        r = int(rng.integers(1, 6))
        f = random_params(rng, r, 0.9)
        params = ms.ThermalParams.from_state(f)
        means = [ms.mean_occupation(f, params, j) for j in range(1, r + 1)]
        for j, mean in enumerate(means, start=1):
            pi_j = ms.marginal_success(f, params, j)
            worst = max(worst, abs(mean - (1.0 - pi_j) / pi_j))
        worst = max(worst, abs(math.fsum(means) - ms.planck_mean(params)))
    return worst


def coupled_mode_errors(sys: om.OscillatorSystem) -> dict[str, float]:
    """Cross-check one system's modes against the secular solution."""
    modes = om.normal_modes(sys)
    r = sys.r
    roots = om.coupled_lambdas(sys)
    expected = np.sort(np.array(list(roots) + [1.0] * (r - 1)))
    eig_err = float(np.max(np.abs(np.sort(modes.lambdas) - expected)))

    # the predicted shape (1, .., 1, ratio) must lie in the eigenspace of its
    # root; a root can coincide with the unit block, so test the whole span
    shape_err = 0.0
    for lam in roots:
        span = modes.modes[:, np.abs(modes.lambdas - lam) <= 1e-7 * max(1.0, abs(lam))]
        if span.shape[1] == 0:
            shape_err = math.inf
            continue
        z = np.ones(r + 1)
        z[r] = om.displacement_ratio(sys, lam)
        coef, *_ = np.linalg.lstsq(span, z, rcond=None)
        shape_err = max(shape_err, float(np.max(np.abs(span @ coef - z))) / float(np.max(np.abs(z))))

    mu = om.mass_matrix(sys)
    kappa = om.stiffness_matrix(sys)
    Z = modes.modes
    off = ~np.eye(r + 1, dtype=bool)
    gram_mu = Z.T @ mu @ Z
    gram_k = Z.T @ kappa @ Z
    ortho_err = float(max(np.max(np.abs(gram_mu[off])), np.max(np.abs(gram_k[off]))))
    lagrange_err = float(np.max(np.abs(mu - om.reduced_mass_matrix(sys))))
    modal_err = float(
        np.max(np.abs(modes.modal_rigidities / modes.modal_masses * sys.m / sys.k - modes.lambdas))
    )
    return {
        "eigen": eig_err,
        "shape": shape_err,
        "orthogonality": ortho_err,
        "lagrangian": lagrange_err,
        "modal": modal_err,
    }


def _system_sweep(rng, key: str, count: int = 200) -> float:
    return max(coupled_mode_errors(random_system(rng))[key] for _ in range(count))


def check_secular_vs_generalized(rng, fault=None):
    return _system_sweep(rng, "eigen")


def check_mode_shapes(rng, fault=None):
    return _system_sweep(rng, "shape")


def check_mode_orthogonality(rng, fault=None):
    return _system_sweep(rng, "orthogonality")


def check_lagrangian_reduction(rng, fault=None):
    return _system_sweep(rng, "lagrangian")


def check_modal_consistency(rng, fault=None):
    return _system_sweep(rng, "modal")


def check_generalized_residual(rng, fault=None):
    worst = 0.0
    for _ in range(100):
        sys = random_system(rng)
        mu, kappa = om.mass_matrix(sys), om.stiffness_matrix(sys)
        w, Z = solve_generalized_eig(kappa, mu)
        resid = kappa @ Z - mu @ Z * w
        worst = max(worst, float(np.max(np.abs(resid))) / float(np.max(np.abs(kappa))))
    return worst


def check_jacobi_reconstruction(rng, fault=None):
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 12))
        a = rng.normal(size=(n, n))
        a = a + a.T
        w, v = eigh_symmetric(a)
        worst = max(worst, float(np.max(np.abs((v * w) @ v.T - a))) / (1.0 + np.max(np.abs(a))))
    return worst


def check_limits(rng, fault=None):
    worst = 0.0
    for r, m, m0 in [(1, 1.0, 1.0), (3, 0.5, 2.0), (6, 1.5, 0.7)]:
        lam1, lam2 = om.coupled_lambdas(om.OscillatorSystem(r, m, m0, 1.3, 1.0, 1e-8))
        worst = max(worst, abs(lam1 - (1.0 + r * m / m0)), abs(lam2))
    for r, m, M, k, chi in [(1, 1.0, 1.0, 1.0, 1.0), (3, 1.0, 2.0, 1.0, 0.7), (5, 0.5, 3.0, 2.0, 4.0)]:
        lams = sorted(om.coupled_lambdas(om.OscillatorSystem(r, m, 1e9, M, k, chi)))
        expected = sorted([1.0, chi * m / (k * M)])
        worst = max(worst, abs(lams[0] - expected[0]), abs(lams[1] - expected[1]))
    return worst


CHARACTERISTIC_THETA = 1.3531


def check_characteristic_temperature(rng, fault=None):
    return abs(om.temperature_from_xi(1.0, 1.0) - CHARACTERISTIC_THETA)


@dataclass(frozen=True)
class Check:
    name: str
    tolerance: float
    run: Callable


CHECKS: tuple[Check, ...] = (
    Check("jacobi_reconstruction", 1e-10, check_jacobi_reconstruction),
    Check("generalized_residual", 1e-9, check_generalized_residual),
    Check("det_A", 1e-9, check_det_a),
    Check("extreme_eigenvalues", 1e-9, check_extreme_eigenvalues),
    Check("eigen_product", 1e-12, check_eigen_product),
    Check("unit_eigenvalues", 1e-9, check_unit_eigenvalues),
    Check("schmidt_normalization", 1e-12, check_schmidt_normalization),
    Check("schmidt_identity", 1e-6, check_schmidt_identity),
    Check("hermite_sum", 1e-10, check_hermite_sum),
    Check("mehler_kernel", 1e-10, check_mehler),
    Check("hermite_orthonormality", 1e-8, check_hermite_orthonormality),
    Check("total_normalization", 1e-12, check_total_normalization),
    Check("joint_factorization", 1e-14, check_joint_factorization),
    Check("marginal_oracle", 1e-10, check_marginal_oracle),
    Check("mean_consistency", 1e-14, check_mean_consistency),
    Check("secular_vs_generalized", 1e-9, check_secular_vs_generalized),
    Check("coupled_mode_shapes", 1e-9, check_mode_shapes),
    Check("mode_orthogonality", 1e-9, check_mode_orthogonality),
    Check("lagrangian_reduction", 1e-12, check_lagrangian_reduction),
    Check("modal_consistency", 1e-9, check_modal_consistency),
    Check("limit_laws", 1e-6, check_limits),
    Check("characteristic_temperature", 2e-4, check_characteristic_temperature),
)


def run_checks(
    seed: int = DEFAULT_SEED,
    tol: float | None = None,
    fault: str | None = None,
    names: list[str] | None = None,
) -> list[CheckResult]:
    """Run every check (or the named subset); ``tol`` overrides all tolerances."""
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; expected one of {FAULTS}")
    results = []
    for i, check in enumerate(CHECKS):
        if names is not None and check.name not in names:
            continue
        rng = np.random.default_rng([seed, i])
        tolerance = check.tolerance if tol is None else tol
        start = time.perf_counter()
        error = float(check.run(rng, fault))
        elapsed = time.perf_counter() - start
        results.append(CheckResult(check.name, error, tolerance, error <= tolerance, elapsed))
    return results
