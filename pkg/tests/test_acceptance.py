"""End-to-end acceptance checks.

Each test prints one ``PASS``/``FAIL`` line with the worst observed error
and the wall time, then asserts. Run with ``pytest -s tests/test_acceptance.py``
to see only these lines, or ``-v`` to see them among the test names.
"""

import json
import math
import time

import numpy as np
import pytest

from thermo_entangle import epr_state as es
from thermo_entangle import hermite as hm
from thermo_entangle import measurement as ms
from thermo_entangle import oscillator_model as om
from thermo_entangle.cli import main
from thermo_entangle.linalg import determinant, eigh_symmetric
from thermo_entangle.verification import (
    SCHMIDT_PROBES,
    coupled_mode_errors,
    marginal_by_lattice,
    random_params,
    random_system,
)

SEED = 1234


@pytest.fixture
def report(capsys):
    start = time.perf_counter()

    def emit(number, title, checks, budget):
        """``checks`` maps a label to ``(error, tolerance)`` or a bool."""
        elapsed = time.perf_counter() - start
        ok = elapsed < budget
        parts = []
        for label, value in checks.items():
            if isinstance(value, bool):
                ok &= value
                parts.append(f"{label}={value}")
            else:
                err, tol = value
                ok &= err <= tol
                parts.append(f"{label}={err:.2e}<={tol:.0e}")
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {title}: {', '.join(parts)} [{elapsed:.2f}s < {budget:g}s]"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return emit


def test_criterion_01_unit_determinant(report):
    rng = np.random.default_rng([SEED, 1])
    worst = 0.0
    for _ in range(100):
        f = random_params(rng, int(rng.integers(1, 9)))
        worst = max(worst, abs(determinant(es.build_matrix_A(f).a) - 1.0))
    report(1, "det A = 1", {"det": (worst, 1e-9)}, budget=1.0)


def test_criterion_02_extreme_eigenvalues(report):
    rng = np.random.default_rng([SEED, 2])
    spec_err = prod_err = 0.0
    unit_ok = True
    for _ in range(100):
        f = random_params(rng, int(rng.integers(1, 9)))
        w, _ = eigh_symmetric(es.build_matrix_A(f).a)
        s = es.analytic_spectrum(f)
        spec_err = max(spec_err, abs(w[-1] - s.lambda_max), abs(w[0] - s.lambda_min))
        prod_err = max(prod_err, abs(s.lambda_max * s.lambda_min - 1.0))
        unit_ok &= int(np.sum(np.abs(w - 1.0) <= 1e-9)) == f.r - 1
    report(
        2,
        "extreme eigenvalues",
        {"spectrum": (spec_err, 1e-9), "product": (prod_err, 1e-12), "unit_count": unit_ok},
        budget=1.0,
    )


def test_criterion_03_schmidt_identity(report):
    worst = 0.0
    for r, (fvals, probes) in SCHMIDT_PROBES.items():
        f = es.ParamVector(fvals)
        assert f.r == r and f.f2 <= 0.5 and len(probes) == 5
        form = es.build_matrix_A(f)
        for x in probes:
            psi = es.truncated_wavefunction(f, x, 40)
            worst = max(worst, abs(psi * psi - es.gaussian_density(form, x)))
    report(3, "Schmidt identity", {"density": (worst, 1e-6)}, budget=30.0)


def test_criterion_04_hermite_and_mehler(report):
    rng = np.random.default_rng([SEED, 4])
    sum_err = 0.0
    for _ in range(50):
        r = int(rng.integers(1, 5))
        f = random_params(rng, r, 0.99).f
        coords = rng.uniform(-2.0, 2.0, size=r)
        sum_err = max(sum_err, hm.verify_hermite_sum(f, coords, int(rng.integers(0, 11))))
    mehler_err = 0.0
    for x in np.linspace(-0.8, 0.8, 9):
        for y, z in rng.uniform(-2.0, 2.0, size=(4, 2)):
            mehler_err = max(mehler_err, abs(hm.mehler_series(x, y, z, 200) - hm.mehler_kernel(x, y, z)))
    report(4, "Hermite sum and Mehler kernel", {"sum": (sum_err, 1e-10), "mehler": (mehler_err, 1e-10)}, budget=5.0)


def test_criterion_05_distribution_laws(report):
    rng = np.random.default_rng([SEED, 5])
    partial_err = 0.0
    for g in (0.0, 0.2, 0.5, 0.9):
        p = ms.ThermalParams(g)
        for cap in (0, 7, 60):
            partial = math.fsum(ms.pmf_total(p, n) for n in range(cap + 1))
            partial_err = max(partial_err, abs(partial - (1.0 - g ** (cap + 1))))

    factor_err = mean_err = 0.0
    for _ in range(100):
        f = random_params(rng, int(rng.integers(1, 5)), 0.9)
        p = ms.ThermalParams.from_state(f)
        idx = tuple(int(v) for v in rng.integers(0, 6, size=f.r))
        factor_err = max(
            factor_err, abs(ms.pmf_joint(f, p, idx) - ms.pmf_total(p, sum(idx)) * ms.pmf_conditional(f, idx))
        )
        means = [ms.mean_occupation(f, p, j) for j in range(1, f.r + 1)]
        mean_err = max(mean_err, abs(math.fsum(means) - ms.planck_mean(p)))
        for j, mean in enumerate(means, start=1):
            pi = ms.marginal_success(f, p, j)
            mean_err = max(mean_err, abs(mean - (1.0 - pi) / pi))

    marginal_err = 0.0
    for r, g in [(1, 0.7), (2, 0.6), (3, 0.4), (4, 0.25)]:
        direction = rng.uniform(0.2, 1.0, size=r)
        f = es.ParamVector(direction / np.linalg.norm(direction) * math.sqrt(g))
        p = ms.ThermalParams.from_state(f)
        for j in range(1, r + 1):
            for k in (0, 2):
                marginal_err = max(marginal_err, abs(marginal_by_lattice(f, j, k, 80) - ms.pmf_marginal(f, p, j, k)))
    report(
        5,
        "distribution laws",
        {
            "partial_sums": (partial_err, 1e-12),
            "factorization": (factor_err, 1e-14),
            "marginal": (marginal_err, 1e-10),
            "means": (mean_err, 1e-14),
        },
        budget=20.0,
    )


def test_criterion_06_monte_carlo(report):
    count, g = 200_000, 0.5
    f = es.ParamVector([math.sqrt(g / 2)] * 2)
    p = ms.ThermalParams(g)
    n_total, occ = ms.sample_arrays(f, p, count, seed=SEED)
    sigma = math.sqrt(g) / (1.0 - g) / math.sqrt(count)
    z = abs(n_total.mean() - ms.planck_mean(p)) / sigma
    p_values = [
        ms.compare_histogram(ms.scalar_histogram(occ[:, j - 1]), lambda k, j=j: ms.pmf_marginal(f, p, j, k)).p_value
        for j in (1, 2)
    ]
    report(
        6,
        "Monte Carlo",
        {"mean_z": (z, 3.0), "min_chi2_p_above_1e-3": min(p_values) > 1e-3},
        budget=10.0,
    )


def test_criterion_07_physical_model(report):
    rng = np.random.default_rng([SEED, 7])
    worst = dict.fromkeys(("eigen", "shape", "orthogonality", "lagrangian"), 0.0)
    for _ in range(200):
        errs = coupled_mode_errors(random_system(rng))
        for key in worst:
            worst[key] = max(worst[key], errs[key])
    report(
        7,
        "physical model",
        {
            "secular_roots": (worst["eigen"], 1e-9),
            "mode_shapes": (worst["shape"], 1e-9),
            "orthogonality": (worst["orthogonality"], 1e-9),
            "schur_oracle": (worst["lagrangian"], 1e-12),
        },
        budget=10.0,
    )


def test_criterion_08_limits(report):
    soft = heavy = 0.0
    for r, m, m0, M in [(1, 1.0, 1.0, 1.0), (3, 0.5, 2.0, 1.3), (8, 1.5, 0.7, 2.0)]:
        lam1, lam2 = om.coupled_lambdas(om.OscillatorSystem(r, m, m0, M, 1.0, 1e-8))
        soft = max(soft, abs(lam1 - (1.0 + r * m / m0)), max(lam2, 0.0))
    for r, m, M, k, chi in [(1, 1.0, 1.0, 1.0, 1.0), (2, 1.0, 2.0, 1.0, 0.7), (5, 0.5, 3.0, 2.0, 4.0)]:
        got = sorted(om.coupled_lambdas(om.OscillatorSystem(r, m, 1e9, M, k, chi)))
        want = sorted([1.0, chi * m / (k * M)])
        heavy = max(heavy, abs(got[0] - want[0]), abs(got[1] - want[1]))
    report(8, "limits", {"soft_spring": (soft, 1e-6), "heavy_partition": (heavy, 1e-6)}, budget=1.0)


def test_criterion_09_characteristic_temperature(report):
    theta_err = abs(om.temperature_from_xi(1.0, 1.0) - 1.3531)
    rows = om.fig2_curve(np.geomspace(0.05, 100.0, 100))
    ratio = np.array([row.mean_energy / row.theta for row in rows])
    report(
        9,
        "characteristic temperature",
        {
            "theta0": (theta_err, 2e-4),
            "classical_end": bool(ratio[-1] > 0.98),
            "quantum_end": bool(rows[0].mean_energy < rows[0].theta),
            "monotone": bool(np.all(np.diff(ratio) > 0)),
        },
        budget=1.0,
    )


def test_criterion_10_negative_control(report, capsys):
    code_ok = main(["verify"])
    ok_report = json.loads(capsys.readouterr().out)
    code_fault = main(["verify", "--fault", "detA"])
    fault_report = json.loads(capsys.readouterr().out)
    passing = sum(c["status"] == "pass" for c in ok_report["checks"])
    report(
        10,
        "negative control",
        {
            "default_exit_0": code_ok == 0,
            "at_least_12_passing": passing >= 12 and passing == len(ok_report["checks"]),
            "fault_exit_1": code_fault == 1,
            "fault_names_det_only": fault_report["failures"] == ["det_A"],
        },
        budget=60.0,
    )

