import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from thermo_entangle.linalg import (
    LinAlgError,
    NotPositiveDefiniteError,
    cholesky,
    determinant,
    eigh_symmetric,
    schur_complement,
    solve_generalized_eig,
)

SQ8 = 2.0 * math.sqrt(2.0)


def test_identity_spectrum():
    w, v = eigh_symmetric(np.eye(3))
    np.testing.assert_array_equal(w, [1.0, 1.0, 1.0])
    # permutation of identity columns, all entries 0 or 1
    assert set(np.abs(v).ravel()) <= {0.0, 1.0}
    np.testing.assert_array_equal(np.abs(v).sum(axis=0), [1, 1, 1])


def test_two_by_two_by_hand():
    # roots of (3 - t)^2 - 8 = 0 are 3 -+ 2 sqrt 2
    w, v = eigh_symmetric([[3.0, -SQ8], [-SQ8, 3.0]])
    np.testing.assert_allclose(w, [3.0 - SQ8, 3.0 + SQ8], rtol=0, atol=1e-14)
    assert w[0] == pytest.approx(0.17157, abs=5e-6)
    assert w[1] == pytest.approx(5.82843, abs=5e-6)
    assert w[0] * w[1] == pytest.approx(1.0, abs=1e-13)


def test_random_six_by_six_reconstruction():
    rng = np.random.default_rng(11)
    a = rng.normal(size=(6, 6))
    a = a + a.T
    w, v = eigh_symmetric(a)
    assert np.all(np.diff(w) >= 0)
    assert np.max(np.abs((v * w) @ v.T - a)) <= 1e-10
    assert np.max(np.abs(v.T @ v - np.eye(6))) <= 1e-10


def test_sign_rule_and_bit_stability():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(5, 5))
    a = a + a.T
    w1, v1 = eigh_symmetric(a)
    w2, v2 = eigh_symmetric(a.copy())
    np.testing.assert_array_equal(w1, w2)
    np.testing.assert_array_equal(v1, v2)
    peaks = v1[np.argmax(np.abs(v1), axis=0), np.arange(5)]
    assert np.all(peaks > 0)


def test_asymmetric_input_rejected():
    with pytest.raises(LinAlgError):
        eigh_symmetric([[1.0, 2.0], [0.0, 1.0]])


symmetric_matrices = st.integers(1, 9).flatmap(
    lambda n: arrays(np.float64, (n, n), elements=st.floats(-50, 50, allow_nan=False))
).map(lambda a: a + a.T)


@settings(max_examples=60, deadline=None)
@given(symmetric_matrices)
def test_jacobi_reconstruction_property(a):
    w, v = eigh_symmetric(a)
    scale = 1.0 + np.max(np.abs(a))
    assert np.max(np.abs((v * w) @ v.T - a)) <= 1e-10 * scale
    assert np.all(np.diff(w) >= 0)


class TestCholesky:
    def test_identity(self):
        np.testing.assert_array_equal(cholesky(np.eye(4)), np.eye(4))

    def test_hand_factorization(self):
        np.testing.assert_allclose(cholesky([[4.0, 2.0], [2.0, 5.0]]), [[2.0, 0.0], [1.0, 2.0]])

    def test_unit_mass_matrix(self):
        mu = np.array([[2 / 3, 1 / 3], [1 / 3, 2 / 3]])
        L = cholesky(mu)
        assert np.allclose(np.triu(L, 1), 0.0)
        assert np.all(np.diag(L) > 0)
        assert np.max(np.abs(L @ L.T - mu)) <= 1e-12

    def test_indefinite_names_pivot(self):
        with pytest.raises(NotPositiveDefiniteError) as err:
            cholesky([[1.0, 0.0, 0.0], [0.0, 1.0, 2.0], [0.0, 2.0, 1.0]])
        assert err.value.index == 2
        assert "pivot 2" in str(err.value)


class TestGeneralized:
    def test_identity_pair(self):
        w, _ = solve_generalized_eig(np.eye(3), np.eye(3))
        np.testing.assert_allclose(w, 1.0)

    def test_unit_oscillator_system(self):
        # det(I - u mu) = 0  ->  u^2 - 4u + 3 = 0
        mu = np.array([[2 / 3, 1 / 3], [1 / 3, 2 / 3]])
        w, z = solve_generalized_eig(np.eye(2), mu)
        np.testing.assert_allclose(w, [1.0, 3.0], atol=1e-13)
        np.testing.assert_allclose(z.T @ mu @ z, np.eye(2), atol=1e-12)

    def test_orthogonality_random_pair(self):
        rng = np.random.default_rng(5)
        b = rng.normal(size=(7, 7))
        mu = b @ b.T + 7 * np.eye(7)
        kappa = rng.normal(size=(7, 7))
        kappa = kappa + kappa.T
        w, z = solve_generalized_eig(kappa, mu)
        off = ~np.eye(7, dtype=bool)
        assert np.max(np.abs((z.T @ mu @ z) - np.eye(7))) <= 1e-9
        assert np.max(np.abs((z.T @ kappa @ z)[off])) <= 1e-9
        resid = kappa @ z - mu @ z * w
        assert np.max(np.abs(resid)) <= 1e-9 * np.max(np.abs(kappa))

    def test_dimension_mismatch(self):
        with pytest.raises(LinAlgError, match="dimension"):
            solve_generalized_eig(np.eye(2), np.eye(3))

    def test_cholesky_failure_propagates(self):
        with pytest.raises(NotPositiveDefiniteError):
            solve_generalized_eig(np.eye(2), -np.eye(2))


@pytest.mark.parametrize(
    "a, expected",
    [
        (np.eye(5), 1.0),
        ([[3.0, -SQ8], [-SQ8, 3.0]], 1.0),
        (np.diag([2.0, 0.5]), 1.0),
    ],
)
def test_determinant(a, expected):
    assert determinant(a) == pytest.approx(expected, abs=1e-10)


class TestSchur:
    def test_diagonal(self):
        np.testing.assert_array_equal(schur_complement(np.diag([2.0, 3.0, 4.0]), 0), np.diag([3.0, 4.0]))

    @pytest.mark.parametrize("i", [0, 1, 2])
    def test_identity(self, i):
        np.testing.assert_array_equal(schur_complement(np.eye(3), i), np.eye(2))

    def test_kinetic_form_by_hand(self):
        # r=1, m=m0=M=1 in (x0, z1, z2):
        # T = x0'^2/2 + (x0'+z1')^2/2 + (x0'-z2')^2/2
        kinetic = np.array([[3.0, 1.0, -1.0], [1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]])
        np.testing.assert_allclose(
            schur_complement(kinetic, 0), [[2 / 3, 1 / 3], [1 / 3, 2 / 3]], atol=1e-15
        )

    def test_zero_pivot(self):
        with pytest.raises(LinAlgError, match="zero pivot"):
            schur_complement([[0.0, 1.0], [1.0, 1.0]], 0)
