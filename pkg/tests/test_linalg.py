"""Tests for determinant, inverse, Cholesky and Kronecker assembly."""

import math

import numpy as np
import pytest

from tensorstat.errors import DefinitenessError, ShapeError, SingularTensorError, SymmetryError
from tensorstat.linalg import (
    CholeskyFactor,
    KroneckerFactors,
    cholesky,
    det,
    inverse,
    is_positive_definite,
    is_symmetric,
    kronecker_assemble,
)
from tensorstat.tensor_core import (
    DenseTensor,
    Shape,
    SquareTensor,
    contract_product,
    double_dot_quadratic,
    matricize,
    outer,
    transpose2d,
    unmatricize,
    vec,
)

SHAPES = [(2,), (3,), (2, 2), (2, 3), (2, 2, 2)]


def well_conditioned(rng, dims):
    n = int(np.prod(dims))
    q1, _ = np.linalg.qr(rng.standard_normal((n, n)))
    q2, _ = np.linalg.qr(rng.standard_normal((n, n)))
    svals = rng.uniform(0.5, 2.0, size=n)
    return unmatricize(q1 @ (svals[:, None] * q2), Shape(dims))


def random_spd(rng, dims, ridge=0.5):
    n = int(np.prod(dims))
    a = rng.standard_normal((n, n))
    m = a @ a.T / n + ridge * np.eye(n)
    return unmatricize(0.5 * (m + m.T), Shape(dims))


class TestDet:
    def test_identity(self):
        assert det(SquareTensor.identity((2, 2))) == 1.0

    def test_zero(self):
        assert det(SquareTensor.zeros((2, 2))) == 0.0

    def test_scaled_identity(self):
        # oracle: determinant of diag(3,3,3,3)
        assert det(3.0 * SquareTensor.identity((2, 2))) == pytest.approx(81.0, rel=1e-12)

    def test_scale_property(self):
        rng = np.random.default_rng(20)
        for dims in SHAPES:
            x = well_conditioned(rng, dims)
            lam = float(rng.uniform(0.5, 2.0))
            nstar = int(np.prod(dims))
            ref = lam**nstar * det(x)
            assert det(lam * x) == pytest.approx(ref, rel=1e-9)

    def test_transpose_property(self):
        rng = np.random.default_rng(21)
        for dims in SHAPES:
            x = well_conditioned(rng, dims)
            assert det(transpose2d(x)) == pytest.approx(det(x), rel=1e-10)

    def test_product_property(self):
        rng = np.random.default_rng(22)
        for dims in SHAPES:
            x = well_conditioned(rng, dims)
            y = well_conditioned(rng, dims)
            assert det(contract_product(x, y)) == pytest.approx(
                det(x) * det(y), rel=1e-9
            )

    def test_inverse_property(self):
        rng = np.random.default_rng(23)
        for dims in SHAPES:
            x = well_conditioned(rng, dims)
            assert det(inverse(x)) == pytest.approx(1.0 / det(x), rel=1e-9)

    def test_matches_numpy_oracle(self):
        rng = np.random.default_rng(24)
        x = well_conditioned(rng, (2, 2))
        assert det(x) == np.linalg.det(matricize(x))


class TestInverse:
    def test_identity_self_inverse(self):
        eye = SquareTensor.identity((2, 2))
        assert inverse(eye) == eye

    def test_scalar_matrix(self):
        x = 2.0 * SquareTensor.identity((2,))
        np.testing.assert_allclose(
            matricize(inverse(x)), 0.5 * np.eye(2), rtol=0, atol=1e-15
        )

    def test_diagonal_oracle(self):
        m = np.diag([1.0, 2.0, 3.0, 4.0])
        x = unmatricize(m, Shape((2, 2)))
        np.testing.assert_allclose(
            matricize(inverse(x)), np.linalg.inv(m), rtol=1e-14, atol=0
        )

    def test_contract_to_identity(self):
        rng = np.random.default_rng(25)
        eye = SquareTensor.identity((2, 2))
        for _ in range(20):
            x = random_spd(rng, (2, 2))
            inv = inverse(x)
            assert np.abs(contract_product(x, inv).array - eye.array).max() <= 1e-10
            assert np.abs(contract_product(inv, x).array - eye.array).max() <= 1e-10

    def test_matches_matrix_inverse(self):
        rng = np.random.default_rng(26)
        for dims in SHAPES:
            x = well_conditioned(rng, dims)
            np.testing.assert_allclose(
                matricize(inverse(x)),
                np.linalg.inv(matricize(x)),
                rtol=0,
                atol=1e-10,
            )

    def test_singular_refused_with_rcond(self):
        with pytest.raises(SingularTensorError) as info:
            inverse(SquareTensor.zeros((2, 2)))
        assert info.value.rcond == 0.0

    def test_near_singular_refused(self):
        m = np.diag([1.0, 1.0, 1.0, 1e-14])
        with pytest.raises(SingularTensorError) as info:
            inverse(unmatricize(m, Shape((2, 2))))
        assert info.value.rcond < 1e-12


class TestCholesky:
    def test_identity(self):
        fac = cholesky(SquareTensor.identity((2, 2)))
        np.testing.assert_array_equal(fac.lower, np.eye(4))

    def test_hand_oracle_2x2(self):
        x = unmatricize(np.array([[4.0, 2.0], [2.0, 3.0]]), Shape((2,)))
        fac = cholesky(x)
        np.testing.assert_allclose(
            fac.lower, [[2.0, 0.0], [1.0, math.sqrt(2.0)]], rtol=1e-15
        )

    def test_reconstruction(self):
        rng = np.random.default_rng(27)
        for dims in SHAPES:
            s = random_spd(rng, dims)
            fac = cholesky(s)
            m = matricize(s)
            rel = np.linalg.norm(fac.lower @ fac.lower.T - m) / np.linalg.norm(m)
            assert rel <= 1e-10
            assert np.diag(fac.lower).min() > 0.0

    def test_log_det_matches_slogdet(self):
        rng = np.random.default_rng(28)
        s = random_spd(rng, (2, 2))
        _, ref = np.linalg.slogdet(matricize(s))
        assert cholesky(s).log_det == pytest.approx(ref, rel=1e-12)

    def test_non_symmetric_rejected(self):
        rng = np.random.default_rng(29)
        x = unmatricize(rng.standard_normal((4, 4)), Shape((2, 2)))
        with pytest.raises(SymmetryError):
            cholesky(x)

    def test_negative_eigenvalue_names_pivot(self):
        # eigenvalue -1 injected along the second axis
        m = np.diag([1.0, -1.0, 2.0])
        with pytest.raises(DefinitenessError) as info:
            cholesky(unmatricize(m, Shape((3,))))
        assert info.value.pivot == 1
        assert "pivot 1" in str(info.value)

    def test_solve_lower(self):
        rng = np.random.default_rng(30)
        s = random_spd(rng, (2,))
        fac = cholesky(s)
        rhs = rng.standard_normal(2)
        np.testing.assert_allclose(fac.lower @ fac.solve_lower(rhs), rhs, atol=1e-14)

    def test_deterministic(self):
        rng = np.random.default_rng(31)
        s = random_spd(rng, (2, 2))
        a = cholesky(s).lower
        b = cholesky(s).lower
        np.testing.assert_array_equal(a, b)


class TestSymmetryPD:
    def test_identity(self):
        eye = SquareTensor.identity((2, 2))
        assert is_symmetric(eye, 1e-10)
        assert is_positive_definite(eye, 1e-10)

    def test_gram_plus_ridge(self):
        rng = np.random.default_rng(32)
        a = DenseTensor.from_array(rng.standard_normal((2, 2)))
        s = outer(a, a) + 1e-6 * SquareTensor.identity((2, 2))
        assert is_symmetric(s, 1e-10)
        assert is_positive_definite(s, 1e-10)
        # oracle: eigenvalues of the matricization
        assert np.linalg.eigvalsh(matricize(s)).min() > 0.0

    def test_asymmetric_detected(self):
        rng = np.random.default_rng(33)
        x = unmatricize(rng.standard_normal((4, 4)), Shape((2, 2)))
        assert not is_symmetric(x, 1e-10)
        assert not is_positive_definite(x, 1e-10)

    def test_indefinite_detected(self):
        x = unmatricize(np.diag([1.0, -1.0, 1.0, 1.0]), Shape((2, 2)))
        assert is_symmetric(x, 1e-10)
        assert not is_positive_definite(x, 1e-10)

    def test_tolerance_is_overridable(self):
        m = np.eye(2)
        m[0, 1] = 1e-8
        x = unmatricize(m, Shape((2,)))
        assert not is_symmetric(x, 1e-10)
        assert is_symmetric(x, 1e-6)


class TestKronecker:
    def test_identity_factors(self):
        f = KroneckerFactors((np.eye(2), np.eye(2)))
        np.testing.assert_array_equal(kronecker_assemble(f), np.eye(4))

    def test_diagonal_factors_convention(self):
        # direct Kronecker definition with the mode-1 factor varying fastest
        f = KroneckerFactors((np.diag([1.0, 2.0]), np.diag([3.0, 4.0])))
        assembled = kronecker_assemble(f)
        np.testing.assert_array_equal(np.diag(assembled), [3.0, 6.0, 4.0, 8.0])
        # vec-consistency through the quadratic form
        rng = np.random.default_rng(34)
        a = DenseTensor.from_array(rng.standard_normal((2, 2)))
        got = double_dot_quadratic(a, unmatricize(assembled, Shape((2, 2))), a)
        ref = sum(
            (i1 + 1.0) * (3.0 + j * 1.0) * a.array[i1, j] ** 2
            for i1 in range(2)
            for j in range(2)
        )
        assert got == pytest.approx(ref, rel=1e-13)

    def test_single_factor_is_itself(self):
        m = np.array([[2.0, 1.0], [1.0, 3.0]])
        f = KroneckerFactors((m,))
        np.testing.assert_array_equal(kronecker_assemble(f), m)

    def test_mode_scaling_pins_factor_order(self):
        # the factor stored for mode 1 must weight entries by their mode-1 index
        f = KroneckerFactors((np.diag([1.0, 2.0]), np.eye(2)))
        assembled = kronecker_assemble(f)
        rng = np.random.default_rng(35)
        a = DenseTensor.from_array(rng.standard_normal((2, 2)))
        v = vec(a)
        got = float(v @ assembled @ v)
        ref = sum(
            (2.0 if i1 == 1 else 1.0) * a.array[i1, i2] ** 2
            for i1 in range(2)
            for i2 in range(2)
        )
        assert got == pytest.approx(ref, rel=1e-13)

    def test_quadratic_form_consistency(self):
        rng = np.random.default_rng(36)
        for dims in SHAPES:
            mats = []
            for nk in dims:
                a = rng.standard_normal((nk, nk))
                m = a @ a.T / nk + 0.5 * np.eye(nk)
                mats.append(0.5 * (m + m.T))
            f = KroneckerFactors(tuple(mats))
            assembled = kronecker_assemble(f)
            t = DenseTensor.from_array(rng.standard_normal(dims))
            ref = float(vec(t) @ assembled @ vec(t))
            got = double_dot_quadratic(t, unmatricize(assembled, Shape(dims)), t)
            assert abs(got - ref) <= 1e-12 * max(abs(ref), 1.0)

    def test_shape_property(self):
        f = KroneckerFactors((np.eye(2), np.eye(3)))
        assert f.shape == Shape((2, 3))
        assert kronecker_assemble(f).shape == (6, 6)

    def test_validation(self):
        with pytest.raises(ShapeError):
            KroneckerFactors(())
        with pytest.raises(ShapeError):
            KroneckerFactors((np.zeros((2, 3)),))
        with pytest.raises(SymmetryError):
            KroneckerFactors((np.array([[1.0, 1e-6], [0.0, 1.0]]),))


class TestCholeskyFactorValue:
    def test_fields(self):
        fac = CholeskyFactor(row_shape=Shape((2,)), lower=np.eye(2))
        assert fac.log_det == 0.0
        assert fac.row_shape == Shape((2,))
