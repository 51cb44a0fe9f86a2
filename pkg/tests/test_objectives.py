"""Tests for loss families, tensorization, and derivative auditing."""

import numpy as np
import pytest

from baryopt.errors import DimensionMismatchError, InvalidDomainError
from baryopt.objectives import (
    ConstantFamily,
    ObjectiveFamily,
    QuadraticFamily,
    barygradient,
    finite_diff_check,
    outer_product,
    outer_sum,
    rank_one_factor_check,
    random_quadratic,
    symmetric_quadratic,
)
from baryopt.simplex_geometry import SimplexPoint


class _NoHessians(ObjectiveFamily):
    """Cubic pair on R^1 that reports no second derivatives."""

    def __init__(self):
        self.m, self.S = 1, 2

    def values(self, x):
        x = self.check_point(x)
        return np.array([x[0] ** 3, 2.0 - x[0]])

    def jacobian(self, x):
        x = self.check_point(x)
        return np.array([[3.0 * x[0] ** 2], [-1.0]])


class _WrongJacobian(QuadraticFamily):
    """Quadratic family whose reported jacobian is off by a constant."""

    def jacobian(self, x):
        return super().jacobian(x) + 0.01


class TestQuadraticFamily:
    def test_symmetric_pair_hand_values(self):
        """l_1(0.3) = (0.3-1)^2/2 = 0.245 and l_2(0.3) = (0.3+1)^2/2 = 0.845."""
        fam = symmetric_quadratic()
        np.testing.assert_allclose(
            fam.values(np.array([0.3])), [0.245, 0.845], rtol=1e-14
        )
        np.testing.assert_allclose(
            fam.jacobian(np.array([0.3])), [[-0.7], [1.3]], rtol=1e-14
        )
        np.testing.assert_allclose(fam.hessians(np.array([0.3])), np.ones((2, 1, 1)))

    def test_rejects_asymmetric_curvature(self):
        A = np.array([[[1.0, 0.5], [0.0, 1.0]]] * 2)
        with pytest.raises(InvalidDomainError):
            QuadraticFamily(A, np.zeros((2, 2)), np.zeros(2))

    def test_rejects_indefinite_curvature(self):
        A = np.array([[[-1.0]], [[1.0]]])
        with pytest.raises(InvalidDomainError):
            QuadraticFamily(A, np.zeros((2, 1)), np.zeros(2))

    def test_rejects_inconsistent_shapes(self):
        with pytest.raises(DimensionMismatchError):
            QuadraticFamily(np.ones((2, 1, 1)), np.zeros((3, 1)), np.zeros(2))
        with pytest.raises(DimensionMismatchError):
            QuadraticFamily(np.ones((1, 1, 1)), np.zeros((1, 1)), np.zeros(1))

    def test_rejects_bad_points(self):
        fam = symmetric_quadratic()
        with pytest.raises(DimensionMismatchError):
            fam.values(np.array([0.1, 0.2]))
        with pytest.raises(InvalidDomainError):
            fam.values(np.array([np.nan]))

    def test_random_family_is_strictly_convex(self):
        rng = np.random.default_rng(0)
        fam = random_quadratic(rng, m=3, S=4, min_curvature=0.1)
        assert (fam.S, fam.m) == (4, 3)
        for s in range(4):
            assert np.linalg.eigvalsh(fam.A[s]).min() >= 0.1 - 1e-12


class TestConstantFamily:
    def test_values_and_flat_derivatives(self):
        fam = ConstantFamily(np.array([0.0, 0.4, 1.0]), m=2)
        x = np.array([3.0, -1.0])
        np.testing.assert_allclose(fam.values(x), [0.0, 0.4, 1.0])
        np.testing.assert_allclose(fam.jacobian(x), np.zeros((3, 2)))
        np.testing.assert_allclose(fam.hessians(x), np.zeros((3, 2, 2)))

    def test_validation(self):
        with pytest.raises(DimensionMismatchError):
            ConstantFamily(np.array([1.0]))
        with pytest.raises(InvalidDomainError):
            ConstantFamily(np.array([0.0, np.inf]))


class TestOuterSum:
    def test_values_flatten_row_major(self):
        """[l1 (+) l2]_{jk} = l1_j + l2_k with index (j, k) -> j*S2 + k."""
        f1 = ConstantFamily(np.array([1.0, 2.0]), m=1)
        f2 = ConstantFamily(np.array([10.0, 20.0, 30.0]), m=1)
        fam = outer_sum(f1, f2)
        assert (fam.S, fam.m) == (6, 1)
        np.testing.assert_allclose(
            fam.values(np.array([0.0])), [11.0, 21.0, 31.0, 12.0, 22.0, 32.0]
        )

    def test_jacobian_rows_add(self):
        rng = np.random.default_rng(2)
        f1 = random_quadratic(rng, m=2, S=2)
        f2 = random_quadratic(rng, m=2, S=3)
        fam = outer_sum(f1, f2)
        x = rng.normal(size=2)
        jac = fam.jacobian(x)
        j1, j2 = f1.jacobian(x), f2.jacobian(x)
        for j in range(2):
            for k in range(3):
                np.testing.assert_allclose(jac[j * 3 + k], j1[j] + j2[k], rtol=1e-13)

    def test_hessians_add_or_propagate_none(self):
        rng = np.random.default_rng(3)
        f1 = random_quadratic(rng, m=1, S=2)
        fam = outer_sum(f1, f1)
        np.testing.assert_allclose(
            fam.hessians(np.zeros(1))[1], f1.A[0] + f1.A[1], rtol=1e-14
        )
        assert outer_sum(f1, _NoHessians()).hessians(np.zeros(1)) is None

    def test_rejects_mismatched_domains(self):
        rng = np.random.default_rng(4)
        with pytest.raises(DimensionMismatchError):
            outer_sum(random_quadratic(rng, m=1), random_quadratic(rng, m=2))


class TestOuterProductWeights:
    def test_matches_kron(self):
        q1 = SimplexPoint.from_probs(np.array([0.3, 0.7]))
        q2 = SimplexPoint.from_probs(np.array([0.2, 0.5, 0.3]))
        np.testing.assert_allclose(
            outer_product(q1, q2).probs, np.kron(q1.probs, q2.probs), rtol=1e-14
        )

    def test_rank_one_check_recovers_factors(self):
        q1 = SimplexPoint.from_probs(np.array([0.4, 0.6]))
        q2 = SimplexPoint.from_probs(np.array([0.1, 0.9]))
        ok, factors = rank_one_factor_check(outer_product(q1, q2), 2, 2)
        assert ok
        f1, f2 = factors
        np.testing.assert_allclose(f1.probs, q1.probs, atol=1e-12)
        np.testing.assert_allclose(f2.probs, q2.probs, atol=1e-12)

    def test_rank_one_check_rejects_entangled_weights(self):
        q = SimplexPoint.from_probs(np.array([0.4, 0.1, 0.1, 0.4]))
        ok, factors = rank_one_factor_check(q, 2, 2)
        assert not ok and factors is None

    def test_rank_one_check_shape_guard(self):
        with pytest.raises(DimensionMismatchError):
            rank_one_factor_check(SimplexPoint.uniform(6), 2, 2)


class TestBarygradient:
    def test_is_weighted_row_combination(self):
        rng = np.random.default_rng(5)
        fam = random_quadratic(rng, m=3, S=4)
        x = rng.normal(size=3)
        q = SimplexPoint(rng.normal(size=4))
        np.testing.assert_allclose(
            barygradient(fam, x, q), fam.jacobian(x).T @ q.probs, rtol=1e-14
        )

    def test_size_mismatch(self):
        fam = symmetric_quadratic()
        with pytest.raises(DimensionMismatchError):
            barygradient(fam, np.zeros(1), SimplexPoint.uniform(3))


class TestFiniteDiffCheck:
    def test_correct_family_is_not_flagged(self):
        rng = np.random.default_rng(6)
        fam = random_quadratic(rng, m=2, S=3)
        points = [rng.normal(size=2) for _ in range(5)]
        reports = finite_diff_check(fam, points)
        assert len(reports) == 5
        for rep in reports:
            assert not rep.flagged
            assert rep.hessian_dev is not None

    def test_jacobian_only_family(self):
        reports = finite_diff_check(_NoHessians(), [np.array([0.7])])
        assert not reports[0].flagged
        assert reports[0].hessian_dev is None

    def test_negative_control_flags_biased_jacobian(self):
        """A jacobian off by 0.01 must trip the finite-difference audit."""
        fam = _WrongJacobian(np.ones((2, 1, 1)), np.zeros((2, 1)), np.zeros(2))
        reports = finite_diff_check(fam, [np.array([0.2])])
        assert reports[0].flagged
        assert reports[0].jacobian_dev == pytest.approx(0.01, rel=1e-3)
