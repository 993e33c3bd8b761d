"""
精确组合学的单元测试
"""

import math
import unittest
from fractions import Fraction
from unittest import mock

from hypothesis import given, strategies as st

from src.combinat import (ProbabilityVector, analytic_bounds, binom, coherent_action_weights,
                          decomposition_exact, dimension_ratio_chain, fidelity_clon, fidelity_est,
                          identity_suite, occupation_tuples, proof_chain_cloning,
                          proof_chain_estimation, ps_distribution, sym_dim)
from src.common.errors import ArgumentError, InvalidDimensionError, ValidationError


class TestSymDim(unittest.TestCase):
    """测试对称子空间维数"""

    def test_known_values(self):
        self.assertEqual(sym_dim(2, 1), 2)
        self.assertEqual(sym_dim(2, 4), 5)
        self.assertEqual(sym_dim(3, 2), 6)
        self.assertEqual(sym_dim(5, 0), 1)
        self.assertEqual(sym_dim(1, 7), 1)

    def test_invalid_dimension(self):
        with self.assertRaises(InvalidDimensionError):
            sym_dim(0, 3)
        with self.assertRaises(InvalidDimensionError):
            sym_dim(2, -1)

    def test_binom_out_of_range_is_zero(self):
        self.assertEqual(binom(3, 5), 0)
        self.assertEqual(binom(3, -1), 0)
        self.assertEqual(binom(6, 2), 15)

    @given(st.integers(1, 5), st.integers(0, 6))
    def test_occupation_tuples_count(self, d, M):
        tuples = occupation_tuples(d, M)
        self.assertEqual(len(tuples), sym_dim(d, M))
        self.assertEqual(tuples, sorted(tuples, reverse=True))
        self.assertTrue(all(sum(t) == M for t in tuples))


class TestDistribution(unittest.TestCase):
    """测试分解权重与保真度"""

    def test_ps_small_case(self):
        self.assertEqual(list(ps_distribution(2, 1, 1)), [Fraction(2, 3), Fraction(1, 3)])

    @given(st.integers(1, 5), st.integers(1, 10), st.integers(1, 10))
    def test_ps_normalised_exactly(self, d, M, k):
        ps = ps_distribution(d, M, k)
        self.assertEqual(sum(ps, Fraction(0)), 1)
        self.assertEqual(len(ps), min(M, k) + 1)

    def test_probability_vector_rejects_bad_sum(self):
        with self.assertRaises(ArgumentError):
            ProbabilityVector((Fraction(1, 2), Fraction(1, 3)))
        with self.assertRaises(ArgumentError):
            ProbabilityVector((Fraction(3, 2), Fraction(-1, 2)))

    def test_fidelities(self):
        self.assertEqual(fidelity_est(2, 1, 1), Fraction(2, 3))
        self.assertEqual(fidelity_est(2, 2, 1), Fraction(3, 4))
        self.assertEqual(fidelity_clon(2, 1, 2), Fraction(5, 6))
        self.assertEqual(fidelity_clon(3, 4, 4), 1)

    @given(st.integers(1, 4), st.integers(1, 6), st.integers(1, 6))
    def test_coherent_weights_are_normalised(self, d, M, k):
        self.assertEqual(sum(coherent_action_weights(d, M, k), Fraction(0)), 1)

    def test_decomposition_exact_grid(self):
        for d in (1, 2, 3, 4):
            for M in range(1, 7):
                for k in range(1, 7):
                    with self.subTest(d=d, M=M, k=k):
                        self.assertIsNone(decomposition_exact(d, M, k))


class TestBounds(unittest.TestCase):
    """测试解析上界与证明链"""

    def test_bound_row_d2_k1_M10(self):
        report = analytic_bounds(2, 10, 1)
        self.assertEqual(report.bound_estimation_1, Fraction(1, 3))
        self.assertAlmostEqual(report.bound_estimation_2_exact, 0.1861, places=4)
        self.assertEqual(report.bound_estimation_2_linear, Fraction(2, 5))
        self.assertAlmostEqual(report.min_estimation_bound, report.bound_estimation_2_exact)

    def test_second_bound_undefined_for_k_above_M(self):
        report = analytic_bounds(2, 2, 5)
        self.assertFalse(report.estimation_2_defined)
        self.assertIsNone(report.bound_estimation_2_exact)
        self.assertEqual(report.min_estimation_bound, float(report.bound_estimation_1))
        self.assertEqual(report.proof_bound_cloning, 2 * (1 - ps_distribution(2, 2, 5)[2]))

    def test_row_columns(self):
        row = analytic_bounds(3, 6, 2).as_row()
        self.assertEqual(list(row), ["d", "M", "k", "bound1", "bound2_exact", "bound2_linear",
                                     "clone_bound", "min"])

    @given(st.integers(1, 5), st.integers(1, 12), st.integers(1, 12))
    def test_estimation_chain_nonincreasing(self, d, M, k):
        if k > M:
            M, k = k, M
        p_k, middle, last = proof_chain_estimation(d, M, k)
        self.assertGreaterEqual(p_k, middle)
        self.assertGreaterEqual(middle, last)
        self.assertLessEqual(2 * (1 - p_k), Fraction(2 * k * (d + k - 1), M + d))

    @given(st.integers(1, 5), st.integers(1, 12), st.integers(1, 12))
    def test_cloning_chain_nonincreasing(self, d, M, k):
        if M > k:
            M, k = k, M
        p_M, middle, last = proof_chain_cloning(d, M, k)
        self.assertGreaterEqual(p_M, middle)
        self.assertGreaterEqual(middle, last)

    def test_chain_weight_mismatch_is_reported(self):
        with mock.patch("src.combinat.ps_distribution", lambda d, M, k: [Fraction(0)] * (max(M, k) + 1)):
            with self.assertRaises(ValidationError) as ctx:
                proof_chain_estimation(2, 4, 2)
            self.assertEqual(ctx.exception.invariant, "proof-chain-weight")
            with self.assertRaises(ValidationError):
                proof_chain_cloning(2, 2, 4)

    @given(st.integers(1, 5), st.integers(1, 12), st.integers(1, 12))
    def test_dimension_ratio_chain(self, d, M, k):
        if k > M:
            M, k = k, M
        ratio, power, linear = dimension_ratio_chain(d, M, k)
        self.assertGreaterEqual(ratio, power)
        self.assertGreaterEqual(power, linear)
        # 4(1 - sqrt(ratio)) <= 2kd/M
        self.assertLessEqual(4 * (1 - math.sqrt(ratio)), 2 * k * d / M + 1e-12)


class TestIdentitySuite(unittest.TestCase):
    """测试组合恒等式"""

    def test_full_range(self):
        report = identity_suite(30)
        self.assertTrue(report.passed)
        self.assertIsNone(report.first_failure)
        self.assertGreater(report.checks, 0)

    def test_smallest_range(self):
        self.assertTrue(identity_suite(1).passed)

    def test_corrupted_binomial_is_caught(self):
        def corrupted(n, r):
            return binom(n, r) + (1 if (n, r) == (2, 1) else 0)

        report = identity_suite(3, binomial=corrupted)
        self.assertFalse(report.passed)
        name, args, lhs, rhs = report.first_failure
        self.assertEqual(name, "beta")
        self.assertNotEqual(lhs, rhs)

    def test_requires_positive_range(self):
        with self.assertRaises(ArgumentError):
            identity_suite(0)


if __name__ == '__main__':
    unittest.main()
