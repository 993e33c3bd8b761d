"""
容量上界的单元测试
"""

import math
import unittest

from hypothesis import given, strategies as st
from scipy.stats import unitary_group

from src.capacity import (binary_entropy, capacity_bounds, identity_broadcast_capacity,
                          transpose_diamond)
from src.channels import identity_channel, trace_channel, umeasprep_channel
from src.combinat import sym_dim
from src.common.errors import ArgumentError

TOL = 1e-5


class TestBinaryEntropy(unittest.TestCase):
    """测试二元熵"""

    def test_values(self):
        self.assertAlmostEqual(binary_entropy(0.5), 1.0)
        self.assertEqual(binary_entropy(0.0), 0.0)
        self.assertEqual(binary_entropy(1.0), 0.0)
        self.assertAlmostEqual(binary_entropy(0.004), 0.03762, places=5)

    def test_out_of_range(self):
        with self.assertRaises(ArgumentError):
            binary_entropy(1.5)
        with self.assertRaises(ArgumentError):
            binary_entropy(-0.1)


class TestCapacityBounds(unittest.TestCase):
    """测试解析容量上界"""

    def test_transpose_bounds(self):
        report = capacity_bounds(2, 100, 1, 3)
        self.assertAlmostEqual(report.transpose_bound_linear, 0.08)
        self.assertAlmostEqual(report.transpose_bound_log, math.log2(1.08))
        self.assertAlmostEqual(report.transpose_bound_log, 0.111, places=3)

    def test_continuity_bound(self):
        report = capacity_bounds(2, 1000, 1, 2)
        self.assertTrue(report.continuity_defined)
        self.assertAlmostEqual(report.continuity_bound, 0.1825, places=4)

    def test_continuity_omitted_outside_domain(self):
        report = capacity_bounds(2, 3, 1, 2)
        self.assertFalse(report.continuity_defined)
        self.assertIsNone(report.continuity_bound)
        self.assertEqual(report.min_bound, report.transpose_bound_log)

    def test_min_selects_transpose_bound(self):
        report = capacity_bounds(2, 8, 2, 2)
        self.assertTrue(report.continuity_defined)
        self.assertGreater(report.continuity_bound, report.transpose_bound_log)
        self.assertEqual(report.min_bound, report.transpose_bound_log)

    @given(st.integers(1, 5), st.integers(1, 200), st.integers(1, 4), st.integers(1, 10))
    def test_linear_dominates_log(self, d, M, k, d_in):
        report = capacity_bounds(d, M, k, d_in)
        self.assertGreaterEqual(report.transpose_bound_linear, report.transpose_bound_log)
        self.assertGreaterEqual(report.min_bound, 0.0)

    @given(st.integers(1, 5), st.integers(1, 4), st.integers(1, 10))
    def test_min_nonincreasing_in_M(self, d, k, d_in):
        minima = [capacity_bounds(d, M, k, d_in).min_bound for M in range(1, 120)]
        for before, after in zip(minima, minima[1:]):
            self.assertLessEqual(after, before + 1e-15)

    def test_invalid_arguments(self):
        with self.assertRaises(ArgumentError):
            capacity_bounds(2, 0, 1, 2)


class TestTransposeDiamond(unittest.TestCase):
    """测试数值转置菱形范数"""

    def test_identity_qubit(self):
        self.assertAlmostEqual(transpose_diamond(identity_channel(2, 1)), 1.0, delta=TOL)

    def test_measure_prepare_channel(self):
        self.assertAlmostEqual(transpose_diamond(umeasprep_channel(2, 2, 1)), 0.0, delta=TOL)

    def test_identity_broadcast_restriction(self):
        for M in range(2, 7):
            with self.subTest(M=M):
                value = transpose_diamond(trace_channel(2, M, 1))
                self.assertLessEqual(value, math.log2(1 + 2 * 1 * 2 * sym_dim(2, 1) / M) + 1e-3)

    def test_basis_independence(self):
        channel = trace_channel(2, 3, 1)
        U = unitary_group.rvs(4, random_state=12)
        self.assertAlmostEqual(transpose_diamond(channel, basis=U), transpose_diamond(channel), delta=TOL)

    def test_identity_broadcast_report(self):
        report = identity_broadcast_capacity(2, 4, 1)
        self.assertEqual(report.d_in, 5)
        self.assertLessEqual(report.computed_transpose_diamond, report.transpose_bound_log + 1e-3)
        self.assertIn("computed_transpose_diamond", report.to_json())


if __name__ == '__main__':
    unittest.main()
