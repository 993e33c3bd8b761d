"""
对称子空间线性代数的单元测试
"""

import json
import os
import tempfile
import unittest

import numpy as np
from hypothesis import given, settings, strategies as st

from src.combinat import sym_dim
from src.common.errors import ArgumentError, NormalizationError, ParseError, ResourceGuardError
from src.common.settings import override_settings
from src.symspace import (SymOperator, adjacent_transpositions, coherent_amplitudes, embed_isometry,
                          haar_moment_residual, haar_state, load_sym_operator, occupation_basis,
                          partial_trace_oracle, partial_trace_sym, permute_operator, random_sym_state,
                          split_overlap, symmetrizer)


class TestEmbedding(unittest.TestCase):
    """测试嵌入等距"""

    def test_basis_order(self):
        counts = [v.counts for v in occupation_basis(2, 2)]
        self.assertEqual(counts, [(2, 0), (1, 1), (0, 2)])

    def test_isometry_and_symmetry(self):
        for d, M in [(2, 3), (3, 2), (3, 3), (4, 2)]:
            with self.subTest(d=d, M=M):
                V = embed_isometry(d, M)
                self.assertEqual(V.shape, (d ** M, sym_dim(d, M)))
                np.testing.assert_allclose(V.conj().T @ V, np.eye(V.shape[1]), atol=1e-12)
                for perm in adjacent_transpositions(M):
                    P = symmetrizer(d, M)
                    np.testing.assert_allclose(permute_operator(P, d, M, perm), P, atol=1e-12)

    def test_read_only(self):
        V = embed_isometry(2, 2)
        with self.assertRaises(ValueError):
            V[0, 0] = 2.0

    def test_dense_guard(self):
        override_settings(max_dense=10)
        try:
            with self.assertRaises(ResourceGuardError):
                embed_isometry(7, 3)
        finally:
            override_settings()


class TestSplitOverlap(unittest.TestCase):
    """测试分裂重叠张量"""

    def test_methods_agree(self):
        for d in (2, 3):
            for A in range(0, 7):
                for B in range(0, 7 - A):
                    with self.subTest(d=d, A=A, B=B):
                        np.testing.assert_allclose(
                            split_overlap(d, A, B, "combinatorial"),
                            split_overlap(d, A, B, "embedding"), atol=1e-12)

    def test_factorisation(self):
        d, A, B = 3, 2, 2
        G = split_overlap(d, A, B).reshape(sym_dim(d, A) * sym_dim(d, B), -1)
        lhs = np.kron(embed_isometry(d, A), embed_isometry(d, B)) @ G
        np.testing.assert_allclose(lhs, embed_isometry(d, A + B), atol=1e-12)

    def test_unknown_method(self):
        with self.assertRaises(ArgumentError):
            split_overlap(2, 1, 1, "magic")

    def test_dense_guard_on_both_methods(self):
        for method in ("combinatorial", "embedding"):
            with self.subTest(method=method):
                with self.assertRaises(ResourceGuardError):
                    split_overlap(2, 15, 10, method)
        override_settings(max_dense=2 ** 30)
        try:
            self.assertEqual(split_overlap(2, 15, 10, "combinatorial").shape, (16, 11, 26))
        finally:
            override_settings()


class TestStates(unittest.TestCase):
    """测试相干态与 SymOperator"""

    @settings(max_examples=25, deadline=None)
    @given(st.integers(2, 3), st.integers(1, 4), st.integers(0, 2 ** 32 - 1))
    def test_coherent_amplitudes_match_embedding(self, d, M, seed):
        psi = haar_state(d, np.random.default_rng(seed))
        product = psi
        for _ in range(M - 1):
            product = np.kron(product, psi)
        expected = embed_isometry(d, M).conj().T @ product
        np.testing.assert_allclose(coherent_amplitudes(psi, M), expected, atol=1e-12)

    def test_non_unit_vector(self):
        with self.assertRaises(NormalizationError):
            coherent_amplitudes([1.0, 1.0], 2)

    def test_shape_mismatch(self):
        with self.assertRaises(ArgumentError):
            SymOperator(2, 2, np.eye(4))

    def test_random_state_is_valid(self):
        rho = random_sym_state(3, 3, np.random.default_rng(1), rank=2)
        rho.validate_state(1e-10)
        self.assertEqual(np.linalg.matrix_rank(rho.matrix, tol=1e-10), 2)

    def test_json_round_trip(self):
        rho = random_sym_state(2, 3, np.random.default_rng(7))
        restored = SymOperator.from_json(json.loads(json.dumps(rho.to_json())))
        np.testing.assert_allclose(restored.matrix, rho.matrix)

    def test_load_reports_location(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "state.json")
            with open(path, "w", encoding="utf-8") as handle:
                handle.write('{"d": 2, "M": 1,\n "re": [[1, 0], [0, 0]')
            with self.assertRaises(ParseError) as ctx:
                load_sym_operator(path)
            self.assertIn(path, ctx.exception.location)

            with open(path, "w", encoding="utf-8") as handle:
                json.dump({"d": 2, "re": [[1, 0], [0, 0]]}, handle)
            with self.assertRaises(ParseError) as ctx:
                load_sym_operator(path)
            self.assertIn("M", str(ctx.exception))

            missing = os.path.join(tmp, "missing.json")
            with self.assertRaises(ParseError) as ctx:
                load_sym_operator(missing)
            self.assertEqual(ctx.exception.location, missing)


class TestPartialTrace(unittest.TestCase):
    """测试对称偏迹"""

    def test_matches_oracle(self):
        rng = np.random.default_rng(3)
        for d in (1, 2, 3):
            for M in range(1, 7):
                rho = random_sym_state(d, M, rng)
                for k in range(0, M + 1):
                    with self.subTest(d=d, M=M, k=k):
                        fast = partial_trace_sym(rho, k)
                        slow = partial_trace_oracle(rho, k)
                        np.testing.assert_allclose(fast.matrix, slow.matrix, atol=1e-10)

    def test_trace_and_positivity_preserving(self):
        rng = np.random.default_rng(4)
        for d in (2, 3):
            for M in range(1, 7):
                for _ in range(100):
                    rank = int(rng.integers(1, sym_dim(d, M) + 1))
                    rho = random_sym_state(d, M, rng, rank)
                    for k in range(1, M + 1):
                        marginal = partial_trace_sym(rho, k).matrix
                        self.assertAlmostEqual(np.trace(marginal).real, 1.0, places=10)
                        self.assertGreaterEqual(np.linalg.eigvalsh(marginal).min(), -1e-10)

    def test_chained_coherent_amplitudes(self):
        rng = np.random.default_rng(5)
        for d in (2, 3):
            psi = haar_state(d, rng)
            for M in range(1, 5):
                for k in range(1, 4):
                    with self.subTest(d=d, M=M, k=k):
                        full = SymOperator.pure(d, M + k, coherent_amplitudes(psi, M + k))
                        target = coherent_amplitudes(psi, k)
                        np.testing.assert_allclose(partial_trace_sym(full, k).matrix,
                                                   np.outer(target, target.conj()), atol=1e-10)

    def test_invalid_k(self):
        rho = SymOperator.maximally_mixed(2, 2)
        with self.assertRaises(ArgumentError):
            partial_trace_sym(rho, 3)


class TestHaarMoment(unittest.TestCase):
    """测试 Haar 矩"""

    def test_residual_shrinks(self):
        self.assertLess(haar_moment_residual(2, 2, 20000, seed=0), 0.05)

    def test_one_dimensional(self):
        self.assertEqual(haar_moment_residual(1, 3, 10, seed=0), 0.0)


if __name__ == '__main__':
    unittest.main()
