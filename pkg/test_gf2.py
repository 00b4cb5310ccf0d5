#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
test_gf2.py - Unit tests for gf2.py

Tests the binary matrix primitives:
  - DenseBitMatrix packing, get/set and multiply
  - rank() on identity, zero, duplicate-row and permuted matrices
  - sparse_rank() against the dense mirror
  - solve_dense() solved / inconsistent / rank-deficient outcomes
  - xor_row() symmetric difference, involution and dense oracle
  - SparseBitMatrix construction checks and permutation maps
"""

import unittest

import numpy as np

from gf2 import (
    DenseBitMatrix,
    DimensionMismatchError,
    SparseBitMatrix,
    rank,
    solve_dense,
    sparse_rank,
    xor_row,
)


def _random_sparse(rng, rows, cols, density=0.3):
    arr = (rng.random((rows, cols)) < density).astype(np.uint8)
    return SparseBitMatrix(rows, cols, [np.flatnonzero(r).tolist() for r in arr]), arr


class TestDenseBitMatrix(unittest.TestCase):

    def test_array_round_trip_across_word_boundary(self):
        rng = np.random.default_rng(1)
        arr = (rng.random((5, 130)) < 0.5).astype(np.uint8)
        dense = DenseBitMatrix.from_array(arr)
        np.testing.assert_array_equal(dense.to_array(), arr)

    def test_get_and_set(self):
        m = DenseBitMatrix.zeros(3, 70)
        m.set(2, 65, 1)
        self.assertEqual(m.get(2, 65), 1)
        self.assertEqual(m.get(2, 64), 0)
        m.set(2, 65, 0)
        self.assertEqual(m.get(2, 65), 0)

    def test_get_out_of_range(self):
        with self.assertRaises(IndexError):
            DenseBitMatrix.zeros(2, 2).get(2, 0)

    def test_multiply_identity(self):
        x = np.array([5, 0, 9, 3])
        np.testing.assert_array_equal(DenseBitMatrix.identity(4).multiply(x), x)

    def test_multiply_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            DenseBitMatrix.identity(3).multiply(np.array([1, 0]))

    def test_zero_rows(self):
        m = DenseBitMatrix.zeros(0, 4)
        self.assertEqual(m.to_array().shape, (0, 4))
        self.assertEqual(rank(m), 0)


class TestRank(unittest.TestCase):

    def test_identity(self):
        self.assertEqual(rank(DenseBitMatrix.identity(8)), 8)

    def test_all_zero(self):
        self.assertEqual(rank(DenseBitMatrix.zeros(5, 7)), 0)

    def test_duplicate_rows(self):
        self.assertEqual(rank(DenseBitMatrix.from_array([[1, 1], [1, 1]])), 1)

    def test_input_untouched(self):
        m = DenseBitMatrix.from_array([[1, 1, 0], [1, 0, 1], [0, 1, 1]])
        before = m.copy()
        self.assertEqual(rank(m), 2)
        self.assertEqual(m, before)

    def test_sparse_matches_dense_mirror(self):
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            rows, cols = rng.integers(1, 65, size=2)
            sparse, arr = _random_sparse(rng, int(rows), int(cols), density=rng.uniform(0.02, 0.5))
            self.assertEqual(sparse_rank(sparse), rank(DenseBitMatrix.from_array(arr)))

    def test_invariant_under_permutations(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            _, arr = _random_sparse(rng, 20, 30)
            shuffled = arr[rng.permutation(20)][:, rng.permutation(30)]
            self.assertEqual(rank(DenseBitMatrix.from_array(arr)),
                             rank(DenseBitMatrix.from_array(shuffled)))


class TestSolveDense(unittest.TestCase):

    def test_identity(self):
        result = solve_dense(DenseBitMatrix.identity(3), np.array([1, 0, 1]))
        self.assertTrue(result.solved)
        np.testing.assert_array_equal(result.solution, [1, 0, 1])

    def test_contradictory_duplicates(self):
        result = solve_dense(DenseBitMatrix.from_array([[1, 1], [1, 1]]), np.array([1, 0]))
        self.assertEqual(result.status, "inconsistent")
        self.assertIsNone(result.solution)

    def test_rank_deficient_reports_free_columns(self):
        result = solve_dense(DenseBitMatrix.from_array([[1, 1, 0], [0, 0, 1]]), np.array([1, 1]))
        self.assertEqual(result.status, "rank_deficient")
        self.assertEqual(result.rank, 2)
        self.assertEqual(result.free_columns, [1])

    def test_random_full_rank_multiplies_back(self):
        rng = np.random.default_rng(11)
        solved = 0
        while solved < 20:
            arr = rng.integers(0, 2, size=(16, 16), dtype=np.uint8)
            a = DenseBitMatrix.from_array(arr)
            if rank(a) < 16:
                continue
            b = rng.integers(0, 2, size=16)
            result = solve_dense(a, b)
            self.assertTrue(result.solved)
            np.testing.assert_array_equal(a.multiply(result.solution), b)
            solved += 1

    def test_packet_right_hand_sides(self):
        a = DenseBitMatrix.from_array([[1, 1], [0, 1]])
        x = np.array([[0xAB, 0x01], [0x10, 0xFF]], dtype=np.uint8)
        result = solve_dense(a, a.multiply(x))
        np.testing.assert_array_equal(result.solution, x)

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            solve_dense(DenseBitMatrix.identity(3), np.array([1, 0]))


class TestXorRow(unittest.TestCase):

    def test_symmetric_difference(self):
        m = SparseBitMatrix(2, 4, [[1, 2], [2, 3]])
        xor_row(m, src=1, dst=0)
        self.assertEqual(m.row(0), (1, 3))

    def test_self_cancellation(self):
        m = SparseBitMatrix(2, 4, [[0, 2], [0, 2]])
        xor_row(m, 1, 0)
        self.assertEqual(m.row(0), ())

    def test_involution(self):
        m = SparseBitMatrix(2, 6, [[0, 1, 5], [1, 3]])
        xor_row(m, 1, 0)
        xor_row(m, 1, 0)
        self.assertEqual(m.row(0), (0, 1, 5))

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            sparse, arr = _random_sparse(rng, 6, 40)
            src, dst = rng.choice(6, size=2, replace=False)
            xor_row(sparse, int(src), int(dst))
            arr[dst] ^= arr[src]
            np.testing.assert_array_equal(sparse.to_dense().to_array(), arr)

    def test_index_out_of_range(self):
        m = SparseBitMatrix(2, 3, [[0], [1]])
        with self.assertRaises(IndexError):
            xor_row(m, 0, 2)

    def test_same_row_rejected(self):
        m = SparseBitMatrix(2, 3, [[0], [1]])
        with self.assertRaises(ValueError):
            xor_row(m, 1, 1)


class TestSparseBitMatrix(unittest.TestCase):

    def test_rejects_duplicates(self):
        with self.assertRaises(ValueError):
            SparseBitMatrix(1, 4, [[1, 1]])

    def test_rejects_out_of_range_column(self):
        with self.assertRaises(IndexError):
            SparseBitMatrix(1, 4, [[4]])

    def test_rejects_wrong_row_count(self):
        with self.assertRaises(DimensionMismatchError):
            SparseBitMatrix(3, 4, [[0], [1]])

    def test_permutations_must_be_bijections(self):
        m = SparseBitMatrix(2, 2, [[0], [1]])
        with self.assertRaises(ValueError):
            m.set_permutations([0, 0], [0, 1])
        m.set_permutations([1, 0], [1, 0])
        self.assertEqual(m.check_invariants(), [])

    def test_logical_view_follows_permutations(self):
        m = SparseBitMatrix(2, 3, [[0], [1, 2]])
        m.set_permutations([1, 0], [2, 1, 0])
        np.testing.assert_array_equal(m.to_dense(logical=True).to_array(), [[1, 1, 0], [0, 0, 1]])

    def test_copy_is_independent(self):
        m = SparseBitMatrix(2, 3, [[0], [1, 2]])
        clone = m.copy()
        xor_row(clone, 1, 0)
        self.assertEqual(m.row(0), (0,))


if __name__ == "__main__":
    unittest.main()
