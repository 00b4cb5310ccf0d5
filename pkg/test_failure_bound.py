#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
test_failure_bound.py - Unit tests for failure_bound.py

Tests the failure-probability lower bound:
  - log_binomial() against exact big-integer binomials
  - hand cases (k=1 forced zero, k=2/m=2 coupon collector)
  - exactness for degree-1 codes against surjection counts
  - monotonicity in the overhead, precision convergence
  - lower-bound property against Monte Carlo failure rates
  - exponent modes, parameter validation and bound_curve()
"""

import math
import unittest
from fractions import Fraction

import numpy as np

from degree_dist import from_mapping, make_rsd, truncate
from failure_bound import bound_curve, log_binomial, pf_lower_bound
from lt_codec import EncodeSpec, decode, encode


def _uncovered_probability(k, m):
    """1 - surj(m, k)/k^m using Stirling numbers of the second kind."""
    stirling = [[0] * (k + 1) for _ in range(m + 1)]
    stirling[0][0] = 1
    for n in range(1, m + 1):
        for j in range(1, min(n, k) + 1):
            stirling[n][j] = j * stirling[n - 1][j] + stirling[n - 1][j - 1]
    onto = stirling[m][k] * math.factorial(k)
    return float(1 - Fraction(onto, k ** m))


class TestLogBinomial(unittest.TestCase):

    def test_small(self):
        self.assertEqual(log_binomial(5, 0), 0.0)
        self.assertAlmostEqual(log_binomial(5, 2), math.log(10), places=14)

    def test_large_against_big_integers(self):
        exact = math.log(math.comb(10000, 150))
        self.assertAlmostEqual(log_binomial(10000, 150) / exact, 1.0, delta=1e-12)
        exact = math.log(math.comb(200000, 150))
        self.assertAlmostEqual(log_binomial(200000, 150) / exact, 1.0, delta=1e-11)

    def test_domain(self):
        with self.assertRaises(ValueError):
            log_binomial(5, 6)
        with self.assertRaises(ValueError):
            log_binomial(5, -1)


class TestHandCases(unittest.TestCase):

    def test_single_input_is_never_uncovered(self):
        for eps in [0.0, 0.5, 3.0]:
            self.assertEqual(pf_lower_bound(from_mapping(1, {1: 1.0}), 1, eps).value, 0.0)

    def test_two_inputs_two_symbols(self):
        result = pf_lower_bound(from_mapping(2, {1: 1.0}), 2, 0.0)
        self.assertAlmostEqual(result.value, 0.5, places=12)
        self.assertFalse(result.cancellation_flag)
        self.assertEqual(result.exponent, 2.0)

    def test_degree_one_matches_surjection_count(self):
        for k in range(1, 21):
            dist = from_mapping(k, {1: 1.0})
            for m in {k, k + 3, 2 * k, 3 * k + 1}:
                eps = m / k - 1.0
                result = pf_lower_bound(dist, k, eps)
                self.assertLess(abs(result.value - _uncovered_probability(k, m)), 1e-9, (k, m))

    def test_real_exponent_mode(self):
        dist = from_mapping(2, {1: 1.0})
        integer = pf_lower_bound(dist, 2, 0.25).value
        real = pf_lower_bound(dist, 2, 0.25, exponent_mode="real").value
        self.assertAlmostEqual(integer, 2 * 0.5 ** 3)
        self.assertAlmostEqual(real, 2 * 0.5 ** 2.5)
        self.assertEqual(pf_lower_bound(dist, 2, -1.0, exponent_mode="real").value, 1.0)


class TestProperties(unittest.TestCase):

    def test_nonincreasing_in_overhead(self):
        dist = truncate(make_rsd(200, 0.1, 0.05), 40)
        values = [r.value for r in bound_curve(dist, 200, np.arange(0.0, 0.31, 0.02))]
        self.assertEqual(len(values), 16)
        for a, b in zip(values, values[1:]):
            self.assertLessEqual(b, a + 1e-15)
        self.assertTrue(all(0.0 <= v <= 1.0 for v in values))

    def test_precision_convergence(self):
        dist = truncate(make_rsd(1000, 0.09266, 0.001993), 150)
        for eps in [0.0, 0.05]:
            low = pf_lower_bound(dist, 1000, eps, precision=256).value
            high = pf_lower_bound(dist, 1000, eps, precision=512).value
            self.assertTrue(math.isfinite(low))
            self.assertLessEqual(abs(low - high), 1e-9 * max(abs(high), 1e-300))

    def test_never_above_monte_carlo(self):
        k, trials = 30, 300
        dist = from_mapping(k, {1: 0.2, 2: 0.4, 4: 0.4})
        rng = np.random.default_rng(404)
        for eps in [0.0, 0.2, 0.5]:
            bound = pf_lower_bound(dist, k, eps).value
            failures = 0
            for _ in range(trials):
                g = encode(EncodeSpec.from_overhead(k, eps, dist), rng=rng)
                failures += 0 if decode(g, rng=rng).success else 1
            rate = failures / trials
            sigma = math.sqrt(bound * (1 - bound) / trials)
            self.assertGreaterEqual(rate, bound - 3 * sigma - 1e-12, eps)


class TestValidation(unittest.TestCase):

    def test_rejects_bad_arguments(self):
        dist = from_mapping(4, {1: 0.5, 2: 0.5})
        with self.assertRaises(ValueError):
            pf_lower_bound(dist, 4, 0.0, precision=32)
        with self.assertRaises(ValueError):
            pf_lower_bound(dist, 4, 0.0, exponent_mode="complex")
        with self.assertRaises(ValueError):
            pf_lower_bound(from_mapping(4, {1: 0.5, 2: 0.4}), 4, 0.0)
        with self.assertRaises(ValueError):
            pf_lower_bound(from_mapping(8, {8: 1.0}), 4, 0.0)


if __name__ == "__main__":
    unittest.main()
