#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
test_ripple_model.py - Unit tests for ripple_model.py

Tests the expected-inactivation recursion:
  - initial_state() binomial start
  - chi() leave probability, its domain and an instrumented leave-rate check
  - step() hand-evaluated first step under both first-ripple rules
  - depletion and certain-inactivation edge cases
  - predict_inactivations() sweeps, orderings and trajectory invariants
  - agreement with decoding for degree-1 codes
  - trajectory CSV export
"""

import csv
import io
import math
import unittest

import numpy as np

from degree_dist import from_mapping, make_lrfc, make_rsd
from gf2 import SparseBitMatrix
from lt_codec import EncodeSpec, decode, encode
from ripple_model import (
    RippleModelError,
    active_output_curve,
    chi,
    expected_ripple_sizes,
    inactivation_curve,
    initial_state,
    predict_inactivations,
    step,
    write_trajectory_csv,
)

RSD_K1000 = (1000, 0.09266, 0.001993)


class TestInitialState(unittest.TestCase):

    def test_degree_one(self):
        state = initial_state(10, 12, from_mapping(10, {1: 1.0}))
        self.assertEqual(state.j, 0)
        self.assertEqual(state.m_j, 12.0)
        self.assertEqual(state.p[0], 1.0)
        self.assertEqual(state.cum_inact, 0.0)

    def test_matches_distribution(self):
        dist = make_rsd(*RSD_K1000)
        state = initial_state(1000, 1200, dist)
        np.testing.assert_array_equal(state.p, dist.probs)

    def test_first_ripple_matches_encoder(self):
        dist = make_rsd(*RSD_K1000)
        state = initial_state(1000, 1200, dist)
        rng = np.random.default_rng(6)
        counts = []
        for _ in range(50):
            g = encode(EncodeSpec(k=1000, m=1200, dist=dist), rng=rng)
            counts.append(sum(1 for r in range(1200) if g.row_degree(r) == 1))
        stderr = np.std(counts, ddof=1) / math.sqrt(len(counts))
        self.assertLess(abs(np.mean(counts) - state.expected_ripples()[0]), 3 * stderr + 1e-9)

    def test_rejects_bad_inputs(self):
        with self.assertRaises(RippleModelError):
            initial_state(10, 0, from_mapping(10, {1: 1.0}))
        with self.assertRaises(RippleModelError):
            initial_state(10, 5, from_mapping(10, {1: 0.5}))
        with self.assertRaises(RippleModelError):
            initial_state(10, 5, from_mapping(8, {1: 1.0}))


class TestChi(unittest.TestCase):

    def test_formula(self):
        self.assertAlmostEqual(chi(2, 10, 0), 0.2)
        self.assertEqual(chi(7, 10, 3), 1.0)

    def test_domain(self):
        with self.assertRaises(RippleModelError):
            chi(8, 10, 3)
        with self.assertRaises(RippleModelError):
            chi(1, 10, 10)
        with self.assertRaises(RippleModelError):
            chi(0, 10, 0)

    def test_leave_rate_matches_simulation(self):
        # every output has degree 2, so step 1 inactivates a uniform input
        k, m, trials = 50, 60, 500
        dist = from_mapping(k, {2: 1.0})
        rng = np.random.default_rng(13)
        left = 0
        for _ in range(trials):
            g = encode(EncodeSpec(k=k, m=m, dist=dist), rng=rng)
            trace = decode(g, rng=rng, record_ripples=2)
            self.assertEqual(trace.per_step_inactivation[0], 1)
            left += int(trace.ripple_history[1][0])
        n = m * trials
        rate = chi(2, k, 0)
        self.assertLess(abs(left - n * rate), 3 * math.sqrt(n * rate * (1 - rate)))


class TestStep(unittest.TestCase):

    def test_empty_ripple_rule_hand_example(self):
        state = initial_state(2, 2, from_mapping(2, {1: 1.0}))
        nxt = step(state, 2, first_ripple_rule="empty-ripple")
        self.assertEqual(nxt.n_inact_step, 0.0)
        self.assertAlmostEqual(nxt.m_j, 1.0)
        self.assertEqual(nxt.j, 1)

    def test_resolution_rule_hand_example(self):
        # N_1 = (1 - 1/2)·1 + (1/2)·2·1 = 1.5, matching exact enumeration E[m^(1)] = 0.5
        state = initial_state(2, 2, from_mapping(2, {1: 1.0}))
        nxt = step(state, 2)
        self.assertEqual(nxt.n_inact_step, 0.0)
        self.assertAlmostEqual(nxt.m_j, 0.5)

    def test_empty_first_ripple_is_certain_inactivation(self):
        state = initial_state(4, 4, from_mapping(4, {2: 1.0}))
        nxt = step(state, 4)
        self.assertEqual(nxt.n_inact_step, 1.0)
        self.assertEqual(nxt.cum_inact, 1.0)

    def test_depleted_state_freezes(self):
        state = initial_state(5, 1, from_mapping(5, {1: 1.0}))
        state = step(state, 5)
        self.assertEqual(state.m_j, 0.0)
        for _ in range(4):
            state = step(state, 5)
            self.assertEqual(state.n_inact_step, 1.0)
            self.assertTrue(np.all(state.p == 0))
        self.assertEqual(state.cum_inact, 4.0)

    def test_cannot_step_past_k(self):
        state = initial_state(1, 1, from_mapping(1, {1: 1.0}))
        state = step(state, 1)
        with self.assertRaises(RippleModelError):
            step(state, 1)

    def test_unknown_rule(self):
        state = initial_state(2, 2, from_mapping(2, {1: 1.0}))
        with self.assertRaises(RippleModelError):
            step(state, 2, first_ripple_rule="guess")


class TestPredictInactivations(unittest.TestCase):

    def test_single_symbol(self):
        self.assertEqual(predict_inactivations(1, 0.0, from_mapping(1, {1: 1.0})).n_inact_total, 0.0)

    def test_trajectory_has_k_plus_one_states(self):
        prediction = predict_inactivations(30, 0.1, make_rsd(30, 0.1, 0.05))
        self.assertEqual(len(prediction.trajectory), 31)
        self.assertEqual(prediction.m, 33)
        self.assertEqual(inactivation_curve(prediction.trajectory)[-1], prediction.n_inact_total)

    def test_nonincreasing_in_overhead(self):
        dist = make_rsd(200, 0.1, 0.05)
        values = [predict_inactivations(200, eps, dist, keep_trajectory=False).n_inact_total
                  for eps in np.arange(0.0, 0.45, 0.05)]
        self.assertTrue(all(b <= a + 1e-9 for a, b in zip(values, values[1:])), values)

    def test_rsd_needs_fewer_than_lrfc(self):
        rsd = make_rsd(*RSD_K1000)
        lrfc = make_lrfc(1000, 12)
        for eps in [0.0, 0.1, 0.2, 0.3]:
            a = predict_inactivations(1000, eps, rsd, keep_trajectory=False).n_inact_total
            b = predict_inactivations(1000, eps, lrfc, keep_trajectory=False).n_inact_total
            self.assertLess(a, b)

    def test_trajectory_invariants(self):
        cases = [
            (1000, 0.0, make_rsd(*RSD_K1000)),
            (1000, 0.2, make_lrfc(1000, 12)),
            (300, -0.1, make_rsd(300, 0.05, 0.1)),
            (50, 1.0, from_mapping(50, {1: 0.2, 3: 0.8})),
        ]
        for k, eps, dist in cases:
            traj = predict_inactivations(k, eps, dist).trajectory
            mass = [s.m_j * s.p.sum() for s in traj]
            for prev, cur, pm, cm in zip(traj, traj[1:], mass, mass[1:]):
                self.assertGreaterEqual(cur.cum_inact, prev.cum_inact)
                self.assertLessEqual(cur.m_j, prev.m_j + 1e-12)
                self.assertLessEqual(cm, pm + 1e-9)
                self.assertTrue(0.0 <= cur.n_inact_step <= 1.0)
            for s in traj:
                self.assertTrue(np.all(np.isfinite(s.p)))
                self.assertTrue(np.all((s.p >= 0) & (s.p <= 1)))
                self.assertLessEqual(s.p.sum(), 1 + 1e-9)
                self.assertGreaterEqual(s.m_j, 0.0)
                self.assertTrue(math.isfinite(s.cum_inact))

    def test_degree_one_code_matches_decoder(self):
        # inactivations = inputs no output covers
        k, trials = 200, 200
        dist = from_mapping(k, {1: 1.0})
        predicted = predict_inactivations(k, 0.0, dist, keep_trajectory=False).n_inact_total
        exact = k * (1 - 1 / k) ** k
        self.assertLess(abs(predicted - exact), 2.0)

        rng = np.random.default_rng(2)
        counts = []
        for _ in range(trials):
            g = encode(EncodeSpec(k=k, m=k, dist=dist), rng=rng)
            counts.append(decode(g, rng=rng).num_inactivations)
        stderr = np.std(counts, ddof=1) / math.sqrt(trials)
        self.assertLess(abs(predicted - np.mean(counts)), 2.0 + 3 * stderr)

    def test_overhead_floor(self):
        with self.assertRaises(RippleModelError):
            predict_inactivations(10, -0.95, from_mapping(10, {1: 1.0}))


class TestTrajectoryHelpers(unittest.TestCase):

    def test_expected_ripple_sizes_pads(self):
        prediction = predict_inactivations(4, 0.0, from_mapping(4, {1: 0.5, 2: 0.5}))
        sizes = expected_ripple_sizes(prediction.trajectory, 3)
        self.assertEqual(sizes.shape, (5, 3))
        np.testing.assert_allclose(sizes[0], [2.0, 2.0, 0.0])

    def test_active_output_curve(self):
        prediction = predict_inactivations(30, 0.1, make_rsd(30, 0.1, 0.05))
        curve = active_output_curve(prediction.trajectory)
        self.assertEqual(curve.shape, (31,))
        self.assertEqual(curve[0], 33.0)
        self.assertTrue(np.all(np.diff(curve) <= 1e-12))

    def test_csv_export(self):
        prediction = predict_inactivations(3, 0.0, from_mapping(3, {1: 0.5, 2: 0.5}))
        buf = io.StringIO()
        write_trajectory_csv(prediction.trajectory, buf)
        rows = list(csv.reader(io.StringIO(buf.getvalue())))
        self.assertEqual(rows[0], ["j", "m_j", "p_1", "p_2", "n_inact_step", "cum_inact"])
        self.assertEqual(len(rows), 1 + 4)
        self.assertEqual(rows[1], ["0", "3.0", "0.5", "0.5", "0.0", "0.0"])
        self.assertEqual(float(rows[-1][-1]), prediction.n_inact_total)


if __name__ == "__main__":
    unittest.main()
