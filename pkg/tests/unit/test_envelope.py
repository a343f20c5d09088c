"""
Unit tests for stop risk, log grids and piecewise-linear envelopes.
"""

import math
import os
import sys
import unittest

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..', 'src'))

from spprt_planner.design.engine import niod
from spprt_planner.design.envelope import (
    Envelope,
    build_log_grid,
    evaluate,
    make_envelope,
    stop_risk,
    stop_risk_array,
)
from spprt_planner.types.errors import DomainError
from spprt_planner.types.model import CostModel, DesignConfig, Hypotheses, StopRiskParams


pytestmark = pytest.mark.unit


class TestStopRisk(unittest.TestCase):

    def test_examples(self):
        self.assertEqual(stop_risk(StopRiskParams(2.0, 1.0), 1.0), 1.0)
        self.assertEqual(stop_risk(StopRiskParams(2.0, 1.0), 3.0), 2.0)
        self.assertEqual(stop_risk(StopRiskParams(1.0, 1.0), 0.0), 0.0)

    def test_negative_ratio_rejected(self):
        with self.assertRaises(DomainError):
            stop_risk(StopRiskParams(1.0, 1.0), -1.0)


class TestBuildLogGrid(unittest.TestCase):
    """Test node placement a * e^(k h) with b always last."""

    def test_exact_multiple_of_step(self):
        nodes = build_log_grid(1.0, math.exp(0.3), 0.1)
        self.assertEqual(nodes.size, 4)
        np.testing.assert_allclose(nodes, np.exp([0.0, 0.1, 0.2, 0.3]), rtol=1e-12)
        self.assertEqual(nodes[-1], math.exp(0.3))

    def test_remainder_appends_b(self):
        nodes = build_log_grid(1.0, math.exp(0.25), 0.1)
        self.assertEqual(nodes.size, 4)
        np.testing.assert_allclose(nodes[:3], np.exp([0.0, 0.1, 0.2]), rtol=1e-12)
        self.assertEqual(nodes[-1], math.exp(0.25))

    def test_interval_narrower_than_step(self):
        nodes = build_log_grid(1.0, 1.05, 0.1)
        np.testing.assert_array_equal(nodes, [1.0, 1.05])

    def test_degenerate_interval_rejected(self):
        with self.assertRaises(DomainError):
            build_log_grid(2.0, 2.0, 0.1)
        with self.assertRaises(DomainError):
            build_log_grid(0.0, 2.0, 0.1)

    def test_nodes_strictly_increasing(self):
        nodes = build_log_grid(0.013, 917.0, 0.05)
        self.assertEqual(nodes[0], 0.013)
        self.assertEqual(nodes[-1], 917.0)
        self.assertTrue(np.all(np.diff(nodes) > 0))


class TestEnvelope(unittest.TestCase):
    """Test envelope evaluation inside and outside the interval."""

    def setUp(self):
        self.params = StopRiskParams(1.0, 1.0)

    def test_flat_values(self):
        env = make_envelope(self.params, (1.0, 2.0), [1.0, 2.0], [0.5, 0.5])
        self.assertEqual(evaluate(env, 1.5), 0.5)

    def test_linear_in_z(self):
        env = make_envelope(self.params, (1.0, 2.0), [1.0, 2.0], [0.4, 0.6])
        self.assertAlmostEqual(evaluate(env, 1.5), 0.5, places=12)

    def test_outside_interval_is_stop_risk(self):
        env = make_envelope(self.params, (1.0, 2.0), [1.0, 2.0], [0.4, 0.6])
        self.assertEqual(evaluate(env, 0.7), 0.7)
        self.assertEqual(evaluate(env, 3.0), 1.0)

    def test_stop_risk_only(self):
        env = Envelope.stop_risk_only(StopRiskParams(3.0, 1.0))
        self.assertFalse(env.has_interval)
        np.testing.assert_array_equal(env.evaluate(np.array([1.0, 5.0])), [1.0, 3.0])

    def test_vectorised_evaluation(self):
        env = make_envelope(self.params, (1.0, 2.0), [1.0, 2.0], [0.4, 0.6])
        values = env(np.array([0.5, 1.0, 1.5, 2.0, 4.0]))
        np.testing.assert_allclose(values, [0.5, 0.4, 0.5, 0.6, 1.0], rtol=1e-12)

    def test_scalar_keeps_shape(self):
        env = make_envelope(self.params, (1.0, 2.0), [1.0, 2.0], [0.4, 0.6])
        value = env(1.5)
        self.assertEqual(np.ndim(value), 0)
        self.assertAlmostEqual(float(value), 0.5, places=12)
        self.assertEqual(env(np.array([[1.5, 3.0]])).shape, (1, 2))

    def test_nonpositive_ratio_rejected(self):
        env = Envelope.stop_risk_only(self.params)
        with self.assertRaises(DomainError):
            evaluate(env, 0.0)

    def test_mismatched_arrays_rejected(self):
        with self.assertRaises(DomainError):
            make_envelope(self.params, (1.0, 2.0), [1.0, 1.5, 2.0], [0.4, 0.6])

    def test_unsorted_nodes_rejected(self):
        with self.assertRaises(DomainError):
            make_envelope(self.params, (1.0, 2.0), [2.0, 1.0], [0.4, 0.6])


class TestDesignedEnvelopes(unittest.TestCase):
    """Shape properties of the envelopes produced by the design."""

    @classmethod
    def setUpClass(cls):
        cls.plan = niod(DesignConfig(
            hyp=Hypotheses(0.3, 0.5),
            group_sizes=tuple(range(1, 11)),
            cost=CostModel.affine(0.0, 1.0),
            gamma=0.5,
            params=StopRiskParams(60.0, 30.0),
            K=4,
            h=0.05,
        ))
        cls.lambda0 = cls.plan.config.params.lambda0
        cls.rng = np.random.default_rng(20)

    def designed(self):
        return [env for env in self.plan.envelopes if env.has_interval]

    def random_z(self, env, size):
        a, b = env.interval
        return np.exp(self.rng.uniform(math.log(a) - 2.0, math.log(b) + 2.0, size))

    def test_at_most_stop_risk(self):
        self.assertGreater(len(self.designed()), 0)
        for env in self.designed():
            z = self.random_z(env, 1000)
            bound = stop_risk_array(env.params, z) + 1e-9 * self.lambda0
            self.assertTrue(np.all(env(z) <= bound))

    def test_nondecreasing(self):
        for env in self.designed():
            z = np.sort(self.random_z(env, 2000).reshape(1000, 2), axis=1)
            low, high = env(z[:, 0]), env(z[:, 1])
            self.assertTrue(np.all(low <= high + 1e-9 * self.lambda0))

    def test_continuous_at_interval_ends(self):
        for env in self.designed():
            a, b = env.interval
            for end in (a, b):
                eps = 1e-9 * a
                with self.subTest(end=end):
                    self.assertAlmostEqual(float(env(end - eps)), float(env(end)), delta=1e-6 * self.lambda0)
                    self.assertAlmostEqual(float(env(end + eps)), float(env(end)), delta=1e-6 * self.lambda0)


if __name__ == '__main__':
    unittest.main()
