"""
Unit tests for the Bernoulli likelihood model and the problem types.
"""

import math
import os
import sys
import unittest

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..', 'src'))

from spprt_planner.design.lr_model import (
    OutcomeKernel,
    check_theta,
    group_distribution,
    lr_factor,
)
from spprt_planner.types.errors import DomainError
from spprt_planner.types.model import CostModel, DesignConfig, Hypotheses, StopRiskParams


pytestmark = pytest.mark.unit


class TestLikelihoodRatioFactor(unittest.TestCase):
    """Test the per-group likelihood-ratio factor."""

    def test_single_success(self):
        self.assertAlmostEqual(lr_factor(Hypotheses(0.5, 0.8), 1, 1), 1.6, places=12)

    def test_balanced_outcome_is_neutral(self):
        # r * q = (0.48/0.52) * (0.52/0.48)
        self.assertAlmostEqual(lr_factor(Hypotheses(0.52, 0.48), 2, 1), 1.0, places=12)

    def test_all_failures(self):
        self.assertAlmostEqual(lr_factor(Hypotheses(0.2, 0.8), 2, 0), 0.0625, places=12)

    def test_success_count_out_of_range(self):
        with self.assertRaises(DomainError):
            lr_factor(Hypotheses(0.2, 0.8), 2, 3)
        with self.assertRaises(DomainError):
            lr_factor(Hypotheses(0.2, 0.8), 2, -1)

    def test_group_size_must_be_positive(self):
        with self.assertRaises(DomainError):
            lr_factor(Hypotheses(0.2, 0.8), 0, 0)

    def test_log_lr_is_additive_over_groups(self):
        hyp = Hypotheses(0.3, 0.5)
        joint = hyp.log_lr(7, 3)
        split = hyp.log_lr(4, 1) + hyp.log_lr(3, 2)
        self.assertAlmostEqual(joint, split, places=12)


class TestHypotheses(unittest.TestCase):
    """Test hypothesis validation."""

    def test_equal_thetas_rejected(self):
        with self.assertRaises(DomainError):
            Hypotheses(0.5, 0.5)

    def test_boundary_thetas_rejected(self):
        for theta0, theta1 in ((0.0, 0.5), (0.5, 1.0), (-0.1, 0.5)):
            with self.subTest(theta0=theta0, theta1=theta1):
                with self.assertRaises(DomainError):
                    Hypotheses(theta0, theta1)

    def test_direction(self):
        self.assertTrue(Hypotheses(0.3, 0.5).increasing)
        self.assertFalse(Hypotheses(0.52, 0.48).increasing)

    def test_check_theta(self):
        self.assertEqual(check_theta(0.25), 0.25)
        with self.assertRaises(DomainError):
            check_theta(0.0)
        with self.assertRaises(DomainError):
            check_theta(1.5)


class TestGroupDistribution(unittest.TestCase):
    """Test the exact outcome distribution of one group."""

    def test_two_observations_fair_coin(self):
        dist = group_distribution(Hypotheses(0.5, 0.8), 2, 0.5)
        np.testing.assert_allclose(dist.probs, [0.25, 0.5, 0.25], rtol=0, atol=1e-12)
        np.testing.assert_allclose(dist.lr, [0.16, 0.64, 2.56], rtol=1e-12)
        self.assertEqual([s for s, _, _ in dist.entries], [0, 1, 2])

    def test_probabilities_sum_to_one(self):
        dist = group_distribution(Hypotheses(0.52, 0.48), 600, 0.52)
        self.assertAlmostEqual(float(dist.probs.sum()), 1.0, places=10)

    def test_mean_lr_is_one_under_theta0(self):
        # E_0 Z_m = 1 for a likelihood ratio
        for m in (1, 5, 40):
            with self.subTest(m=m):
                dist = group_distribution(Hypotheses(0.3, 0.5), m, 0.3)
                self.assertAlmostEqual(float(np.dot(dist.probs, dist.lr)), 1.0, places=10)

    def test_invalid_theta(self):
        with self.assertRaises(DomainError):
            group_distribution(Hypotheses(0.2, 0.8), 3, 0.0)

    def test_arrays_are_read_only(self):
        dist = group_distribution(Hypotheses(0.2, 0.8), 3, 0.2)
        with self.assertRaises(ValueError):
            dist.probs[0] = 1.0


class TestOutcomeKernel(unittest.TestCase):
    """Test batched expectations over all group sizes."""

    def test_matches_per_size_sums(self):
        hyp = Hypotheses(0.3, 0.5)
        sizes = (1, 3, 8)
        kernel = OutcomeKernel(hyp, sizes, 0.3)
        log_z = np.linspace(-2.0, 2.0, 11)

        def fn(z):
            return np.minimum(2.0, 3.0 * z)

        batched = kernel.expect(fn, log_z)
        self.assertEqual(batched.shape, (11, 3))
        for column, m in enumerate(sizes):
            dist = group_distribution(hyp, m, 0.3)
            single = (fn(np.exp(log_z[:, None] + dist.log_lr[None, :])) * dist.probs).sum(axis=1)
            np.testing.assert_allclose(batched[:, column], single, rtol=1e-12, atol=1e-14)

    def test_identity_expectation_is_z(self):
        hyp = Hypotheses(0.2, 0.8)
        kernel = OutcomeKernel(hyp, (1, 2), 0.2)
        values = kernel.expect(lambda z: z, [math.log(3.0)])
        np.testing.assert_allclose(values, [[3.0, 3.0]], rtol=1e-12)


class TestDesignConfig(unittest.TestCase):
    """Test validation of the design problem."""

    def make(self, **overrides):
        fields = dict(
            hyp=Hypotheses(0.2, 0.8),
            group_sizes=(1, 2),
            cost=CostModel.affine(0.0, 0.05),
            gamma=0.0,
            params=StopRiskParams(1.0, 1.0),
            K=2,
            h=0.1,
        )
        fields.update(overrides)
        return DesignConfig(**fields)

    def test_costs_follow_sizes(self):
        np.testing.assert_allclose(self.make().costs, [0.05, 0.10])

    def test_nonincreasing_costs_rejected(self):
        with self.assertRaises(DomainError):
            self.make(cost=CostModel.from_table({1: 2.0, 2: 2.0}))

    def test_zero_cost_rejected(self):
        with self.assertRaises(DomainError):
            self.make(group_sizes=(1,), cost=CostModel.affine(0.0, 0.0))

    def test_unsorted_sizes_rejected(self):
        with self.assertRaises(DomainError):
            self.make(group_sizes=(2, 1))

    def test_gamma_range(self):
        with self.assertRaises(DomainError):
            self.make(gamma=1.5)

    def test_horizon_must_be_positive(self):
        with self.assertRaises(DomainError):
            self.make(K=0)

    def test_multipliers_must_be_positive(self):
        with self.assertRaises(DomainError):
            StopRiskParams(0.0, 1.0)
        with self.assertRaises(DomainError):
            StopRiskParams(1.0, math.inf)

    def test_table_cost_lookup(self):
        cost = CostModel.from_table({1: 1.5, 4: 2.5})
        self.assertEqual(cost.cost(4), 2.5)
        with self.assertRaises(DomainError):
            cost.cost(2)

    def test_echo_round_trips_through_vocabulary(self):
        echo = self.make().to_dict()
        self.assertEqual(echo["groupSizes"], [1, 2])
        self.assertEqual(echo["cost"], {"c0": 0.0, "cu": 0.05})
        self.assertEqual(echo["lambda0"], 1.0)
        self.assertNotIn("lambda0", self.make().to_dict(lambdas=False))


if __name__ == '__main__':
    unittest.main()
