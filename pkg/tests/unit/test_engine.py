"""
Unit tests for the backward-induction design.

Most cases use a micro configuration small enough to check by hand:
theta0 = 0.2, theta1 = 0.8, group sizes {1, 2}, c(m) = 0.05 m, gamma = 0 and
lambda0 = lambda1 = 1. One success multiplies z by 4, one failure by 1/4.
"""

import logging
import math
import os
import sys
import unittest

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', '..', 'src'))

from spprt_planner.design.engine import (
    apply_cost_operator,
    continuation_value,
    decide,
    endpoint_drift,
    find_continuation_interval,
    interval_table,
    niod,
    outermost_rule,
    sampling_rule,
    weighted_cost_factor,
)
from spprt_planner.design.envelope import Envelope, make_envelope
from spprt_planner.types.errors import DomainError
from spprt_planner.types.model import CostModel, DesignConfig, Hypotheses, StopRiskParams


pytestmark = pytest.mark.unit


def micro_config(K=2, sizes=(1, 2), cost=None, gamma=0.0, lambdas=(1.0, 1.0)):
    return DesignConfig(
        hyp=Hypotheses(0.2, 0.8),
        group_sizes=sizes,
        cost=cost or CostModel.affine(0.0, 0.05),
        gamma=gamma,
        params=StopRiskParams(*lambdas),
        K=K,
        h=0.1,
    )


def moderate_config(K=4):
    return DesignConfig(
        hyp=Hypotheses(0.3, 0.5),
        group_sizes=tuple(range(1, 11)),
        cost=CostModel.affine(0.0, 1.0),
        gamma=0.5,
        params=StopRiskParams(60.0, 30.0),
        K=K,
        h=0.05,
    )


class TestCostOperator(unittest.TestCase):
    """Test the weighted cost factor and I_m."""

    def test_weighted_cost_factor(self):
        self.assertEqual(weighted_cost_factor(0.0, 5.0), 1.0)
        self.assertEqual(weighted_cost_factor(1.0, 0.5), 0.5)
        self.assertEqual(weighted_cost_factor(0.5, 1.0), 1.0)

    def test_expected_stop_risk_after_one_observation(self):
        hyp = Hypotheses(0.2, 0.8)
        g = Envelope.stop_risk_only(StopRiskParams(1.0, 1.0))
        # 0.8 * g(0.25) + 0.2 * g(4)
        self.assertAlmostEqual(apply_cost_operator(g, 1, 1.0, hyp), 0.4, places=12)
        # 0.64 * g(1/16) + 0.32 * g(1) + 0.04 * g(16)
        self.assertAlmostEqual(apply_cost_operator(g, 2, 1.0, hyp), 0.4, places=12)

    def test_constant_envelope(self):
        hyp = Hypotheses(0.2, 0.8)
        g = Envelope.stop_risk_only(StopRiskParams(1.0, 1e12))
        self.assertAlmostEqual(apply_cost_operator(g, 2, 1.0, hyp), 1.0, places=12)

    def test_nonpositive_ratio_rejected(self):
        g = Envelope.stop_risk_only(StopRiskParams(1.0, 1.0))
        with self.assertRaises(DomainError):
            apply_cost_operator(g, 1, 0.0, Hypotheses(0.2, 0.8))


class TestContinuationValue(unittest.TestCase):

    def test_single_size(self):
        config = micro_config(sizes=(1,), cost=CostModel.affine(0.0, 0.1))
        g = Envelope.stop_risk_only(config.params)
        value, m = continuation_value(config, g, 1.0)
        self.assertAlmostEqual(value, 0.5, places=12)
        self.assertEqual(m, 1)

    def test_two_sizes_prefers_cheaper(self):
        config = micro_config()
        g = Envelope.stop_risk_only(config.params)
        value, m = continuation_value(config, g, 1.0)
        self.assertAlmostEqual(value, 0.45, places=12)
        self.assertEqual(m, 1)

    def test_larger_group_wins_near_left_end(self):
        # c(2) + I_2 g(0.25) = 0.1 + 0.13 against c(1) + I_1 g(0.25) = 0.05 + 0.25
        config = micro_config()
        g = Envelope.stop_risk_only(config.params)
        value, m = continuation_value(config, g, 0.25)
        self.assertAlmostEqual(value, 0.23, places=12)
        self.assertEqual(m, 2)

    def test_gamma_neutral_at_one(self):
        g = Envelope.stop_risk_only(StopRiskParams(1.0, 1.0))
        base = continuation_value(micro_config(gamma=0.0), g, 1.0)
        weighted = continuation_value(micro_config(gamma=0.7), g, 1.0)
        self.assertAlmostEqual(base[0], weighted[0], places=12)
        self.assertEqual(base[1], weighted[1])


class TestFindContinuationInterval(unittest.TestCase):
    """Test interval search against hand-solved endpoints."""

    def test_single_size_interval(self):
        # g(z) > 0.3 + 0.2 z exactly on (0.375, 3.5)
        config = micro_config(sizes=(1,), cost=CostModel.affine(0.0, 0.1))
        a, b = find_continuation_interval(config, Envelope.stop_risk_only(config.params))
        self.assertAlmostEqual(a, 0.375, places=7)
        self.assertAlmostEqual(b, 3.5, places=7)

    def test_two_size_interval(self):
        # both ends are set by m = 2: z = 0.14 + 0.36 z and 1 = 0.46 + 0.04 z
        config = micro_config()
        a, b = find_continuation_interval(config, Envelope.stop_risk_only(config.params))
        self.assertAlmostEqual(a, 0.21875, places=7)
        self.assertAlmostEqual(b, 13.5, places=7)

    def test_returned_ends_are_inside(self):
        config = micro_config()
        g = Envelope.stop_risk_only(config.params)
        a, b = find_continuation_interval(config, g)
        for z in (a, b):
            value, _ = continuation_value(config, g, z)
            self.assertLess(value, min(1.0, z))
            self.assertLess(min(1.0, z) - value, 1e-6)

    def test_expensive_sampling_has_no_interval(self):
        config = micro_config(sizes=(1,), cost=CostModel.affine(2.0, 0.0))
        self.assertIsNone(find_continuation_interval(config, Envelope.stop_risk_only(config.params)))


class TestNiod(unittest.TestCase):
    """Test the level-by-level design."""

    def test_early_exit_at_first_level(self):
        config = micro_config(K=5, sizes=(1,), cost=CostModel.affine(2.0, 0.0))
        plan = niod(config)
        self.assertEqual(plan.k_eff, 1)
        self.assertTrue(plan.early_exit)
        self.assertEqual(plan.early_exit_level, 1)
        self.assertEqual(plan.m1, 1)
        self.assertEqual(plan.intervals, {})

    def test_one_stage_first_group(self):
        plan = niod(micro_config(K=1))
        self.assertEqual(plan.k_eff, 1)
        self.assertFalse(plan.early_exit)
        self.assertEqual(plan.m1, 1)

    def test_two_stage_plan(self):
        plan = niod(micro_config(K=2))
        self.assertEqual(plan.k_eff, 2)
        # c(2) + I_2 rho_1(1) = 0.1 + 0.224 beats c(1) + I_1 rho_1(1) = 0.05 + 0.308
        self.assertEqual(plan.m1, 2)
        a, b = plan.intervals[1]
        self.assertAlmostEqual(a, 0.21875, places=7)
        self.assertAlmostEqual(b, 13.5, places=7)

    def test_sampling_rule(self):
        plan = niod(micro_config(K=2))
        self.assertEqual(sampling_rule(plan, 1, 1.0), 1)
        self.assertEqual(sampling_rule(plan, 1, 0.25), 2)
        self.assertEqual(sampling_rule(plan, 1, 4.0), 2)
        self.assertEqual(sampling_rule(plan, 1, 20.0), 0)
        self.assertEqual(sampling_rule(plan, 1, 0.1), 0)
        self.assertEqual(sampling_rule(plan, 0, 1.0), 0)

    def test_sampling_rule_domain(self):
        plan = niod(micro_config(K=2))
        with self.assertRaises(DomainError):
            sampling_rule(plan, 2, 1.0)
        with self.assertRaises(DomainError):
            sampling_rule(plan, -1, 1.0)
        with self.assertRaises(DomainError):
            sampling_rule(plan, 1, 0.0)

    def test_rule_is_cached(self):
        plan = niod(micro_config(K=2))
        first = plan.actions(1, [0.0, math.log(4.0)])
        second = plan.actions(1, [0.0, math.log(4.0)])
        np.testing.assert_array_equal(first, second)
        self.assertEqual(len(plan._rule_cache[1]), 2)

    def test_decide(self):
        plan = niod(micro_config(K=1, lambdas=(3.0, 1.0)))
        self.assertEqual(decide(plan, 3.0), 1)
        self.assertEqual(decide(plan, 2.9), 0)
        unit = niod(micro_config(K=1))
        self.assertEqual(decide(unit, 0.0), 0)
        with self.assertRaises(DomainError):
            decide(unit, -1.0)

    def test_ties_go_to_h1(self):
        plan = niod(micro_config(K=1))
        self.assertTrue(plan.accepts_h1(0.0))
        self.assertTrue(plan.is_tie(1e-12))
        self.assertFalse(plan.accepts_h1(-1e-6))

    def test_design_is_deterministic(self):
        first = niod(moderate_config(K=3))
        second = niod(moderate_config(K=3))
        self.assertEqual(first.k_eff, second.k_eff)
        for j in range(1, first.k_eff):
            np.testing.assert_array_equal(first.envelopes[j].nodes, second.envelopes[j].nodes)
            np.testing.assert_array_equal(first.envelopes[j].values, second.envelopes[j].values)

    def test_early_exit_at_first_level_is_logged(self):
        config = micro_config(K=3, sizes=(1,), cost=CostModel.affine(2.0, 0.0))
        with self.assertLogs('spprt_planner.design.engine', level=logging.INFO) as logs:
            niod(config)
        self.assertTrue(any("Early Exit at level 1" in line for line in logs.output))


class TestPlanStructure(unittest.TestCase):
    """Properties every designed plan must have, on a moderate configuration."""

    @classmethod
    def setUpClass(cls):
        cls.config = moderate_config(K=4)
        cls.plan = niod(cls.config)

    def test_full_horizon(self):
        self.assertEqual(self.plan.k_eff, 4)

    def test_intervals_nested(self):
        intervals = self.plan.intervals
        for j in range(2, self.plan.k_eff):
            a_prev, b_prev = intervals[j - 1]
            a, b = intervals[j]
            self.assertLessEqual(a, a_prev * (1 + 1e-8))
            self.assertGreaterEqual(b, b_prev * (1 - 1e-8))

    def test_intervals_contain_threshold(self):
        for a, b in self.plan.intervals.values():
            self.assertLess(a, self.plan.z_star)
            self.assertGreater(b, self.plan.z_star)

    def test_values_below_stop_risk(self):
        for j in range(1, self.plan.k_eff):
            env = self.plan.envelopes[j]
            g = np.minimum(self.config.params.lambda0, self.config.params.lambda1 * env.nodes)
            self.assertTrue(np.all(env.values <= g + 1e-12))

    def test_values_monotone_in_allowance(self):
        for j in range(2, self.plan.k_eff):
            nodes = self.plan.envelopes[j].nodes
            current = self.plan.envelopes[j].evaluate(nodes)
            previous = self.plan.envelopes[j - 1].evaluate(nodes)
            self.assertTrue(np.all(current <= previous + 1e-9))

    def test_values_concave_at_midpoints(self):
        tol = 1e-9 * self.config.params.lambda0
        for j in range(1, self.plan.k_eff):
            env = self.plan.envelopes[j]
            a, b = env.interval
            z = np.linspace(a, b, 201)
            values = env.evaluate(z)
            mid = env.evaluate(0.5 * (z[:-2] + z[2:]))
            self.assertTrue(np.all(mid >= 0.5 * (values[:-2] + values[2:]) - tol))

    def test_rule_minimises_continuation(self):
        rng = np.random.default_rng(0)
        for j in range(1, self.plan.k_eff):
            a, b = self.plan.envelopes[j].interval
            prev = self.plan.envelopes[j - 1]
            for z in np.exp(rng.uniform(math.log(a), math.log(b), size=20)):
                totals = [
                    self.config.cost.cost(m) * weighted_cost_factor(self.config.gamma, z)
                    + apply_cost_operator(prev, m, z, self.config.hyp)
                    for m in self.config.group_sizes
                ]
                expected = self.config.group_sizes[int(np.argmin(totals))]
                self.assertEqual(sampling_rule(self.plan, j, z), expected)

    def test_interval_table_rows(self):
        rows = interval_table(self.plan)
        self.assertEqual([row["allowance"] for row in rows], [3, 2, 1])
        self.assertEqual([row["stage"] for row in rows], [1, 2, 3])
        for row in rows:
            self.assertAlmostEqual(row["log_a"], math.log(row["a"]), places=12)

    def test_endpoint_drift_rows(self):
        drift = endpoint_drift(self.plan)
        self.assertEqual([row["allowance"] for row in drift], [2, 3])
        self.assertTrue(all(row["rel_change_a"] >= 0 for row in drift))

    def test_outermost_rule_covers_grid(self):
        rule = outermost_rule(self.plan)
        self.assertEqual(len(rule), self.plan.envelopes[3].nodes.size)
        self.assertTrue(all(m in self.config.group_sizes for _, m in rule))


class TestPlanValidation(unittest.TestCase):

    def test_missing_interval_rejected(self):
        from spprt_planner.design.engine import Plan
        config = micro_config(K=2)
        g = Envelope.stop_risk_only(config.params)
        with self.assertRaises(DomainError):
            Plan(config=config, k_eff=2, envelopes=(g, g), m1=1)

    def test_ineligible_first_group_rejected(self):
        from spprt_planner.design.engine import Plan
        config = micro_config(K=2)
        g = Envelope.stop_risk_only(config.params)
        env = make_envelope(config.params, (0.5, 2.0), [0.5, 2.0], [0.4, 0.6])
        with self.assertRaises(DomainError):
            Plan(config=config, k_eff=2, envelopes=(g, env), m1=3)


if __name__ == '__main__':
    unittest.main()
