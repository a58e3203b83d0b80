#!/usr/bin/env python3
"""
测试 systems/message_attack.py 中的第一轮消息攻击
"""

import unittest
import os
import sys

import numpy as np

# 添加项目根目录到 Python 搜索路径
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from singapore_qkd.enums import AttackKind
from singapore_qkd.errors import NoiseRangeError
from singapore_qkd.quantum import DensityOperator
from singapore_qkd.systems.message_attack import (RANK_TOL, conditioned_ensemble, first_round_message_attack,
                                                  message_attack_at, message_attack_threshold)
from singapore_qkd.systems.security import bit_error
from singapore_qkd.systems.sifting import GroupingAnnouncement, RenesPairAnnouncement


class TestConditionedEnsemble(unittest.TestCase):
    """测试 Eve 的条件系综"""

    def test_error_rate_matches_recursion(self):
        for eps in (0.1, 0.25, 0.4):
            self.assertAlmostEqual(message_attack_at(eps, AttackKind.ITERATION).error_rate,
                                   bit_error(eps, 1), delta=1e-10)
            self.assertAlmostEqual(message_attack_at(eps, AttackKind.RENES_L1).error_rate,
                                   bit_error(eps, 1), delta=1e-10)
            self.assertAlmostEqual(message_attack_at(eps, AttackKind.FINAL_PAIRING).error_rate,
                                   bit_error(eps, 2), delta=1e-10)

    def test_priors_are_balanced(self):
        for kind in AttackKind:
            priors = message_attack_at(0.2, kind).priors
            self.assertAlmostEqual(priors[0], 0.5, delta=1e-12)
            self.assertAlmostEqual(sum(priors), 1.0, delta=1e-12)

    def test_exact_ranks(self):
        """两份纯化时每个比特的条件态秩为6，宣告下的混合态秩为9"""
        for eps in (0.2, 0.3):
            result = message_attack_at(eps, AttackKind.ITERATION)
            self.assertEqual(result.ranks, (6, 6))
            self.assertEqual(result.mixture_rank, 9)
        states, _ = conditioned_ensemble(0.2, AttackKind.ITERATION)
        mixture = states[0] + states[1]
        rho = DensityOperator(mixture / np.trace(mixture).real)
        self.assertEqual(rho.dim, 16)
        self.assertEqual(int(np.sum(rho.spectrum > RANK_TOL)), 9)
        self.assertEqual(message_attack_at(0.2, AttackKind.ITERATION).to_dict()["mixture_rank"], 9)

    def test_single_copy_dimension(self):
        states, _ = conditioned_ensemble(0.3, AttackKind.RENES_L1)
        self.assertEqual(states[0].shape, (4, 4))

    def test_announcement_symmetry(self):
        """旋转等价的宣告给出同样的 χ 与误码"""
        base = message_attack_at(0.3, AttackKind.ITERATION)
        for announcement in (GroupingAnnouncement((0, 2), (1, 3)), GroupingAnnouncement((2, 3), (0, 1))):
            other = message_attack_at(0.3, AttackKind.ITERATION, announcement)
            self.assertAlmostEqual(other.chi, base.chi, delta=1e-9)
            self.assertAlmostEqual(other.error_rate, base.error_rate, delta=1e-12)
        base = message_attack_at(0.3, AttackKind.FINAL_PAIRING)
        for announcement in (RenesPairAnnouncement(2, 3), RenesPairAnnouncement(1, 0)):
            other = message_attack_at(0.3, AttackKind.FINAL_PAIRING, announcement)
            self.assertAlmostEqual(other.chi, base.chi, delta=1e-9)

    def test_vanishing_noise(self):
        for kind in AttackKind:
            self.assertLess(message_attack_at(1e-4, kind).chi, 0.01)
            self.assertGreater(message_attack_at(1e-4, kind).secure_yield, 0.9)

    def test_noise_range(self):
        with self.assertRaises(NoiseRangeError):
            conditioned_ensemble(0.0, AttackKind.ITERATION)
        with self.assertRaises(NoiseRangeError):
            conditioned_ensemble(0.7, AttackKind.ITERATION)

    def test_result_dict(self):
        record = message_attack_at(0.2, AttackKind.ITERATION).to_dict()
        self.assertEqual(record["kind"], "iteration")
        self.assertEqual(record["announcement"]["type"], "grouping")
        self.assertEqual(record["announcement"]["group0"], ["A", "B"])


class TestMessageThreshold(unittest.TestCase):
    """测试消息攻击阈值"""

    def test_thresholds_match_reference(self):
        for kind in AttackKind:
            report = message_attack_threshold(kind)
            self.assertGreater(report.threshold, 0.02)
            self.assertLess(report.threshold, 0.6)
            self.assertAlmostEqual(message_attack_at(report.threshold, kind).secure_yield, 0.0, delta=1e-5)
            self.assertIsNotNone(report.reference)
            self.assertTrue(report.source.startswith("message:"))
            self.assertTrue(report.within_reference(0.01), f"{kind.value}: {report.delta}")

    def test_first_round_helper(self):
        chi, report = first_round_message_attack(0.2, AttackKind.RENES_L1)
        self.assertAlmostEqual(chi, message_attack_at(0.2, AttackKind.RENES_L1).chi, places=12)
        self.assertEqual(report.quantity, "message_renesL1")


if __name__ == "__main__":
    unittest.main()
