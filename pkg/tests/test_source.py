#!/usr/bin/env python3
"""
测试 source.py 中的含噪单态源、纯化、条件辅助态与抽样
"""

import unittest
import os
import sys

import numpy as np
from hypothesis import given, settings, strategies as st

# 添加项目根目录到 Python 搜索路径
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from singapore_qkd.config import QkdConfig
from singapore_qkd.enums import Letter, PomLabel
from singapore_qkd.errors import NoiseRangeError, SiftingError
from singapore_qkd.measurement import frequencies_from_letters
from singapore_qkd.quantum import binary_entropy, partial_trace, singlet, tensor, trace_distance, \
    von_neumann_entropy
from singapore_qkd.source import (IDENTITY_PERMUTATION, LetterSequence, NoiseModel, RngStream, apply_permutations,
                                  conditioned_ancilla, conditioned_ancillas, is_separable, noisy_singlet,
                                  purification, reduced_ancilla, sample_pairs, sample_pairs_partitioned,
                                  tetra_joint_distribution, twirl, twirled_distribution)


class TestNoiseModel(unittest.TestCase):
    """测试噪声参数"""

    def test_range(self):
        self.assertTrue(NoiseModel(0.5).nonseparable)
        self.assertFalse(NoiseModel(0.7).nonseparable)
        with self.assertRaises(NoiseRangeError):
            NoiseModel(1.0)
        with self.assertRaises(NoiseRangeError):
            NoiseModel(-0.1)

    def test_separable_bound(self):
        self.assertTrue(is_separable(2 / 3))
        self.assertFalse(is_separable(0.6))

    def test_noisy_singlet_limits(self):
        self.assertLess(trace_distance(noisy_singlet(0.0), singlet().density()), 1e-15)
        np.testing.assert_allclose(noisy_singlet(1.0).matrix, np.eye(4) / 4, atol=1e-15)
        with self.assertRaises(NoiseRangeError):
            noisy_singlet(1.5)


class TestPurification(unittest.TestCase):
    """测试 Eve 持有的纯化"""

    def test_reduces_to_noisy_singlet(self):
        for eps in np.linspace(0.0, 1.0, 10):
            reduced = partial_trace(purification(eps), keep=[0, 1])
            self.assertLess(trace_distance(reduced, noisy_singlet(eps)), 1e-12)

    def test_zero_noise_is_product_of_singlets(self):
        np.testing.assert_allclose(purification(0.0).amplitudes, tensor(singlet(), singlet()).amplitudes,
                                   atol=1e-15)

    def test_normalized(self):
        for eps in (0.0, 0.2, 0.5, 0.9):
            self.assertAlmostEqual(np.linalg.norm(purification(eps).amplitudes), 1.0, delta=1e-12)

    def test_ancilla_spectrum_matches_noisy_singlet(self):
        np.testing.assert_allclose(reduced_ancilla(0.4).spectrum, noisy_singlet(0.4).spectrum, atol=1e-12)


class TestConditionedAncilla(unittest.TestCase):
    """测试条件辅助态"""

    def test_rank_two_with_known_spectrum(self):
        for eps in (0.05, 0.2, 0.5):
            for k in Letter:
                p, rho = conditioned_ancilla(eps, k)
                self.assertAlmostEqual(p, 0.25, places=12)
                np.testing.assert_allclose(rho.spectrum[:2], [1 - eps / 2, eps / 2], atol=1e-10)
                self.assertTrue(np.all(np.abs(rho.spectrum[2:]) < 1e-10))
                self.assertAlmostEqual(von_neumann_entropy(rho), binary_entropy(eps / 2), delta=1e-10)

    def test_average_is_unconditioned(self):
        ensemble = conditioned_ancillas(0.3, PomLabel.TETRA)
        average = sum(p * rho.matrix for p, rho in ensemble)
        self.assertLess(trace_distance(average, reduced_ancilla(0.3)), 1e-12)

    def test_six_state_spectrum(self):
        for p, rho in conditioned_ancillas(0.3, PomLabel.SIX):
            self.assertAlmostEqual(p, 1 / 6, places=12)
            np.testing.assert_allclose(rho.spectrum[:2], [0.85, 0.15], atol=1e-10)

    def test_invalid_outcome(self):
        with self.assertRaises(ValueError):
            conditioned_ancilla(0.1, 4)


class TestLetterSequence(unittest.TestCase):
    """测试字母序列"""

    def test_string_conversion(self):
        seq = LetterSequence.from_string("ABCDDCBA")
        self.assertEqual(seq.to_string(), "ABCDDCBA")
        self.assertEqual(seq[2], Letter.C)
        self.assertEqual(len(seq.without([0, 1])), 6)
        self.assertEqual(seq.take([3, 0]).to_string(), "DA")

    def test_invalid_letters(self):
        with self.assertRaises(ValueError):
            LetterSequence.from_string("ABE")
        with self.assertRaises(ValueError):
            LetterSequence([0, 4])
        with self.assertRaises(ValueError):
            LetterSequence([1, -1])


class TestSampling(unittest.TestCase):
    """测试抽样与置换"""

    def test_deterministic(self):
        a1, b1 = sample_pairs(0.2, 1000, RngStream(5, QkdConfig.STREAM_SOURCE))
        a2, b2 = sample_pairs(0.2, 1000, RngStream(5, QkdConfig.STREAM_SOURCE))
        self.assertEqual(a1, a2)
        self.assertEqual(b1, b2)
        a3, _ = sample_pairs(0.2, 1000, RngStream(5, QkdConfig.STREAM_TWIRL))
        self.assertNotEqual(a1, a3)

    def test_zero_noise_never_coincides(self):
        alice, bob = sample_pairs(0.0, 50000, RngStream(1))
        self.assertFalse(np.any(alice.letters == bob.letters))

    def test_same_letter_fraction(self):
        n = 1_000_000
        alice, bob = sample_pairs(0.25, n, RngStream(7))
        fraction = float(np.mean(alice.letters == bob.letters))
        sigma = np.sqrt(0.0625 * 0.9375 / n)
        self.assertLess(abs(fraction - 0.0625), 4 * sigma)

    def test_frequencies_converge(self):
        n = 200_000
        alice, bob = sample_pairs(0.3, n, RngStream(11))
        freqs = frequencies_from_letters(alice, bob).probabilities
        distance = 0.5 * np.abs(freqs - tetra_joint_distribution(0.3).probabilities).sum()
        self.assertLess(distance, 4 * np.sqrt(16 / n))

    def test_partitioned_matches_sequential(self):
        sequential = sample_pairs_partitioned(0.2, [300, 500, 200], seed=9, workers=1)
        threaded = sample_pairs_partitioned(0.2, [300, 500, 200], seed=9, workers=3)
        self.assertEqual(sequential, threaded)
        self.assertEqual(len(sequential[0]), 1000)

    def test_twirl_keeps_coincidences(self):
        alice, bob = sample_pairs(0.3, 5000, RngStream(3))
        a2, b2, log = twirl(alice, bob, RngStream(3, QkdConfig.STREAM_TWIRL))
        self.assertEqual(len(log), 5000)
        np.testing.assert_array_equal(alice.letters == bob.letters, a2.letters == b2.letters)

    def test_identity_permutation(self):
        alice, _ = sample_pairs(0.3, 100, RngStream(3))
        unchanged = apply_permutations(alice, np.full(100, IDENTITY_PERMUTATION))
        self.assertEqual(unchanged, alice)

    def test_twirl_length_mismatch(self):
        with self.assertRaises(SiftingError):
            twirl(LetterSequence([0, 1]), LetterSequence([0]), RngStream(1))

    def test_twirl_symmetrizes_biased_source(self):
        """偏置的源置换后服从两轨道形式"""
        n = 1_000_000
        generator = np.random.default_rng(17)
        biased = np.zeros((4, 4))
        biased[0, 1], biased[1, 0], biased[2, 2], biased[3, 0] = 0.5, 0.3, 0.1, 0.1
        cells = generator.choice(16, size=n, p=biased.reshape(-1))
        alice, bob = LetterSequence(cells // 4), LetterSequence(cells % 4)
        a2, b2, _ = twirl(alice, bob, RngStream(17, QkdConfig.STREAM_TWIRL))
        observed = frequencies_from_letters(a2, b2).probabilities
        expected = twirled_distribution(biased).probabilities
        self.assertAlmostEqual(expected[0, 0], 0.1 / 4, places=12)
        self.assertAlmostEqual(expected[0, 1], 0.9 / 12, places=12)
        sigma = np.sqrt(expected * (1 - expected) / n)
        self.assertTrue(np.all(np.abs(observed - expected) < 4 * sigma + 1e-12))

    @settings(max_examples=20, deadline=None)
    @given(st.integers(min_value=0, max_value=2 ** 63 - 1), st.integers(min_value=0, max_value=1000))
    def test_stream_reproducible(self, seed, stream):
        a = RngStream(seed, stream).generator.integers(0, 2 ** 32, size=8)
        b = RngStream(seed, stream).fresh().generator.integers(0, 2 ** 32, size=8)
        np.testing.assert_array_equal(a, b)


if __name__ == "__main__":
    unittest.main()
