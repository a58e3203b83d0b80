#!/usr/bin/env python3
"""
测试 quantum.py 中的态、偏迹与熵
"""

import unittest
import os
import sys

import numpy as np
from hypothesis import given, settings, strategies as st

# 添加项目根目录到 Python 搜索路径
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from singapore_qkd.errors import DistributionError, InvalidStateError, SubsystemError
from singapore_qkd.quantum import (DensityOperator, PauliVector, PureState, binary_entropy, eigenvalues,
                                   partial_trace, random_density_operator, shannon_mutual_information,
                                   singlet, tensor, trace_distance, von_neumann_entropy)
from singapore_qkd.source import noisy_singlet


class TestPauliVector(unittest.TestCase):
    """测试泡利矩阵常量"""

    def test_squares_and_anticommutation(self):
        """每个分量平方为单位阵，两两反对易"""
        for i, a in enumerate(PauliVector.COMPONENTS):
            np.testing.assert_allclose(a @ a, np.eye(2), atol=1e-15)
            for b in PauliVector.COMPONENTS[i + 1:]:
                np.testing.assert_allclose(a @ b + b @ a, np.zeros((2, 2)), atol=1e-15)

    def test_dot_rejects_bad_vector(self):
        with self.assertRaises(ValueError):
            PauliVector.dot([1.0, 0.0])


class TestDensityOperator(unittest.TestCase):
    """测试密度算符的校验"""

    def test_rejects_non_hermitian(self):
        with self.assertRaises(InvalidStateError):
            DensityOperator([[0.5, 0.1], [0.0, 0.5]])

    def test_rejects_bad_trace(self):
        with self.assertRaises(InvalidStateError):
            DensityOperator(np.eye(2))

    def test_rejects_negative_unless_allowed(self):
        m = np.diag([1.2, -0.2])
        with self.assertRaises(InvalidStateError):
            DensityOperator(m)
        state = DensityOperator(m, require_positive=False)
        self.assertFalse(state.is_positive)

    def test_rejects_non_power_of_two(self):
        with self.assertRaises(InvalidStateError):
            DensityOperator(np.eye(3) / 3)

    def test_matrix_is_read_only(self):
        rho = DensityOperator.maximally_mixed(1)
        with self.assertRaises(ValueError):
            rho.matrix[0, 0] = 1.0

    def test_dict_round_trip(self):
        rho = noisy_singlet(0.3)
        again = DensityOperator.from_dict(rho.to_dict())
        self.assertLess(trace_distance(rho, again), 1e-15)

    def test_pure_state_norm(self):
        with self.assertRaises(InvalidStateError):
            PureState([1.0, 1.0])


class TestCompositionAndReduction(unittest.TestCase):
    """测试张量积与偏迹"""

    def test_singlet_tensor_singlet(self):
        """两个单态的张量积是16维纯态"""
        ss = tensor(singlet(), singlet())
        self.assertIsInstance(ss, PureState)
        self.assertEqual(ss.dim, 16)
        np.testing.assert_allclose(ss.amplitudes, np.kron(singlet().amplitudes, singlet().amplitudes))

    def test_mixed_tensor(self):
        rho = tensor(DensityOperator.maximally_mixed(1), DensityOperator.maximally_mixed(1))
        np.testing.assert_allclose(rho.matrix, np.eye(4) / 4)

    def test_singlet_reduces_to_mixed(self):
        reduced = partial_trace(singlet(), keep=[1])
        np.testing.assert_allclose(reduced.matrix, np.eye(2) / 2, atol=1e-15)

    def test_product_state_keeps_factor(self):
        a = DensityOperator([[0.7, 0.2], [0.2, 0.3]])
        b = DensityOperator.maximally_mixed(1)
        self.assertLess(trace_distance(partial_trace(tensor(a, b), keep=[0]), a), 1e-12)
        self.assertLess(trace_distance(partial_trace(tensor(b, a), keep=[1]), a), 1e-12)

    def test_invalid_subsystems(self):
        with self.assertRaises(SubsystemError):
            partial_trace(singlet(), keep=[])
        with self.assertRaises(SubsystemError):
            partial_trace(singlet(), keep=[2])

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=0, max_value=2 ** 32 - 1))
    def test_partial_trace_inverts_tensor(self, seed):
        """偏迹∘张量积 在保留的因子上是恒等"""
        generator = np.random.default_rng(seed)
        a = random_density_operator(generator, 2)
        b = random_density_operator(generator, 2)
        ab = tensor(a, b)
        self.assertLess(trace_distance(partial_trace(ab, keep=[0, 1]), a), 1e-12)
        self.assertLess(trace_distance(partial_trace(ab, keep=[2, 3]), b), 1e-12)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=0, max_value=2 ** 32 - 1))
    def test_entropy_additivity(self, seed):
        generator = np.random.default_rng(seed)
        a = random_density_operator(generator, 1)
        b = random_density_operator(generator, 2)
        total = von_neumann_entropy(tensor(a, b))
        self.assertAlmostEqual(total, von_neumann_entropy(a) + von_neumann_entropy(b), delta=1e-9)
        self.assertAlmostEqual(float(np.sum(eigenvalues(tensor(a, b)))), 1.0, delta=1e-10)


class TestSpectraAndEntropy(unittest.TestCase):
    """测试谱与熵"""

    def test_noisy_singlet_spectrum(self):
        np.testing.assert_allclose(eigenvalues(noisy_singlet(0.4)), [0.7, 0.1, 0.1, 0.1], atol=1e-12)

    def test_pure_and_mixed_spectra(self):
        np.testing.assert_allclose(eigenvalues(singlet().density()), [1, 0, 0, 0], atol=1e-12)
        np.testing.assert_allclose(eigenvalues(np.eye(4) / 4), [0.25] * 4, atol=1e-15)

    def test_eigenvalues_reject_non_hermitian(self):
        with self.assertRaises(InvalidStateError):
            eigenvalues(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_entropies(self):
        self.assertAlmostEqual(von_neumann_entropy(DensityOperator.maximally_mixed(1)), 1.0, places=12)
        self.assertAlmostEqual(von_neumann_entropy(singlet().density()), 0.0, places=12)
        self.assertAlmostEqual(von_neumann_entropy(noisy_singlet(0.4)), 1.3568, delta=1e-3)

    def test_entropy_rejects_negative_spectrum(self):
        state = DensityOperator(np.diag([1.2, -0.2]), require_positive=False)
        with self.assertRaises(InvalidStateError):
            von_neumann_entropy(state)

    def test_binary_entropy(self):
        self.assertEqual(binary_entropy(0.0), 0.0)
        self.assertEqual(binary_entropy(1.0), 0.0)
        self.assertAlmostEqual(binary_entropy(0.5), 1.0, places=15)
        with self.assertRaises(DistributionError):
            binary_entropy(1.5)


class TestMutualInformation(unittest.TestCase):
    """测试经典互信息"""

    def test_uniform_is_zero(self):
        self.assertAlmostEqual(shannon_mutual_information(np.full((4, 4), 1 / 16)), 0.0, places=12)

    def test_rejects_negative(self):
        p = np.full((2, 2), 0.25)
        p[0, 0], p[0, 1] = -0.25, 0.75
        with self.assertRaises(DistributionError):
            shannon_mutual_information(p)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(min_value=0, max_value=2 ** 32 - 1))
    def test_product_distribution_is_zero(self, seed):
        generator = np.random.default_rng(seed)
        rows = generator.dirichlet(np.ones(4))
        cols = generator.dirichlet(np.ones(6))
        self.assertAlmostEqual(shannon_mutual_information(np.outer(rows, cols)), 0.0, delta=1e-12)


if __name__ == "__main__":
    unittest.main()
