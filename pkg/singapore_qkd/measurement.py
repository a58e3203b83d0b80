"""四面体与六态POM、联合概率与线性反演层析"""
import logging

import numpy as np

from .config import QkdConfig
from .enums import PomLabel
from .errors import DistributionError, InvalidStateError
from .quantum import DensityOperator, PauliVector, singlet

logger = logging.getLogger(__name__)

_TETRA = np.array([
    [1.0, 1.0, 1.0],
    [1.0, -1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
]) / np.sqrt(3.0)
_TETRA.setflags(write=False)


def tetrahedron_vectors():
    """正四面体顶点的单位矢量 t1..t4（立方体顶点构造）

    Returns:
        4×3 数组，t_k·t_l = (4/3)δ_kl - 1/3
    """
    return np.array(_TETRA)


class Pom:
    """概率算符测量：有序的半正定效应算符，总和为单位算符"""

    def __init__(self, label, effects):
        self.label = PomLabel(label)
        checked = []
        total = np.zeros((2, 2), dtype=complex)
        for effect in effects:
            e = np.array(effect, dtype=complex)
            if e.shape != (2, 2):
                raise InvalidStateError("效应算符必须是 2×2")
            if np.max(np.abs(e - e.conj().T)) > QkdConfig.STRUCTURAL_TOL:
                raise InvalidStateError("效应算符不是厄米的")
            if np.linalg.eigvalsh(e).min() < -QkdConfig.STRUCTURAL_TOL:
                raise InvalidStateError("效应算符不是半正定的")
            e.setflags(write=False)
            checked.append(e)
            total += e
        if np.max(np.abs(total - np.eye(2))) > QkdConfig.STRUCTURAL_TOL:
            raise InvalidStateError("效应算符之和不是单位算符")
        self.effects = tuple(checked)

    @property
    def size(self):
        return len(self.effects)

    def dual_frame(self):
        """线性反演用的对偶算符 6P_k - 1（仅四面体）"""
        if self.label is not PomLabel.TETRA:
            raise InvalidStateError("只有四面体POM是信息完备且最小的")
        return tuple(6.0 * e - np.eye(2) for e in self.effects)

    def __len__(self):
        return len(self.effects)

    def __repr__(self):
        return f"Pom({self.label.value}, size={self.size})"


class JointDistribution:
    """K_A×K_B 联合概率表"""

    def __init__(self, probabilities):
        p = np.array(probabilities, dtype=float)
        if p.ndim != 2:
            raise DistributionError("联合分布必须是二维表")
        if np.any(p < 0.0):
            raise DistributionError("联合分布含负项")
        total = float(p.sum())
        if abs(total - 1.0) > QkdConfig.DISTRIBUTION_TOL:
            raise DistributionError(f"概率和为 {total!r}")
        p.setflags(write=False)
        self._p = p

    @property
    def probabilities(self):
        return self._p

    @property
    def rows(self):
        return self._p.shape[0]

    @property
    def cols(self):
        return self._p.shape[1]

    def marginals(self):
        """(p_k·, p_·l)"""
        return self._p.sum(axis=1), self._p.sum(axis=0)

    def same_letter_mass(self):
        """Σ_k p_kk"""
        return float(np.trace(self._p))

    def flat(self):
        return self._p.reshape(-1)

    def to_dict(self):
        return {"rows": self.rows, "cols": self.cols, "probabilities": self._p.tolist()}

    @classmethod
    def from_dict(cls, data):
        return cls(data["probabilities"])

    def __repr__(self):
        return f"JointDistribution({self.rows}×{self.cols})"


def _tetra_pom():
    effects = [0.25 * (PauliVector.IDENTITY + PauliVector.dot(t)) for t in _TETRA]
    return Pom(PomLabel.TETRA, effects)


def _six_state_pom():
    effects = []
    for axis in np.eye(3):
        for sign in (1.0, -1.0):
            effects.append((PauliVector.IDENTITY + sign * PauliVector.dot(axis)) / 6.0)
    return Pom(PomLabel.SIX, effects)


_POMS = {PomLabel.TETRA: _tetra_pom(), PomLabel.SIX: _six_state_pom()}


def tetra_pom():
    """四面体POM：P_k = (1 + t_k·σ)/4"""
    return _POMS[PomLabel.TETRA]


def six_state_pom():
    """六态POM，顺序 +x, -x, +y, -y, +z, -z"""
    return _POMS[PomLabel.SIX]


def pom_for(label):
    return _POMS[PomLabel(label)]


def marginals(p):
    return p.marginals()


def joint_distribution(rho, pom_a, pom_b):
    """p_kl = tr[ρ (P_Ak ⊗ P_Bl)]

    Args:
        rho: 两量子比特 DensityOperator
        pom_a: Alice 的 POM
        pom_b: Bob 的 POM
    """
    if rho.dim != 4:
        raise InvalidStateError(f"需要两量子比特态，得到维数 {rho.dim}")
    r = rho.matrix.reshape(2, 2, 2, 2)
    a = np.stack(pom_a.effects)
    b = np.stack(pom_b.effects)
    # tr[ρ (A⊗B)] = Σ ρ[ij,kl] A[k,i] B[l,j]
    p = np.real(np.einsum("ijkl,xki,ylj->xy", r, a, b))
    if p.min() < -QkdConfig.STRUCTURAL_TOL:
        raise DistributionError(f"出现负概率 {p.min():.3e}")
    return JointDistribution(np.clip(p, 0.0, None))


def ideal_joint_distribution():
    """无噪声单态的四面体联合概率：对角为0，非对角为1/12"""
    return joint_distribution(singlet().density(), tetra_pom(), tetra_pom())


def reconstruct_state(p):
    """ρ = Σ_kl (6P_Ak - 1) p_kl (6P_Bl - 1)

    Returns:
        (DensityOperator, is_positive)。对含噪声的频率，结果可能不是半正定的，
        原样返回并附带标记。
    """
    table = np.asarray(getattr(p, "probabilities", p), dtype=float)
    if table.shape != (4, 4):
        raise DistributionError(f"需要 4×4 表，得到 {table.shape}")
    duals = np.stack(tetra_pom().dual_frame())
    rho = np.einsum("kl,kab,lcd->acbd", table, duals, duals).reshape(4, 4)
    state = DensityOperator(rho, require_positive=False)
    if not state.is_positive:
        logger.warning("重构的态不是半正定的，最小特征值 %.3e", state.spectrum[-1])
    return state, state.is_positive


def frequencies_from_letters(alice, bob, outcomes=4):
    """由成对字母统计相对频率"""
    a = np.asarray(getattr(alice, "letters", alice), dtype=np.int64)
    b = np.asarray(getattr(bob, "letters", bob), dtype=np.int64)
    if a.shape != b.shape:
        raise DistributionError("两个序列长度不同")
    if a.size == 0:
        raise DistributionError("空序列")
    counts = np.bincount(a * outcomes + b, minlength=outcomes * outcomes)
    return JointDistribution(counts.reshape(outcomes, outcomes) / a.size)


def project_to_state(rho):
    """截断负特征值并重新归一化"""
    w, v = np.linalg.eigh(rho.matrix)
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0.0:
        return DensityOperator.maximally_mixed(rho.num_qubits)
    m = (v * (w / w.sum())) @ v.conj().T
    return DensityOperator(0.5 * (m + m.conj().T))
