"""稠密复线性代数：量子态的复合、约化、谱与熵

约定：
    子系统0是张量积最左侧的因子。基矢指标 |q0 q1 ... q(n-1)> 中 q0 是最高位，
    所有 reshape 都按这一顺序进行。维数上限为 2**QkdConfig.MAX_QUBITS。
"""
import logging

import numpy as np

from .config import QkdConfig
from .errors import DistributionError, InvalidStateError, SubsystemError

logger = logging.getLogger(__name__)


class PauliVector:
    """泡利矢量算符 (σx, σy, σz)"""
    IDENTITY = np.eye(2, dtype=complex)
    X = np.array([[0, 1], [1, 0]], dtype=complex)
    Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
    Z = np.array([[1, 0], [0, -1]], dtype=complex)
    COMPONENTS = (X, Y, Z)

    @classmethod
    def dot(cls, vector):
        """n·σ"""
        n = np.asarray(vector, dtype=float)
        if n.shape != (3,):
            raise ValueError("需要三维实矢量")
        return n[0] * cls.X + n[1] * cls.Y + n[2] * cls.Z


for _component in PauliVector.COMPONENTS:
    _component.setflags(write=False)
PauliVector.IDENTITY.setflags(write=False)


def _num_qubits(dim):
    n = int(dim).bit_length() - 1
    if dim < 2 or (1 << n) != dim:
        raise InvalidStateError(f"维数 {dim} 不是2的幂")
    if n > QkdConfig.MAX_QUBITS:
        raise InvalidStateError(f"{n} 个量子比特超出上限 {QkdConfig.MAX_QUBITS}")
    return n


class DensityOperator:
    """密度算符：厄米、单位迹、半正定的复矩阵

    Args:
        matrix: dim×dim 复矩阵
        require_positive: 为 False 时允许负特征值（线性反演的结果），
            此时由 is_positive 标记是否为物理态

    Notes:
        构造后不可修改，可在线程间只读共享。
    """

    def __init__(self, matrix, require_positive=True):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidStateError(f"需要方阵，得到形状 {m.shape}")
        self._num_qubits = _num_qubits(m.shape[0])
        if np.max(np.abs(m - m.conj().T)) > QkdConfig.STRUCTURAL_TOL:
            raise InvalidStateError("矩阵不是厄米的")
        m = 0.5 * (m + m.conj().T)
        trace = float(np.real(np.trace(m)))
        if abs(trace - 1.0) > QkdConfig.STRUCTURAL_TOL:
            raise InvalidStateError(f"迹为 {trace!r}，应为1")
        spectrum = np.linalg.eigvalsh(m)[::-1]
        self._is_positive = bool(spectrum[-1] >= -QkdConfig.POSITIVITY_TOL)
        if require_positive and not self._is_positive:
            raise InvalidStateError(f"最小特征值 {spectrum[-1]:.3e} 为负")
        m.setflags(write=False)
        spectrum.setflags(write=False)
        self._matrix = m
        self._spectrum = spectrum

    @property
    def matrix(self):
        return self._matrix

    @property
    def dim(self):
        return self._matrix.shape[0]

    @property
    def num_qubits(self):
        return self._num_qubits

    @property
    def is_positive(self):
        return self._is_positive

    @property
    def spectrum(self):
        """降序特征值"""
        return self._spectrum

    @classmethod
    def maximally_mixed(cls, num_qubits):
        dim = 2 ** num_qubits
        return cls(np.eye(dim, dtype=complex) / dim)

    @classmethod
    def from_pure(cls, state):
        return cls(np.outer(state.amplitudes, state.amplitudes.conj()))

    def to_dict(self):
        return {
            "dim": self.dim,
            "real": np.real(self._matrix).tolist(),
            "imag": np.imag(self._matrix).tolist(),
            "is_positive": self._is_positive,
        }

    @classmethod
    def from_dict(cls, data, require_positive=True):
        matrix = np.array(data["real"], dtype=float) + 1j * np.array(data["imag"], dtype=float)
        return cls(matrix, require_positive=require_positive)

    def __repr__(self):
        return f"DensityOperator(dim={self.dim}, positive={self._is_positive})"


class PureState:
    """归一化态矢量"""

    def __init__(self, amplitudes):
        psi = np.array(amplitudes, dtype=complex).reshape(-1)
        self._num_qubits = _num_qubits(psi.shape[0])
        norm = float(np.linalg.norm(psi))
        if abs(norm - 1.0) > QkdConfig.STRUCTURAL_TOL:
            raise InvalidStateError(f"态矢量范数为 {norm!r}")
        psi.setflags(write=False)
        self._amplitudes = psi

    @property
    def amplitudes(self):
        return self._amplitudes

    @property
    def dim(self):
        return self._amplitudes.shape[0]

    @property
    def num_qubits(self):
        return self._num_qubits

    def density(self):
        return DensityOperator.from_pure(self)

    def __repr__(self):
        return f"PureState(dim={self.dim})"


_SINGLET = PureState(np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2))


def singlet():
    """单态 |s> = (|01> - |10>)/√2"""
    return _SINGLET


def tensor(a, b):
    """张量积 a⊗b，a 占据低编号的子系统

    两个纯态得到纯态；只要有一个是密度算符，结果就是密度算符。
    """
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, PureState):
        a = a.density()
    if isinstance(b, PureState):
        b = b.density()
    if not isinstance(a, DensityOperator) or not isinstance(b, DensityOperator):
        raise TypeError("tensor 只接受 PureState 或 DensityOperator")
    return DensityOperator(np.kron(a.matrix, b.matrix), require_positive=False)


def _validate_subsystems(indices, num_qubits, allow_empty=False):
    try:
        chosen = sorted({int(q) for q in indices})
    except (TypeError, ValueError):
        raise SubsystemError(f"无效的子系统索引 {indices!r}") from None
    if not chosen and not allow_empty:
        raise SubsystemError("至少需要保留一个子系统")
    if chosen and (chosen[0] < 0 or chosen[-1] >= num_qubits):
        raise SubsystemError(f"索引 {chosen} 超出 0..{num_qubits - 1}")
    return chosen


def partial_trace(rho, keep):
    """对 keep 之外的子系统求偏迹

    Args:
        rho: DensityOperator 或 PureState
        keep: 保留的子系统索引集合，结果按索引升序排列

    Returns:
        约化密度算符
    """
    n = rho.num_qubits
    kept = _validate_subsystems(keep, n)
    traced = [q for q in range(n) if q not in kept]
    dk, dt = 2 ** len(kept), 2 ** len(traced)
    if isinstance(rho, PureState):
        amp = rho.amplitudes.reshape([2] * n).transpose(kept + traced).reshape(dk, dt)
        reduced = amp @ amp.conj().T
    else:
        t = rho.matrix.reshape([2] * (2 * n))
        perm = kept + traced + [n + q for q in kept] + [n + q for q in traced]
        t = t.transpose(perm).reshape(dk, dt, dk, dt)
        reduced = np.einsum("ajbj->ab", t)
    return DensityOperator(reduced, require_positive=getattr(rho, "is_positive", True))


def reduce_after_effect(state, effect, measured):
    """tr_measured[(E⊗1)|ψ><ψ|]，未归一化

    Args:
        state: PureState
        effect: 作用在 measured 子系统（升序）上的算符
        measured: 被测量的子系统索引

    Returns:
        其余子系统（升序）上的复矩阵，其迹为该测量结果的概率
    """
    n = state.num_qubits
    chosen = _validate_subsystems(measured, n)
    rest = [q for q in range(n) if q not in chosen]
    if not rest:
        raise SubsystemError("没有剩余子系统")
    dm = 2 ** len(chosen)
    effect = np.asarray(effect, dtype=complex)
    if effect.shape != (dm, dm):
        raise InvalidStateError(f"效应算符形状 {effect.shape} 与 {len(chosen)} 个量子比特不符")
    amp = state.amplitudes.reshape([2] * n).transpose(chosen + rest).reshape(dm, -1)
    return amp.T @ effect.T @ amp.conj()


def eigenvalues(rho):
    """降序实特征值

    Args:
        rho: DensityOperator 或厄米矩阵
    """
    if isinstance(rho, DensityOperator):
        return np.array(rho.spectrum)
    m = np.asarray(rho, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidStateError(f"需要方阵，得到形状 {m.shape}")
    if np.max(np.abs(m - m.conj().T)) > QkdConfig.STRUCTURAL_TOL * max(1.0, float(np.max(np.abs(m)))):
        raise InvalidStateError("矩阵不是厄米的")
    return np.linalg.eigvalsh(0.5 * (m + m.conj().T))[::-1]


def _entropy_of_spectrum(spectrum):
    lam = np.asarray(spectrum, dtype=float)
    if lam.size and lam.min() < -QkdConfig.POSITIVITY_TOL:
        raise InvalidStateError(f"特征值 {lam.min():.3e} 为负，不是合法的态")
    lam = lam[lam > 0.0]
    return float(max(0.0, -np.sum(lam * np.log2(lam))))


def von_neumann_entropy(rho):
    """S(ρ) = -Σ λ log2 λ，单位为比特"""
    return _entropy_of_spectrum(eigenvalues(rho))


def binary_entropy(p):
    """h2(p)"""
    p = float(p)
    if p < 0.0 or p > 1.0:
        raise DistributionError(f"概率 {p} 不在 [0,1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1.0 - p) * np.log2(1.0 - p))


def shannon_mutual_information(p):
    """联合分布的互信息 Σ p_kl log2(p_kl / (p_k· p_·l))

    Args:
        p: JointDistribution 或二维非负数组
    """
    table = np.asarray(getattr(p, "probabilities", p), dtype=float)
    if table.ndim != 2:
        raise DistributionError("联合分布必须是二维表")
    if np.any(table < 0.0):
        raise DistributionError("联合分布含负项")
    total = float(table.sum())
    if abs(total - 1.0) > QkdConfig.DISTRIBUTION_TOL:
        raise DistributionError(f"概率和为 {total!r}")
    rows = table.sum(axis=1)
    cols = table.sum(axis=0)
    mask = table > 0.0
    ratio = table[mask] / np.outer(rows, cols)[mask]
    return float(max(0.0, np.sum(table[mask] * np.log2(ratio))))


def trace_distance(a, b):
    """½‖a - b‖₁"""
    ma = a.matrix if isinstance(a, DensityOperator) else np.asarray(a, dtype=complex)
    mb = b.matrix if isinstance(b, DensityOperator) else np.asarray(b, dtype=complex)
    if ma.shape != mb.shape:
        raise InvalidStateError(f"维数不同：{ma.shape} 与 {mb.shape}")
    diff = ma - mb
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))


def _psd_sqrt(m):
    w, v = np.linalg.eigh(m)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho, sigma):
    """Uhlmann 保真度 (tr√(√ρ σ √ρ))²"""
    root = _psd_sqrt(rho.matrix)
    inner = root @ sigma.matrix @ root
    w = np.clip(np.linalg.eigvalsh(0.5 * (inner + inner.conj().T)), 0.0, None)
    return float(np.sum(np.sqrt(w)) ** 2)


def random_density_operator(generator, num_qubits, rank=None):
    """Ginibre 系综中的随机态，测试与演示用"""
    dim = 2 ** num_qubits
    rank = dim if rank is None else rank
    g = generator.normal(size=(dim, rank)) + 1j * generator.normal(size=(dim, rank))
    m = g @ g.conj().T
    return DensityOperator(m / np.real(np.trace(m)))
