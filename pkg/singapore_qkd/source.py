"""含噪单态源、Eve 持有的纯化、条件辅助态以及字母序列的抽样与置换"""
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import QkdConfig
from .enums import Letter
from .errors import NoiseRangeError, SiftingError
from .measurement import JointDistribution, pom_for, tetra_pom
from .quantum import DensityOperator, PauliVector, PureState, partial_trace, reduce_after_effect, singlet

logger = logging.getLogger(__name__)

ALPHABET = "ABCD"
_SYMBOLS = np.frombuffer(ALPHABET.encode("ascii"), dtype=np.uint8)

# S4 的全部24个置换，PERMUTATIONS[i][k] 为字母 k 的新标签
PERMUTATIONS = np.array(list(itertools.permutations(range(4))), dtype=np.uint8)
PERMUTATIONS.setflags(write=False)
IDENTITY_PERMUTATION = 0


def _check_epsilon(epsilon, upper_inclusive=True):
    eps = float(epsilon)
    upper_ok = eps <= 1.0 if upper_inclusive else eps < 1.0
    if not (eps >= 0.0 and upper_ok):
        raise NoiseRangeError(f"ε={epsilon!r} 超出范围")
    return eps


def is_separable(epsilon):
    """ε ≥ 2/3 时含噪单态可分离"""
    return _check_epsilon(epsilon) >= QkdConfig.SEPARABLE_EPSILON - QkdConfig.STRUCTURAL_TOL


@dataclass(frozen=True)
class NoiseModel:
    """无偏噪声模型"""
    epsilon: float

    def __post_init__(self):
        _check_epsilon(self.epsilon, upper_inclusive=False)

    @property
    def nonseparable(self):
        return not is_separable(self.epsilon)

    def to_dict(self):
        return {"epsilon": self.epsilon, "nonseparable": self.nonseparable}


class LetterSequence:
    """四字母序列，内部编码为 0..3"""

    def __init__(self, letters):
        codes = np.asarray(letters, dtype=np.int64).reshape(-1)
        if codes.size and (codes.min() < 0 or codes.max() > 3):
            raise ValueError("字母必须在 0..3")
        arr = codes.astype(np.uint8)
        arr.setflags(write=False)
        self._letters = arr

    @property
    def letters(self):
        return self._letters

    def __len__(self):
        return int(self._letters.size)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return LetterSequence(self._letters[index])
        return Letter(int(self._letters[index]))

    def __eq__(self, other):
        if not isinstance(other, LetterSequence):
            return NotImplemented
        return np.array_equal(self._letters, other._letters)

    def __hash__(self):
        return hash(self._letters.tobytes())

    def take(self, indices):
        return LetterSequence(self._letters[np.asarray(indices, dtype=np.int64)])

    def without(self, indices):
        mask = np.ones(self._letters.size, dtype=bool)
        mask[np.asarray(indices, dtype=np.int64)] = False
        return LetterSequence(self._letters[mask])

    def to_string(self):
        return _SYMBOLS[self._letters].tobytes().decode("ascii")

    @classmethod
    def from_string(cls, text):
        codes = np.frombuffer(text.encode("ascii", errors="replace"), dtype=np.uint8).astype(np.int64) - ord("A")
        if codes.size and (codes.min() < 0 or codes.max() > 3):
            raise ValueError(f"非法字母序列 {text[:20]!r}")
        return cls(codes)

    def __repr__(self):
        return f"LetterSequence(N={len(self)})"


class RngStream:
    """可分流的确定性随机数：(seed, stream) 相同则输出相同

    Notes:
        底层是 PCG64，种子由 SeedSequence(seed, spawn_key=(stream,)) 派生。
    """

    def __init__(self, seed, stream=0):
        self.seed = int(seed)
        self.stream = int(stream)
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        self.generator = np.random.Generator(np.random.PCG64(sequence))

    def fresh(self):
        """同一 (seed, stream) 的新副本，从头开始"""
        return RngStream(self.seed, self.stream)

    def spawn(self, stream):
        return RngStream(self.seed, stream)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream={self.stream})"


def _generator(rng):
    return rng.generator if isinstance(rng, RngStream) else rng


def noisy_singlet(epsilon):
    """(1-ε)|s><s| + ε/4"""
    eps = _check_epsilon(epsilon)
    return DensityOperator((1.0 - eps) * singlet().density().matrix + eps * np.eye(4) / 4.0)


def _singlet_pair_13_24():
    # |s>_{02}|s>_{13}，轴顺序 (q0,q2,q1,q3) 转为 (q0,q1,q2,q3)
    s = singlet().amplitudes
    return np.kron(s, s).reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(16)


def purification(epsilon):
    """|S> = √(1-ε)|s12 s34> + i√ε|s13 s24>

    量子比特 0,1 属于 Alice 和 Bob，2,3 属于 Eve。
    """
    eps = _check_epsilon(epsilon)
    s = singlet().amplitudes
    amplitudes = np.sqrt(1.0 - eps) * np.kron(s, s) + 1j * np.sqrt(eps) * _singlet_pair_13_24()
    return PureState(amplitudes)


def reduced_ancilla(epsilon):
    """Eve 的无条件辅助态 tr_AB|S><S|"""
    return partial_trace(purification(epsilon), keep=(2, 3))


def conditioned_ancilla(epsilon, outcome, pom=None):
    """Alice 得到结果 k 时 Eve 的条件辅助态

    Args:
        epsilon: 噪声参数
        outcome: Letter 或 0 起始的结果编号
        pom: Alice 的 POM，默认四面体

    Returns:
        (p_k, ρ_E|k)
    """
    pom = tetra_pom() if pom is None else pom
    k = outcome.value if isinstance(outcome, Letter) else int(outcome)
    if not 0 <= k < pom.size:
        raise ValueError(f"结果编号 {outcome!r} 无效")
    effect = np.kron(pom.effects[k], PauliVector.IDENTITY)
    unnormalized = reduce_after_effect(purification(epsilon), effect, measured=(0, 1))
    probability = float(np.real(np.trace(unnormalized)))
    return probability, DensityOperator(unnormalized / probability)


def conditioned_ancillas(epsilon, pom_label):
    """某个 POM 全部结果的条件辅助态"""
    pom = pom_for(pom_label)
    return [conditioned_ancilla(epsilon, k, pom) for k in range(pom.size)]


def tetra_joint_distribution(epsilon):
    """含噪单态的四面体联合概率：对角 ε/16，非对角 (4-ε)/48"""
    eps = _check_epsilon(epsilon)
    p = np.full((4, 4), (4.0 - eps) / 48.0)
    np.fill_diagonal(p, eps / 16.0)
    return JointDistribution(p)


def sample_pairs(epsilon, count, rng):
    """从16格分布中独立抽取 count 对字母

    Returns:
        (alice, bob) 两个 LetterSequence
    """
    if int(count) < 1:
        raise ValueError("至少抽取一对")
    probs = tetra_joint_distribution(epsilon).flat()
    cells = _generator(rng).choice(16, size=int(count), p=probs)
    return LetterSequence(cells // 4), LetterSequence(cells % 4)


def sample_pairs_partitioned(epsilon, sizes, seed, workers=None):
    """分块抽样：第 i 块使用流 STREAM_PARTITION_BASE+i，合并结果与顺序执行一致"""
    streams = [RngStream(seed, QkdConfig.STREAM_PARTITION_BASE + i) for i in range(len(sizes))]

    def draw(job):
        size, stream = job
        return sample_pairs(epsilon, size, stream)

    jobs = list(zip(sizes, streams))
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(draw, jobs))
    else:
        chunks = [draw(job) for job in jobs]
    alice = np.concatenate([a.letters for a, _ in chunks])
    bob = np.concatenate([b.letters for _, b in chunks])
    return LetterSequence(alice), LetterSequence(bob)


def apply_permutations(sequence, log):
    """对每个位置施加记录中的置换"""
    log = np.asarray(log, dtype=np.int64)
    if log.shape != (len(sequence),):
        raise SiftingError("置换记录与序列长度不同")
    return LetterSequence(PERMUTATIONS[log, sequence.letters])


def permutation_log(count, rng):
    """为 count 个位置各抽取一个 PERMUTATIONS 行号"""
    return _generator(rng).integers(0, len(PERMUTATIONS), size=int(count))


def twirl(alice, bob, rng):
    """每个位置抽取一个公共置换，同时作用于双方的字母

    Returns:
        (alice', bob', log)，log[i] 是 PERMUTATIONS 的行号
    """
    if len(alice) != len(bob):
        raise SiftingError("序列长度不同")
    log = permutation_log(len(alice), rng)
    return apply_permutations(alice, log), apply_permutations(bob, log), log


def twirled_distribution(p):
    """对 S4 求轨道平均，即置换后的期望联合分布"""
    table = np.asarray(getattr(p, "probabilities", p), dtype=float)
    if table.shape != (4, 4):
        raise ValueError("需要 4×4 表")
    total = np.zeros((4, 4))
    for perm in PERMUTATIONS:
        moved = np.zeros((4, 4))
        moved[np.ix_(perm, perm)] = table
        total += moved
    return JointDistribution(total / len(PERMUTATIONS))
