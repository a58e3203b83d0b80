"""第一轮消息攻击：显式构造 Eve 在公共宣告后的条件系综

双份纯化 |S>⊗|S> 的量子比特顺序为 A1 B1 E E A2 B2 E E，被测量的是 0,1,4,5。
对每一种与宣告相容的字母组合，把 Alice 与 Bob 的效应算符作用上去，按 Alice 的
比特把 Eve 的未归一化态加起来。先验取 Born 权重，误码 q 为不一致组合的权重。
"""
import functools
import logging
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from ..config import QkdConfig
from ..enums import AttackKind
from ..errors import NoiseRangeError
from ..measurement import tetra_pom
from ..quantum import DensityOperator, binary_entropy, reduce_after_effect, tensor, von_neumann_entropy
from ..source import purification
from .security import find_bracket, solve_threshold, table_one_reference
from .sifting import ALL_LETTERS, GroupingAnnouncement, RenesPairAnnouncement

logger = logging.getLogger(__name__)

CANONICAL_GROUPING = GroupingAnnouncement((0, 1), (2, 3))
CANONICAL_PAIR = RenesPairAnnouncement(0, 1)
RANK_TOL = 1e-9

_REFERENCE_KEYS = {
    AttackKind.ITERATION: ("message", "1", "it"),
    AttackKind.FINAL_PAIRING: ("message", "1", "FP"),
    AttackKind.RENES_L1: ("message", "L1", "FP"),
}


@dataclass(frozen=True)
class AttackResult:
    """某个 ε 下的攻击评估"""
    kind: AttackKind
    epsilon: float
    chi: float
    information_ab: float
    error_rate: float
    priors: Tuple[float, float]
    ranks: Tuple[int, int]
    mixture_rank: int
    announcement: dict = field(compare=False)

    @property
    def secure_yield(self):
        return self.information_ab - self.chi

    def to_dict(self):
        return {
            "kind": self.kind.value,
            "epsilon": self.epsilon,
            "chi": self.chi,
            "information_ab": self.information_ab,
            "error_rate": self.error_rate,
            "priors": list(self.priors),
            "ranks": list(self.ranks),
            "mixture_rank": self.mixture_rank,
            "announcement": self.announcement,
        }


def _compatible_terms(kind, announcement):
    """(Alice 字母组, Bob 字母组, Alice 比特, Bob 比特)"""
    if kind is AttackKind.ITERATION:
        for x in ALL_LETTERS:
            for group in (announcement.group0, announcement.group1):
                for b1, b2 in (group, group[::-1]):
                    yield (x, x), (b1, b2), announcement.value_of(x), 1 - announcement.value_of(b1)
    elif kind is AttackKind.FINAL_PAIRING:
        for x in (announcement.zero, announcement.one):
            for b in (announcement.zero, announcement.one):
                yield (x, x), (b, b), announcement.value_of(x), announcement.partner_value(b)
    else:
        for x in (announcement.zero, announcement.one):
            for b in (announcement.zero, announcement.one):
                yield (x,), (b,), announcement.value_of(x), announcement.partner_value(b)


@functools.lru_cache(maxsize=32)
def _source(epsilon, copies):
    state = purification(epsilon)
    return state if copies == 1 else tensor(state, state)


def _effect(alice, bob):
    effects = tetra_pom().effects
    # 被测量比特升序为 A1 B1 (A2 B2)
    factors = []
    for a, b in zip(alice, bob):
        factors.extend((effects[a], effects[b]))
    return functools.reduce(np.kron, factors)


def conditioned_ensemble(epsilon, kind, announcement=None):
    """Eve 按 Alice 比特分开的未归一化条件态

    Returns:
        (states, disagreement)，states[i] 的迹为 Alice 比特为 i 且宣告相容的概率，
        disagreement 为双方比特不一致的概率
    """
    kind = AttackKind(kind)
    eps = float(epsilon)
    if not 0.0 < eps < QkdConfig.SEPARABLE_EPSILON:
        raise NoiseRangeError(f"ε={epsilon!r} 不在 (0, 2/3)")
    if announcement is None:
        announcement = CANONICAL_GROUPING if kind is AttackKind.ITERATION else CANONICAL_PAIR
    copies = 1 if kind is AttackKind.RENES_L1 else 2
    state = _source(eps, copies)
    measured = (0, 1) if copies == 1 else (0, 1, 4, 5)
    dim = 2 ** (state.num_qubits - len(measured))
    states = [np.zeros((dim, dim), dtype=complex), np.zeros((dim, dim), dtype=complex)]
    disagreement = 0.0
    for alice, bob, alice_bit, bob_bit in _compatible_terms(kind, announcement):
        term = reduce_after_effect(state, _effect(alice, bob), measured)
        states[alice_bit] += term
        if alice_bit != bob_bit:
            disagreement += float(np.real(np.trace(term)))
    return states, disagreement


def _rank(rho):
    return int(np.sum(rho.spectrum > RANK_TOL))


def message_attack_at(epsilon, kind, announcement=None):
    """某个 ε 下 Eve 的 Holevo 量与双方的信息"""
    kind = AttackKind(kind)
    states, disagreement = conditioned_ensemble(epsilon, kind, announcement)
    weights = [float(np.real(np.trace(s))) for s in states]
    total = sum(weights)
    priors = tuple(w / total for w in weights)
    conditioned = [DensityOperator(s / w) for s, w in zip(states, weights)]
    mixture = DensityOperator(sum(states) / total)
    chi = von_neumann_entropy(mixture) - sum(p * von_neumann_entropy(rho) for p, rho in zip(priors, conditioned))
    q = disagreement / total
    if announcement is None:
        announcement = CANONICAL_GROUPING if kind is AttackKind.ITERATION else CANONICAL_PAIR
    return AttackResult(
        kind=kind,
        epsilon=float(epsilon),
        chi=max(0.0, float(chi)),
        information_ab=1.0 - binary_entropy(q),
        error_rate=q,
        priors=priors,
        ranks=tuple(_rank(rho) for rho in conditioned),
        mixture_rank=_rank(mixture),
        announcement={"type": announcement.message_type.value, **announcement.to_payload()},
    )


@functools.lru_cache(maxsize=8)
def message_attack_threshold(kind, bracket=None):
    """1 - h2(q) = χ 的根；先扫描出第一个变号区间再求根"""
    kind = AttackKind(kind)
    lo, hi = bracket or QkdConfig.MESSAGE_ATTACK_BRACKET

    def gap(eps):
        return message_attack_at(eps, kind).secure_yield

    reference = table_one_reference().get(_REFERENCE_KEYS[kind])
    report = solve_threshold(gap, find_bracket(gap, lo, hi), quantity=f"message_{kind.value}",
                             reference=reference, source="message:" + "/".join(_REFERENCE_KEYS[kind][1:]))
    tolerance = QkdConfig.REFERENCE_TOLERANCE.get(f"message_{kind.name.lower()}")
    if tolerance is not None and not report.within_reference(tolerance):
        logger.warning("%s 阈值 %.4f 与参考值 %.4f 相差 %+.4f", kind.value, report.threshold,
                       reference, report.delta)
    return report


def first_round_message_attack(epsilon, kind):
    """(χ, ThresholdReport)"""
    result = message_attack_at(epsilon, kind)
    return result.chi, message_attack_threshold(AttackKind(kind))
