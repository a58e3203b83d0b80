"""双向筛选：Renes 配对、迭代步骤 1/2a/2b 以及末轮的 2b'

双方各持一个 SiftingParty。所有随机选择都发生在产生公共事件的一方，
事件一经公布，双方用同一个 apply() 推导自己的密钥比特。因此只要有自己的
字母和完整记录，就能不依赖随机数重放出同样的密钥（见 replay_key）。
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from ..config import QkdConfig
from ..enums import MessageType, Role, SiftingStep
from ..errors import InsufficientDataError, SiftingError

logger = logging.getLogger(__name__)

ALL_LETTERS = (0, 1, 2, 3)


@dataclass(frozen=True)
class PositionAnnouncement:
    """步骤1：Alice 公布两个同字母的位置"""
    first: int
    second: int
    message_type = MessageType.POSITION_ANNOUNCE

    def to_payload(self):
        return {"positions": [self.first, self.second]}


@dataclass(frozen=True)
class GroupingAnnouncement:
    """步骤2a：Bob 公布分组，group0 取值0"""
    group0: Tuple[int, int]
    group1: Tuple[int, int]
    message_type = MessageType.GROUPING

    def to_payload(self):
        return {"group0": _symbols(self.group0), "group1": _symbols(self.group1)}

    def value_of(self, letter):
        return 0 if letter in self.group0 else 1


@dataclass(frozen=True)
class SameLetterFlag:
    """步骤2b：Bob 两个位置上是同一个字母"""
    message_type = MessageType.SAME_LETTER

    def to_payload(self):
        return {}


@dataclass(frozen=True)
class RenesPairAnnouncement:
    """Renes 对：zero 取值0并先说出，one 取值1

    position 只在 L=1 的原始配对中出现。
    """
    zero: int
    one: int
    position: Optional[int] = None
    message_type = MessageType.RENES_PAIR

    def to_payload(self):
        payload = {"pair": _symbols((self.zero, self.one))}
        if self.position is not None:
            payload["position"] = self.position
        return payload

    def value_of(self, letter):
        if letter == self.zero:
            return 0
        if letter == self.one:
            return 1
        return None

    def partner_value(self, letter):
        """解码方取对中另一个字母的值"""
        if letter == self.zero:
            return 1
        if letter == self.one:
            return 0
        return None


@dataclass(frozen=True)
class SuccessFlag:
    success: bool
    message_type = MessageType.SUCCESS

    def to_payload(self):
        return {"flag": bool(self.success)}


@dataclass(frozen=True)
class RoundBoundary:
    round_index: int
    message_type = MessageType.ROUND_DONE

    def to_payload(self):
        return {"round": self.round_index}


def _symbols(letters):
    return ["ABCD"[k] for k in letters]


def _codes(symbols):
    try:
        return tuple("ABCD".index(s) for s in symbols)
    except (ValueError, TypeError):
        raise SiftingError(f"非法字母 {symbols!r}") from None


def event_from_payload(message_type, payload):
    """由消息类型和载荷还原筛选事件"""
    message_type = MessageType(message_type)
    try:
        if message_type is MessageType.POSITION_ANNOUNCE:
            first, second = payload["positions"]
            return PositionAnnouncement(int(first), int(second))
        if message_type is MessageType.GROUPING:
            return GroupingAnnouncement(_codes(payload["group0"]), _codes(payload["group1"]))
        if message_type is MessageType.SAME_LETTER:
            return SameLetterFlag()
        if message_type is MessageType.RENES_PAIR:
            zero, one = _codes(payload["pair"])
            position = payload.get("position")
            return RenesPairAnnouncement(zero, one, None if position is None else int(position))
        if message_type is MessageType.SUCCESS:
            return SuccessFlag(bool(payload["flag"]))
        if message_type is MessageType.ROUND_DONE:
            return RoundBoundary(int(payload["round"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise SiftingError(f"载荷无效: {payload!r}") from exc
    raise SiftingError(f"{message_type.value} 不是筛选事件")


class SiftingTranscript:
    """按顺序记录的全部公共事件"""

    def __init__(self, events=None):
        self.events = list(events or [])

    def append(self, event):
        self.events.append(event)

    def __iter__(self):
        return iter(self.events)

    def __len__(self):
        return len(self.events)

    def __eq__(self, other):
        return isinstance(other, SiftingTranscript) and self.events == other.events

    def to_list(self):
        return [{"type": e.message_type.value, **e.to_payload()} for e in self.events]

    @classmethod
    def from_list(cls, records):
        events = []
        for record in records:
            payload = {k: v for k, v in record.items() if k != "type"}
            events.append(event_from_payload(record["type"], payload))
        return cls(events)


@dataclass(frozen=True)
class SiftingConfig:
    """筛选参数

    Args:
        rounds: 迭代轮数 n
        final_pairing: 末轮是否以 2b' 代替 2b
    """
    rounds: int = QkdConfig.DEFAULT_ROUNDS
    final_pairing: bool = QkdConfig.DEFAULT_FINAL_PAIRING
    bit_convention: str = QkdConfig.BIT_CONVENTION

    def __post_init__(self):
        if int(self.rounds) < 1:
            raise SiftingError(f"轮数必须至少为1，得到 {self.rounds}")

    def to_dict(self):
        return {"rounds": self.rounds, "final_pairing": self.final_pairing,
                "bit_convention": self.bit_convention}

    @classmethod
    def from_dict(cls, data):
        return cls(rounds=int(data["rounds"]), final_pairing=bool(data["final_pairing"]))


@dataclass
class RoundStats:
    """单轮统计"""
    round_index: int
    input_length: int
    pairs: int = 0
    singles: int = 0
    iteration_bits: int = 0
    final_pairing_bits: int = 0
    renes_bits: int = 0
    failures: int = 0
    set_aside: int = 0

    @property
    def bits(self):
        return self.iteration_bits + self.final_pairing_bits + self.renes_bits

    @property
    def letters_consumed(self):
        return 2 * (self.pairs - self.set_aside) + self.singles

    @property
    def letters_set_aside(self):
        return 2 * self.set_aside

    @property
    def unpaired(self):
        return self.input_length - 2 * self.pairs - self.singles

    def to_dict(self):
        return {
            "round": self.round_index,
            "input_length": self.input_length,
            "pairs": self.pairs,
            "bits": self.bits,
            "iteration_bits": self.iteration_bits,
            "final_pairing_bits": self.final_pairing_bits,
            "renes_bits": self.renes_bits,
            "failures": self.failures,
            "letters_consumed": self.letters_consumed,
            "letters_set_aside": self.letters_set_aside,
            "residuals_carried": self.set_aside,
            "unpaired": self.unpaired,
        }


def renes_pair(letter, rng, position=None):
    """Renes 配对

    Alice 给自己的字母随机赋值，再随机选另一个字母组成一对，取值0的字母先说。

    Returns:
        (RenesPairAnnouncement, 自己的比特)
    """
    generator = getattr(rng, "generator", rng)
    letter = int(letter)
    bit = int(generator.integers(2))
    partner = int(generator.choice([k for k in ALL_LETTERS if k != letter]))
    if bit == 0:
        return RenesPairAnnouncement(letter, partner, position), bit
    return RenesPairAnnouncement(partner, letter, position), bit


class SiftingParty:
    """一方的筛选状态：本轮序列、留存序列、密钥与统计"""

    def __init__(self, role, letters, config=None):
        self.role = Role(role)
        self.config = config or SiftingConfig()
        letters = np.asarray(getattr(letters, "letters", letters), dtype=np.int64)
        self.total_letters = int(letters.size)
        self.round_index = 1
        self.finished = False
        self.key: List[int] = []
        self.key_rounds: List[int] = []
        self.key_steps: List[SiftingStep] = []
        self.transcript = SiftingTranscript()
        self.rounds: List[RoundStats] = []
        self.round_inputs: List[np.ndarray] = []
        self._start_round(letters)

    def _start_round(self, letters):
        self._letters = np.array(letters, dtype=np.int64)
        self._used = np.zeros(self._letters.size, dtype=bool)
        self._next_round: List[int] = []
        self._pending: Optional[PositionAnnouncement] = None
        self._renes: Optional[RenesPairAnnouncement] = None
        self._candidate: Optional[int] = None
        self.rounds.append(RoundStats(self.round_index, int(self._letters.size)))
        self.round_inputs.append(self._letters.copy())

    @property
    def stats(self):
        return self.rounds[-1]

    @property
    def is_final_round(self):
        return self.round_index == self.config.rounds

    @property
    def round_letters(self):
        return self._letters.copy()

    @property
    def awaiting_success(self):
        return self._renes is not None

    def _record_bit(self, bit, step):
        self.key.append(int(bit))
        self.key_rounds.append(self.round_index)
        self.key_steps.append(step)

    def _claim(self, position):
        if not 0 <= position < self._letters.size:
            raise SiftingError(f"位置 {position} 超出本轮序列")
        if self._used[position]:
            raise SiftingError(f"位置 {position} 已被使用")
        self._used[position] = True

    # ---- 公共事件 ----

    def apply(self, event):
        """把一个公共事件作用到本方状态上"""
        if self.finished:
            raise SiftingError("筛选已结束")
        handler = {
            PositionAnnouncement: self._on_positions,
            GroupingAnnouncement: self._on_grouping,
            SameLetterFlag: self._on_same_letter,
            RenesPairAnnouncement: self._on_renes_pair,
            SuccessFlag: self._on_success,
            RoundBoundary: self._on_round_boundary,
        }.get(type(event))
        if handler is None:
            raise SiftingError(f"未知事件 {event!r}")
        handler(event)
        self.transcript.append(event)

    def _on_positions(self, event):
        if self._pending is not None or self._renes is not None:
            raise SiftingError("上一对位置尚未处理完")
        if event.first == event.second:
            raise SiftingError("两个位置相同")
        self._claim(event.first)
        self._claim(event.second)
        if self.role is Role.ALICE and self._letters[event.first] != self._letters[event.second]:
            raise SiftingError("Alice 公布的两个位置字母不同")
        self._pending = event
        self.stats.pairs += 1

    def _require_pending(self):
        if self._pending is None:
            raise SiftingError("没有待处理的位置对")
        return self._pending

    def _on_grouping(self, event):
        pending = self._require_pending()
        if (len(event.group0) != 2 or len(event.group1) != 2
                or sorted(event.group0 + event.group1) != list(ALL_LETTERS)):
            raise SiftingError("分组不是字母表的 2+2 划分")
        first = int(self._letters[pending.first])
        if self.role is Role.ALICE:
            bit = event.value_of(first)
        else:
            second = int(self._letters[pending.second])
            if event.value_of(first) != event.value_of(second):
                raise SiftingError("Bob 的两个字母不在同一组")
            bit = 1 - event.value_of(first)
        self._record_bit(bit, SiftingStep.ITERATION)
        self.stats.iteration_bits += 1
        self._pending = None

    def _on_same_letter(self, event):
        pending = self._require_pending()
        if self.config.final_pairing and self.is_final_round:
            raise SiftingError("末轮应使用 2b' 而不是 2b")
        first = int(self._letters[pending.first])
        if self.role is Role.BOB and first != int(self._letters[pending.second]):
            raise SiftingError("Bob 的两个字母不同")
        self._next_round.append(first)
        self.stats.set_aside += 1
        self._pending = None

    def _on_renes_pair(self, event):
        if event.zero == event.one or event.zero not in ALL_LETTERS or event.one not in ALL_LETTERS:
            raise SiftingError("Renes 对必须是两个不同的字母")
        if event.position is None:
            # 2b'：Bob 以自己的重复字母组对，Alice 判断成败
            pending = self._require_pending()
            if not (self.config.final_pairing and self.is_final_round):
                raise SiftingError("只有末轮允许 2b'")
            own = int(self._letters[pending.first])
            if self.role is Role.ALICE:
                self._candidate = event.value_of(own)
            else:
                self._candidate = event.partner_value(own)
                if self._candidate is None:
                    raise SiftingError("Bob 的字母不在自己公布的对中")
        else:
            # L=1：Alice 以自己的字母组对，Bob 判断成败
            if self._pending is not None or self._renes is not None:
                raise SiftingError("上一对位置尚未处理完")
            self._claim(event.position)
            self.stats.singles += 1
            own = int(self._letters[event.position])
            if self.role is Role.ALICE:
                self._candidate = event.value_of(own)
                if self._candidate is None:
                    raise SiftingError("Alice 的字母不在自己公布的对中")
            else:
                self._candidate = event.partner_value(own)
        self._renes = event

    def _on_success(self, event):
        if self._renes is None:
            raise SiftingError("没有待确认的 Renes 对")
        step = SiftingStep.RENES if self._renes.position is not None else SiftingStep.FINAL_PAIRING
        if event.success:
            if self._candidate is None:
                raise SiftingError("成功标记与本方字母矛盾")
            self._record_bit(self._candidate, step)
            if step is SiftingStep.RENES:
                self.stats.renes_bits += 1
            else:
                self.stats.final_pairing_bits += 1
        else:
            self.stats.failures += 1
        self._renes = None
        self._candidate = None
        self._pending = None

    def _on_round_boundary(self, event):
        if self._pending is not None or self._renes is not None:
            raise SiftingError("本轮还有未处理的位置对")
        if event.round_index != self.round_index:
            raise SiftingError(f"轮次 {event.round_index} 与本方 {self.round_index} 不符")
        stats = self.stats
        logger.debug("%s 第%d轮：%d 比特，留存 %d，未配对 %d", self.role.value,
                     stats.round_index, stats.bits, stats.set_aside, stats.unpaired)
        if self.is_final_round or len(self._next_round) < 2:
            self.finished = True
            return
        self.round_index += 1
        self._start_round(self._next_round)

    # ---- 产生事件的主动选择 ----

    def announce_positions(self, rng):
        """步骤1：按随机排列扫描，每个位置与下一个同字母的未用位置配对

        每个字母最多剩下一个未配对的位置，直接丢弃。
        """
        if self.role is not Role.ALICE:
            raise SiftingError("只有 Alice 公布位置")
        generator = getattr(rng, "generator", rng)
        waiting = {}
        announcements = []
        for position in generator.permutation(self._letters.size):
            position = int(position)
            if self._used[position]:
                continue
            letter = int(self._letters[position])
            earlier = waiting.pop(letter, None)
            if earlier is None:
                waiting[letter] = position
            else:
                announcements.append(PositionAnnouncement(earlier, position))
        return announcements

    def respond(self, rng):
        """Bob 对待处理的位置对作出回应：2a、2b 或 2b'"""
        if self.role is not Role.BOB:
            raise SiftingError("只有 Bob 回应位置对")
        pending = self._require_pending()
        generator = getattr(rng, "generator", rng)
        first = int(self._letters[pending.first])
        second = int(self._letters[pending.second])
        if first != second:
            mine = tuple(sorted((first, second)))
            other = tuple(k for k in ALL_LETTERS if k not in mine)
            if int(generator.integers(2)) == 0:
                return GroupingAnnouncement(mine, other)
            return GroupingAnnouncement(other, mine)
        if self.config.final_pairing and self.is_final_round:
            announcement, _ = renes_pair(first, generator)
            return announcement
        return SameLetterFlag()

    def announce_renes(self, position, rng):
        """L=1：Alice 为某个位置公布 Renes 对"""
        if self.role is not Role.ALICE:
            raise SiftingError("只有 Alice 公布 Renes 对")
        announcement, _ = renes_pair(int(self._letters[position]), rng, position=position)
        return announcement

    def success_flag(self):
        """接收 Renes 对的一方报告成败"""
        if self._renes is None:
            raise SiftingError("没有待确认的 Renes 对")
        return SuccessFlag(self._candidate is not None)


class KeyAccounting:
    """密钥统计：逐轮的字母消耗、比特产出、留存与误码"""

    def __init__(self, total_letters, rounds, key_rounds, key_steps, alice_key=None, bob_key=None):
        self.total_letters = int(total_letters)
        self.rounds = [r.to_dict() for r in rounds]
        self.key_rounds = list(key_rounds)
        self.key_steps = list(key_steps)
        self.alice_key = None if alice_key is None else list(alice_key)
        self.bob_key = None if bob_key is None else list(bob_key)

    @classmethod
    def from_parties(cls, alice, bob=None):
        """由一方或双方的状态生成统计；只有双方都在时才能计算误码"""
        return cls(alice.total_letters, alice.rounds, alice.key_rounds, alice.key_steps,
                   alice_key=alice.key if alice.role is Role.ALICE else None,
                   bob_key=None if bob is None else bob.key)

    @property
    def total_bits(self):
        return len(self.key_rounds)

    @property
    def letters_consumed(self):
        return sum(r["letters_consumed"] for r in self.rounds)

    @property
    def efficiency(self):
        return self.total_bits / self.total_letters if self.total_letters else 0.0

    @property
    def keys_known(self):
        return self.alice_key is not None and self.bob_key is not None

    def error_rates(self):
        """逐轮逐步骤的经验误码率

        Returns:
            {(round, step): (errors, bits)}
        """
        if not self.keys_known:
            return {}
        result = {}
        for a, b, r, step in zip(self.alice_key, self.bob_key, self.key_rounds, self.key_steps):
            errors, bits = result.get((r, step), (0, 0))
            result[(r, step)] = (errors + int(a != b), bits + 1)
        return result

    def error_rate(self, round_index, step=SiftingStep.ITERATION):
        errors, bits = self.error_rates().get((round_index, step), (0, 0))
        if bits == 0:
            raise InsufficientDataError(f"第{round_index}轮没有 {step.value} 比特")
        return errors / bits

    def to_dict(self):
        record = {
            "total_letters": self.total_letters,
            "total_bits": self.total_bits,
            "letters_consumed": self.letters_consumed,
            "efficiency": self.efficiency,
            "rounds": self.rounds,
        }
        if self.keys_known:
            record["keys_identical"] = self.alice_key == self.bob_key
            record["error_rates"] = [
                {"round": r, "step": step.value, "errors": e, "bits": n, "rate": e / n}
                for (r, step), (e, n) in sorted(self.error_rates().items(), key=lambda kv: (kv[0][0], kv[0][1].value))
            ]
        return record


@dataclass
class RoundOutput:
    """某一轮双方的输入序列"""
    round_index: int
    alice: np.ndarray
    bob: np.ndarray


@dataclass
class SiftingOutcome:
    alice_key: List[int]
    bob_key: List[int]
    transcript: SiftingTranscript
    accounting: KeyAccounting
    round_outputs: List[RoundOutput] = field(default_factory=list)

    def __iter__(self):
        return iter((self.alice_key, self.bob_key, self.transcript, self.accounting))


def _check_pair(alice, bob):
    a = np.asarray(getattr(alice, "letters", alice))
    b = np.asarray(getattr(bob, "letters", bob))
    if a.shape != b.shape:
        raise SiftingError(f"序列长度不同：{a.size} 与 {b.size}")
    return a, b


def _outcome(alice_party, bob_party):
    outputs = [RoundOutput(i + 1, a, b) for i, (a, b) in
               enumerate(zip(alice_party.round_inputs, bob_party.round_inputs))]
    accounting = KeyAccounting.from_parties(alice_party, bob_party)
    return SiftingOutcome(list(alice_party.key), list(bob_party.key), alice_party.transcript,
                          accounting, outputs)


def run_sifting(alice, bob, config, rng):
    """在同一进程中运行双方的迭代筛选

    Returns:
        SiftingOutcome，可解包为 (alice_key, bob_key, transcript, accounting)
    """
    a, b = _check_pair(alice, bob)
    config = config or SiftingConfig()
    alice_party = SiftingParty(Role.ALICE, a, config)
    bob_party = SiftingParty(Role.BOB, b, config)

    def publish(event):
        alice_party.apply(event)
        bob_party.apply(event)

    while not alice_party.finished:
        for announcement in alice_party.announce_positions(rng):
            publish(announcement)
            reply = bob_party.respond(rng)
            publish(reply)
            if isinstance(reply, RenesPairAnnouncement):
                publish(alice_party.success_flag())
        stats = alice_party.stats
        logger.info("第%d轮：输入 %d，比特 %d，留存 %d", stats.round_index,
                    stats.input_length, stats.bits, stats.set_aside)
        publish(RoundBoundary(alice_party.round_index))
    return _outcome(alice_party, bob_party)


def run_renes_sifting(alice, bob, rng):
    """原始 Renes 配对（L=1）：每个位置一对，Bob 报告成败"""
    a, b = _check_pair(alice, bob)
    config = SiftingConfig(rounds=1, final_pairing=False)
    alice_party = SiftingParty(Role.ALICE, a, config)
    bob_party = SiftingParty(Role.BOB, b, config)
    for position in range(a.size):
        announcement = alice_party.announce_renes(position, rng)
        alice_party.apply(announcement)
        bob_party.apply(announcement)
        flag = bob_party.success_flag()
        alice_party.apply(flag)
        bob_party.apply(flag)
    boundary = RoundBoundary(1)
    alice_party.apply(boundary)
    bob_party.apply(boundary)
    return _outcome(alice_party, bob_party)


def replay_key(role, letters, transcript, config=None):
    """只用本方字母和公共记录重新推导密钥"""
    party = SiftingParty(role, letters, config)
    for event in transcript:
        party.apply(event)
    return list(party.key)


@dataclass(frozen=True)
class ResidualEstimate:
    round_index: int
    epsilon_hat: float
    samples: int
    standard_error: float

    def to_dict(self):
        return {"round": self.round_index, "epsilon_hat": self.epsilon_hat,
                "samples": self.samples, "standard_error": self.standard_error}


def residual_statistics(round_outputs):
    """由第2轮起的留存序列估计噪声：ε̂ = 4 × 同字母比例"""
    estimates = []
    for output in round_outputs:
        if output.round_index < 2 or len(output.alice) == 0:
            continue
        same = np.asarray(output.alice) == np.asarray(output.bob)
        fraction = float(same.mean())
        n = int(same.size)
        estimates.append(ResidualEstimate(output.round_index, 4.0 * fraction, n,
                                          4.0 * float(np.sqrt(fraction * (1.0 - fraction) / n))))
    if not estimates:
        raise InsufficientDataError("没有第2轮及以后的留存序列")
    return estimates


def ideal_efficiency(rounds, final_pairing=False):
    """无噪声时的效率 (2/5)[1-(1/6)^n]，末轮配对时指数为 n+1"""
    exponent = rounds + 1 if final_pairing else rounds
    return 0.4 * (1.0 - (1.0 / 6.0) ** exponent)
