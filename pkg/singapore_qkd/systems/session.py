"""Alice 与 Bob 的会话状态机

阶段依次为：握手 → 置换种子 → 层析 → 源检验 → 筛选 → 完成。任何一方发现协议违例都会
发送 abort(reason) 并以中止结果结束。两方记录的消息序列完全相同。
"""
import hashlib
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..config import QkdConfig
from ..enums import MessageType, Phase, Role, Verdict
from ..errors import PeerAborted, ProtocolError, SiftingError, TransportClosed
from ..measurement import frequencies_from_letters
from ..source import LetterSequence, RngStream, apply_permutations, permutation_log, sample_pairs, \
    tetra_joint_distribution
from .messages import SIFTING_TYPES, Message, sifting_event
from .sifting import KeyAccounting, PositionAnnouncement, RenesPairAnnouncement, RoundBoundary, \
    SiftingConfig, SiftingParty
from .transport import transports

logger = logging.getLogger(__name__)

PROTOCOL_NAME = "singapore/1"

_PHASE_TYPES = {
    Phase.HANDSHAKE: frozenset({MessageType.HELLO}),
    Phase.TWIRL_SEED: frozenset({MessageType.SEED_COMMIT, MessageType.DETECTION_BATCH_META,
                                 MessageType.TWIRL_SEED}),
    Phase.TOMOGRAPHY: frozenset({MessageType.TOMO_REQUEST, MessageType.TOMO_REVEAL}),
    Phase.ACCEPTANCE: frozenset({MessageType.ACCEPT_SOURCE}),
    Phase.SIFTING: SIFTING_TYPES,
}

_MATCH_TOL = 1e-12


@dataclass(frozen=True)
class AcceptancePolicy:
    """源检验策略：ε̂ ≤ epsilon_max 且 TV 距离 ≤ multiplier·√(16/M)"""
    epsilon_max: float = QkdConfig.ACCEPT_EPSILON_MAX
    multiplier: float = QkdConfig.ACCEPT_MULTIPLIER
    min_samples: int = QkdConfig.ACCEPT_MIN_SAMPLES

    def to_dict(self):
        return {"epsilon_max": self.epsilon_max, "multiplier": self.multiplier,
                "min_samples": self.min_samples}

    @classmethod
    def from_dict(cls, data):
        return cls(float(data["epsilon_max"]), float(data["multiplier"]), int(data["min_samples"]))


@dataclass(frozen=True)
class SourceAcceptance:
    samples: int
    frequencies: tuple
    epsilon_hat: float
    clamped: bool
    distance: float
    threshold: float
    verdict: Verdict

    @property
    def accepted(self):
        return self.verdict is Verdict.ACCEPT

    def to_dict(self):
        return {
            "samples": self.samples,
            "frequencies": [list(row) for row in self.frequencies],
            "epsilon_hat": self.epsilon_hat,
            "clamped": self.clamped,
            "distance": self.distance,
            "threshold": self.threshold,
            "verdict": self.verdict.value,
        }


def estimate_epsilon(freqs):
    """ε̂ = 4·Σ f_kk，截断到 [0,1]

    Returns:
        (ε̂, clamped)
    """
    table = np.asarray(getattr(freqs, "probabilities", freqs), dtype=float)
    raw = 4.0 * float(np.trace(table))
    estimate = min(1.0, max(0.0, raw))
    clamped = estimate != raw
    if clamped:
        logger.warning("ε̂=%.4f 超出 [0,1]，已截断", raw)
    return estimate, clamped


def acceptance_test(freqs, samples, policy=None):
    """以样本频率检验源是否与含噪单态族相容"""
    policy = policy or AcceptancePolicy()
    table = np.asarray(getattr(freqs, "probabilities", freqs), dtype=float)
    epsilon_hat, clamped = estimate_epsilon(table)
    expected = tetra_joint_distribution(epsilon_hat).probabilities
    distance = 0.5 * float(np.abs(table - expected).sum())
    samples = int(samples)
    threshold = policy.multiplier * float(np.sqrt(16.0 / samples)) if samples > 0 else float("inf")
    if samples < policy.min_samples:
        verdict = Verdict.INSUFFICIENT
    elif epsilon_hat <= policy.epsilon_max and distance <= threshold:
        verdict = Verdict.ACCEPT
    else:
        verdict = Verdict.REJECT
    logger.info("源检验：M=%d，ε̂=%.4f，d=%.4f，阈值 %.4f → %s", samples, epsilon_hat,
                distance, threshold, verdict.value)
    return SourceAcceptance(samples, tuple(tuple(float(x) for x in row) for row in table),
                            epsilon_hat, clamped, distance, threshold, verdict)


@dataclass(frozen=True)
class SessionConfig:
    session_id: str = "singapore-session"
    seed: int = QkdConfig.DEFAULT_SEED
    rounds: int = QkdConfig.DEFAULT_ROUNDS
    final_pairing: bool = QkdConfig.DEFAULT_FINAL_PAIRING
    samples: int = QkdConfig.TOMOGRAPHY_SAMPLES
    policy: AcceptancePolicy = field(default_factory=AcceptancePolicy)
    protocol: str = PROTOCOL_NAME

    @property
    def sifting(self):
        return SiftingConfig(rounds=self.rounds, final_pairing=self.final_pairing)

    def to_dict(self):
        return {"session_id": self.session_id, "seed": self.seed, "rounds": self.rounds,
                "final_pairing": self.final_pairing, "samples": self.samples,
                "policy": self.policy.to_dict(), "protocol": self.protocol}

    @classmethod
    def from_dict(cls, data):
        return cls(data["session_id"], int(data["seed"]), int(data["rounds"]), bool(data["final_pairing"]),
                   int(data["samples"]), AcceptancePolicy.from_dict(data["policy"]), data["protocol"])


@dataclass
class SessionResult:
    role: Role
    key: List[int] = field(default_factory=list)
    accounting: Optional[KeyAccounting] = None
    acceptance: Optional[SourceAcceptance] = None
    transcript: List[dict] = field(default_factory=list)
    aborted: bool = False
    abort_reason: Optional[str] = None
    phase: Phase = Phase.HANDSHAKE

    @property
    def key_hex(self):
        """MSB 在前打包，不足一字节补零"""
        return np.packbits(np.array(self.key, dtype=np.uint8)).tobytes().hex()

    def to_dict(self):
        return {
            "role": self.role.value,
            "phase": self.phase.value,
            "aborted": self.aborted,
            "abort_reason": self.abort_reason,
            "key_bits": len(self.key),
            "key_hex": self.key_hex,
            "acceptance": None if self.acceptance is None else self.acceptance.to_dict(),
            "accounting": None if self.accounting is None else self.accounting.to_dict(),
            "messages": len(self.transcript),
        }

    def save_transcript(self, file_path):
        """逐行写出消息记录"""
        try:
            directory = os.path.dirname(file_path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(file_path, "w", encoding="utf-8") as f:
                for record in self.transcript:
                    f.write(json.dumps(record, ensure_ascii=False) + "\n")
            return f"{self.role.value} 的记录已保存到 {file_path}"
        except OSError as e:
            logger.error("保存记录失败: %s", e)
            return f"保存失败：无法写入文件 - {str(e)}"
        except TypeError as e:
            logger.error("保存记录失败: %s", e)
            return f"保存失败：数据无法序列化 - {str(e)}"

    @staticmethod
    def load_transcript(file_path):
        """读取记录；失败时返回说明文字"""
        try:
            if not os.path.exists(file_path):
                return f"加载失败：文件不存在 - {file_path}"
            with open(file_path, "r", encoding="utf-8") as f:
                records = [json.loads(line) for line in f if line.strip()]
            for record in records:
                Message.from_dict(record)
            return records
        except (OSError, json.JSONDecodeError) as e:
            logger.error("读取记录失败: %s", e)
            return f"加载失败：无法读取文件 - {str(e)}"
        except ProtocolError as e:
            logger.error("记录格式错误: %s", e)
            return f"加载失败：文件格式错误 - {str(e)}"

    def export_keys(self, file_path):
        try:
            directory = os.path.dirname(file_path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            with open(file_path, "w", encoding="utf-8") as f:
                json.dump({"role": self.role.value, "bits": len(self.key), "key_hex": self.key_hex},
                          f, ensure_ascii=False, indent=2)
            return f"密钥已写入 {file_path}"
        except OSError as e:
            logger.error("写出密钥失败: %s", e)
            return f"保存失败：无法写入文件 - {str(e)}"


def seed_commitment(seed):
    return hashlib.sha256(str(int(seed)).encode("ascii")).hexdigest()


def tomography_indices(public_seed, count, samples):
    """由公共种子确定的牺牲位置，升序"""
    if samples > count:
        raise ProtocolError("insufficient detections", f"{count} < {samples}")
    generator = RngStream(public_seed, QkdConfig.STREAM_TOMOGRAPHY).generator
    return np.sort(generator.choice(count, size=samples, replace=False))


class SessionPeer:
    """一方的会话：发送、接收并校验消息，驱动各阶段"""

    def __init__(self, role, transport, config, letters):
        self.role = Role(role)
        self.peer_role = Role.BOB if self.role is Role.ALICE else Role.ALICE
        self.transport = transport
        self.config = config
        self.letters = letters if isinstance(letters, LetterSequence) else LetterSequence(letters)
        self.phase = Phase.HANDSHAKE
        self.result = SessionResult(self.role)
        self._send_seq = 0
        self._recv_seq = 0

    # ---- 收发 ----

    def _send(self, message_type, **payload):
        message = Message(message_type, self.config.session_id, self._send_seq, self.role, payload)
        self.transport.send(message)
        self.result.transcript.append(message.to_dict())
        self._send_seq += 1

    def _receive(self, *expected):
        message = self.transport.receive()
        if message.type is MessageType.ABORT:
            self.result.transcript.append(message.to_dict())
            raise PeerAborted(str(message.payload.get("reason")))
        if message.seq != self._recv_seq:
            raise ProtocolError("sequence gap", f"期望 {self._recv_seq}，收到 {message.seq}")
        if message.session_id != self.config.session_id:
            raise ProtocolError("session mismatch", message.session_id)
        if message.type not in _PHASE_TYPES.get(self.phase, ()):
            raise ProtocolError("out-of-phase message", f"{message.type.value} 不属于{self.phase.value}")
        if message.type not in expected or message.sender is not self.peer_role:
            raise ProtocolError("unexpected message", message.type.value)
        self._recv_seq += 1
        self.result.transcript.append(message.to_dict())
        return message

    def _enter(self, phase):
        logger.info("%s 进入%s阶段", self.role.value, phase.value)
        self.phase = phase
        self.result.phase = phase

    # ---- 阶段 ----

    def _hello_payload(self):
        return dict(role=self.role.value, pairs=len(self.letters), rounds=self.config.rounds,
                    final_pairing=self.config.final_pairing, protocol=self.config.protocol,
                    samples=self.config.samples, **self.config.policy.to_dict())

    def _check_hello(self, message):
        mine = self._hello_payload()
        for name in ("rounds", "final_pairing", "protocol", "samples", "epsilon_max", "multiplier", "min_samples"):
            if message.payload[name] != mine[name]:
                raise ProtocolError("incompatible configuration", name)
        if message.payload["role"] != self.peer_role.value:
            raise ProtocolError("unexpected message", f"对端角色 {message.payload['role']}")

    def _handshake(self):
        if self.role is Role.ALICE:
            self._send(MessageType.HELLO, **self._hello_payload())
            self._check_hello(self._receive(MessageType.HELLO))
        else:
            self._check_hello(self._receive(MessageType.HELLO))
            self._send(MessageType.HELLO, **self._hello_payload())

    def _twirl_seed(self):
        """Alice 先承诺种子，Bob 报告探测数，Alice 再公开种子"""
        count = len(self.letters)
        if self.role is Role.ALICE:
            public_seed = int(RngStream(self.config.seed, QkdConfig.STREAM_TWIRL).generator.integers(2 ** 62))
            self._send(MessageType.SEED_COMMIT, commitment=seed_commitment(public_seed))
            meta = self._receive(MessageType.DETECTION_BATCH_META)
            if meta.payload["count"] != count:
                raise ProtocolError("detection count mismatch", f"{meta.payload['count']} != {count}")
            self._send(MessageType.TWIRL_SEED, seed=public_seed)
        else:
            commitment = self._receive(MessageType.SEED_COMMIT).payload["commitment"]
            self._send(MessageType.DETECTION_BATCH_META, count=count)
            public_seed = self._receive(MessageType.TWIRL_SEED).payload["seed"]
            if not isinstance(public_seed, int) or seed_commitment(public_seed) != commitment:
                raise ProtocolError("seed commitment mismatch")
        log = permutation_log(count, RngStream(public_seed, QkdConfig.STREAM_TWIRL))
        self.letters = apply_permutations(self.letters, log)
        return public_seed

    def _reveal(self, indices):
        return self.letters.take(indices).to_string()

    def _parse_reveal(self, message, samples):
        try:
            revealed = LetterSequence.from_string(message.payload["letters"])
        except (ValueError, AttributeError) as exc:
            raise ProtocolError("malformed frame", str(exc)) from exc
        if len(revealed) != samples:
            raise ProtocolError("malformed frame", f"公开了 {len(revealed)} 个字母，应为 {samples}")
        return revealed

    def _tomography(self, public_seed):
        indices = tomography_indices(public_seed, len(self.letters), self.config.samples)
        own = self.letters.take(indices)
        if self.role is Role.ALICE:
            self._send(MessageType.TOMO_REQUEST, indices=indices.tolist())
            other = self._parse_reveal(self._receive(MessageType.TOMO_REVEAL), len(indices))
            self._send(MessageType.TOMO_REVEAL, letters=own.to_string())
            alice, bob = own, other
        else:
            request = self._receive(MessageType.TOMO_REQUEST)
            if request.payload["indices"] != indices.tolist():
                raise ProtocolError("tomography subset mismatch")
            self._send(MessageType.TOMO_REVEAL, letters=own.to_string())
            other = self._parse_reveal(self._receive(MessageType.TOMO_REVEAL), len(indices))
            alice, bob = other, own
        self.letters = self.letters.without(indices)
        return frequencies_from_letters(alice, bob)

    def _acceptance(self, freqs):
        acceptance = acceptance_test(freqs, self.config.samples, self.config.policy)
        self.result.acceptance = acceptance
        if self.role is Role.ALICE:
            self._send(MessageType.ACCEPT_SOURCE, epsilon_hat=acceptance.epsilon_hat,
                       distance=acceptance.distance, verdict=acceptance.verdict.value)
        else:
            claimed = self._receive(MessageType.ACCEPT_SOURCE).payload
            if (claimed["verdict"] != acceptance.verdict.value
                    or abs(float(claimed["epsilon_hat"]) - acceptance.epsilon_hat) > _MATCH_TOL
                    or abs(float(claimed["distance"]) - acceptance.distance) > _MATCH_TOL):
                raise ProtocolError("acceptance mismatch")
        return acceptance

    def _publish(self, party, event):
        party.apply(event)
        self._send(event.message_type, **event.to_payload())

    def _receive_event(self, party, *expected):
        event = sifting_event(self._receive(*expected))
        party.apply(event)
        return event

    def _sifting(self):
        party = SiftingParty(self.role, self.letters, self.config.sifting)
        if self.role is Role.ALICE:
            rng = RngStream(self.config.seed, QkdConfig.STREAM_ALICE)
            while not party.finished:
                for announcement in party.announce_positions(rng):
                    self._publish(party, announcement)
                    reply = self._receive_event(party, MessageType.GROUPING, MessageType.SAME_LETTER,
                                                MessageType.RENES_PAIR)
                    if isinstance(reply, RenesPairAnnouncement):
                        self._publish(party, party.success_flag())
                self._publish(party, RoundBoundary(party.round_index))
        else:
            rng = RngStream(self.config.seed, QkdConfig.STREAM_BOB)
            while not party.finished:
                event = self._receive_event(party, MessageType.POSITION_ANNOUNCE, MessageType.SUCCESS,
                                            MessageType.ROUND_DONE)
                if isinstance(event, PositionAnnouncement):
                    self._publish(party, party.respond(rng))
        return party

    def _abort(self, reason, notify):
        self.result.aborted = True
        self.result.abort_reason = reason
        self.result.phase = Phase.ABORTED
        self.phase = Phase.ABORTED
        logger.error("%s 中止：%s", self.role.value, reason)
        if notify:
            try:
                self._send(MessageType.ABORT, reason=reason)
            except (ProtocolError, OSError):
                pass

    def run(self):
        try:
            self._handshake()
            self._enter(Phase.TWIRL_SEED)
            public_seed = self._twirl_seed()
            self._enter(Phase.TOMOGRAPHY)
            freqs = self._tomography(public_seed)
            self._enter(Phase.ACCEPTANCE)
            acceptance = self._acceptance(freqs)
            if not acceptance.accepted:
                reason = "source rejected" if acceptance.verdict is Verdict.REJECT else "insufficient samples"
                if self.role is Role.ALICE:
                    self._abort(reason, notify=True)
                    return self.result
                self._receive()
            self._enter(Phase.SIFTING)
            party = self._sifting()
            self.result.key = list(party.key)
            self.result.accounting = KeyAccounting.from_parties(party)
            self._enter(Phase.DONE)
            logger.info("%s 完成：%d 比特", self.role.value, len(party.key))
        except PeerAborted as exc:
            self._abort(exc.reason, notify=False)
        except TransportClosed as exc:
            self._abort(exc.reason, notify=False)
        except ProtocolError as exc:
            self._abort(exc.reason, notify=True)
        except SiftingError as exc:
            logger.debug("筛选不一致: %s", exc)
            self._abort("transcript inconsistency", notify=True)
        return self.result


def run_session(role, transport, config, letters):
    """运行一方的完整会话"""
    return SessionPeer(role, transport, config, letters).run()


def run_loopback(epsilon, pairs, config=None, kind="memory"):
    """在本机同时运行双方；字母来自同一个含噪单态源

    Returns:
        (alice_result, bob_result)
    """
    config = config or SessionConfig()
    alice_letters, bob_letters = sample_pairs(epsilon, pairs, RngStream(config.seed, QkdConfig.STREAM_SOURCE))
    alice_end, bob_end = transports(kind)
    try:
        with ThreadPoolExecutor(max_workers=2) as pool:
            alice = pool.submit(run_session, Role.ALICE, alice_end, config, alice_letters)
            bob = pool.submit(run_session, Role.BOB, bob_end, config, bob_letters)
            return alice.result(), bob.result()
    finally:
        alice_end.close()
        bob_end.close()


def transcripts_identical(alice, bob):
    """比较双方记录中的非中止消息"""
    strip = [m for m in alice.transcript if m["type"] != MessageType.ABORT.value]
    other = [m for m in bob.transcript if m["type"] != MessageType.ABORT.value]
    return strip == other
