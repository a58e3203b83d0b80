"""公共信道消息：逐行 JSON 编码

每条消息是一行扁平的 JSON 对象：
    {"type": ..., "session": ..., "seq": ..., "sender": ..., <载荷字段>}
"""
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict

from ..enums import MessageType, Role
from ..errors import ProtocolError, SiftingError
from .sifting import event_from_payload

logger = logging.getLogger(__name__)

ENVELOPE_FIELDS = ("type", "session", "seq", "sender")

REQUIRED_FIELDS = {
    MessageType.HELLO: ("role", "pairs", "rounds", "final_pairing", "protocol",
                        "epsilon_max", "multiplier", "min_samples", "samples"),
    MessageType.SEED_COMMIT: ("commitment",),
    MessageType.DETECTION_BATCH_META: ("count",),
    MessageType.TWIRL_SEED: ("seed",),
    MessageType.TOMO_REQUEST: ("indices",),
    MessageType.TOMO_REVEAL: ("letters",),
    MessageType.ACCEPT_SOURCE: ("epsilon_hat", "distance", "verdict"),
    MessageType.POSITION_ANNOUNCE: ("positions",),
    MessageType.GROUPING: ("group0", "group1"),
    MessageType.SAME_LETTER: (),
    MessageType.RENES_PAIR: ("pair",),
    MessageType.SUCCESS: ("flag",),
    MessageType.ROUND_DONE: ("round",),
    MessageType.ABORT: ("reason",),
}

SIFTING_TYPES = frozenset({
    MessageType.POSITION_ANNOUNCE, MessageType.GROUPING, MessageType.SAME_LETTER,
    MessageType.RENES_PAIR, MessageType.SUCCESS, MessageType.ROUND_DONE,
})


@dataclass
class Message:
    type: MessageType
    session_id: str
    seq: int
    sender: Role
    payload: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self):
        record = {"type": self.type.value, "session": self.session_id,
                  "seq": self.seq, "sender": self.sender.value}
        record.update(self.payload)
        return record

    @classmethod
    def from_dict(cls, record):
        if not isinstance(record, dict):
            raise ProtocolError("malformed frame", "不是 JSON 对象")
        try:
            message_type = MessageType(record["type"])
            sender = Role(record["sender"])
            seq = record["seq"]
            session_id = record["session"]
        except (KeyError, ValueError) as exc:
            raise ProtocolError("malformed frame", str(exc)) from exc
        if not isinstance(seq, int) or isinstance(seq, bool) or not isinstance(session_id, str):
            raise ProtocolError("malformed frame", "seq 或 session 类型错误")
        payload = {k: v for k, v in record.items() if k not in ENVELOPE_FIELDS}
        missing = [name for name in REQUIRED_FIELDS[message_type] if name not in payload]
        if missing:
            raise ProtocolError("malformed frame", f"{message_type.value} 缺少 {missing}")
        return cls(message_type, session_id, seq, sender, payload)


def is_valid_message(line):
    """空行和只有空白的行不是消息"""
    return bool(line.strip())


def normalize_line(line):
    """保证恰好以一个换行结尾"""
    stripped = line.rstrip("\n\r")
    if not stripped:
        return ""
    return stripped + "\n"


def encode_message(message):
    """编码为一行，带结尾换行"""
    return normalize_line(json.dumps(message.to_dict(), ensure_ascii=False, separators=(",", ":")))


def decode_message(line):
    if not is_valid_message(line):
        raise ProtocolError("malformed frame", "空行")
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError("malformed frame", str(exc)) from exc
    return Message.from_dict(record)


def sifting_event(message):
    """把筛选阶段的消息还原为筛选事件"""
    if message.type not in SIFTING_TYPES:
        raise ProtocolError("unexpected message", message.type.value)
    try:
        return event_from_payload(message.type, message.payload)
    except SiftingError as exc:
        raise ProtocolError("malformed frame", str(exc)) from exc
