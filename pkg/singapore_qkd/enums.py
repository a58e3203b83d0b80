from enum import Enum


class Letter(Enum):
    """测量结果字母（四面体POM的四个输出）"""
    A = 0
    B = 1
    C = 2
    D = 3

    @property
    def symbol(self):
        return self.name

    @classmethod
    def from_symbol(cls, symbol):
        return cls[symbol]


class PomLabel(Enum):
    """POM类型"""
    TETRA = "tetra"  # 四面体，最小量子态层析
    SIX = "six"      # 六态协议


class Role(Enum):
    """会话角色"""
    ALICE = "alice"
    BOB = "bob"


class MessageType(Enum):
    """公共信道消息类型"""
    HELLO = "hello"
    SEED_COMMIT = "seed_commit"
    DETECTION_BATCH_META = "detection_batch_meta"
    TWIRL_SEED = "twirl_seed"
    TOMO_REQUEST = "tomo_request"
    TOMO_REVEAL = "tomo_reveal"
    ACCEPT_SOURCE = "accept_source"
    POSITION_ANNOUNCE = "position_announce"
    GROUPING = "grouping"
    SAME_LETTER = "same_letter"
    RENES_PAIR = "renes_pair"
    SUCCESS = "success"
    ROUND_DONE = "round_done"
    ABORT = "abort"


class Phase(Enum):
    """会话状态机阶段"""
    HANDSHAKE = "握手"
    TWIRL_SEED = "置换种子"
    TOMOGRAPHY = "层析"
    ACCEPTANCE = "源检验"
    SIFTING = "筛选"
    DONE = "完成"
    ABORTED = "中止"


class Verdict(Enum):
    """源检验结论"""
    ACCEPT = "accept"
    REJECT = "reject"
    INSUFFICIENT = "insufficient"


class AttackKind(Enum):
    """第一轮消息攻击的密钥比特来源"""
    ITERATION = "iteration"          # 步骤2a产生的比特
    FINAL_PAIRING = "finalPairing"   # 步骤2b'产生的比特
    RENES_L1 = "renesL1"             # 原始Renes配对（L=1）


class SiftingStep(Enum):
    """筛选步骤"""
    ITERATION = "2a"
    SET_ASIDE = "2b"
    FINAL_PAIRING = "2b'"
    RENES = "renes"
