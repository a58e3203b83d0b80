"""异常层次"""


class QkdError(Exception):
    """所有协议与数值错误的基类"""


class InvalidStateError(QkdError, ValueError):
    """密度算符或纯态不满足厄米、迹或正定条件"""


class SubsystemError(QkdError, ValueError):
    """偏迹的子系统索引无效"""


class NoiseRangeError(QkdError, ValueError):
    """噪声参数ε超出定义域"""


class DistributionError(QkdError, ValueError):
    """联合概率分布无效"""


class SiftingError(QkdError, ValueError):
    """筛选输入或记录不一致"""


class InsufficientDataError(QkdError):
    """样本不足"""


class ThresholdError(QkdError):
    """阈值求解失败"""


class ReferenceDataError(QkdError):
    """参考数据文件无法读取"""


class ProtocolError(QkdError):
    """会话协议违例，reason 会写入 abort 消息"""

    def __init__(self, reason, detail=None):
        self.reason = reason
        self.detail = detail
        message = reason if detail is None else f"{reason}: {detail}"
        super().__init__(message)


class TransportClosed(ProtocolError):
    """对端断开"""

    def __init__(self, detail=None):
        super().__init__("transport closed", detail)


class PeerAborted(ProtocolError):
    """对端发来 abort，reason 为对端给出的原因"""
