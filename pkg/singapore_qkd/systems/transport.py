"""有序可靠的行传输：进程内队列与 TCP 套接字

两种实现都传递 encode_message 产生的文本行，语义完全相同。对端断开或超时时
抛出 TransportClosed。
"""
import logging
import queue
import socket

from ..config import QkdConfig
from ..errors import TransportClosed
from .messages import decode_message, encode_message, is_valid_message, normalize_line

logger = logging.getLogger(__name__)

_CLOSED = object()


class Transport:
    """传输基类，子类实现 send_raw / receive_raw / close"""

    def send(self, message):
        line = encode_message(message)
        logger.debug("发送 %s", line.rstrip("\n"))
        self.send_raw(line)

    def receive(self):
        line = self.receive_raw()
        logger.debug("收到 %s", line.rstrip("\n"))
        return decode_message(line)

    def send_raw(self, line):
        raise NotImplementedError

    def receive_raw(self):
        raise NotImplementedError

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()


class InMemoryTransport(Transport):
    """一对队列，适合同进程的两个线程"""

    def __init__(self, inbox, outbox, timeout=None):
        self._inbox = inbox
        self._outbox = outbox
        self._timeout = timeout if timeout is not None else QkdConfig.QUEUE_TIMEOUT
        self._closed = False

    @classmethod
    def pair(cls, timeout=None):
        a_to_b, b_to_a = queue.Queue(), queue.Queue()
        return cls(b_to_a, a_to_b, timeout), cls(a_to_b, b_to_a, timeout)

    def send_raw(self, line):
        if self._closed:
            raise TransportClosed("本端已关闭")
        self._outbox.put(normalize_line(line))

    def receive_raw(self):
        if self._closed:
            raise TransportClosed("本端已关闭")
        try:
            item = self._inbox.get(timeout=self._timeout)
        except queue.Empty:
            raise TransportClosed(f"{self._timeout} 秒内没有消息") from None
        if item is _CLOSED:
            self._closed = True
            raise TransportClosed("对端已关闭")
        return item

    def close(self):
        if not self._closed:
            self._closed = True
            self._outbox.put(_CLOSED)


class SocketTransport(Transport):
    """TCP 套接字上的逐行 JSON"""

    def __init__(self, sock, timeout=None):
        self._sock = sock
        self._sock.settimeout(timeout if timeout is not None else QkdConfig.SOCKET_TIMEOUT)
        self._reader = sock.makefile("r", encoding="utf-8", newline="\n")

    @classmethod
    def connect(cls, host=None, port=None, timeout=None):
        host = host or QkdConfig.DEFAULT_HOST
        port = port or QkdConfig.DEFAULT_PORT
        try:
            sock = socket.create_connection((host, port), timeout=timeout or QkdConfig.SOCKET_TIMEOUT)
        except OSError as exc:
            raise TransportClosed(f"无法连接 {host}:{port}: {exc}") from exc
        return cls(sock, timeout)

    def send_raw(self, line):
        try:
            self._sock.sendall(normalize_line(line).encode("utf-8"))
        except OSError as exc:
            raise TransportClosed(str(exc)) from exc

    def receive_raw(self):
        while True:
            try:
                line = self._reader.readline()
            except (OSError, ValueError) as exc:
                raise TransportClosed(str(exc)) from exc
            if not line:
                raise TransportClosed("对端已关闭")
            if is_valid_message(line):
                return line

    def close(self):
        try:
            self._reader.close()
            self._sock.close()
        except OSError:
            pass


def loopback_pair(host=None, timeout=None):
    """在本机任意空闲端口上建立一对已连接的套接字传输"""
    host = host or QkdConfig.DEFAULT_HOST
    with socket.socket(socket.AF_INET, socket.SOCK_STREAM) as server:
        server.bind((host, 0))
        server.listen(1)
        client = socket.create_connection(server.getsockname(), timeout=timeout or QkdConfig.SOCKET_TIMEOUT)
        accepted, _ = server.accept()
    logger.debug("回环连接 %s", accepted.getsockname())
    return SocketTransport(client, timeout), SocketTransport(accepted, timeout)


def transports(kind="memory", timeout=None):
    """返回一对已连接的传输：memory 或 socket"""
    if kind == "memory":
        return InMemoryTransport.pair(timeout)
    if kind == "socket":
        return loopback_pair(timeout=timeout)
    raise ValueError(f"未知传输类型 {kind!r}")
