"""Byte transports carrying whole wire messages.

All channels move complete messages (as produced by ``messages.encode``).
Closing one end of a loopback pair or a socket wakes the peer's ``recv``
with :class:`ChannelClosed`, so a failing role cannot leave the other
blocked forever.
"""

from __future__ import annotations

import queue
import socket
import threading
from abc import ABC, abstractmethod
from pathlib import Path

from .messages import HEADER, ProtocolError, read_message

_CLOSED = object()


class TransportError(Exception):
    pass


class ChannelClosed(TransportError):
    pass


class Channel(ABC):
    @abstractmethod
    def send(self, data: bytes) -> None: ...

    @abstractmethod
    def recv(self) -> bytes: ...

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class LoopbackChannel(Channel):
    def __init__(self, inbox: queue.Queue, outbox: queue.Queue, timeout: float | None = None):
        self._inbox = inbox
        self._outbox = outbox
        self.timeout = timeout
        self._closed = False

    @classmethod
    def pair(cls, timeout: float | None = None):
        a, b = queue.Queue(), queue.Queue()
        return cls(a, b, timeout), cls(b, a, timeout)

    def send(self, data: bytes) -> None:
        if self._closed:
            raise ChannelClosed("send on closed channel")
        self._outbox.put(bytes(data))

    def recv(self) -> bytes:
        try:
            item = self._inbox.get(timeout=self.timeout)
        except queue.Empty:
            raise TransportError(f"no message within {self.timeout}s") from None
        if item is _CLOSED:
            self._inbox.put(_CLOSED)
            raise ChannelClosed("peer closed the channel")
        return item

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            self._outbox.put(_CLOSED)


class SocketChannel(Channel):
    def __init__(self, sock: socket.socket, timeout: float | None = None):
        self.sock = sock
        self.sock.settimeout(timeout)
        self.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._reader = sock.makefile("rb")
        self._lock = threading.Lock()

    @classmethod
    def connect(cls, host: str, port: int, timeout: float | None = None) -> "SocketChannel":
        return cls(socket.create_connection((host, port), timeout=timeout), timeout)

    def _read_exact(self, n: int) -> bytes:
        try:
            buf = self._reader.read(n)
        except OSError as exc:
            raise ChannelClosed(str(exc)) from None
        if buf is None or len(buf) < n:
            raise ChannelClosed("connection closed mid-message" if buf else "connection closed")
        return buf

    def send(self, data: bytes) -> None:
        try:
            with self._lock:
                self.sock.sendall(data)
        except OSError as exc:
            raise ChannelClosed(str(exc)) from None

    def recv(self) -> bytes:
        return read_message(self._read_exact)

    def close(self) -> None:
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._reader.close()
        self.sock.close()


class Listener:
    """TCP server socket handing out one :class:`SocketChannel` per accepted connection."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        self.sock = socket.create_server((host, port))

    @property
    def address(self):
        return self.sock.getsockname()[:2]

    def accept(self, timeout: float | None = None) -> SocketChannel:
        self.sock.settimeout(timeout)
        conn, _ = self.sock.accept()
        return SocketChannel(conn, None)

    def close(self) -> None:
        self.sock.close()


def socket_pair(timeout: float | None = None):
    """Connected (client, server) channels over a real localhost TCP socket."""
    listener = Listener()
    result = {}

    def accept():
        result["server"] = listener.accept(timeout)

    t = threading.Thread(target=accept, daemon=True)
    t.start()
    client = SocketChannel.connect(*listener.address, timeout=timeout)
    t.join()
    listener.close()
    return client, result["server"]


class RecordingChannel(Channel):
    """Pass-through that appends every received message to a log in wire format."""

    def __init__(self, inner: Channel, path):
        self.inner = inner
        self._log = open(path, "wb")

    def send(self, data: bytes) -> None:
        self.inner.send(data)

    def recv(self) -> bytes:
        data = self.inner.recv()
        self._log.write(data)
        self._log.flush()
        return data

    def close(self) -> None:
        self._log.close()
        self.inner.close()


class ReplayChannel(Channel):
    """Feeds a recorded log back as the inbound stream; keeps what the role sends."""

    def __init__(self, path):
        self._buf = Path(path).read_bytes()
        self._pos = 0
        self.sent: list[bytes] = []

    def _read_exact(self, n: int) -> bytes:
        if self._pos + n > len(self._buf):
            raise ChannelClosed("end of replay log")
        out = self._buf[self._pos:self._pos + n]
        self._pos += n
        return out

    def send(self, data: bytes) -> None:
        self.sent.append(bytes(data))

    def recv(self) -> bytes:
        if self._pos >= len(self._buf):
            raise ChannelClosed("end of replay log")
        return read_message(self._read_exact)

    @property
    def exhausted(self) -> bool:
        return self._pos >= len(self._buf)


def split_log(buf: bytes) -> list[bytes]:
    """Cut a wire-format log into its messages."""
    pos = 0
    out = []

    def read_exact(n):
        nonlocal pos
        if pos + n > len(buf):
            raise ProtocolError("truncated log")
        chunk = buf[pos:pos + n]
        pos += n
        return chunk

    while pos < len(buf):
        if len(buf) - pos < HEADER.size:
            raise ProtocolError("truncated log")
        out.append(read_message(read_exact))
    return out
