"""Byte-stream bindings for the framed link: in-process pipe and UDP."""

from __future__ import annotations

import socket


class InProcessPipe:
    """Unidirectional in-memory byte stream."""

    def __init__(self):
        self._buf = bytearray()

    def send(self, data: bytes) -> None:
        self._buf.extend(data)

    def recv(self) -> bytes:
        out = bytes(self._buf)
        self._buf.clear()
        return out

    @property
    def pending(self) -> int:
        return len(self._buf)


class UdpFrameSender:
    """One frame per datagram."""

    def __init__(self, host: str, port: int):
        self._addr = (host, port)
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)

    def send(self, frame: bytes) -> None:
        self._sock.sendto(frame, self._addr)

    def close(self) -> None:
        self._sock.close()


class UdpFrameReceiver:
    def __init__(self, host: str = "127.0.0.1", port: int = 0, bufsize: int = 2048):
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._sock.bind((host, port))
        self._bufsize = bufsize

    @property
    def port(self) -> int:
        return self._sock.getsockname()[1]

    def recv(self, timeout: float = 1.0) -> bytes | None:
        self._sock.settimeout(timeout)
        try:
            data, _ = self._sock.recvfrom(self._bufsize)
            return data
        except socket.timeout:
            return None

    def close(self) -> None:
        self._sock.close()
