"""Length-prefixed binary encoding helpers shared by every on-disk/wire format."""

from __future__ import annotations

import base64
import struct


class DecodeError(ValueError):
    """Raised when a byte string does not parse as the expected structure."""


def u8(n: int) -> bytes:
    return struct.pack(">B", n)


def u32(n: int) -> bytes:
    return struct.pack(">I", n)


def u64(n: int) -> bytes:
    if not 0 <= n < 1 << 64:
        raise ValueError(f"value out of u64 range: {n}")
    return struct.pack(">Q", n)


def lp(data: bytes) -> bytes:
    """Prefix ``data`` with its length as a big-endian u32."""
    return u32(len(data)) + data


class Reader:
    """Cursor over a byte string; every read is bounds-checked."""

    def __init__(self, data: bytes):
        self.data = bytes(data)
        self.pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise DecodeError("truncated input")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return struct.unpack(">I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack(">Q", self.take(8))[0]

    def lp(self) -> bytes:
        return self.take(self.u32())

    def done(self) -> bool:
        return self.pos == len(self.data)

    def finish(self) -> None:
        if not self.done():
            raise DecodeError(f"{len(self.data) - self.pos} trailing bytes")


def armor(data: bytes, label: str) -> str:
    body = base64.b64encode(data).decode("ascii")
    lines = [body[i:i + 64] for i in range(0, len(body), 64)] or [""]
    return "\n".join([f"-----BEGIN {label}-----", *lines, f"-----END {label}-----"]) + "\n"


def dearmor(text: str, label: str) -> bytes:
    lines = [ln.strip() for ln in text.strip().splitlines()]
    if len(lines) < 2 or lines[0] != f"-----BEGIN {label}-----" or lines[-1] != f"-----END {label}-----":
        raise DecodeError(f"not a {label} block")
    try:
        return base64.b64decode("".join(lines[1:-1]), validate=True)
    except ValueError as exc:
        raise DecodeError(f"bad base64 in {label} block") from exc
