"""Versioned binary container used by every persisted artifact.

Layout: 4-byte magic, 1 version byte, then length-prefixed fields written
in a deterministic order by the caller. Truncation or a foreign header
raises :class:`FormatVersionError` instead of yielding a partial object.
"""
from __future__ import annotations

import struct
from typing import BinaryIO

import numpy as np

from .errors import FormatVersionError

VERSION = 1


class Writer:
    def __init__(self, fh: BinaryIO):
        self._fh = fh

    def header(self, magic: bytes) -> None:
        assert len(magic) == 4
        self._fh.write(magic)
        self._fh.write(bytes([VERSION]))

    def u8(self, value: int) -> None:
        self._fh.write(struct.pack("<B", value))

    def u32(self, value: int) -> None:
        self._fh.write(struct.pack("<I", value))

    def u64(self, value: int) -> None:
        self._fh.write(struct.pack("<Q", value))

    def f64(self, value: float) -> None:
        self._fh.write(struct.pack("<d", value))

    def text(self, value: str) -> None:
        raw = value.encode("utf-8")
        self.u32(len(raw))
        self._fh.write(raw)

    def f64_array(self, values: np.ndarray) -> None:
        arr = np.ascontiguousarray(values, dtype=np.float64)
        self.u32(arr.size)
        self._fh.write(arr.tobytes())


class Reader:
    def __init__(self, fh: BinaryIO):
        self._fh = fh

    def _read(self, n: int) -> bytes:
        data = self._fh.read(n)
        if len(data) != n:
            raise FormatVersionError("truncated file")
        return data

    def header(self, magic: bytes) -> None:
        got = self._read(4)
        if got != magic:
            raise FormatVersionError(f"bad magic {got!r}, expected {magic!r}")
        version = self._read(1)[0]
        if version != VERSION:
            raise FormatVersionError(f"unsupported format version {version}")

    def u8(self) -> int:
        return struct.unpack("<B", self._read(1))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self._read(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self._read(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self._read(8))[0]

    def text(self) -> str:
        n = self.u32()
        return self._read(n).decode("utf-8")

    def f64_array(self) -> np.ndarray:
        n = self.u32()
        return np.frombuffer(self._read(8 * n), dtype="<f8").copy()

    def expect_eof(self) -> None:
        if self._fh.read(1):
            raise FormatVersionError("trailing bytes after payload")
