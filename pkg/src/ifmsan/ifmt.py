"""IFMT binary tensor files.

Layout, all little-endian::

    b"IFMT" | u32 version (=1) | u32 rank | rank x u32 dims | prod(dims) x f32

The payload is in width-fastest order, identical to ``Tensor.data``.
"""
from __future__ import annotations

import os
import struct

import numpy as np

from .errors import DimensionError, FormatError
from .tensor import MAX_RANK, Tensor

MAGIC = b"IFMT"
VERSION = 1
_U32 = struct.Struct("<I")


def encode(t: Tensor) -> bytes:
    header = MAGIC + _U32.pack(VERSION) + _U32.pack(t.rank)
    header += b"".join(_U32.pack(d) for d in t.dims)
    return header + t.data.astype("<f4", copy=False).tobytes()


def decode(buf: bytes, source: str = "<bytes>") -> Tensor:
    if len(buf) < 12:
        raise FormatError(f"{source}: truncated IFMT header ({len(buf)} bytes)")
    if buf[:4] != MAGIC:
        raise FormatError(f"{source}: bad magic {buf[:4]!r}, expected {MAGIC!r}")
    (version,) = _U32.unpack_from(buf, 4)
    if version != VERSION:
        raise FormatError(f"{source}: unsupported IFMT version {version}")
    (rank,) = _U32.unpack_from(buf, 8)
    if not 1 <= rank <= MAX_RANK:
        raise FormatError(f"{source}: unsupported rank {rank}")
    offset = 12 + 4 * rank
    if len(buf) < offset:
        raise FormatError(f"{source}: truncated dims")
    dims = tuple(_U32.unpack_from(buf, 12 + 4 * i)[0] for i in range(rank))
    count = int(np.prod(dims, dtype=np.int64))
    expected = offset + 4 * count
    if len(buf) != expected:
        raise FormatError(
            f"{source}: payload is {len(buf) - offset} bytes, dims {dims} need {4 * count}"
        )
    data = np.frombuffer(buf, dtype="<f4", count=count, offset=offset)
    try:
        return Tensor(dims, data.astype(np.float32))
    except DimensionError as exc:
        raise FormatError(f"{source}: {exc}") from exc


def write(path: str | os.PathLike, t: Tensor) -> None:
    with open(path, "wb") as fh:
        fh.write(encode(t))


def read(path: str | os.PathLike) -> Tensor:
    try:
        with open(path, "rb") as fh:
            buf = fh.read()
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror or exc}") from exc
    return decode(buf, source=str(path))
