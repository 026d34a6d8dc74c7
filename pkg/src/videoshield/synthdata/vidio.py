"""Lossless "VIDT" video tensor files.

Layout, little-endian: magic ``b"VIDT"``, uint32 version, int32 F, H, W, C,
then F*H*W*C float32 values in row-major order.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from ..errors import FormatError

MAGIC = b"VIDT"
VERSION = 1
_HEADER = struct.Struct("<4sI4i")
HEADER_SIZE = _HEADER.size


def encode_video(video: np.ndarray) -> bytes:
    arr = np.ascontiguousarray(video, dtype="<f4")
    if arr.ndim != 4 or arr.size == 0:
        raise FormatError(f"expected a non-empty (F, H, W, C) array, got shape {arr.shape}")
    return _HEADER.pack(MAGIC, VERSION, *arr.shape) + arr.tobytes()


def decode_video(blob: bytes, source: str = "<bytes>") -> np.ndarray:
    if len(blob) < HEADER_SIZE:
        raise FormatError(f"{source}: truncated header ({len(blob)} bytes)")
    magic, version, f, h, w, c = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"{source}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{source}: unsupported version {version}")
    if min(f, h, w, c) <= 0:
        raise FormatError(f"{source}: invalid dimensions {(f, h, w, c)}")
    expected = HEADER_SIZE + 4 * f * h * w * c
    if len(blob) != expected:
        raise FormatError(f"{source}: payload is {len(blob)} bytes, expected {expected}")
    data = np.frombuffer(blob, dtype="<f4", offset=HEADER_SIZE).reshape(f, h, w, c)
    return data.astype(np.float32)


def save_video(video: np.ndarray, path) -> None:
    path = os.fspath(path)
    with open(path, "wb") as fh:
        fh.write(encode_video(video))


def load_video(path) -> np.ndarray:
    path = os.fspath(path)
    with open(path, "rb") as fh:
        return decode_video(fh.read(), source=path)
