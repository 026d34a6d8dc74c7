"""Self-describing "VSCK" checkpoint files.

Little-endian layout::

    b"VSCK"  uint32 version
    uint32 n  + n bytes of UTF-8 JSON architecture config
    uint32 n  + n bytes of UTF-8 JSON vocabulary word list
    uint32 parameter count, then per parameter:
        uint16 name length, name, uint8 rank, rank x uint32 dims,
        float32 payload
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

from ..errors import CheckpointError, ConfigError
from .model import CaptionerModel, ModelConfig, parameter_shapes
from .vocab import Vocabulary

MAGIC = b"VSCK"
VERSION = 1


def encode_checkpoint(model: CaptionerModel) -> bytes:
    parts = [MAGIC, struct.pack("<I", VERSION)]
    for block in (model.config.to_dict(), list(model.vocab.words)):
        raw = json.dumps(block, sort_keys=True).encode("utf-8")
        parts += [struct.pack("<I", len(raw)), raw]
    names = list(parameter_shapes(model.config))
    parts.append(struct.pack("<I", len(names)))
    for name in names:
        arr = np.ascontiguousarray(model.params[name], dtype="<f4")
        raw = name.encode("utf-8")
        parts += [struct.pack("<H", len(raw)), raw, struct.pack("<B", arr.ndim)]
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, blob: bytes, source: str):
        self.blob = blob
        self.pos = 0
        self.source = source

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise CheckpointError(f"{self.source}: truncated at byte {self.pos}")
        out = self.blob[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        s = struct.Struct("<" + fmt)
        return s.unpack(self.take(s.size))


def decode_checkpoint(blob: bytes, source: str = "<bytes>") -> CaptionerModel:
    r = _Reader(blob, source)
    if r.take(4) != MAGIC:
        raise CheckpointError(f"{source}: not a VSCK checkpoint")
    (version,) = r.unpack("I")
    if version != VERSION:
        raise CheckpointError(f"{source}: unsupported checkpoint version {version}")
    try:
        (n,) = r.unpack("I")
        cfg_dict = json.loads(r.take(n).decode("utf-8"))
        (n,) = r.unpack("I")
        words = json.loads(r.take(n).decode("utf-8"))
        config = ModelConfig(**cfg_dict)
        vocab = Vocabulary(words)
    except (ValueError, TypeError, ConfigError) as exc:
        raise CheckpointError(f"{source}: bad config or vocabulary block: {exc}") from exc
    expected = parameter_shapes(config)
    (count,) = r.unpack("I")
    if count != len(expected):
        raise CheckpointError(f"{source}: {count} parameters, architecture needs {len(expected)}")
    params = {}
    for _ in range(count):
        (ln,) = r.unpack("H")
        name = r.take(ln).decode("utf-8")
        (rank,) = r.unpack("B")
        shape = r.unpack(f"{rank}I") if rank else ()
        if expected.get(name) != tuple(shape):
            raise CheckpointError(f"{source}: parameter {name!r} shape {shape} does not match config")
        size = int(np.prod(shape)) if shape else 1
        params[name] = np.frombuffer(r.take(4 * size), dtype="<f4").reshape(shape).astype(np.float32)
    if r.pos != len(blob):
        raise CheckpointError(f"{source}: {len(blob) - r.pos} trailing bytes")
    try:
        return CaptionerModel(config, vocab, params)
    except ConfigError as exc:
        raise CheckpointError(f"{source}: {exc}") from exc


def save_checkpoint(model: CaptionerModel, path) -> None:
    with open(os.fspath(path), "wb") as fh:
        fh.write(encode_checkpoint(model))


def load_checkpoint(path) -> CaptionerModel:
    path = os.fspath(path)
    with open(path, "rb") as fh:
        return decode_checkpoint(fh.read(), source=path)
