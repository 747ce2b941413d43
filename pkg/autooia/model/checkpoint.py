"""
Checkpoint codec.

Layout: b"OIAC", version (u32), JSON length (u32) and UTF-8 JSON holding the model configuration
plus caller metadata, parameter count (u32), then per parameter: name length (u32), name,
element width (u32, 4 or 8), ndim (u32), dims (u32 each) and the values as little-endian
IEEE-754, row-major. All integers are little-endian.
"""
import json
import struct
from dataclasses import asdict
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from autooia.exceptions.exception import CheckpointError, OIAError
from autooia.model.config import ModelConfig
from autooia.model.params import ModelParams

MAGIC = b"OIAC"
VERSION = 1
U32 = struct.Struct("<I")
WIDTHS = {4: np.dtype("<f4"), 8: np.dtype("<f8")}


class _Reader:
    def __init__(self, payload: bytes, source: str):
        self.payload = payload
        self.source = source
        self.offset = 0

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.payload):
            raise CheckpointError(f"{self.source}: truncated at byte {self.offset}")
        chunk = self.payload[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def u32(self) -> int:
        return U32.unpack(self.take(U32.size))[0]


def encode_checkpoint(params: ModelParams, extra: Optional[dict] = None) -> bytes:
    meta = json.dumps({"model": asdict(params.config), "extra": extra or {}}, sort_keys=True).encode("utf-8")
    tensors = params.named()
    parts = [MAGIC, U32.pack(VERSION), U32.pack(len(meta)), meta, U32.pack(len(tensors))]
    for name, tensor in tensors.items():
        encoded = name.encode("utf-8")
        width = tensor.values.dtype.itemsize
        parts += [U32.pack(len(encoded)), encoded, U32.pack(width), U32.pack(tensor.values.ndim)]
        parts += [U32.pack(d) for d in tensor.shape]
        parts.append(tensor.values.astype(WIDTHS[width]).tobytes())
    return b"".join(parts)


def decode_checkpoint(payload: bytes, source: str = "<bytes>") -> Tuple[ModelParams, dict]:
    """
    Rebuilds the parameters and returns them with the stored metadata.

    Raises:
        CheckpointError: On a bad header, truncation, or tensors that do not fit the stored configuration.
    """
    reader = _Reader(payload, source)
    if reader.take(4) != MAGIC:
        raise CheckpointError(f"{source}: not a checkpoint (bad magic)")
    version = reader.u32()
    if version != VERSION:
        raise CheckpointError(f"{source}: unsupported checkpoint version {version}")
    try:
        meta = json.loads(reader.take(reader.u32()).decode("utf-8"))
        config = ModelConfig(**meta["model"])
    except (ValueError, KeyError, TypeError, OIAError) as e:
        raise CheckpointError(f"{source}: unreadable configuration block ({e})") from e

    values: Dict[str, np.ndarray] = {}
    for _ in range(reader.u32()):
        name = reader.take(reader.u32()).decode("utf-8")
        width = reader.u32()
        if width not in WIDTHS:
            raise CheckpointError(f"{source}: {name} has unsupported element width {width}")
        shape = tuple(reader.u32() for _ in range(reader.u32()))
        count = int(np.prod(shape))
        values[name] = np.frombuffer(reader.take(count * width), dtype=WIDTHS[width]).reshape(shape)
    if reader.offset != len(payload):
        raise CheckpointError(f"{source}: {len(payload) - reader.offset} trailing bytes")

    params = ModelParams.initialize(config, seed=config.seed)
    params.load_values(values)
    return params, meta.get("extra", {})


def save_checkpoint(path: Path, params: ModelParams, extra: Optional[dict] = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(params, extra))


def load_checkpoint(path: Path) -> Tuple[ModelParams, dict]:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint {path} does not exist")
    return decode_checkpoint(path.read_bytes(), source=str(path))
