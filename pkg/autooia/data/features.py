"""
Feature file codec.

Layout: b"OIAF", then version, N, c_local, c_backbone, H_b, W_b as little-endian uint32,
then the backbone map and the N proposal blocks as little-endian float32, row-major.
The proposal side is not stored; it is either given by the caller or inferred from the
remaining byte count. Inference only checks that the bytes form N square blocks, so a header
whose N was changed to another divisor of the block volume still decodes, with a different
side. Readers that know the model profile pass the side explicitly.
"""
import math
import struct
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from autooia.exceptions.exception import (
    BadMagicError, BadVersionError, DimensionError, NonFiniteError, SizeMismatchError,
)

MAGIC = b"OIAF"
VERSION = 1
HEADER = struct.Struct("<4s6I")
VALUE = np.dtype("<f4")


def encode_features(backbone: np.ndarray, proposals: np.ndarray) -> bytes:
    backbone = np.asarray(backbone)
    proposals = np.asarray(proposals)
    if backbone.ndim != 3:
        raise DimensionError(f"backbone must be C×H×W, got {backbone.shape}")
    if proposals.ndim != 4 or proposals.shape[2] != proposals.shape[3]:
        raise DimensionError(f"proposals must be N×C×S×S, got {proposals.shape}")
    n, c_local = proposals.shape[:2]
    c_backbone, height, width = backbone.shape
    header = HEADER.pack(MAGIC, VERSION, n, c_local, c_backbone, height, width)
    return header + backbone.astype(VALUE).tobytes() + proposals.astype(VALUE).tobytes()


def decode_features(payload: bytes, spatial: Optional[int] = None, source: str = "<bytes>") -> Tuple[np.ndarray, np.ndarray]:
    """
    Raises:
        BadMagicError, BadVersionError, SizeMismatchError, NonFiniteError: One per failure kind.
    """
    if len(payload) < HEADER.size:
        raise SizeMismatchError(f"{source}: {len(payload)} bytes is shorter than the {HEADER.size}-byte header")
    magic, version, n, c_local, c_backbone, height, width = HEADER.unpack_from(payload)
    if magic != MAGIC:
        raise BadMagicError(f"{source}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise BadVersionError(f"{source}: unsupported version {version}, expected {VERSION}")

    body = len(payload) - HEADER.size
    backbone_bytes = c_backbone * height * width * VALUE.itemsize
    remaining = body - backbone_bytes
    if spatial is None:
        spatial = _infer_spatial(remaining, n, c_local, source)
    expected = backbone_bytes + n * c_local * spatial * spatial * VALUE.itemsize
    if body != expected or min(c_backbone, height, width) == 0:
        raise SizeMismatchError(f"{source}: header declares {expected} payload bytes, file has {body}")

    values = np.frombuffer(payload, dtype=VALUE, offset=HEADER.size)
    backbone = values[:c_backbone * height * width].reshape(c_backbone, height, width).astype(np.float32)
    proposals = values[c_backbone * height * width:].reshape(n, c_local, spatial, spatial).astype(np.float32)
    if not (np.all(np.isfinite(backbone)) and np.all(np.isfinite(proposals))):
        raise NonFiniteError(f"{source}: feature values contain NaN or infinity")
    return backbone, proposals


def _infer_spatial(remaining: int, n: int, c_local: int, source: str) -> int:
    if n == 0:
        if remaining != 0:
            raise SizeMismatchError(f"{source}: {remaining} trailing bytes after an empty scene")
        return 1
    per_block, leftover = divmod(remaining, n * c_local * VALUE.itemsize) if c_local else (0, 1)
    side = math.isqrt(per_block) if per_block > 0 else 0
    if leftover or side == 0 or side * side != per_block:
        raise SizeMismatchError(f"{source}: {remaining} proposal bytes do not form {n} square blocks of {c_local} channels")
    return side


def write_features(path: Path, backbone: np.ndarray, proposals: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_features(backbone, proposals))


def load_features(path: Path, spatial: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Reads one feature file.

    Args:
        path: File to read.
        spatial: Expected proposal side. When omitted it is inferred from the byte count, which
            accepts any N and side whose blocks fill the file exactly.

    Returns:
        (backbone, proposals) as float32 arrays.
    """
    path = Path(path)
    return decode_features(path.read_bytes(), spatial=spatial, source=str(path))
