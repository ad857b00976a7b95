"""Binary tensor files: magic "PAHT", little-endian header, float64 payload.

Layout: 4-byte magic, u16 version, u16 dtype tag (1 = float64), u32 rank,
rank x u32 dims, then row-major little-endian float64 values. Writing and
reading round-trip bit-exactly.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import TensorFormatError

__all__ = ["write_tensor", "read_tensor", "MAGIC", "VERSION", "DTYPE_FLOAT64"]

MAGIC = b"PAHT"
VERSION = 1
DTYPE_FLOAT64 = 1


def write_tensor(path, values: np.ndarray) -> None:
    arr = np.ascontiguousarray(values, dtype="<f8")
    header = MAGIC + struct.pack("<HHI", VERSION, DTYPE_FLOAT64, arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    Path(path).write_bytes(header + arr.tobytes())


def read_tensor(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != MAGIC:
        raise TensorFormatError(f"{path}: not a tensor file (bad magic)")
    version, dtype_tag, rank = struct.unpack("<HHI", raw[4:12])
    if version != VERSION:
        raise TensorFormatError(f"{path}: unsupported version {version}")
    if dtype_tag != DTYPE_FLOAT64:
        raise TensorFormatError(f"{path}: unsupported dtype tag {dtype_tag}")
    offset = 12 + 4 * rank
    if len(raw) < offset:
        raise TensorFormatError(f"{path}: truncated header")
    dims = struct.unpack(f"<{rank}I", raw[12:offset])
    count = int(np.prod(dims)) if rank else 1
    if len(raw) != offset + 8 * count:
        raise TensorFormatError(
            f"{path}: payload is {len(raw) - offset} bytes, expected {8 * count}"
        )
    return np.frombuffer(raw[offset:], dtype="<f8").reshape(dims).copy()
