"""Minimal reader/writer for the VOL1 volume exchange format.

The de-identification toolkit and this trainer communicate exclusively
through these files (scans, masks, conditioning pyramids, generator
outputs), so the codec is deliberately self-contained: 16-byte header
(magic ``VOL1``, one dtype byte — 0x01 is float32 little-endian — three
reserved zero bytes, three u32 dims) followed by the C-order payload.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import FormatError

__all__ = ["read_vol", "write_vol", "read_pyramid"]

_HEADER = struct.Struct("<4sB3x3I")
_MAGIC = b"VOL1"
_F32 = 0x01


def write_vol(data: np.ndarray, path) -> None:
    a = np.ascontiguousarray(data, dtype=np.float32)
    if a.ndim != 3:
        raise FormatError(f"expected a 3D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise FormatError("refusing to write non-finite values")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _F32, *a.shape))
        fh.write(a.tobytes())


def read_vol(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise FormatError(f"{path}: truncated header")
        magic, dtype, d0, d1, d2 = _HEADER.unpack(head)
        if magic != _MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        if dtype != _F32:
            raise FormatError(f"{path}: unsupported dtype byte {dtype:#x}")
        if min(d0, d1, d2) < 1:
            raise FormatError(f"{path}: zero dimension in {(d0, d1, d2)}")
        payload = fh.read(4 * d0 * d1 * d2 + 1)
    if len(payload) != 4 * d0 * d1 * d2:
        raise FormatError(f"{path}: payload size mismatch")
    return np.frombuffer(payload, dtype="<f4").reshape(d0, d1, d2).copy()


def read_pyramid(base: str, num_levels: int, base_side: int) -> list[np.ndarray]:
    """Load conditioning triples ``{base}.{k}.{hull,brain,brainint}.vol``
    for k = 0..num_levels-1, stacked as (3, side, side, side) arrays coarse
    to fine.  Level k must have side base_side * 2^k."""
    levels = []
    for k in range(num_levels):
        chans = []
        for suffix in ("hull", "brain", "brainint"):
            v = read_vol(f"{base}.{k}.{suffix}.vol")
            want = base_side * 2 ** k
            if v.shape != (want,) * 3:
                raise FormatError(
                    f"{base}.{k}.{suffix}.vol: expected side {want}, "
                    f"got {v.shape}")
            chans.append(v)
        levels.append(np.stack(chans))
    return levels
