"""Dense 3D volumes, rotations, seeded streams, and bit-exact VOL1 file I/O.

Index order is [k0][k1][k2] with k2 fastest-varying. The anatomical frame used
throughout: k0 runs inferior to superior, k1 posterior to anterior (the face
looks toward +k1), k2 left to right.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateHistogram,
    FormatError,
    InvalidThreshold,
    NonCubicVolume,
)

__all__ = [
    "Volume",
    "Rotation",
    "rng_from",
    "binarize",
    "otsu_threshold",
    "sample_uniform_rotation",
    "rotate_mask",
    "read_volume",
    "write_volume",
]

INTENSITY = "intensity"
MASK = "mask"
PROB = "prob"

_KINDS = (INTENSITY, MASK, PROB)

VOL1_MAGIC = b"VOL1"
VOL1_DTYPE_F32 = 0x01
_HEADER = struct.Struct("<4sB3x3I")  # magic, dtype, reserved, dims

# Refuse to allocate absurd volumes when reading untrusted headers.
_MAX_VOXELS = 1 << 31


class Volume:
    """Immutable float32 scalar grid tagged with its value domain.

    kind is one of "intensity" (non-negative reals), "mask" ({0,1}) or
    "prob" ([0,1]); the tag is validated against the data on construction.
    """

    __slots__ = ("data", "kind")

    def __init__(self, data, kind: str = INTENSITY):
        if kind not in _KINDS:
            raise ValueError(f"unknown volume kind {kind!r}")
        arr = np.asarray(data, dtype=np.float32)
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise ValueError(f"volume data must be 3D and nonempty, got shape {arr.shape}")
        arr = np.ascontiguousarray(arr)
        if arr is data or arr.base is not None:
            arr = arr.copy()
        if kind == MASK:
            if not np.all((arr == 0.0) | (arr == 1.0)):
                raise ValueError("mask volume contains values other than 0 and 1")
        elif kind == PROB:
            if not np.all((arr >= 0.0) & (arr <= 1.0)):
                raise ValueError("probability volume contains values outside [0,1]")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "kind", kind)

    def __setattr__(self, name, value):
        raise AttributeError("Volume is immutable")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    @property
    def side(self) -> int:
        """Side length of a cubic volume; raises NonCubicVolume otherwise."""
        s0, s1, s2 = self.data.shape
        if not (s0 == s1 == s2):
            raise NonCubicVolume(f"expected cubic volume, got dims {self.data.shape}")
        return s0

    def __repr__(self):
        return f"Volume(dims={self.dims}, kind={self.kind!r})"


@dataclass(frozen=True)
class Rotation:
    """Unit quaternion (w, x, y, z); norm must be within 1e-9 of 1."""

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        n = (self.w**2 + self.x**2 + self.y**2 + self.z**2) ** 0.5
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"quaternion norm {n} deviates from 1 beyond 1e-9")

    @classmethod
    def identity(cls) -> "Rotation":
        return cls(1.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_axis_angle(cls, axis, angle: float) -> "Rotation":
        a = np.asarray(axis, dtype=np.float64)
        a = a / np.linalg.norm(a)
        h = 0.5 * angle
        s = np.sin(h)
        return cls(float(np.cos(h)), float(a[0] * s), float(a[1] * s), float(a[2] * s))

    def inverse(self) -> "Rotation":
        return Rotation(self.w, -self.x, -self.y, -self.z)

    def compose(self, other: "Rotation") -> "Rotation":
        """Quaternion product self * other (apply other first, then self)."""
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        q = np.array(
            [
                w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
                w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
                w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
                w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
            ]
        )
        q = q / np.linalg.norm(q)
        return Rotation(*q.tolist())

    def matrix(self) -> np.ndarray:
        """3x3 rotation matrix acting on (k0, k1, k2) column vectors."""
        w, x, y, z = self.w, self.x, self.y, self.z
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ],
            dtype=np.float64,
        )

    def angle(self) -> float:
        """Rotation angle in [0, pi]."""
        return 2.0 * float(np.arccos(min(1.0, abs(self.w))))


def rng_from(seed: int, *key: int) -> np.random.Generator:
    """Deterministic, splittable stream: same (seed, key) always yields the
    same generator regardless of what other streams were drawn."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def binarize(x: Volume, delta: float) -> Volume:
    """Mask with 1 exactly where x >= delta."""
    if not np.isfinite(delta):
        raise InvalidThreshold(f"threshold must be finite, got {delta}")
    return Volume((x.data >= delta).astype(np.float32), kind=MASK)


def otsu_threshold(x: Volume, nonzero_only: bool = False) -> float:
    """256-bin Otsu threshold maximizing between-class variance.

    nonzero_only restricts the histogram to nonzero voxels, the default for
    head scans where the zero background would otherwise dominate.
    """
    vals = x.data.reshape(-1)
    if nonzero_only:
        vals = vals[vals != 0]
    if vals.size == 0:
        raise DegenerateHistogram("no voxels to threshold")
    mn = float(vals.min())
    mx = float(vals.max())
    if mn == mx:
        raise DegenerateHistogram("constant volume has no threshold")
    hist, edges = np.histogram(vals, bins=256, range=(mn, mx))
    p = hist.astype(np.float64) / vals.size
    omega = np.cumsum(p)
    mu = np.cumsum(p * np.arange(256))
    mu_t = mu[-1]
    # Between-class variance for a split after bin k, k = 0..254.
    w0 = omega[:-1]
    w1 = 1.0 - w0
    num = (mu_t * w0 - mu[:-1]) ** 2
    den = w0 * w1
    sigma = np.where(den > 0, num / np.maximum(den, 1e-300), 0.0)
    k = int(np.argmax(sigma))
    return float(edges[k + 1])


def sample_uniform_rotation(rng: np.random.Generator) -> Rotation:
    """Haar-uniform rotation via a normalized 4D Gaussian quaternion."""
    while True:
        q = rng.standard_normal(4)
        n = np.linalg.norm(q)
        if n > 1e-12:
            q = q / n
            return Rotation(float(q[0]), float(q[1]), float(q[2]), float(q[3]))


_GRID_CACHE: dict[int, np.ndarray] = {}


def _centered_grid(s: int) -> np.ndarray:
    # (S^3, 3) float32 voxel coordinates, cached per side length.
    g = _GRID_CACHE.get(s)
    if g is None:
        axes = np.arange(s, dtype=np.float32)
        g = np.stack(np.meshgrid(axes, axes, axes, indexing="ij"), axis=-1).reshape(-1, 3)
        _GRID_CACHE[s] = g
    return g


def rotate_mask(m: Volume, r: Rotation, inverse: bool = False) -> Volume:
    """Nearest-neighbor rotation about the volume center ((S-1)/2 per axis).

    Out-of-bounds source voxels map to 0. Works for mask and probability
    volumes alike (nearest-neighbor resampling preserves the value set).
    The inverse flag applies r^-1 instead of r.
    """
    s = m.side
    # Inverse mapping: each output voxel pulls from rot^-1(output coord).
    rot = r.inverse() if not inverse else r
    mat = rot.matrix().astype(np.float32)
    c = np.float32((s - 1) / 2.0)
    grid = _centered_grid(s)
    src = (grid - c) @ mat.T
    src += c
    idx = np.rint(src).astype(np.int32)
    valid = np.all((idx >= 0) & (idx < s), axis=1)
    flat = (idx[:, 0].astype(np.int64) * s + idx[:, 1]) * s + idx[:, 2]
    flat[~valid] = 0
    out = m.data.reshape(-1)[flat]
    out = np.where(valid, out, np.float32(0.0)).reshape(s, s, s)
    return Volume(out, kind=m.kind)


def write_volume(v: Volume, path) -> None:
    data = np.ascontiguousarray(v.data, dtype="<f4")
    if not np.all(np.isfinite(data)):
        raise ValueError("refusing to write non-finite voxel data")
    s0, s1, s2 = v.dims
    with open(path, "wb") as f:
        f.write(_HEADER.pack(VOL1_MAGIC, VOL1_DTYPE_F32, s0, s1, s2))
        f.write(data.tobytes())


def read_volume(path, kind: str = INTENSITY) -> Volume:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError("file shorter than header", offset=len(raw))
    magic, dtype, s0, s1, s2 = _HEADER.unpack_from(raw, 0)
    if magic != VOL1_MAGIC:
        raise FormatError(f"bad magic {magic!r}", offset=0)
    if dtype != VOL1_DTYPE_F32:
        raise FormatError(f"unsupported dtype code {dtype:#x}", offset=4)
    if raw[5:8] != b"\x00\x00\x00":
        raise FormatError("reserved bytes must be zero", offset=5)
    if min(s0, s1, s2) < 1 or s0 * s1 * s2 > _MAX_VOXELS:
        raise FormatError(f"dims {(s0, s1, s2)} out of range", offset=8)
    expected = s0 * s1 * s2 * 4
    payload = raw[_HEADER.size:]
    if len(payload) != expected:
        raise FormatError(
            f"payload holds {len(payload)} bytes, header implies {expected}",
            offset=_HEADER.size + min(len(payload), expected),
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(s0, s1, s2)
    return Volume(data, kind=kind)
