"""End-to-end de-identification pipelines and removal-based baselines.

The remodeling pipeline is the composition

    output = brain * x + (1 - brain) * remodeler(transform(x), seed)

so the brain is preserved bit-exactly while everything else is synthesized
from the privacy transform alone.  The remodeler is pluggable: the built-in
``reference_remodel`` paints a smooth synthetic head from the hull's
distance field, and a learned generator can be swapped in through the same
contract (or through a file produced by an external trainer).

Baselines cover the removal family: quickshear-style face shearing, skull
stripping, blanking, and the identity passthrough.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.ndimage import distance_transform_cdt

from .errors import DimMismatch, EmptyMask
from .hull import hull_2d
from .surface import SurfaceParams
from .transform import PrivacyTransform, _derived_seed, build_privacy_transform
from .volume import INTENSITY, MASK, Volume, rng_from

_SHELL_DEPTH = 6.0  # voxels of city-block depth until tissue saturates
_TISSUE_LEVEL = 0.7
_NOISE_AMP = 0.04
_NOISE_GRAIN = 8  # noise is drawn on a grain^3-coarser lattice

Remodeler = Callable[[PrivacyTransform, int], Volume]


class DeidMethod(enum.Enum):
    REMODEL = "remodel"
    QUICKSHEAR_LIKE = "quickshear"
    SKULL_STRIP = "skullstrip"
    BLACK = "black"
    ORIGINAL = "original"


def composite(x: Volume, b: Volume, g: Volume) -> Volume:
    """Brain voxels from x, everything else from g; bit-exact on the brain."""
    if b.kind != MASK:
        raise ValueError("composite mask channel must be a mask volume")
    if x.dims != b.dims or g.dims != b.dims:
        raise DimMismatch(f"dims differ: x {x.dims}, b {b.dims}, g {g.dims}")
    out = np.where(b.data > 0, x.data, g.data)
    return Volume(out, kind=INTENSITY)


def _smooth_noise(side: int, seed: int) -> np.ndarray:
    """Zero-mean low-frequency field, hard-bounded to +-2 sigma."""
    rng = rng_from(seed)
    coarse = -(-side // _NOISE_GRAIN)
    grain = np.clip(rng.normal(size=(coarse, coarse, coarse)), -2.0, 2.0)
    for axis in range(3):
        grain = np.repeat(grain, _NOISE_GRAIN, axis=axis)
    return _NOISE_AMP * grain[:side, :side, :side].astype(np.float32)


def reference_remodel(g: PrivacyTransform, seed: int = 0) -> Volume:
    """Non-learned remodeler: a smooth synthetic head inside the hull.

    Intensity ramps with city-block depth into the hull (saturating at a
    fixed shell depth) and carries a small seeded low-frequency noise term;
    outside the hull everything is zero.  Uses only the transform and the
    seed, never the original scan.
    """
    side = g.side
    hull = g.hull.data
    if not np.any(hull):
        return Volume(np.zeros((side, side, side), np.float32), kind=INTENSITY)
    padded = np.pad(hull > 0, 1)  # domain border counts as exterior
    depth = distance_transform_cdt(padded, metric="taxicab")[1:-1, 1:-1, 1:-1]
    profile = np.clip(depth / _SHELL_DEPTH, 0.0, 1.0) * _TISSUE_LEVEL
    out = (profile + _smooth_noise(side, seed)) * hull
    return Volume(out.astype(np.float32), kind=INTENSITY)


def quickshear_baseline(x: Volume, b: Volume, pad: int = 2) -> Volume:
    """Shear off the face with a plane clear of the brain.

    The brain mask is flattened onto the sagittal-mid plane (left-right
    collapsed); the lower-front edge of the shadow's convex hull, pushed
    outward by pad voxels, induces the shear plane.  Every voxel strictly
    on the face side goes to zero; brain voxels never qualify.
    """
    if b.kind != MASK:
        raise ValueError("brain channel must be a mask volume")
    if x.dims != b.dims:
        raise DimMismatch(f"scan dims {x.dims} != brain dims {b.dims}")
    x.side  # cubic or bust
    if not np.any(b.data):
        raise EmptyMask("brain mask is empty")

    shadow = np.argwhere(b.data.any(axis=2))  # (k0, k1) pairs
    corners = hull_2d(shadow)
    if len(corners) < 2:
        return Volume(x.data, kind=x.kind)

    # outward edge normals of the CCW cycle; the shear edge is the one
    # facing the inferior-anterior diagonal most directly
    nxt = np.roll(corners, -1, axis=0)
    d = (nxt - corners).astype(np.float64)
    normals = np.column_stack([d[:, 1], -d[:, 0]])
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    score = normals @ np.array([-1.0, 1.0]) / np.sqrt(2.0)
    e = int(np.argmax(score))

    k0 = np.arange(x.side, dtype=np.float64)[:, None]
    k1 = np.arange(x.side, dtype=np.float64)[None, :]
    signed = (k0 - corners[e, 0]) * normals[e, 0] + (k1 - corners[e, 1]) * normals[e, 1]
    keep = signed <= pad
    return Volume(x.data * keep[:, :, None], kind=x.kind)


def skull_strip_baseline(x: Volume, b: Volume) -> Volume:
    """Remove everything except the brain."""
    if b.kind != MASK:
        raise ValueError("brain channel must be a mask volume")
    if x.dims != b.dims:
        raise DimMismatch(f"scan dims {x.dims} != brain dims {b.dims}")
    return Volume(x.data * b.data, kind=x.kind)


@dataclass(frozen=True)
class DeidParams:
    surface: SurfaceParams = field(default_factory=SurfaceParams)
    shear_pad: int = 2
    remodeler: Remodeler = reference_remodel


def run_transform(x: Volume, b: Volume, params: DeidParams,
                  seed: int) -> PrivacyTransform:
    """The privacy transform a REMODEL run with this seed consumes."""
    surf = replace(params.surface, seed=_derived_seed(seed, 3))
    return build_privacy_transform(x, b, surf)


def deidentify(x: Volume, b: Volume, method: DeidMethod,
               params: DeidParams | None = None, seed: int = 0) -> Volume:
    """Run one de-identification method on a scan.

    Deterministic given (x, b, method, params, seed).  For REMODEL the run
    seed supersedes the seed inside params.surface, so one knob steers both
    the hull sampling and the remodeler.
    """
    if params is None:
        params = DeidParams()
    if method is DeidMethod.ORIGINAL:
        return Volume(x.data, kind=x.kind)
    if method is DeidMethod.BLACK:
        return Volume(np.zeros(x.dims, np.float32), kind=x.kind)
    if method is DeidMethod.SKULL_STRIP:
        return skull_strip_baseline(x, b)
    if method is DeidMethod.QUICKSHEAR_LIKE:
        return quickshear_baseline(x, b, pad=params.shear_pad)
    g = run_transform(x, b, params, seed)
    fake = params.remodeler(g, _derived_seed(seed, 5))
    if fake.dims != x.dims:
        raise DimMismatch(f"remodeler produced dims {fake.dims}, scan has {x.dims}")
    if fake.data.min() < 0.0 or fake.data.max() > 1.0:
        raise ValueError("remodeler output must lie in [0, 1]")
    return composite(x, b, fake)
