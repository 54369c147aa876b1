"""Probabilistic head-surface extraction by ray casting under random rotations.

A binary head shape is probed by axis-parallel rays from all six faces; the
per-voxel hit frequency, averaged over K uniformly random orientations, gives
each voxel a probability of lying on the surface. Points sampled from that
map feed the convex-hull stage.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptySurface, IndexOutOfRange
from .volume import (
    MASK,
    PROB,
    Rotation,
    Volume,
    binarize,
    otsu_threshold,
    rng_from,
    rotate_mask,
    sample_uniform_rotation,
)

__all__ = [
    "AxisDirection",
    "ALL_DIRECTIONS",
    "SurfaceParams",
    "entry_distance",
    "intersection_map",
    "directional_average",
    "surface_representation",
    "sample_surface_points",
]


@dataclass(frozen=True)
class AxisDirection:
    """One of the six axis-parallel ray families: axis in {0,1,2}, direction
    +1 (ray enters at the high-index face) or -1 (low-index face)."""

    axis: int
    direction: int

    def __post_init__(self):
        if self.axis not in (0, 1, 2):
            raise ValueError(f"axis must be 0, 1 or 2, got {self.axis}")
        if self.direction not in (-1, 1):
            raise ValueError(f"direction must be -1 or +1, got {self.direction}")


ALL_DIRECTIONS = tuple(
    AxisDirection(a, d) for a in (0, 1, 2) for d in (-1, 1)
)


def entry_distance(ad: AxisDirection, k, s: int) -> int:
    """Distance of voxel k from the face a ray of family ad enters through.

    (S-1) - k_a for direction +1, k_a for direction -1. The first voxel a ray
    hits on a line is the set voxel minimizing this value; it is injective
    along a line, so no ties are possible.
    """
    k = tuple(int(v) for v in k)
    if len(k) != 3 or any(v < 0 or v >= s for v in k):
        raise IndexOutOfRange(f"index {k} outside [0, {s - 1}]^3")
    return (s - 1) - k[ad.axis] if ad.direction == 1 else k[ad.axis]


def intersection_map(m: Volume, ad: AxisDirection) -> Volume:
    """Mask of first set voxels hit by rays of family ad; one hit per
    occupied line, empty lines stay empty."""
    s = m.side
    msk = m.data > 0
    axis = ad.axis
    if ad.direction == -1:
        first = np.argmax(msk, axis=axis)
    else:
        first = (s - 1) - np.argmax(np.flip(msk, axis=axis), axis=axis)
    occupied = msk.any(axis=axis)
    out = np.zeros((s, s, s), np.float32)
    np.put_along_axis(
        out,
        np.expand_dims(first, axis),
        np.expand_dims(occupied.astype(np.float32), axis),
        axis=axis,
    )
    return Volume(out, kind=MASK)


def directional_average(m: Volume) -> Volume:
    """Voxel-wise mean of the six intersection maps; values in {0, 1/6, .., 1}."""
    acc = np.zeros(m.dims, np.float32)
    for ad in ALL_DIRECTIONS:
        acc += intersection_map(m, ad).data
    return Volume(acc / 6.0, kind=PROB)


@dataclass(frozen=True)
class SurfaceParams:
    """Configuration for surface probing.

    delta=None selects the Otsu threshold over nonzero voxels at call time.
    """

    num_rotations: int = 64
    delta: float | None = None
    seed: int = 0
    point_cap: int = 10000

    def __post_init__(self):
        if self.num_rotations < 1:
            raise ValueError("num_rotations must be >= 1")
        if self.point_cap < 4:
            raise ValueError("point_cap must be >= 4")


def surface_representation(
    x: Volume,
    p: SurfaceParams,
    rotations: Sequence[Rotation] | None = None,
) -> Volume:
    """Per-voxel surface probability under K random rotations.

    For each rotation: binarize, rotate, average the six intersection maps,
    rotate back; the result is the mean over rotations. Each rotation draws
    from its own (seed, i) substream, so the output does not depend on
    evaluation order. `rotations` overrides the random draw (testing and
    reproducible pipelines).
    """
    s = x.side
    if rotations is not None and len(rotations) != p.num_rotations:
        raise ValueError(
            f"got {len(rotations)} fixed rotations for num_rotations={p.num_rotations}"
        )
    if not np.any(x.data):
        return Volume(np.zeros((s, s, s), np.float32), kind=PROB)
    delta = p.delta if p.delta is not None else otsu_threshold(x, nonzero_only=True)
    mask = binarize(x, delta)
    if not np.any(mask.data):
        return Volume(np.zeros((s, s, s), np.float32), kind=PROB)
    acc = np.zeros((s, s, s), np.float64)
    for i in range(p.num_rotations):
        if rotations is not None:
            r = rotations[i]
        else:
            r = sample_uniform_rotation(rng_from(p.seed, i))
        rotated = rotate_mask(mask, r)
        avg = directional_average(rotated)
        acc += rotate_mask(avg, r, inverse=True).data
    z = np.clip(acc / p.num_rotations, 0.0, 1.0).astype(np.float32)
    return Volume(z, kind=PROB)


def sample_surface_points(
    z: Volume, seed: int, cap: int, threshold: float | None = None
) -> np.ndarray:
    """Independent Bernoulli draw per voxel with probability z[k]; if more
    than cap points come up, a uniform subset of size cap is kept. Returns an
    (n, 3) integer index array in lexicographic order.

    threshold switches to the deterministic mode (keep voxels with
    z >= threshold) for bit-reproducible pipelines.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    rng = rng_from(seed)
    if threshold is None:
        draw = rng.random(z.dims) < z.data
    else:
        draw = z.data >= threshold
    pts = np.argwhere(draw)
    if len(pts) == 0:
        raise EmptySurface("no surface points drawn")
    if len(pts) > cap:
        keep = rng.choice(len(pts), size=cap, replace=False)
        pts = pts[np.sort(keep)]
    return pts
