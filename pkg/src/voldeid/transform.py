"""The privacy transform and its multi-scale conditioning pyramid.

A scan x and its brain mask b are reduced to the triple
(hull, brain, brain_intensities): the voxelized convex hull of the probed
head surface, the mask itself, and the masked brain voxels.  Everything
about x outside the brain enters only through the binarized head shape, so
the triple carries no face texture.

Pyramids downsample the triple to a ladder of power-of-two resolutions.
Masks shrink through seeded probabilistic pooling (a voxel of the coarse
mask is Bernoulli with the block's set fraction, so the expected set
fraction is preserved exactly); intensities shrink through plain average
pooling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BrainOutsideHull,
    DegenerateInput,
    DimMismatch,
    EmptyMask,
    EmptySurface,
    InvalidScale,
    TooFewPoints,
    TransformFailed,
)
from .hull import convex_hull, voxelize_hull
from .surface import SurfaceParams, sample_surface_points, surface_representation
from .volume import INTENSITY, MASK, Volume, rng_from


@dataclass(frozen=True)
class PrivacyTransform:
    """The de-identified conditioning triple; holds no face detail.

    Validated: cubic equal dims, brain inside hull, and intensities
    supported only on the brain mask.
    """

    hull: Volume
    brain: Volume
    brain_intensities: Volume

    def __post_init__(self):
        if self.hull.kind != MASK or self.brain.kind != MASK:
            raise ValueError("hull and brain channels must be masks")
        self.hull.side  # cubic or bust
        if self.brain.dims != self.hull.dims or \
                self.brain_intensities.dims != self.hull.dims:
            raise DimMismatch(
                f"channel dims differ: {self.hull.dims}, {self.brain.dims}, "
                f"{self.brain_intensities.dims}")
        if np.any(self.brain.data > self.hull.data):
            raise BrainOutsideHull("brain mask has voxels outside the hull")
        if np.any(self.brain_intensities.data[self.brain.data == 0] != 0):
            raise ValueError("brain intensities leak outside the brain mask")

    @property
    def side(self) -> int:
        return self.hull.side


@dataclass(frozen=True)
class Pyramid:
    """Conditioning triples at sides s, 2s, ..., S (coarse to fine)."""

    levels: tuple[PrivacyTransform, ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        if not self.levels:
            raise ValueError("pyramid needs at least one level")
        for lo, hi in zip(self.levels, self.levels[1:]):
            if hi.side != 2 * lo.side:
                raise InvalidScale(
                    f"level sides must double: {lo.side} then {hi.side}")

    @property
    def num_levels(self) -> int:
        return len(self.levels)

    @property
    def full(self) -> PrivacyTransform:
        return self.levels[-1]


def _derived_seed(seed: int, *key: int) -> int:
    return int(rng_from(seed, *key).integers(np.iinfo(np.int64).max))


def build_privacy_transform(x: Volume, b: Volume,
                            p: SurfaceParams) -> PrivacyTransform:
    """Assemble (hull, brain, brain masked intensities) from a scan.

    The hull is rebuilt from freshly sampled surface points up to 3 times
    if sampling or hull construction degenerates; a head that still fails
    raises TransformFailed.  A brain mask that pokes out of the hull is an
    error, not a retry.
    """
    if b.kind != MASK:
        raise ValueError("brain channel must be a mask volume")
    side = x.side
    if b.dims != x.dims:
        raise DimMismatch(f"scan dims {x.dims} != brain dims {b.dims}")
    if not np.any(b.data):
        raise EmptyMask("brain mask is empty")

    z = surface_representation(x, p)
    last_error: Exception | None = None
    for attempt in range(3):
        try:
            pts = sample_surface_points(z, seed=_derived_seed(p.seed, 11, attempt),
                                        cap=p.point_cap)
            mesh = convex_hull(pts)
        except (EmptySurface, DegenerateInput, TooFewPoints) as exc:
            last_error = exc
            continue
        hull = voxelize_hull(mesh, side, seed=_derived_seed(p.seed, 13, attempt))
        if np.any(b.data > hull.data):
            raise BrainOutsideHull("brain mask extends beyond the head hull")
        masked = Volume(x.data * b.data, kind=INTENSITY)
        return PrivacyTransform(hull=hull, brain=b, brain_intensities=masked)
    raise TransformFailed(
        f"surface degenerated on all 3 sampling attempts: {last_error}")


def _check_factor(dims: tuple[int, int, int], factor: int):
    if factor < 1 or factor & (factor - 1):
        raise InvalidScale(f"factor must be a positive power of two, got {factor}")
    if any(d % factor for d in dims):
        raise DimMismatch(f"dims {dims} not divisible by factor {factor}")


def _block_means(data: np.ndarray, factor: int) -> np.ndarray:
    d0, d1, d2 = data.shape
    blocks = data.reshape(d0 // factor, factor, d1 // factor, factor,
                          d2 // factor, factor)
    return blocks.mean(axis=(1, 3, 5), dtype=np.float64)


def probabilistic_downsample(m: Volume, factor: int, seed: int = 0) -> Volume:
    """Shrink a mask so the expected set fraction is exactly preserved.

    Each coarse voxel is an independent Bernoulli draw with parameter equal
    to its block's mean.  Saturated blocks (all set / all clear) map
    deterministically, so factor 1 is the identity.
    """
    if m.kind != MASK:
        raise ValueError("probabilistic downsampling is defined on masks")
    _check_factor(m.dims, factor)
    mu = _block_means(m.data, factor)
    draw = rng_from(seed).random(mu.shape)
    return Volume((draw < mu).astype(np.float32), kind=MASK)


def average_downsample(x: Volume, factor: int) -> Volume:
    """Plain block-mean pooling; keeps the volume kind."""
    _check_factor(x.dims, factor)
    return Volume(_block_means(x.data, factor).astype(np.float32), kind=x.kind)


def build_pyramid(g: PrivacyTransform, s: int, seed: int = 0) -> Pyramid:
    """Downsample a transform to every scale from s up to its full side.

    Walks down in factor-2 steps: each coarser level's masks are
    probabilistically pooled from the previous level (hull and brain share
    one draw per step, which keeps the brain inside the hull), and the
    intensity channel is average-pooled, then clipped to the level's brain
    mask so the triple stays a valid transform.
    """
    side = g.side
    for v, name in ((side, "volume side"), (s, "minimum side")):
        if v < 1 or v & (v - 1):
            raise InvalidScale(f"{name} must be a power of two, got {v}")
    if s > side:
        raise InvalidScale(f"minimum side {s} exceeds volume side {side}")

    levels = [g]
    hull, brain, inten = g.hull, g.brain, g.brain_intensities.data
    step = 0
    while hull.side > s:
        step += 1
        level_seed = _derived_seed(seed, step)
        # one seed for both masks: the shared uniform field couples the
        # draws, and block means obey mean(brain) <= mean(hull)
        hull = probabilistic_downsample(hull, 2, seed=level_seed)
        brain = probabilistic_downsample(brain, 2, seed=level_seed)
        inten = _block_means(inten, 2).astype(np.float32)
        levels.append(PrivacyTransform(
            hull=hull, brain=brain,
            brain_intensities=Volume(inten * brain.data, kind=INTENSITY)))
    return Pyramid(levels=tuple(reversed(levels)))
