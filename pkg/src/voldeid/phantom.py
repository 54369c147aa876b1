"""Synthetic head phantoms with ground-truth brain masks.

Each phantom is an ellipsoidal head whose anterior cap is carved down to an
identity-specific relief (nose, brow, jaw) and textured per subject.  The
relief lives strictly behind the plane spanned by the carve rim, so the
convex hull of the head surface is the same truncated ellipsoid for every
identity: face geometry never reaches the hull, which is what makes the
remodeling pipeline sit at chance level on these subjects by construction.

Axes follow the package convention: k0 inferior->superior, k1
posterior->anterior (the face looks along +k1), k2 left->right.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidPhantomParams
from .transform import _derived_seed
from .volume import INTENSITY, MASK, Volume, rng_from

_FACE_COS = np.cos(np.deg2rad(50.0))  # carve aperture half-angle
_RELIEF_LO, _RELIEF_HI = 0.40, 0.56  # keeps every face voxel behind the rim plane
_AXIS_LO, _AXIS_HI = 0.2, 1.0 / 3.0  # semi-axis bounds as side fractions

# intensity bands; background stays below the 0.25 render/probe threshold
_BACKGROUND_CLIP = 0.15
_TISSUE_BAND = (0.55, 0.95)
_BRAIN_BAND = (0.65, 0.85)
_VENTRICLE_BAND = (0.45, 0.55)


@dataclass(frozen=True)
class PhantomIdentity:
    semi_axes: tuple[float, float, float]  # voxels
    nose_size: float
    nose_pos: float
    brow_depth: float
    jaw_width: float
    texture_seed: int
    face_seed: int  # seeds the fine relief fingerprint


@dataclass(frozen=True)
class PhantomParams:
    """Generator bounds; identities are drawn inside them."""

    side: int = 64
    semi_axes: tuple[float, float, float] = (0.29, 0.30, 0.27)  # side fractions
    nose_size_range: tuple[float, float] = (0.030, 0.055)
    nose_pos_range: tuple[float, float] = (-0.18, 0.18)
    brow_depth_range: tuple[float, float] = (0.0, 0.05)
    jaw_width_range: tuple[float, float] = (0.55, 0.85)
    vary_head_size: bool = False
    head_axis_range: tuple[float, float] = (0.22, 0.32)

    def __post_init__(self):
        if self.side < 16:
            raise InvalidPhantomParams(f"side {self.side} too small for a head")
        for a in self.semi_axes:
            if not _AXIS_LO <= a <= _AXIS_HI:
                raise InvalidPhantomParams(
                    f"semi-axis fraction {a} outside [{_AXIS_LO}, {_AXIS_HI:.4f}]")
        for lo, hi, cap, name in [
            (*self.nose_size_range, 0.06, "nose_size"),
            (*self.brow_depth_range, 0.05, "brow_depth"),
        ]:
            if not 0.0 <= lo <= hi <= cap:
                raise InvalidPhantomParams(f"{name} range [{lo}, {hi}] out of bounds")
        lo, hi = self.nose_pos_range
        if not -0.3 <= lo <= hi <= 0.3:
            raise InvalidPhantomParams("nose position range out of bounds")
        lo, hi = self.jaw_width_range
        if not 0.4 <= lo <= hi <= 1.0:
            raise InvalidPhantomParams("jaw width range out of bounds")
        lo, hi = self.head_axis_range
        if not _AXIS_LO <= lo <= hi <= _AXIS_HI:
            raise InvalidPhantomParams("head axis range out of bounds")


@dataclass(frozen=True, eq=False)
class Phantom:
    scan: Volume
    brain: Volume
    identity: PhantomIdentity
    subject_id: int

    def __post_init__(self):
        if self.brain.kind != MASK:
            raise ValueError("phantom brain channel must be a mask")
        if np.any((self.brain.data > 0) & (self.scan.data < 0.25)):
            raise ValueError("brain mask leaves the bright head region")


def _draw_identity(seed: int, params: PhantomParams) -> PhantomIdentity:
    rng = rng_from(seed)
    if params.vary_head_size:
        ax = tuple(float(rng.uniform(*params.head_axis_range) * params.side)
                   for _ in range(3))
    else:
        ax = tuple(float(f * params.side) for f in params.semi_axes)
    return PhantomIdentity(
        semi_axes=ax,
        nose_size=float(rng.uniform(*params.nose_size_range)),
        nose_pos=float(rng.uniform(*params.nose_pos_range)),
        brow_depth=float(rng.uniform(*params.brow_depth_range)),
        jaw_width=float(rng.uniform(*params.jaw_width_range)),
        texture_seed=int(rng.integers(2**31)),
        face_seed=int(rng.integers(2**31)),
    )


def _face_relief(side: int, k0n: np.ndarray, k2n: np.ndarray,
                 ident: PhantomIdentity) -> np.ndarray:
    """Face height field in normalized u1 units, clamped behind the rim plane.

    Smooth named features (nose, brow, jaw) plus a seeded coarse fingerprint:
    the fingerprint keeps distinct identities apart even when the named
    features land close enough to quantize to the same voxel surface.
    """
    u0 = k0n[:, None]
    u2 = k2n[None, :]
    nose = ident.nose_size * np.exp(
        -((u0 - ident.nose_pos) ** 2 + u2 ** 2) / (2 * 0.12 ** 2))
    brow = ident.brow_depth * np.exp(-((u0 - 0.35) ** 2) / (2 * 0.08 ** 2))
    jaw = (ident.jaw_width - 0.7) * 0.1 * np.exp(-((u0 + 0.45) ** 2) / (2 * 0.15 ** 2))
    patch = -(-side // 8)
    fp = rng_from(ident.face_seed).uniform(-0.025, 0.025, (8, 8))
    fp = np.repeat(np.repeat(fp, patch, axis=0), patch, axis=1)[:side, :side]
    return np.clip(0.50 + nose - brow + jaw + fp, _RELIEF_LO, _RELIEF_HI)


def generate_phantom(seed: int, params: PhantomParams | None = None,
                     subject_id: int = 0) -> Phantom:
    """Deterministic phantom head for the given seed."""
    if params is None:
        params = PhantomParams()
    ident = _draw_identity(seed, params)
    side = params.side
    c = (side - 1) / 2.0
    grid = np.indices((side, side, side)).astype(np.float64)
    u = [(grid[i] - c) / ident.semi_axes[i] for i in range(3)]
    rho = np.sqrt(u[0] ** 2 + u[1] ** 2 + u[2] ** 2)

    window = u[1] > _FACE_COS * rho
    k = (np.arange(side) - c).astype(np.float64)
    relief = _face_relief(side, k / ident.semi_axes[0], k / ident.semi_axes[2], ident)
    head = (rho <= 1.0) & (~window | (u[1] <= relief[:, None, :]))

    # brain geometry rides the head axes, pulled back from the carved face
    bc = [u[0], u[1] + 0.12, u[2]]
    brain = (bc[0] / 0.48) ** 2 + (bc[1] / 0.42) ** 2 + (bc[2] / 0.48) ** 2 <= 1.0
    ventricle = (bc[0] / 0.18) ** 2 + (bc[1] / 0.15) ** 2 + (bc[2] / 0.18) ** 2 <= 1.0
    if np.any(brain & ~head):
        raise InvalidPhantomParams("brain protrudes from the head geometry")

    t = rng_from(ident.texture_seed)
    shape = (side, side, side)
    scan = np.clip(np.abs(t.normal(0.05, 0.03, shape)), 0.0, _BACKGROUND_CLIP)
    scan = np.where(head, np.clip(t.normal(0.78, 0.06, shape), *_TISSUE_BAND), scan)
    scan = np.where(brain, np.clip(t.normal(0.75, 0.04, shape), *_BRAIN_BAND), scan)
    scan = np.where(ventricle, np.clip(t.normal(0.50, 0.025, shape), *_VENTRICLE_BAND),
                    scan)

    return Phantom(
        scan=Volume(scan.astype(np.float32), kind=INTENSITY),
        brain=Volume(brain.astype(np.float32), kind=MASK),
        identity=ident,
        subject_id=subject_id,
    )


def generate_pool(n: int, params: PhantomParams | None = None,
                  seed: int = 0) -> tuple[Phantom, ...]:
    """n phantoms with distinct identities and subject ids 0..n-1."""
    if n < 1:
        raise ValueError("pool needs at least one subject")
    return tuple(
        generate_phantom(_derived_seed(seed, 23, i), params, subject_id=i)
        for i in range(n))
