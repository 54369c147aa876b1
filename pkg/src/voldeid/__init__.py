"""Volumetric de-identification of 3D head scans.

The core pipeline replaces everything outside the brain with a surrogate
head synthesized from a privacy transform (convex hull of the head surface
plus the brain-masked interior), so that nothing identity-bearing outside
the brain can leak into the output.  Removal-style baselines, a synthetic
phantom cohort, and an identification/segmentation evaluation harness ride
along for benchmarking.
"""

from .errors import (
    DimMismatch,
    EmptyInput,
    EmptyMask,
    FormatError,
    InvalidGallery,
    InvalidPhantomParams,
    VoldeidError,
)
from .hull import TriMesh, convex_hull, voxelize_hull
from .phantom import Phantom, PhantomParams, generate_phantom, generate_pool
from .pipeline import (
    DeidMethod,
    DeidParams,
    composite,
    deidentify,
    quickshear_baseline,
    reference_remodel,
    run_transform,
    skull_strip_baseline,
)
from .surface import SurfaceParams, sample_surface_points, surface_representation
from .transform import (
    PrivacyTransform,
    Pyramid,
    build_privacy_transform,
    build_pyramid,
)
from .volume import INTENSITY, MASK, Volume, binarize, read_volume, write_volume

__version__ = "0.1.0"

__all__ = [
    "DeidMethod",
    "DeidParams",
    "DimMismatch",
    "EmptyInput",
    "EmptyMask",
    "FormatError",
    "INTENSITY",
    "InvalidGallery",
    "InvalidPhantomParams",
    "MASK",
    "Phantom",
    "PhantomParams",
    "PrivacyTransform",
    "Pyramid",
    "SurfaceParams",
    "TriMesh",
    "VoldeidError",
    "Volume",
    "binarize",
    "build_privacy_transform",
    "build_pyramid",
    "composite",
    "convex_hull",
    "deidentify",
    "generate_phantom",
    "generate_pool",
    "quickshear_baseline",
    "read_volume",
    "reference_remodel",
    "run_transform",
    "sample_surface_points",
    "skull_strip_baseline",
    "surface_representation",
    "voxelize_hull",
    "write_volume",
]
