"""Exception types raised across the toolkit.

Every error here derives from VoldeidError so callers can catch the whole
family; the CLI maps them to exit code 2 with a one-line message.
"""

__all__ = [
    "VoldeidError",
    "InvalidThreshold",
    "DegenerateHistogram",
    "NonCubicVolume",
    "FormatError",
    "IndexOutOfRange",
    "EmptySurface",
    "TooFewPoints",
    "DegenerateInput",
    "InvalidCount",
    "TransformFailed",
    "BrainOutsideHull",
    "DimMismatch",
    "InvalidScale",
    "EmptyMask",
    "InvalidGallery",
    "InvalidPhantomParams",
    "EmptyInput",
]


class VoldeidError(Exception):
    """Base class for all toolkit errors."""


class InvalidThreshold(VoldeidError):
    """Binarization threshold is not a finite number."""


class DegenerateHistogram(VoldeidError):
    """Histogram has fewer than two occupied classes; no threshold exists."""


class NonCubicVolume(VoldeidError):
    """Operation requires S0 == S1 == S2."""


class FormatError(VoldeidError):
    """Malformed volume file. Carries the byte offset of the defect."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class IndexOutOfRange(VoldeidError):
    """Voxel index outside [0, S-1]."""


class EmptySurface(VoldeidError):
    """Surface sampling produced no points."""


class TooFewPoints(VoldeidError):
    """Hull input has fewer than 4 distinct points."""


class DegenerateInput(VoldeidError):
    """Hull input is entirely coplanar or collinear."""


class InvalidCount(VoldeidError):
    """Requested a non-positive number of items."""


class TransformFailed(VoldeidError):
    """Privacy transform failed after reseeded retries."""


class BrainOutsideHull(VoldeidError):
    """Brain mask has voxels outside the computed head hull."""


class DimMismatch(VoldeidError):
    """Volume or image dimensions do not agree with the operation."""


class InvalidScale(VoldeidError):
    """Pyramid sides must be powers of two with s <= S."""


class EmptyMask(VoldeidError):
    """Mask required to be nonempty is all zero."""


class InvalidGallery(VoldeidError):
    """Identification gallery is malformed (duplicates, missing query)."""


class InvalidPhantomParams(VoldeidError):
    """Phantom identity parameters outside generator bounds."""


class EmptyInput(VoldeidError):
    """Nonempty input sequence required."""
