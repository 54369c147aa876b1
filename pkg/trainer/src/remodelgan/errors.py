"""Exception types for the trainer."""

__all__ = ["TrainerError", "ShapeError", "ConfigError", "TrainingDiverged",
           "FormatError"]


class TrainerError(Exception):
    """Base class for all trainer errors."""


class ShapeError(TrainerError):
    """Tensor shape or resolution disagrees with the scale ladder."""


class ConfigError(TrainerError):
    """Invalid or unparseable training configuration."""


class TrainingDiverged(TrainerError):
    """A loss went non-finite."""


class FormatError(TrainerError):
    """Malformed volume file."""
