"""Toy-scale multi-resolution conditional GAN for volumetric head remodeling.

Trains a generator that paints a synthetic head inside a hull/brain/
brain-intensity conditioning pyramid, against a multi-scale relativistic
least-squares discriminator.  Volumes are exchanged with the
de-identification toolkit exclusively through VOL1 files.
"""

from .config import GanConfig, load_config, save_config
from .errors import (
    ConfigError,
    FormatError,
    ShapeError,
    TrainerError,
    TrainingDiverged,
)
from .loss import rlsgan_losses
from .model import (
    Discriminator,
    Generator,
    ScaleOutputs,
    discriminator_forward,
    generator_forward,
)
from .train import (
    Subject,
    TrainState,
    composite_scales,
    make_batch,
    make_state,
    real_scales,
    train,
    train_step,
)
from .volio import read_pyramid, read_vol, write_vol

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "Discriminator",
    "FormatError",
    "GanConfig",
    "Generator",
    "ScaleOutputs",
    "ShapeError",
    "Subject",
    "TrainState",
    "TrainerError",
    "TrainingDiverged",
    "composite_scales",
    "discriminator_forward",
    "generator_forward",
    "load_config",
    "make_batch",
    "make_state",
    "read_pyramid",
    "read_vol",
    "real_scales",
    "rlsgan_losses",
    "save_config",
    "train",
    "train_step",
    "write_vol",
]
