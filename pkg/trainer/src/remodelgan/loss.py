"""Relativistic least-squares GAN loss, paired form.

Each real score is compared against the fake score at the same batch
position (no batch averaging inside the relativism term):

    L_D = mean[(d_real - d_fake - 1)^2]
    L_G = mean[(d_fake - d_real - 1)^2]

Swapping the two score vectors swaps the two losses.
"""

from __future__ import annotations

import torch

from .errors import ShapeError

__all__ = ["rlsgan_losses"]


def rlsgan_losses(d_real: torch.Tensor,
                  d_fake: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    if d_real.shape != d_fake.shape:
        raise ShapeError(
            f"score batches differ: {tuple(d_real.shape)} vs "
            f"{tuple(d_fake.shape)}")
    loss_d = torch.mean((d_real - d_fake - 1.0) ** 2)
    loss_g = torch.mean((d_fake - d_real - 1.0) ** 2)
    return loss_d, loss_g
