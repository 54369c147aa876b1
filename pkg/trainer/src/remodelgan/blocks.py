"""Convolutional building blocks.

Inverted residuals keep the parameter count small at volumetric
resolutions: a 1x1x1 expansion, a depthwise 3x3x3, and a linear 1x1x1
projection, with an identity skip when the channel counts line up.  No
normalization layers — batch statistics are meaningless at batch size 2,
and the toy scale trains fine without them.
"""

from __future__ import annotations

import torch
from torch import nn

__all__ = ["InvertedResidual3d", "halve", "double"]


class InvertedResidual3d(nn.Module):
    def __init__(self, in_ch: int, out_ch: int, expansion: int):
        super().__init__()
        hidden = in_ch * expansion
        self.expand = nn.Conv3d(in_ch, hidden, 1)
        self.depthwise = nn.Conv3d(hidden, hidden, 3, padding=1, groups=hidden)
        self.project = nn.Conv3d(hidden, out_ch, 1)
        self.act = nn.LeakyReLU(0.2)
        self.skip = in_ch == out_ch

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        y = self.act(self.expand(x))
        y = self.act(self.depthwise(y))
        y = self.project(y)  # linear bottleneck, no activation
        return x + y if self.skip else y


def halve(x: torch.Tensor) -> torch.Tensor:
    return nn.functional.avg_pool3d(x, 2)


def double(x: torch.Tensor) -> torch.Tensor:
    return nn.functional.interpolate(x, scale_factor=2, mode="nearest")
