"""Multi-scale conditional generator and discriminator.

The generator doubles resolution per block, the discriminator halves it;
the carrier passed between scales is a single-channel map on both sides.
Every block is conditioned on the matching level of the hull/brain/
brain-intensity pyramid by channel concatenation.

Resolutions are fixed by the ladder: generator block k emits side
2^(k-1) * s, discriminator block k emits side S / 2^(k-1).  Violations of
the ladder raise ShapeError rather than letting torch broadcast silently.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from .blocks import InvertedResidual3d, double, halve
from .config import GanConfig
from .errors import ShapeError

__all__ = ["ScaleOutputs", "Generator", "Discriminator",
           "generator_forward", "discriminator_forward", "check_pyramid"]

_GAMMA_CH = 3  # hull, brain, brain intensities


def _init_weights(module: nn.Module) -> None:
    """Kaiming init matched to the LeakyReLU slope.

    The default fan-in uniform init attenuates a nine-conv stack until the
    scores sit at ~1e-2; scale-preserving init keeps early losses
    reflective of a genuinely untrained pair.  The scoring head has no
    nonlinearity, so it gets the linear gain.
    """
    if isinstance(module, nn.Conv3d):
        nn.init.kaiming_normal_(module.weight, a=0.2,
                                nonlinearity="leaky_relu")
        if module.bias is not None:
            nn.init.zeros_(module.bias)
    elif isinstance(module, nn.Linear):
        nn.init.kaiming_normal_(module.weight, nonlinearity="linear")
        nn.init.zeros_(module.bias)


@dataclass(frozen=True)
class ScaleOutputs:
    """Per-scale volumes, coarse to fine for the generator ladder."""

    levels: tuple[torch.Tensor, ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))

    @property
    def full(self) -> torch.Tensor:
        return self.levels[-1]


def _want(t: torch.Tensor, channels: int, side: int, what: str) -> None:
    if t.dim() != 5 or t.shape[1] != channels or t.shape[2:] != (side,) * 3:
        raise ShapeError(
            f"{what}: expected (B, {channels}, {side}, {side}, {side}), "
            f"got {tuple(t.shape)}")


def check_pyramid(cfg: GanConfig, pyramid) -> None:
    """Validate a coarse-to-fine conditioning pyramid against the ladder."""
    if len(pyramid) != cfg.num_blocks:
        raise ShapeError(f"pyramid has {len(pyramid)} levels, "
                         f"ladder has {cfg.num_blocks}")
    batch = pyramid[0].shape[0]
    for k in range(1, cfg.num_blocks + 1):
        _want(pyramid[k - 1], _GAMMA_CH, cfg.gen_side(k), f"pyramid level {k}")
        if pyramid[k - 1].shape[0] != batch:
            raise ShapeError("pyramid batch sizes differ between levels")


class _ScaleBlock(nn.Module):
    """Shared per-scale body: concat inputs, two inverted residuals, project
    back to a single channel."""

    def __init__(self, in_ch: int, width: int, expansion: int):
        super().__init__()
        self.body = nn.Sequential(
            InvertedResidual3d(in_ch, width, expansion),
            InvertedResidual3d(width, width, expansion),
            nn.Conv3d(width, 1, 1),
        )

    def forward(self, *parts: torch.Tensor) -> torch.Tensor:
        return self.body(torch.cat(parts, dim=1))


class Generator(nn.Module):
    """g_k = hull_k * sigmoid(block_k(upsample(g_{k-1}), gamma_k)).

    g_0 is N(0,1) noise one halving below the base scale.  The sigmoid
    makes every scale read as an intensity volume; the hull gate confines
    tissue to the head envelope, so the exterior is exactly zero like a
    real scan's — a sigmoid alone can only approach zero asymptotically.
    """

    def __init__(self, cfg: GanConfig):
        super().__init__()
        self.cfg = cfg
        self.blocks = nn.ModuleList(
            _ScaleBlock(1 + _GAMMA_CH, cfg.width_at_side(cfg.gen_side(k)),
                        cfg.expansion)
            for k in range(1, cfg.num_blocks + 1))
        self.apply(_init_weights)

    def forward(self, noise: torch.Tensor, pyramid) -> ScaleOutputs:
        cfg = self.cfg
        check_pyramid(cfg, pyramid)
        _want(noise, 1, cfg.noise_side, "noise g_0")
        if noise.shape[0] != pyramid[0].shape[0]:
            raise ShapeError(
                f"noise batch {noise.shape[0]} != pyramid batch "
                f"{pyramid[0].shape[0]}")
        carrier = noise
        outs = []
        for k, block in enumerate(self.blocks, start=1):
            hull = pyramid[k - 1][:, :1]
            g = hull * torch.sigmoid(block(double(carrier), pyramid[k - 1]))
            outs.append(g)
            carrier = g
        return ScaleOutputs(tuple(outs))


class Discriminator(nn.Module):
    """d_1 = block_1(v_1, gamma_top); d_k = block_k(halve(d_{k-1}), v_k,
    gamma); a final linear layer summarizes d_last into one scalar per
    batch element.

    v_k runs fine to coarse (side S / 2^(k-1)); the pyramid is passed
    coarse to fine exactly as for the generator and indexed in reverse.
    """

    def __init__(self, cfg: GanConfig):
        super().__init__()
        self.cfg = cfg
        blocks = []
        for k in range(1, cfg.num_blocks + 1):
            in_ch = (1 + _GAMMA_CH) if k == 1 else (2 + _GAMMA_CH)
            blocks.append(_ScaleBlock(in_ch, cfg.width_at_side(cfg.disc_side(k)),
                                      cfg.expansion))
        self.blocks = nn.ModuleList(blocks)
        self.head = nn.Linear(cfg.disc_side(cfg.num_blocks) ** 3, 1)
        self.apply(_init_weights)

    def forward(self, volumes, pyramid) -> torch.Tensor:
        cfg = self.cfg
        check_pyramid(cfg, pyramid)
        if len(volumes) != cfg.num_blocks:
            raise ShapeError(f"got {len(volumes)} input volumes, "
                             f"ladder has {cfg.num_blocks}")
        batch = pyramid[0].shape[0]
        d = None
        for k, block in enumerate(self.blocks, start=1):
            v = volumes[k - 1]
            _want(v, 1, cfg.disc_side(k), f"discriminator input {k}")
            if v.shape[0] != batch:
                raise ShapeError("input batch differs from pyramid batch")
            gamma = pyramid[cfg.num_blocks - k]
            d = block(v, gamma) if k == 1 else block(halve(d), v, gamma)
        return self.head(d.flatten(1)).squeeze(1)


def generator_forward(gen: Generator, noise: torch.Tensor,
                      pyramid) -> ScaleOutputs:
    return gen(noise, pyramid)


def discriminator_forward(disc: Discriminator, volumes,
                          pyramid) -> torch.Tensor:
    return disc(volumes, pyramid)
