"""Training loop: alternating discriminator/generator updates.

A subject is a full-resolution scan plus its conditioning pyramid; the
multi-resolution real sequence is derived by average pooling, and fakes
are composited with the brain before the discriminator ever sees them —
the discriminator cannot reward or punish anything inside the brain,
because that region is original in both branches.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from .config import GanConfig
from .errors import ShapeError, TrainingDiverged
from .loss import rlsgan_losses
from .model import Discriminator, Generator, check_pyramid
from .blocks import halve
from .optim import AdamP

__all__ = ["Subject", "TrainState", "make_state", "make_batch",
           "composite_scales", "real_scales", "train_step", "train"]

_BRAIN_CH = 1  # channel order in a pyramid level: hull, brain, brainint


@dataclass(frozen=True)
class Subject:
    """One training example: scan at full resolution plus its pyramid
    (list of (3, side, side, side) float32 arrays, coarse to fine)."""

    scan: np.ndarray
    pyramid: list[np.ndarray]


@dataclass
class TrainState:
    cfg: GanConfig
    generator: Generator
    discriminator: Discriminator
    opt_g: torch.optim.Optimizer
    opt_d: torch.optim.Optimizer
    rng: torch.Generator
    step: int = 0
    history: list[tuple[float, float]] = field(default_factory=list)


def make_state(cfg: GanConfig) -> TrainState:
    torch.manual_seed(cfg.seed)
    gen = Generator(cfg)
    disc = Discriminator(cfg)
    # NDHWC keeps the CPU convolutions on oneDNN's fast path
    gen.to(memory_format=torch.channels_last_3d)
    disc.to(memory_format=torch.channels_last_3d)
    make_opt = AdamP if cfg.optimizer == "adamp" else torch.optim.Adam
    opt_g = make_opt(gen.parameters(), lr=cfg.learning_rate, betas=cfg.betas)
    opt_d = make_opt(disc.parameters(), lr=cfg.learning_rate, betas=cfg.betas)
    rng = torch.Generator().manual_seed(cfg.seed + 1)
    return TrainState(cfg, gen, disc, opt_g, opt_d, rng)


def make_batch(cfg: GanConfig, subjects) -> tuple[torch.Tensor, list[torch.Tensor]]:
    """Stack subjects into (x, pyramid) tensors; validates the ladder."""
    if not subjects:
        raise ShapeError("empty batch")
    want = (cfg.full_side,) * 3
    for s in subjects:
        if s.scan.shape != want:
            raise ShapeError(f"scan shape {s.scan.shape}, ladder wants {want}")
    x = (torch.from_numpy(np.stack([s.scan for s in subjects]))[:, None]
         .contiguous(memory_format=torch.channels_last_3d))
    pyramid = [
        torch.from_numpy(np.stack([s.pyramid[k] for s in subjects]))
        .contiguous(memory_format=torch.channels_last_3d)
        for k in range(len(subjects[0].pyramid))
    ]
    check_pyramid(cfg, pyramid)
    return x, pyramid


def real_scales(cfg: GanConfig, x: torch.Tensor) -> list[torch.Tensor]:
    """Original sample at every ladder scale, coarse to fine (average
    pooling; the scan is continuous, so plain block means are exact)."""
    levels = [x]
    for _ in range(cfg.num_blocks - 1):
        levels.append(halve(levels[-1]))
    return levels[::-1]


def composite_scales(pyramid, x_scales, fakes) -> list[torch.Tensor]:
    """Embed the original brain into each fake scale: where the brain mask
    is set the output is the original, elsewhere the generator's."""
    out = []
    for gamma, x_k, g_k in zip(pyramid, x_scales, fakes):
        brain = gamma[:, _BRAIN_CH:_BRAIN_CH + 1]
        out.append(torch.where(brain > 0, x_k, g_k))
    return out


def _noise(state: TrainState, batch: int) -> torch.Tensor:
    side = state.cfg.noise_side
    return torch.randn((batch, 1, side, side, side), generator=state.rng)


def train_step(state: TrainState, x: torch.Tensor,
               pyramid) -> tuple[float, float]:
    """One discriminator update then one generator update; returns the two
    losses.  Raises TrainingDiverged on any non-finite loss."""
    cfg = state.cfg
    check_pyramid(cfg, pyramid)
    batch = x.shape[0]
    x_scales = real_scales(cfg, x)  # coarse to fine, like the pyramid
    reals = x_scales[::-1]  # the discriminator reads fine to coarse

    # discriminator pass: fakes detached
    with torch.no_grad():
        fakes = state.generator(_noise(state, batch), pyramid).levels
        fake_v = composite_scales(pyramid, x_scales, fakes)[::-1]
    d_real = state.discriminator(reals, pyramid)
    d_fake = state.discriminator(fake_v, pyramid)
    loss_d, _ = rlsgan_losses(d_real, d_fake)
    state.opt_d.zero_grad()
    loss_d.backward()
    state.opt_d.step()

    # generator pass: gradients flow through the composite and all scales;
    # the discriminator only relays them, so skip its weight gradients
    for p in state.discriminator.parameters():
        p.requires_grad_(False)
    try:
        fakes = state.generator(_noise(state, batch), pyramid).levels
        fake_v = composite_scales(pyramid, x_scales, fakes)[::-1]
        d_fake = state.discriminator(fake_v, pyramid)
        with torch.no_grad():
            d_real = state.discriminator(reals, pyramid)
        _, loss_g = rlsgan_losses(d_real, d_fake)
        state.opt_g.zero_grad()
        loss_g.backward()
        state.opt_g.step()
    finally:
        for p in state.discriminator.parameters():
            p.requires_grad_(True)

    ld, lg = float(loss_d.detach()), float(loss_g.detach())
    if not (np.isfinite(ld) and np.isfinite(lg)):
        raise TrainingDiverged(f"step {state.step}: L_D={ld}, L_G={lg}")
    state.step += 1
    state.history.append((ld, lg))
    return ld, lg


def train(state: TrainState, subjects, steps: int,
          log=None) -> list[tuple[float, float]]:
    """Run steps batches drawn round-robin from a shuffled subject order."""
    if len(subjects) < state.cfg.batch_size:
        raise ShapeError(
            f"{len(subjects)} subjects cannot fill batches of "
            f"{state.cfg.batch_size}")
    order: list[int] = []
    for _ in range(steps):
        while len(order) < state.cfg.batch_size:
            perm = torch.randperm(len(subjects), generator=state.rng)
            order.extend(int(i) for i in perm)
        take, order = order[:state.cfg.batch_size], order[state.cfg.batch_size:]
        x, pyramid = make_batch(state.cfg, [subjects[i] for i in take])
        ld, lg = train_step(state, x, pyramid)
        if log is not None and (state.step % 25 == 0 or state.step == 1):
            log(f"step {state.step:5d}  L_D {ld:8.4f}  L_G {lg:8.4f}")
    return state.history
