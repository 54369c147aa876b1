import pytest
import torch

from remodelgan.blocks import halve
from remodelgan.config import GanConfig
from remodelgan.errors import ShapeError
from remodelgan.model import Discriminator, Generator
from remodelgan.train import real_scales


def ball(side, radius):
    ax = torch.arange(side, dtype=torch.float32) - (side - 1) / 2.0
    d = torch.sqrt(ax[:, None, None] ** 2 + ax[None, :, None] ** 2
                   + ax[None, None, :] ** 2)
    return (d <= radius).float()


def make_pyramid(cfg, batch=1):
    """Structured conditioning: hull ball, brain ball, scaled intensities."""
    levels = []
    for k in range(1, cfg.num_blocks + 1):
        side = cfg.gen_side(k)
        hull = ball(side, 0.45 * side)
        brain = ball(side, 0.25 * side)
        lvl = torch.stack([hull, brain, 0.7 * brain])
        levels.append(lvl[None].expand(batch, -1, -1, -1, -1).clone())
    return levels


def make_noise(cfg, batch=1, seed=0):
    g = torch.Generator().manual_seed(seed)
    side = cfg.noise_side
    return torch.randn((batch, 1, side, side, side), generator=g)


# ----------------------------------------------------------------- generator


def test_generator_ladder_sides():
    cfg = GanConfig()
    torch.manual_seed(0)
    out = Generator(cfg)(make_noise(cfg), make_pyramid(cfg))
    assert [g.shape[-1] for g in out.levels] == [4, 8, 16, 32]
    assert all(g.shape[1] == 1 for g in out.levels)  # single-channel carriers
    assert torch.equal(out.full, out.levels[-1])


def test_generator_outputs_are_intensities():
    cfg = GanConfig()
    torch.manual_seed(0)
    out = Generator(cfg)(make_noise(cfg), make_pyramid(cfg))
    for g in out.levels:
        assert torch.all(torch.isfinite(g))
        assert g.min() >= 0.0 and g.max() <= 1.0


def test_generator_paints_only_inside_the_envelope():
    cfg = GanConfig()
    torch.manual_seed(0)
    pyramid = make_pyramid(cfg)
    out = Generator(cfg)(make_noise(cfg), pyramid)
    for g, lvl in zip(out.levels, pyramid):
        outside = lvl[:, :1] == 0
        assert torch.all(g[outside.expand_as(g)] == 0.0)
        assert g[(~outside).expand_as(g)].abs().sum() > 0  # hull not empty


def test_generator_preserves_batch():
    cfg = GanConfig()
    torch.manual_seed(0)
    out = Generator(cfg)(make_noise(cfg, batch=2), make_pyramid(cfg, batch=2))
    assert all(g.shape[0] == 2 for g in out.levels)


def test_generator_rejects_bad_pyramids():
    cfg = GanConfig()
    torch.manual_seed(0)
    gen = Generator(cfg)
    noise = make_noise(cfg)
    good = make_pyramid(cfg)
    with pytest.raises(ShapeError):
        gen(noise, good[:-1])  # missing a level
    with pytest.raises(ShapeError):
        gen(noise, good[::-1])  # fine-to-coarse ordering
    with pytest.raises(ShapeError):
        gen(noise, [lvl[:, :2] for lvl in good])  # two channels, not three
    with pytest.raises(ShapeError):
        gen(make_noise(cfg, batch=2), good)  # noise batch != pyramid batch
    bad_noise = torch.zeros((1, 1, 4, 4, 4))
    with pytest.raises(ShapeError):
        gen(bad_noise, good)


def test_hull_change_shows_up_outside_the_brain():
    cfg = GanConfig()
    torch.manual_seed(0)
    gen = Generator(cfg)
    noise = make_noise(cfg)
    base = make_pyramid(cfg)
    carved = [lvl.clone() for lvl in base]
    for lvl in carved:
        side = lvl.shape[-1]
        lvl[:, 0, :, :, : max(1, side // 4)] = 0.0  # slice off one hull face
    with torch.no_grad():
        g0 = gen(noise, base).full
        g1 = gen(noise, carved).full
    brain = base[-1][:, 1:2]
    diff = (g0 - g1).abs()
    assert diff[brain == 0].max() > 0.0


# ------------------------------------------------------------- discriminator


def scan_scales(cfg, batch=1):
    side = cfg.full_side
    x = (ball(side, 0.45 * side) * 0.6)[None, None]
    x = x.expand(batch, -1, -1, -1, -1).clone()
    return real_scales(cfg, x)[::-1]  # fine to coarse


def test_discriminator_scalar_output():
    cfg = GanConfig()
    torch.manual_seed(0)
    score = Discriminator(cfg)(scan_scales(cfg, batch=2),
                               make_pyramid(cfg, batch=2))
    assert score.shape == (2,)
    assert torch.all(torch.isfinite(score))


def test_discriminator_rejects_bad_inputs():
    cfg = GanConfig()
    torch.manual_seed(0)
    disc = Discriminator(cfg)
    vols = scan_scales(cfg)
    pyr = make_pyramid(cfg)
    with pytest.raises(ShapeError):
        disc(vols[:-1], pyr)
    with pytest.raises(ShapeError):
        disc(vols[::-1], pyr)  # coarse-to-fine ordering
    with pytest.raises(ShapeError):
        disc(scan_scales(cfg, batch=2), pyr)  # batch mismatch
    with pytest.raises(ShapeError):
        disc(vols, pyr[:-1])


# -------------------------------------------------------------- scale ladder


def pow2_pairs(limit=64):
    side = 2
    while side <= limit:
        full = side
        while full <= limit:
            yield full, side
            full *= 2
        side *= 2


def test_ladder_matches_the_resolution_formulas():
    for full, base in pow2_pairs():
        cfg = GanConfig(full_side=full, base_side=base,
                        widths=(4,) * 6, expansion=2)
        n = cfg.num_blocks
        assert full == base * 2 ** (n - 1)
        for k in range(1, n + 1):
            assert cfg.gen_side(k) == base * 2 ** (k - 1)
            assert cfg.disc_side(k) == full // 2 ** (k - 1)
        torch.manual_seed(0)
        gen, disc = Generator(cfg), Discriminator(cfg)
        assert len(gen.blocks) == len(disc.blocks) == n
        pyr = make_pyramid(cfg)
        with torch.no_grad():
            out = gen(make_noise(cfg), pyr)
            assert [g.shape[-1] for g in out.levels] == \
                [cfg.gen_side(k) for k in range(1, n + 1)]
            vols = [out.full]  # fine first
            for k in range(2, n + 1):
                vols.append(halve(vols[-1]))
            score = disc(vols, pyr)
        assert score.shape == (1,)
        assert torch.isfinite(score).all()
