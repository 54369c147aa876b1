"""Command-line frontend: config scaffolding, training, generation.

Data layout: for each subject ``<stem>.vol`` (full-resolution scan) next
to ``<stem>.deid.{k}.{hull,brain,brainint}.vol`` conditioning triples —
exactly what ``voldeid phantom`` followed by ``voldeid deid --emit-pyramid``
leaves behind.  Generated volumes are written as VOL1 for
``voldeid deid --generator-output``.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import asdict
from pathlib import Path

import torch

from .config import GanConfig, load_config, save_config
from .errors import TrainerError
from .model import Generator
from .train import Subject, make_state, train
from .volio import read_pyramid, read_vol, write_vol

_PYR_MARK = ".deid.0.hull.vol"


def load_subjects(data_dir: str, cfg: GanConfig) -> list[Subject]:
    root = Path(data_dir)
    stems = sorted(p.name[:-len(_PYR_MARK)] for p in root.glob("*" + _PYR_MARK))
    if not stems:
        raise TrainerError(f"no subjects under {data_dir} "
                           f"(expecting <stem>.deid.0.hull.vol files)")
    subjects = []
    for stem in stems:
        scan = read_vol(root / f"{stem}.vol")
        pyramid = read_pyramid(str(root / f"{stem}.deid"), cfg.num_blocks,
                               cfg.base_side)
        subjects.append(Subject(scan, pyramid))
    return subjects


def _cmd_init_config(args) -> int:
    save_config(GanConfig(), args.out)
    print(f"default config -> {args.out}")
    return 0


def _cmd_train(args) -> int:
    cfg = load_config(args.config) if args.config else GanConfig()
    if args.steps is not None:
        from dataclasses import replace
        cfg = replace(cfg, steps=args.steps)
    subjects = load_subjects(args.data, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    state = make_state(cfg)
    history = train(state, subjects, cfg.steps, log=print)

    torch.save({"config": asdict(cfg),
                "generator": state.generator.state_dict(),
                "discriminator": state.discriminator.state_dict(),
                "step": state.step},
               out / "checkpoint.pt")
    save_config(cfg, out / "train.cfg")
    with open(out / "losses.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "loss_d", "loss_g"])
        w.writerows((i + 1, ld, lg) for i, (ld, lg) in enumerate(history))
    print(f"{state.step} steps, {len(subjects)} subjects -> {out}")
    return 0


def _cmd_generate(args) -> int:
    snap = torch.load(args.checkpoint, weights_only=True)
    cfg = GanConfig(**{k: tuple(v) if isinstance(v, list) else v
                       for k, v in snap["config"].items()})
    gen = Generator(cfg)
    gen.load_state_dict(snap["generator"])
    gen.eval()

    levels = read_pyramid(args.pyramid_base, cfg.num_blocks, cfg.base_side)
    pyramid = [torch.from_numpy(lvl)[None] for lvl in levels]
    rng = torch.Generator().manual_seed(args.seed)
    side = cfg.noise_side
    noise = torch.randn((1, 1, side, side, side), generator=rng)
    with torch.no_grad():
        fake = gen(noise, pyramid).full
    write_vol(fake[0, 0].numpy(), args.out)
    print(f"generated {cfg.full_side}^3 volume -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="remodelgan",
        description="toy-scale conditional volumetric GAN trainer")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init-config", help="write the default config file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_init_config)

    p = sub.add_parser("train", help="train on a directory of subjects")
    p.add_argument("--data", required=True, help="subject directory")
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--steps", type=int, default=None,
                   help="override the configured step count")
    p.add_argument("--out", required=True, help="run output directory")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("generate",
                       help="synthesize one volume from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--pyramid-base", required=True,
                   help="conditioning files <base>.{k}.{channel}.vol")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output VOL1 path")
    p.set_defaults(func=_cmd_generate)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TrainerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
