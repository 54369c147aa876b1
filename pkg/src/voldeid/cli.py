"""Command-line frontend.

Subcommands cover the whole pipeline: phantom generation, surface probing,
hull construction, de-identification (with transform/pyramid export and a
file-based generator exchange), the identification and segmentation
evaluations, and a stage timing table.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .errors import VoldeidError
from .evaluate import harness_params, run_identification, segmentation_impact
from .hull import TriMesh, convex_hull, voxelize_hull
from .phantom import PhantomParams, generate_phantom, generate_pool
from .pipeline import (
    DeidMethod,
    DeidParams,
    composite,
    deidentify,
    reference_remodel,
    run_transform,
)
from .surface import SurfaceParams, sample_surface_points, surface_representation
from .transform import build_privacy_transform, build_pyramid
from .volume import MASK, read_volume, write_volume

_METHODS = {m.value: m for m in DeidMethod}


def _surface_params(args, seed: int) -> SurfaceParams:
    return SurfaceParams(num_rotations=args.rotations, delta=args.delta,
                         seed=seed, point_cap=args.point_cap)


def _add_surface_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rotations", type=int, default=64,
                   help="number of probing rotations (default 64)")
    p.add_argument("--delta", type=float, default=None,
                   help="binarization threshold (default: Otsu)")
    p.add_argument("--point-cap", type=int, default=10000,
                   help="max sampled surface points (default 10000)")


def _strip_vol(path: str) -> str:
    return path[:-4] if path.endswith(".vol") else path


def _write_gamma(g, base: str) -> None:
    write_volume(g.hull, base + ".hull.vol")
    write_volume(g.brain, base + ".brain.vol")
    write_volume(g.brain_intensities, base + ".brainint.vol")


def _write_off(mesh: TriMesh, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{len(mesh.vertices)} {len(mesh.triangles)} 0\n")
        for v in mesh.vertices:
            fh.write(f"{v[0]:g} {v[1]:g} {v[2]:g}\n")
        for t in mesh.triangles:
            fh.write(f"3 {t[0]} {t[1]} {t[2]}\n")


def _cmd_phantom(args) -> int:
    params = PhantomParams(side=args.side, vary_head_size=args.vary_head_size)
    p = generate_phantom(args.seed, params)
    write_volume(p.scan, args.out)
    write_volume(p.brain, args.brain_out)
    print(f"phantom seed={args.seed} side={args.side} -> {args.out}, {args.brain_out}")
    return 0


def _cmd_surface(args) -> int:
    x = read_volume(args.infile)
    z = surface_representation(x, _surface_params(args, args.seed))
    write_volume(z, args.out)
    print(f"surface representation -> {args.out}")
    return 0


def _cmd_hull(args) -> int:
    x = read_volume(args.infile)
    z = surface_representation(x, _surface_params(args, args.seed))
    pts = sample_surface_points(z, seed=args.seed, cap=args.point_cap)
    mesh = convex_hull(pts)
    if args.off:
        _write_off(mesh, args.off)
    if args.triangles == "all":
        count = None
    else:
        try:
            count = int(args.triangles)
        except ValueError:
            raise VoldeidError(f"--triangles must be an integer or 'all', "
                               f"got {args.triangles!r}") from None
    mask = voxelize_hull(mesh, x.side, n_triangles=count, seed=args.seed)
    write_volume(mask, args.out)
    print(f"hull: {len(mesh.vertices)} vertices, {len(mesh.triangles)} triangles, "
          f"{int(mask.data.sum())} voxels -> {args.out}")
    return 0


def _cmd_deid(args) -> int:
    x = read_volume(args.infile)
    b = read_volume(args.brain, kind=MASK)
    method = _METHODS[args.method]
    if args.generator_output and method is not DeidMethod.REMODEL:
        raise VoldeidError("--generator-output only applies to --method remodel")
    params = DeidParams(surface=_surface_params(args, args.seed),
                        shear_pad=args.pad)
    if args.generator_output:
        fake = read_volume(args.generator_output)
        if fake.dims != x.dims:
            raise VoldeidError(
                f"generator output dims {fake.dims} do not match scan {x.dims}")
        y = composite(x, b, fake)
    else:
        y = deidentify(x, b, method, params, seed=args.seed)
    write_volume(y, args.out)
    base = _strip_vol(args.out)
    if args.emit_gamma or args.emit_pyramid:
        g = run_transform(x, b, params, args.seed)
        if args.emit_gamma:
            _write_gamma(g, base)
        if args.emit_pyramid:
            pyr = build_pyramid(g, args.emit_pyramid, seed=args.seed)
            for k, level in enumerate(pyr.levels):
                _write_gamma(level, f"{base}.{k}")
    print(f"{args.method} -> {args.out}")
    return 0


def _parse_methods(spec: str) -> list[DeidMethod]:
    names = [s.strip() for s in spec.split(",") if s.strip()]
    bad = [n for n in names if n not in _METHODS]
    if bad:
        raise VoldeidError(f"unknown methods: {', '.join(bad)}")
    return [_METHODS[n] for n in names]


def _cmd_eval_id(args) -> int:
    pool = generate_pool(args.subjects, PhantomParams(side=args.side),
                         seed=args.seed)
    report = run_identification(pool, _parse_methods(args.methods),
                                n_trials=args.trials, seed=args.seed)
    with open(args.out, "w") as fh:
        json.dump(report, fh, indent=2)
    for name, row in report["methods"].items():
        print(f"{name:12s} rate={row['rate']:.3f} +-{row['ci_sd']:.3f} "
              f"binom_p={row['binomial_p']:.3f} ks={row['ks_stat']:.3f}")
    print(f"report -> {args.out}")
    return 0


def _cmd_eval_seg(args) -> int:
    pool = generate_pool(args.subjects, PhantomParams(side=args.side),
                         seed=args.seed)
    methods = _parse_methods(args.methods)
    params = harness_params()
    report = {"subjects": args.subjects, "region": args.region, "methods": {}}
    for method in methods:
        rows = []
        for p in pool:
            y = deidentify(p.scan, p.brain, method, params, seed=args.seed)
            rows.append(segmentation_impact(p.scan, y, p.brain, method,
                                            region=args.region))
        agg = {}
        for cls in rows[0]["classes"]:
            agg[cls] = {
                "dice": float(np.mean([r["classes"][cls]["dice"] for r in rows])),
                "iou": float(np.mean([r["classes"][cls]["iou"] for r in rows])),
            }
        report["methods"][method.value] = agg
        line = " ".join(f"{cls}: dice={v['dice']:.3f} iou={v['iou']:.3f}"
                        for cls, v in agg.items())
        print(f"{method.value:12s} {line}")
    with open(args.out, "w") as fh:
        json.dump(report, fh, indent=2)
    print(f"report -> {args.out}")
    return 0


def _cmd_bench(args) -> int:
    p = generate_phantom(args.seed, PhantomParams(side=args.side))
    sp = SurfaceParams(num_rotations=args.rotations, delta=0.25, seed=args.seed)
    stages = []

    t0 = time.perf_counter()
    z = surface_representation(p.scan, sp)
    stages.append(("surface representation", time.perf_counter() - t0))

    t0 = time.perf_counter()
    pts = sample_surface_points(z, seed=args.seed, cap=sp.point_cap)
    mesh = convex_hull(pts)
    stages.append(("convex hull", time.perf_counter() - t0))

    t0 = time.perf_counter()
    voxelize_hull(mesh, p.scan.side, seed=args.seed)
    stages.append(("hull voxelization", time.perf_counter() - t0))

    t0 = time.perf_counter()
    g = build_privacy_transform(p.scan, p.brain, sp)
    stages.append(("privacy transform", time.perf_counter() - t0))

    t0 = time.perf_counter()
    reference_remodel(g, seed=args.seed)
    stages.append(("reference remodel", time.perf_counter() - t0))

    t0 = time.perf_counter()
    deidentify(p.scan, p.brain, DeidMethod.REMODEL,
               DeidParams(surface=sp), seed=args.seed)
    stages.append(("deidentify (remodel)", time.perf_counter() - t0))

    width = max(len(name) for name, _ in stages)
    print(f"side={args.side} rotations={args.rotations}")
    for name, dt in stages:
        print(f"  {name:<{width}}  {dt * 1000:8.1f} ms")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="voldeid",
                                 description="volumetric de-identification toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="generate a synthetic head phantom")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--side", type=int, default=64)
    p.add_argument("--vary-head-size", action="store_true")
    p.add_argument("--out", required=True, help="scan VOL1 path")
    p.add_argument("--brain-out", required=True, help="brain mask VOL1 path")
    p.set_defaults(func=_cmd_phantom)

    p = sub.add_parser("surface", help="compute the surface representation")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_surface_options(p)
    p.set_defaults(func=_cmd_surface)

    p = sub.add_parser("hull", help="build and voxelize the surface convex hull")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True, help="hull mask VOL1 path")
    p.add_argument("--off", default=None, help="also write the mesh as ASCII OFF")
    p.add_argument("--triangles", default="100",
                   help="clipping triangle count or 'all' (default 100)")
    p.add_argument("--seed", type=int, default=0)
    _add_surface_options(p)
    p.set_defaults(func=_cmd_hull)

    p = sub.add_parser("deid", help="de-identify a scan")
    p.add_argument("--method", required=True, choices=sorted(_METHODS))
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--brain", required=True, help="brain mask VOL1 path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--pad", type=int, default=2, help="quickshear plane offset")
    p.add_argument("--emit-gamma", action="store_true",
                   help="also write the privacy transform triple")
    p.add_argument("--emit-pyramid", type=int, default=None, metavar="S_MIN",
                   help="also write pyramid triples down to side S_MIN")
    p.add_argument("--generator-output", default=None,
                   help="composite this generator volume instead of the "
                        "built-in remodeler")
    _add_surface_options(p)
    p.set_defaults(func=_cmd_deid)

    p = sub.add_parser("eval-id", help="run the identification attack")
    p.add_argument("--methods", default="original,black,remodel,skullstrip")
    p.add_argument("--subjects", type=int, default=100)
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--side", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="JSON report path")
    p.set_defaults(func=_cmd_eval_id)

    p = sub.add_parser("eval-seg", help="measure segmentation impact")
    p.add_argument("--methods", default="original,remodel,skullstrip")
    p.add_argument("--subjects", type=int, default=5)
    p.add_argument("--side", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--region", choices=("brain", "head"), default="brain")
    p.add_argument("--out", required=True, help="JSON report path")
    p.set_defaults(func=_cmd_eval_seg)

    p = sub.add_parser("bench", help="time the pipeline stages")
    p.add_argument("--side", type=int, default=64)
    p.add_argument("--rotations", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_bench)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VoldeidError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
