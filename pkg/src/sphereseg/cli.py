"""Command-line entry points: segment, phantom, eval, serve.

Exit codes: 0 success, 1 bad flags or values, 2 I/O or file-format
problems, 3 seed outside the volume.  Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .evalkit import evaluate_manifest, make_phantom, summarize
from .graphbuild import SegmentationParams, SeedOutOfBounds
from .segmenter import segment
from .volume import (
    GeometryMismatch,
    VolumeFormatError,
    load_volume,
    save_mask,
    save_volume,
    voxel_to_world,
)

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    """argparse with exit code 1 (not 2) for bad flags."""

    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _triple(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"expected three comma-separated values, got {text!r}")
    return tuple(float(p) for p in parts)


def _int_triple(text: str) -> tuple[int, int, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"expected three comma-separated integers, got {text!r}")
    return tuple(int(p) for p in parts)


def _axes(text: str) -> tuple[float, ...]:
    parts = tuple(float(p) for p in text.split(","))
    if len(parts) not in (1, 3):
        raise argparse.ArgumentTypeError(
            "expected one radius or three semi-axes")
    return parts


def _build_parser() -> _Parser:
    p = _Parser(prog="sphereseg",
                description="Single-seed spherical graph-cut segmentation.")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("segment", parents=[], add_help=True,
                        help="segment one seed in a volume")
    ps.add_argument("--input", required=True, help="volume file (.nii/.rvol)")
    seed = ps.add_mutually_exclusive_group(required=True)
    seed.add_argument("--seed", type=_triple, metavar="X,Y,Z",
                      help="seed in world mm")
    seed.add_argument("--seed-voxel", type=_int_triple, metavar="I,J,K",
                      help="seed as voxel indices")
    ps.add_argument("--output", required=True, help="mask file (.nii/.rvol)")
    ps.add_argument("--mesh-level", type=int, default=5)
    ps.add_argument("--nodes-per-ray", type=int, default=50)
    ps.add_argument("--ray-length-mm", type=float, default=50.0)
    ps.add_argument("--delta-r", type=int, default=1)
    ps.add_argument("--report", default=None,
                    help="JSON report path (default: OUTPUT.json)")
    ps.set_defaults(func=_cmd_segment)

    pp = sub.add_parser("phantom", help="write a synthetic volume + truth mask")
    pp.add_argument("--shape", choices=("sphere", "ellipsoid"),
                    default="sphere")
    pp.add_argument("--semi-axes-mm", type=_axes, default=(20.0,),
                    metavar="A[,B,C]")
    pp.add_argument("--dims", type=_int_triple, default=(128, 128, 128))
    pp.add_argument("--spacing", type=_triple, default=(1.0, 1.0, 1.0))
    pp.add_argument("--center", type=_triple, default=None,
                    help="world mm (default: grid center)")
    pp.add_argument("--object-intensity", type=float, default=200.0)
    pp.add_argument("--background-intensity", type=float, default=0.0)
    pp.add_argument("--noise-sigma", type=float, default=0.0)
    pp.add_argument("--rng-seed", type=int, default=0)
    pp.add_argument("--volume", required=True, help="output volume path")
    pp.add_argument("--truth", required=True, help="output truth mask path")
    pp.set_defaults(func=_cmd_phantom)

    pe = sub.add_parser("eval", help="score mask pairs from a manifest")
    pe.add_argument("--manifest", required=True,
                    help="JSON array of {id, auto, ref} paths")
    pe.add_argument("--report", required=True,
                    help="text table path (JSON copy at REPORT.json)")
    pe.set_defaults(func=_cmd_eval)

    pv = sub.add_parser("serve", help="serve the HTTP API for one volume")
    pv.add_argument("--input", required=True, help="volume file (.nii/.rvol)")
    pv.add_argument("--port", type=int, default=8080)
    pv.add_argument("--host", default="127.0.0.1")
    pv.add_argument("--static", default=None, help="viewer asset directory")
    pv.set_defaults(func=_cmd_serve)
    return p


def _cmd_segment(args) -> int:
    vol = load_volume(args.input)
    if args.seed is not None:
        seed = args.seed
    else:
        seed = tuple(voxel_to_world(vol, args.seed_voxel))
    params = SegmentationParams(
        mesh_level=args.mesh_level,
        nodes_per_ray=args.nodes_per_ray,
        ray_length_mm=args.ray_length_mm,
        delta_r=args.delta_r,
    )
    result = segment(vol, seed, params)
    save_mask(args.output, result.mask)
    report = result.report()
    report["input"] = str(args.input)
    report["output"] = str(args.output)
    report_path = args.report or f"{args.output}.json"
    Path(report_path).write_text(json.dumps(report, indent=2) + "\n",
                                 encoding="utf-8")
    print(f"total {result.timings_ms['total']:.1f} ms "
          f"({report['mask_voxels']} voxels, "
          f"{report['mask_volume_cm3']:.2f} cm3)")
    return 0


def _cmd_phantom(args) -> int:
    vol, truth = make_phantom(
        shape=args.shape,
        semi_axes_mm=args.semi_axes_mm,
        center=args.center,
        dims=args.dims,
        spacing=args.spacing,
        object_intensity=args.object_intensity,
        background_intensity=args.background_intensity,
        noise_sigma=args.noise_sigma,
        rng_seed=args.rng_seed,
    )
    save_volume(args.volume, vol)
    save_mask(args.truth, truth)
    print(f"wrote {args.volume} and {args.truth} "
          f"({truth.count()} truth voxels)")
    return 0


def _cmd_eval(args) -> int:
    cases = evaluate_manifest(args.manifest)
    report = summarize(cases)
    text = report.render_text()
    Path(args.report).write_text(text, encoding="utf-8")
    Path(f"{args.report}.json").write_text(report.to_json() + "\n",
                                           encoding="utf-8")
    print(text, end="")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.input, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:  # argparse exits for bad flags and --help
        return int(err.code or 0)
    try:
        return args.func(args)
    except SeedOutOfBounds as err:
        print(f"sphereseg: seed error: {err}", file=sys.stderr)
        return 3
    except GeometryMismatch as err:
        print(f"sphereseg: {err}", file=sys.stderr)
        return 1
    except VolumeFormatError as err:
        print(f"sphereseg: format error: {err}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as err:
        print(f"sphereseg: i/o error: {err}", file=sys.stderr)
        return 2
    except ValueError as err:
        print(f"sphereseg: invalid value: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
