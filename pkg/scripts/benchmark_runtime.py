#!/usr/bin/env python3
"""Time the seed-to-mask pipeline per mesh level on a synthetic volume.

Reports per-stage and total wall times (best of N repeats after a warm-up
run that absorbs one-time kernel compilation).

Usage:
    python3 scripts/benchmark_runtime.py [--levels 4 5 6] [--repeats 3]
"""

from __future__ import annotations

import argparse
import time

from sphereseg import SegmentationParams, make_phantom, mesh_at_level, segment

STAGES = ("mesh", "sample", "costs", "graph", "mincut", "voxelize", "total")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=int, nargs="+", default=[4, 5, 6])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--dims", type=int, default=128)
    args = ap.parse_args(argv)

    dims = (args.dims, args.dims, args.dims)
    center = tuple((d - 1) / 2.0 for d in dims)
    vol, _ = make_phantom("sphere", 20.0, dims=dims)

    # warm-up: compile/load the jitted flow kernels outside the timings
    segment(vol, center, SegmentationParams(mesh_level=2, nodes_per_ray=10,
                                            ray_length_mm=30.0))

    header = f"{'level':>5} {'rays':>6} " + " ".join(
        f"{s + ' ms':>12}" for s in STAGES)
    print(header)
    print("-" * len(header))
    for level in args.levels:
        params = SegmentationParams(mesh_level=level)
        best: dict[str, float] = {}
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            res = segment(vol, center, params)
            wall_ms = (time.perf_counter() - t0) * 1000.0
            timings = dict(res.timings_ms, total=wall_ms)
            for s in STAGES:
                best[s] = min(best.get(s, float("inf")), timings[s])
        rays = mesh_at_level(level).vertices.shape[0]
        print(f"{level:>5} {rays:>6} "
              + " ".join(f"{best[s]:>12.1f}" for s in STAGES))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
