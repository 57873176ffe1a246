"""Embedded HTTP service exposing one loaded volume and the segmenter.

The server holds a single immutable volume for its whole lifetime.  Reads
(metadata, slices) are answered concurrently; segmentation requests are
serialized — one job runs at a time and at most four more may wait, any
further POST is answered 429.

Mask transport is run-length encoded over the x-fastest flat voxel order
(index i + nx*(j + ny*k)): alternating run lengths starting with a
zero-run, so [3, 5, 2] means three background voxels, five object voxels,
two background voxels.  The runs always sum to nx*ny*nz.
"""

from __future__ import annotations

import asyncio
import io
import itertools
import time
from dataclasses import asdict, dataclass

import numpy as np
from fastapi import FastAPI, HTTPException, Response
from pydantic import BaseModel, Field

from .graphbuild import SegmentationParams, SeedOutOfBounds
from .segmenter import segment
from .volume import Mask3D, Volume3D, extract_slice, load_volume

__all__ = ["create_app", "encode_rle", "decode_rle", "JobRecord"]

_MAX_PENDING = 5  # one running job plus a FIFO queue of four


def encode_rle(mask: Mask3D) -> list[int]:
    """Alternating run lengths over the flat voxel order, zero-run first."""
    flat = mask.to_flat()
    if flat.size == 0:
        return []
    changes = np.flatnonzero(np.diff(flat)) + 1
    bounds = np.concatenate([[0], changes, [flat.size]])
    runs = np.diff(bounds)
    if flat[0]:  # encoding starts with a (possibly empty) zero-run
        runs = np.concatenate([[0], runs])
    return [int(r) for r in runs]


def decode_rle(runs, num_voxels: int) -> np.ndarray:
    """Flat bool array from alternating run lengths (zero-run first)."""
    runs = np.asarray(list(runs), dtype=np.int64)
    if runs.size and runs.min() < 0:
        raise ValueError("run lengths must be nonnegative")
    if int(runs.sum()) != num_voxels:
        raise ValueError(
            f"run lengths sum to {int(runs.sum())}, expected {num_voxels}"
        )
    values = np.arange(runs.size, dtype=np.int64) % 2 == 1
    return np.repeat(values, runs)


@dataclass
class JobRecord:
    """One segmentation request handled by the server."""

    job_id: str
    input_path: str
    seed_mm: tuple
    params: SegmentationParams
    status: str  # done | failed
    sidecar: dict
    created_at: float


class SegmentRequest(BaseModel):
    seed_mm: list[float] = Field(min_length=3, max_length=3)
    mesh_level: int = 5
    nodes_per_ray: int = 50
    ray_length_mm: float = 50.0
    delta_r: int = 1


def create_app(volume_path: str, static_dir: str | None = None) -> FastAPI:
    """Build the API app around one volume loaded from ``volume_path``."""
    vol: Volume3D = load_volume(volume_path)
    vmin = float(vol.data.min())
    vmax = float(vol.data.max())

    app = FastAPI(title="sphereseg service")
    app.state.volume = vol
    app.state.jobs: dict[str, JobRecord] = {}
    job_ids = itertools.count(1)
    gate = asyncio.Semaphore(1)
    pending = {"n": 0}

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/api/meta")
    def meta() -> dict:
        return {
            "dims": list(vol.dims),
            "spacing": list(vol.spacing),
            "origin": list(vol.origin),
            "intensity_min": vmin,
            "intensity_max": vmax,
        }

    @app.get("/api/slice/{axis}/{index}")
    def slice_png(axis: str, index: int, wc: float | None = None,
                  ww: float | None = None) -> Response:
        if wc is None or ww is None:
            wc = (vmin + vmax) / 2.0
            ww = max(vmax - vmin, 1.0)
        if ww <= 0:
            raise HTTPException(422, "window width must be positive")
        try:
            img = extract_slice(vol, axis, index, window=(wc, ww))
        except (ValueError, IndexError) as err:
            raise HTTPException(422, str(err)) from None
        from PIL import Image

        buf = io.BytesIO()
        Image.fromarray(img, mode="L").save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.post("/api/segment")
    async def segment_endpoint(req: SegmentRequest) -> dict:
        try:
            params = SegmentationParams(
                mesh_level=req.mesh_level,
                nodes_per_ray=req.nodes_per_ray,
                ray_length_mm=req.ray_length_mm,
                delta_r=req.delta_r,
            )
        except ValueError as err:
            raise HTTPException(422, str(err)) from None
        if not vol.contains_world(req.seed_mm):
            raise HTTPException(
                422, f"seed {req.seed_mm} is outside the volume")
        if pending["n"] >= _MAX_PENDING:
            raise HTTPException(429, "segmentation queue is full")
        pending["n"] += 1
        job_id = f"job-{next(job_ids)}"
        try:
            async with gate:
                try:
                    result = await asyncio.to_thread(
                        segment, vol, tuple(req.seed_mm), params)
                except SeedOutOfBounds as err:
                    raise HTTPException(422, str(err)) from None
                except Exception as err:
                    app.state.jobs[job_id] = JobRecord(
                        job_id, volume_path, tuple(req.seed_mm), params,
                        "failed", {"error": str(err)}, time.time())
                    raise HTTPException(
                        500, f"segmentation failed: {err}") from None
        finally:
            pending["n"] -= 1
        sidecar = result.report()
        app.state.jobs[job_id] = JobRecord(
            job_id, volume_path, tuple(req.seed_mm), params, "done",
            sidecar, time.time())
        return {
            "job_id": job_id,
            "seed_mm": list(result.seed),
            "params": asdict(params),
            "objective": sidecar["objective"],
            "timings_ms": sidecar["timings_ms"],
            "mask_voxels": sidecar["mask_voxels"],
            "volume_cm3": sidecar["mask_volume_cm3"],
            "mask_rle": encode_rle(result.mask),
        }

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="viewer")

    return app
