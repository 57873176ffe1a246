import { describe, expect, it } from "vitest";

import type { SegmentResponse } from "../src/api.js";
import type { VolumeMeta } from "../src/geometry.js";
import type { Segmentation, ViewerState } from "../src/state.js";
import {
  canRun,
  clickSeed,
  failRun,
  finishRun,
  initialState,
  paramsError,
  setAxis,
  setParams,
  setSlice,
  setWindow,
  startRun,
  withMeta,
} from "../src/state.js";

const META: VolumeMeta = {
  dims: [16, 12, 10],
  spacing: [1, 1.5, 2],
  origin: [0, 0, 0],
  intensity_min: 0,
  intensity_max: 200,
};

function ready(): ViewerState {
  return withMeta(initialState(), META);
}

function fakeSegmentation(jobId: string, size = 16 * 12 * 10): Segmentation {
  const response: SegmentResponse = {
    job_id: jobId,
    seed_mm: [8, 9, 10],
    params: { mesh_level: 5, nodes_per_ray: 50, ray_length_mm: 50, delta_r: 1 },
    objective: 123.4,
    timings_ms: { total: 900 },
    mask_voxels: 3,
    volume_cm3: 0.009,
    mask_rle: [0, 3, size - 3],
  };
  const mask = new Uint8Array(size);
  mask.fill(1, 0, 3);
  return { response, mask };
}

describe("metadata adoption", () => {
  it("starts on the middle axial slice with a full-range window", () => {
    const s = ready();
    expect(s.axis).toBe("axial");
    expect(s.sliceIndex).toBe(5); // floor(nz / 2)
    expect(s.windowCenter).toBe(100);
    expect(s.windowWidth).toBe(200);
  });

  it("keeps a sane window for a constant volume", () => {
    const s = withMeta(initialState(), { ...META, intensity_min: 7, intensity_max: 7 });
    expect(s.windowWidth).toBeGreaterThanOrEqual(1);
  });
});

describe("navigation", () => {
  it("clamps the slice index to the extent of the current axis", () => {
    const s = ready();
    expect(setSlice(s, -5).sliceIndex).toBe(0);
    expect(setSlice(s, 9).sliceIndex).toBe(9);
    expect(setSlice(s, 99).sliceIndex).toBe(9); // nz - 1
    expect(setSlice(s, 3.6).sliceIndex).toBe(4);
  });

  it("recenters when the axis changes and respects the new extent", () => {
    const s = setAxis(ready(), "sagittal");
    expect(s.axis).toBe("sagittal");
    expect(s.sliceIndex).toBe(8); // floor(nx / 2)
    expect(setSlice(s, 99).sliceIndex).toBe(15); // nx - 1
  });

  it("is a no-op when the axis is unchanged", () => {
    const s = ready();
    expect(setAxis(s, "axial")).toBe(s);
  });
});

describe("window/level", () => {
  it("never mutates the segmentation result", () => {
    const seg = fakeSegmentation("job-1");
    const before: ViewerState = { ...ready(), segmentation: seg };
    const maskBytes = Array.from(seg.mask);

    const after = setWindow(before, 40, 80);

    expect(after.windowCenter).toBe(40);
    expect(after.windowWidth).toBe(80);
    expect(after.segmentation).toBe(seg); // same reference, untouched
    expect(Array.from(seg.mask)).toEqual(maskBytes);
    expect(after.seed).toBe(before.seed);
  });

  it("keeps the width positive", () => {
    expect(setWindow(ready(), 50, 0).windowWidth).toBeGreaterThan(0);
    expect(setWindow(ready(), 50, -10).windowWidth).toBeGreaterThan(0);
  });
});

describe("seed placement", () => {
  it("maps a click through the slice geometry to world mm", () => {
    const s = clickSeed(ready(), 3, 7); // axial slice 5, row=j=3, col=i=7
    expect(s.seed).not.toBeNull();
    expect(s.seed?.voxel).toEqual([7, 3, 5]);
    expect(s.seed?.mm).toEqual([7 * 1, 3 * 1.5, 5 * 2]);
  });

  it("keeps a single seed: re-click replaces the previous marker", () => {
    const first = clickSeed(ready(), 3, 7);
    const second = clickSeed(first, 8, 2);
    expect(second.seed?.voxel).toEqual([2, 8, 5]);
    expect(second.seed).not.toBe(first.seed);
  });

  it("ignores clicks outside the image area", () => {
    const s = ready();
    expect(clickSeed(s, -1, 0).seed).toBeNull();
    expect(clickSeed(s, 0, -1).seed).toBeNull();
    expect(clickSeed(s, 12, 0).seed).toBeNull(); // rows = ny = 12
    expect(clickSeed(s, 0, 16).seed).toBeNull(); // cols = nx = 16
    expect(clickSeed(s, 1.5, 2).seed).toBeNull();
  });

  it("ignores clicks before metadata arrives or while a run is pending", () => {
    expect(clickSeed(initialState(), 1, 1).seed).toBeNull();
    const running = { ...clickSeed(ready(), 3, 3), running: true };
    const after = clickSeed(running, 5, 5);
    expect(after.seed?.voxel).toEqual([3, 3, 5]); // unchanged
  });

  it("uses the current axis for the mapping", () => {
    const sag = setAxis(ready(), "sagittal"); // slice i = 8; row=k, col=j
    const s = clickSeed(sag, 2, 9);
    expect(s.seed?.voxel).toEqual([8, 9, 2]);
    const cor = setAxis(ready(), "coronal"); // slice j = 6; row=k, col=i
    const c = clickSeed(cor, 4, 11);
    expect(c.seed?.voxel).toEqual([11, 6, 4]);
  });
});

describe("parameter validation", () => {
  it("accepts the defaults", () => {
    expect(paramsError(ready().params)).toBeNull();
  });

  it.each([
    [{ mesh_level: -1 }, /mesh level/],
    [{ mesh_level: 8 }, /mesh level/],
    [{ mesh_level: 2.5 }, /mesh level/],
    [{ nodes_per_ray: 1 }, /nodes per ray/],
    [{ ray_length_mm: 0 }, /ray length/],
    [{ ray_length_mm: -3 }, /ray length/],
    [{ delta_r: -1 }, /delta/],
    [{ delta_r: 50 }, /delta/], // nodes_per_ray default 50 -> max 49
  ] as const)("rejects %o", (patch, pattern) => {
    const s = setParams(ready(), patch);
    expect(paramsError(s.params)).toMatch(pattern);
  });

  it("gates canRun on parameter validity", () => {
    const seeded = clickSeed(ready(), 3, 3);
    expect(canRun(seeded)).toBe(true);
    expect(canRun(setParams(seeded, { delta_r: -1 }))).toBe(false);
  });
});

describe("run lifecycle", () => {
  it("cannot run without a seed (button disabled, no request sent)", () => {
    const s = ready();
    expect(canRun(s)).toBe(false);
    expect(startRun(s)).toBe(s); // refuses to start
  });

  it("cannot run before metadata arrives", () => {
    expect(canRun(initialState())).toBe(false);
  });

  it("locks while pending and clears stale overlay and banner on start", () => {
    const seeded = {
      ...clickSeed(ready(), 3, 3),
      segmentation: fakeSegmentation("job-old"),
      banner: "old error",
    };
    const started = startRun(seeded);
    expect(started.running).toBe(true);
    expect(started.segmentation).toBeNull(); // stale overlay cleared
    expect(started.banner).toBeNull();
    expect(canRun(started)).toBe(false); // single in-flight request
    expect(startRun(started)).toBe(started);
  });

  it("installs the new segmentation on finish", () => {
    const started = startRun(clickSeed(ready(), 3, 3));
    const seg = fakeSegmentation("job-2");
    const done = finishRun(started, seg);
    expect(done.running).toBe(false);
    expect(done.segmentation).toBe(seg);
    expect(done.banner).toBeNull();
    expect(canRun(done)).toBe(true);
  });

  it("re-run replaces the previous overlay", () => {
    const first = finishRun(startRun(clickSeed(ready(), 3, 3)), fakeSegmentation("job-1"));
    const moved = clickSeed(first, 8, 8);
    const second = finishRun(startRun(moved), fakeSegmentation("job-2"));
    expect(second.segmentation?.response.job_id).toBe("job-2");
    expect(second.segmentation).not.toBe(first.segmentation);
  });

  it("surfaces failures as a banner and unlocks the button", () => {
    const started = startRun(clickSeed(ready(), 3, 3));
    const failed = failRun(started, "server busy: segmentation queue is full");
    expect(failed.running).toBe(false);
    expect(failed.banner).toMatch(/queue is full/);
    expect(failed.segmentation).toBeNull();
    expect(canRun(failed)).toBe(true);
  });
});
