/**
 * Viewer state and its pure transitions.
 *
 * All functions return a new state object; nothing here touches the DOM or
 * the network.  Invariants the transitions enforce:
 *   - at most one seed: a new click replaces the previous one
 *   - at most one segmentation request in flight (`running` gates the run)
 *   - window/level and slice navigation never touch the segmentation result
 */

import type { SegmentParams, SegmentResponse } from "./api.js";
import { DEFAULT_PARAMS } from "./api.js";
import type { Axis, VolumeMeta } from "./geometry.js";
import { pixelToWorld, sliceExtent } from "./geometry.js";

export interface Seed {
  /** World coordinates in mm, what the API consumes. */
  mm: [number, number, number];
  /** Voxel the click landed on, for crosshair projection. */
  voxel: [number, number, number];
}

export interface Segmentation {
  response: SegmentResponse;
  /** Decoded flat mask, x-fastest, one byte per voxel. */
  mask: Uint8Array;
}

export interface ViewerState {
  meta: VolumeMeta | null;
  axis: Axis;
  sliceIndex: number;
  windowCenter: number;
  windowWidth: number;
  seed: Seed | null;
  params: SegmentParams;
  running: boolean;
  segmentation: Segmentation | null;
  /** User-facing error/status line; null when nothing to show. */
  banner: string | null;
}

export function initialState(): ViewerState {
  return {
    meta: null,
    axis: "axial",
    sliceIndex: 0,
    windowCenter: 128,
    windowWidth: 256,
    seed: null,
    params: { ...DEFAULT_PARAMS },
    running: false,
    segmentation: null,
    banner: null,
  };
}

/** Adopt volume metadata: jump to the middle slice, window over full range. */
export function withMeta(state: ViewerState, meta: VolumeMeta): ViewerState {
  const extent = sliceExtent(meta.dims, state.axis);
  return {
    ...state,
    meta,
    sliceIndex: Math.floor(extent / 2),
    windowCenter: (meta.intensity_min + meta.intensity_max) / 2,
    windowWidth: Math.max(meta.intensity_max - meta.intensity_min, 1),
  };
}

function clampIndex(index: number, extent: number): number {
  return Math.min(Math.max(Math.round(index), 0), extent - 1);
}

export function setAxis(state: ViewerState, axis: Axis): ViewerState {
  if (axis === state.axis) {
    return state;
  }
  const extent = state.meta ? sliceExtent(state.meta.dims, axis) : 1;
  return { ...state, axis, sliceIndex: Math.floor(extent / 2) };
}

export function setSlice(state: ViewerState, index: number): ViewerState {
  const extent = state.meta ? sliceExtent(state.meta.dims, state.axis) : 1;
  return { ...state, sliceIndex: clampIndex(index, extent) };
}

/** Change display window only; the segmentation result is left untouched. */
export function setWindow(state: ViewerState, center: number, width: number): ViewerState {
  return {
    ...state,
    windowCenter: center,
    windowWidth: Math.max(width, 1e-6),
  };
}

export function setParams(state: ViewerState, params: Partial<SegmentParams>): ViewerState {
  return { ...state, params: { ...state.params, ...params } };
}

/** Validation mirroring the server's parameter bounds; null when valid. */
export function paramsError(params: SegmentParams): string | null {
  const { mesh_level, nodes_per_ray, ray_length_mm, delta_r } = params;
  if (!Number.isInteger(mesh_level) || mesh_level < 0 || mesh_level > 7) {
    return "mesh level must be an integer in [0, 7]";
  }
  if (!Number.isInteger(nodes_per_ray) || nodes_per_ray < 2) {
    return "nodes per ray must be an integer >= 2";
  }
  if (!(ray_length_mm > 0)) {
    return "ray length must be > 0 mm";
  }
  if (!Number.isInteger(delta_r) || delta_r < 0 || delta_r > nodes_per_ray - 1) {
    return "smoothness delta must be an integer in [0, nodes per ray - 1]";
  }
  return null;
}

/**
 * Place the seed at a clicked pixel.  Clicks outside the image or before
 * metadata arrives are ignored; the previous seed (if any) is replaced.
 */
export function clickSeed(state: ViewerState, row: number, col: number): ViewerState {
  if (!state.meta || state.running) {
    return state;
  }
  const [nx, ny, nz] = state.meta.dims;
  const shapes: Record<Axis, [number, number]> = {
    axial: [ny, nx],
    sagittal: [nz, ny],
    coronal: [nz, nx],
  };
  const [rows, cols] = shapes[state.axis];
  if (!Number.isInteger(row) || !Number.isInteger(col)) {
    return state;
  }
  if (row < 0 || row >= rows || col < 0 || col >= cols) {
    return state;
  }
  const mm = pixelToWorld(state.meta, state.axis, state.sliceIndex, row, col);
  const voxel: [number, number, number] =
    state.axis === "axial"
      ? [col, row, state.sliceIndex]
      : state.axis === "sagittal"
        ? [state.sliceIndex, col, row]
        : [col, state.sliceIndex, row];
  return { ...state, seed: { mm, voxel }, banner: null };
}

export function canRun(state: ViewerState): boolean {
  return (
    state.meta !== null &&
    state.seed !== null &&
    !state.running &&
    paramsError(state.params) === null
  );
}

/** Begin a run: lock the button, drop the stale overlay and any banner. */
export function startRun(state: ViewerState): ViewerState {
  if (!canRun(state)) {
    return state;
  }
  return { ...state, running: true, segmentation: null, banner: null };
}

export function finishRun(state: ViewerState, segmentation: Segmentation): ViewerState {
  return { ...state, running: false, segmentation, banner: null };
}

export function failRun(state: ViewerState, message: string): ViewerState {
  return { ...state, running: false, banner: message };
}
