/**
 * Voxel / slice / world geometry shared by the viewer modules.
 *
 * Volumes are indexed (i, j, k) with dims (nx, ny, nz) and flattened
 * x-fastest: flat[i + nx*(j + ny*k)].  World coordinates are voxel
 * centers: world = origin + spacing * (i, j, k), all in millimetres.
 *
 * Slice planes match the server's PNG slices exactly:
 *   axial    (index k, 0..nz-1): rows=ny, cols=nx, plane[j][i] = vol[i,j,k]
 *   sagittal (index i, 0..nx-1): rows=nz, cols=ny, plane[k][j] = vol[i,j,k]
 *   coronal  (index j, 0..ny-1): rows=nz, cols=nx, plane[k][i] = vol[i,j,k]
 */

export type Axis = "axial" | "sagittal" | "coronal";

export const AXES: readonly Axis[] = ["axial", "sagittal", "coronal"];

export interface VolumeMeta {
  /** (nx, ny, nz) voxel counts. */
  dims: [number, number, number];
  /** (sx, sy, sz) voxel spacing in mm. */
  spacing: [number, number, number];
  /** World position of voxel (0, 0, 0) in mm. */
  origin: [number, number, number];
  intensity_min: number;
  intensity_max: number;
}

export interface Plane {
  rows: number;
  cols: number;
  /** Row-major pixels, data[row * cols + col]. */
  data: Uint8Array;
}

/** Number of slices available along the viewing axis. */
export function sliceExtent(dims: readonly number[], axis: Axis): number {
  const [nx, ny, nz] = dims;
  switch (axis) {
    case "axial":
      return nz;
    case "sagittal":
      return nx;
    case "coronal":
      return ny;
  }
}

/** Pixel grid (rows, cols) of a slice along the given axis. */
export function planeShape(
  dims: readonly number[],
  axis: Axis,
): { rows: number; cols: number } {
  const [nx, ny, nz] = dims;
  switch (axis) {
    case "axial":
      return { rows: ny, cols: nx };
    case "sagittal":
      return { rows: nz, cols: ny };
    case "coronal":
      return { rows: nz, cols: nx };
  }
}

function checkIndex(axis: Axis, index: number, limit: number): void {
  if (!Number.isInteger(index) || index < 0 || index >= limit) {
    throw new RangeError(`${axis} slice index ${index} out of range [0, ${limit})`);
  }
}

/**
 * Extract one slice of a flat x-fastest binary mask in the same orientation
 * the server uses for its PNG slices.
 */
export function maskPlane(
  mask: Uint8Array,
  dims: readonly number[],
  axis: Axis,
  index: number,
): Plane {
  const [nx, ny, nz] = dims;
  if (mask.length !== nx * ny * nz) {
    throw new RangeError(`mask has ${mask.length} voxels, dims imply ${nx * ny * nz}`);
  }
  checkIndex(axis, index, sliceExtent(dims, axis));
  const { rows, cols } = planeShape(dims, axis);
  const out = new Uint8Array(rows * cols);
  if (axis === "axial") {
    const k = index;
    for (let j = 0; j < ny; j++) {
      for (let i = 0; i < nx; i++) {
        out[j * cols + i] = mask[i + nx * (j + ny * k)];
      }
    }
  } else if (axis === "sagittal") {
    const i = index;
    for (let k = 0; k < nz; k++) {
      for (let j = 0; j < ny; j++) {
        out[k * cols + j] = mask[i + nx * (j + ny * k)];
      }
    }
  } else {
    const j = index;
    for (let k = 0; k < nz; k++) {
      for (let i = 0; i < nx; i++) {
        out[k * cols + i] = mask[i + nx * (j + ny * k)];
      }
    }
  }
  return { rows, cols, data: out };
}

/** Map a slice pixel back to the voxel it shows. */
export function pixelToVoxel(
  axis: Axis,
  sliceIndex: number,
  row: number,
  col: number,
): [number, number, number] {
  switch (axis) {
    case "axial":
      return [col, row, sliceIndex];
    case "sagittal":
      return [sliceIndex, col, row];
    case "coronal":
      return [col, sliceIndex, row];
  }
}

/** Slice pixel (and which slice) where a voxel appears along an axis. */
export function voxelToPixel(
  axis: Axis,
  voxel: readonly number[],
): { row: number; col: number; slice: number } {
  const [i, j, k] = voxel;
  switch (axis) {
    case "axial":
      return { row: j, col: i, slice: k };
    case "sagittal":
      return { row: k, col: j, slice: i };
    case "coronal":
      return { row: k, col: i, slice: j };
  }
}

/** Voxel indices -> world mm (voxel centers). */
export function voxelToWorld(
  meta: Pick<VolumeMeta, "spacing" | "origin">,
  voxel: readonly number[],
): [number, number, number] {
  return [
    meta.origin[0] + meta.spacing[0] * voxel[0],
    meta.origin[1] + meta.spacing[1] * voxel[1],
    meta.origin[2] + meta.spacing[2] * voxel[2],
  ];
}

/** World mm -> continuous voxel coordinates. */
export function worldToVoxel(
  meta: Pick<VolumeMeta, "spacing" | "origin">,
  world: readonly number[],
): [number, number, number] {
  return [
    (world[0] - meta.origin[0]) / meta.spacing[0],
    (world[1] - meta.origin[1]) / meta.spacing[1],
    (world[2] - meta.origin[2]) / meta.spacing[2],
  ];
}

/** World mm of the center of the pixel clicked on a slice. */
export function pixelToWorld(
  meta: Pick<VolumeMeta, "spacing" | "origin">,
  axis: Axis,
  sliceIndex: number,
  row: number,
  col: number,
): [number, number, number] {
  return voxelToWorld(meta, pixelToVoxel(axis, sliceIndex, row, col));
}

/**
 * Where a world-space seed point lands on a view: nearest pixel plus the
 * slice it belongs on, so callers can decide whether to draw the marker.
 */
export function projectSeed(
  meta: Pick<VolumeMeta, "spacing" | "origin">,
  axis: Axis,
  seedMm: readonly number[],
): { row: number; col: number; slice: number } {
  const u = worldToVoxel(meta, seedMm);
  const nearest: [number, number, number] = [
    Math.round(u[0]),
    Math.round(u[1]),
    Math.round(u[2]),
  ];
  return voxelToPixel(axis, nearest);
}
