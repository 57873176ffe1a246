/**
 * Pixel compositing for the slice canvas: the red segmentation overlay and
 * the seed crosshair.  Works on raw RGBA buffers so tests can check output
 * without a browser canvas.
 */

import type { Plane } from "./geometry.js";

/** Opacity of the red mask overlay on top of the grayscale slice. */
export const OVERLAY_ALPHA = 0.4;

export const OVERLAY_COLOR: [number, number, number] = [255, 0, 0];

export const CROSSHAIR_COLOR: [number, number, number] = [0, 128, 255];

export const CROSSHAIR_HALF = 6;

/**
 * Blend the mask plane into an RGBA image in place:
 * out = (1 - alpha) * base + alpha * red wherever the mask is set; pixels
 * outside the mask are left untouched.
 */
export function compositeOverlay(
  rgba: Uint8ClampedArray,
  plane: Plane,
  alpha: number = OVERLAY_ALPHA,
): Uint8ClampedArray {
  const n = plane.rows * plane.cols;
  if (rgba.length !== n * 4) {
    throw new RangeError(`rgba has ${rgba.length} bytes, plane implies ${n * 4}`);
  }
  const keep = 1 - alpha;
  for (let p = 0; p < n; p++) {
    if (plane.data[p] === 0) {
      continue;
    }
    const o = p * 4;
    rgba[o] = keep * rgba[o] + alpha * OVERLAY_COLOR[0];
    rgba[o + 1] = keep * rgba[o + 1] + alpha * OVERLAY_COLOR[1];
    rgba[o + 2] = keep * rgba[o + 2] + alpha * OVERLAY_COLOR[2];
    // alpha channel untouched: the canvas stays opaque
  }
  return rgba;
}

/** Paint a small crosshair centered on a pixel, clipped to the image. */
export function drawCrosshair(
  rgba: Uint8ClampedArray,
  rows: number,
  cols: number,
  row: number,
  col: number,
  half: number = CROSSHAIR_HALF,
): Uint8ClampedArray {
  if (rgba.length !== rows * cols * 4) {
    throw new RangeError(`rgba has ${rgba.length} bytes, image implies ${rows * cols * 4}`);
  }
  const paint = (r: number, c: number): void => {
    if (r < 0 || r >= rows || c < 0 || c >= cols) {
      return;
    }
    const o = (r * cols + c) * 4;
    rgba[o] = CROSSHAIR_COLOR[0];
    rgba[o + 1] = CROSSHAIR_COLOR[1];
    rgba[o + 2] = CROSSHAIR_COLOR[2];
    rgba[o + 3] = 255;
  };
  for (let d = -half; d <= half; d++) {
    paint(row + d, col);
    paint(row, col + d);
  }
  return rgba;
}
