/**
 * DOM wiring for the seed viewer page.  All logic lives in the pure modules
 * (geometry/state/overlay/rle/api); this file only connects them to the
 * elements in index.html.
 */

import { ApiClient, ApiError } from "./api.js";
import type { Axis } from "./geometry.js";
import { AXES, maskPlane, planeShape, sliceExtent, voxelToPixel } from "./geometry.js";
import { countVoxels, decodeRle } from "./rle.js";
import type { ViewerState } from "./state.js";
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
} from "./state.js";
import { compositeOverlay, drawCrosshair } from "./overlay.js";

const api = new ApiClient("");

const el = {
  canvas: document.getElementById("slice-canvas") as HTMLCanvasElement,
  axis: document.getElementById("axis-select") as HTMLSelectElement,
  slice: document.getElementById("slice-slider") as HTMLInputElement,
  sliceLabel: document.getElementById("slice-label") as HTMLSpanElement,
  wc: document.getElementById("window-center") as HTMLInputElement,
  ww: document.getElementById("window-width") as HTMLInputElement,
  meshLevel: document.getElementById("param-mesh-level") as HTMLInputElement,
  nodesPerRay: document.getElementById("param-nodes-per-ray") as HTMLInputElement,
  rayLength: document.getElementById("param-ray-length") as HTMLInputElement,
  deltaR: document.getElementById("param-delta-r") as HTMLInputElement,
  run: document.getElementById("run-button") as HTMLButtonElement,
  banner: document.getElementById("banner") as HTMLDivElement,
  seedInfo: document.getElementById("seed-info") as HTMLSpanElement,
  resultPanel: document.getElementById("result-panel") as HTMLDivElement,
};

let state: ViewerState = initialState();
let renderToken = 0;

function update(next: ViewerState): void {
  state = next;
  void render();
}

async function loadSliceImage(axis: Axis, index: number, wc: number, ww: number): Promise<HTMLImageElement> {
  const img = new Image();
  img.src = api.sliceUrl(axis, index, wc, ww);
  await img.decode();
  return img;
}

async function render(): Promise<void> {
  const token = ++renderToken;
  syncControls();
  if (!state.meta) {
    return;
  }
  const { axis, sliceIndex, windowCenter, windowWidth, meta } = state;
  let img: HTMLImageElement;
  try {
    img = await loadSliceImage(axis, sliceIndex, windowCenter, windowWidth);
  } catch {
    el.banner.textContent = "failed to load slice image";
    return;
  }
  if (token !== renderToken) {
    return; // a newer render superseded this one while the image loaded
  }
  const { rows, cols } = planeShape(meta.dims, axis);
  el.canvas.width = cols;
  el.canvas.height = rows;
  const ctx = el.canvas.getContext("2d");
  if (!ctx) {
    return;
  }
  ctx.drawImage(img, 0, 0);
  const pixels = ctx.getImageData(0, 0, cols, rows);

  if (state.segmentation) {
    const plane = maskPlane(state.segmentation.mask, meta.dims, axis, sliceIndex);
    compositeOverlay(pixels.data, plane);
  }
  if (state.seed) {
    const pos = voxelToPixel(axis, state.seed.voxel);
    if (pos.slice === sliceIndex) {
      drawCrosshair(pixels.data, rows, cols, pos.row, pos.col);
    }
  }
  ctx.putImageData(pixels, 0, 0);
}

function syncControls(): void {
  const meta = state.meta;
  const extent = meta ? sliceExtent(meta.dims, state.axis) : 1;
  el.slice.max = String(extent - 1);
  el.slice.value = String(state.sliceIndex);
  el.sliceLabel.textContent = `${state.sliceIndex} / ${extent - 1}`;
  el.axis.value = state.axis;
  el.run.disabled = !canRun(state);
  el.run.textContent = state.running ? "running…" : "run segmentation";
  el.banner.textContent = state.banner ?? "";
  el.banner.style.display = state.banner ? "block" : "none";
  el.seedInfo.textContent = state.seed
    ? `seed at (${state.seed.mm.map((v) => v.toFixed(1)).join(", ")}) mm`
    : "click the image to place a seed";
  if (state.segmentation) {
    const r = state.segmentation.response;
    el.resultPanel.textContent =
      `${r.job_id}: ${r.mask_voxels} voxels, ${r.volume_cm3.toFixed(2)} cm³, ` +
      `objective ${r.objective.toFixed(3)}, ` +
      `${Object.entries(r.timings_ms)
        .map(([k, v]) => `${k} ${v.toFixed(0)} ms`)
        .join(", ")}`;
  } else {
    el.resultPanel.textContent = "";
  }
}

function canvasPixelFromEvent(ev: MouseEvent): { row: number; col: number } | null {
  if (!state.meta) {
    return null;
  }
  const rect = el.canvas.getBoundingClientRect();
  if (rect.width <= 0 || rect.height <= 0) {
    return null;
  }
  const { rows, cols } = planeShape(state.meta.dims, state.axis);
  const col = Math.floor(((ev.clientX - rect.left) / rect.width) * cols);
  const row = Math.floor(((ev.clientY - rect.top) / rect.height) * rows);
  return { row, col };
}

async function runSegmentation(): Promise<void> {
  if (!canRun(state) || !state.seed) {
    return;
  }
  const seed = state.seed;
  update(startRun(state));
  try {
    const response = await api.segment({ seed_mm: seed.mm, ...state.params });
    const meta = state.meta;
    if (!meta) {
      return;
    }
    const [nx, ny, nz] = meta.dims;
    const mask = decodeRle(response.mask_rle, nx * ny * nz);
    if (countVoxels(mask) !== response.mask_voxels) {
      update(failRun(state, "mask payload is inconsistent with its voxel count"));
      return;
    }
    update(finishRun(state, { response, mask }));
  } catch (err) {
    const message =
      err instanceof ApiError
        ? err.status === 429
          ? "server busy: segmentation queue is full, try again shortly"
          : `request rejected (${err.status}): ${err.message}`
        : `segmentation failed: ${String(err)}`;
    update(failRun(state, message));
  }
}

function wireEvents(): void {
  el.axis.addEventListener("change", () => {
    update(setAxis(state, el.axis.value as Axis));
  });
  el.slice.addEventListener("input", () => {
    update(setSlice(state, Number(el.slice.value)));
  });
  const applyWindow = (): void => {
    update(setWindow(state, Number(el.wc.value), Number(el.ww.value)));
  };
  el.wc.addEventListener("change", applyWindow);
  el.ww.addEventListener("change", applyWindow);
  const applyParams = (): void => {
    const next = setParams(state, {
      mesh_level: Number(el.meshLevel.value),
      nodes_per_ray: Number(el.nodesPerRay.value),
      ray_length_mm: Number(el.rayLength.value),
      delta_r: Number(el.deltaR.value),
    });
    const problem = paramsError(next.params);
    update(problem ? { ...next, banner: problem } : { ...next, banner: null });
  };
  for (const input of [el.meshLevel, el.nodesPerRay, el.rayLength, el.deltaR]) {
    input.addEventListener("change", applyParams);
  }
  el.canvas.addEventListener("click", (ev) => {
    const hit = canvasPixelFromEvent(ev);
    if (hit) {
      update(clickSeed(state, hit.row, hit.col));
    }
  });
  el.run.addEventListener("click", () => {
    void runSegmentation();
  });
  document.addEventListener("keydown", (ev) => {
    if (ev.key === "ArrowUp" || ev.key === "ArrowRight") {
      update(setSlice(state, state.sliceIndex + 1));
    } else if (ev.key === "ArrowDown" || ev.key === "ArrowLeft") {
      update(setSlice(state, state.sliceIndex - 1));
    }
  });
}

async function boot(): Promise<void> {
  for (const axis of AXES) {
    const opt = document.createElement("option");
    opt.value = axis;
    opt.textContent = axis;
    el.axis.appendChild(opt);
  }
  el.meshLevel.value = String(state.params.mesh_level);
  el.nodesPerRay.value = String(state.params.nodes_per_ray);
  el.rayLength.value = String(state.params.ray_length_mm);
  el.deltaR.value = String(state.params.delta_r);
  wireEvents();
  try {
    const meta = await api.getMeta();
    const next = withMeta(state, meta);
    el.wc.value = String(next.windowCenter);
    el.ww.value = String(next.windowWidth);
    update(next);
  } catch (err) {
    update(failRun(state, `cannot reach the volume service: ${String(err)}`));
  }
}

void boot();
