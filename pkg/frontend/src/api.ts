/**
 * Typed client for the segmentation service's HTTP API.
 *
 * The fetch implementation is injectable so tests can stub the network and
 * the live end-to-end test can pass the real one.
 */

import type { Axis, VolumeMeta } from "./geometry.js";

export interface SegmentParams {
  mesh_level: number;
  nodes_per_ray: number;
  ray_length_mm: number;
  delta_r: number;
}

export const DEFAULT_PARAMS: SegmentParams = {
  mesh_level: 5,
  nodes_per_ray: 50,
  ray_length_mm: 50.0,
  delta_r: 1,
};

export interface SegmentRequest extends SegmentParams {
  seed_mm: [number, number, number];
}

export interface SegmentResponse {
  job_id: string;
  seed_mm: [number, number, number];
  params: SegmentParams;
  objective: number;
  timings_ms: Record<string, number>;
  mask_voxels: number;
  volume_cm3: number;
  /** Alternating run lengths over the flat voxel order, zero-run first. */
  mask_rle: number[];
}

/** Non-2xx response, carrying the HTTP status for banner messages. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

async function errorFrom(res: Response): Promise<ApiError> {
  let detail = res.statusText || `HTTP ${res.status}`;
  try {
    const body = (await res.json()) as { detail?: unknown };
    if (typeof body.detail === "string" && body.detail) {
      detail = body.detail;
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(res.status, detail);
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl = "", fetchFn: FetchLike = (...a) => fetch(...a)) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn;
  }

  async getMeta(): Promise<VolumeMeta> {
    const res = await this.fetchFn(`${this.base}/api/meta`);
    if (!res.ok) {
      throw await errorFrom(res);
    }
    return (await res.json()) as VolumeMeta;
  }

  /** URL of a slice PNG; used directly as an <img>/Image source. */
  sliceUrl(axis: Axis, index: number, wc?: number, ww?: number): string {
    let url = `${this.base}/api/slice/${axis}/${index}`;
    if (wc !== undefined && ww !== undefined) {
      url += `?wc=${encodeURIComponent(wc)}&ww=${encodeURIComponent(ww)}`;
    }
    return url;
  }

  async fetchSlicePng(axis: Axis, index: number, wc?: number, ww?: number): Promise<ArrayBuffer> {
    const res = await this.fetchFn(this.sliceUrl(axis, index, wc, ww));
    if (!res.ok) {
      throw await errorFrom(res);
    }
    return res.arrayBuffer();
  }

  async segment(req: SegmentRequest): Promise<SegmentResponse> {
    const res = await this.fetchFn(`${this.base}/api/segment`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
    if (!res.ok) {
      throw await errorFrom(res);
    }
    return (await res.json()) as SegmentResponse;
  }
}
