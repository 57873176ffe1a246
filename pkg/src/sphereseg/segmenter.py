"""Seed-to-mask orchestration: rays, network, cut, boundary, voxel mask.

``segment`` runs the whole pipeline for one seed point: sample intensities
along rays through the sphere-mesh vertices, turn them into per-node costs,
build the flow network, solve the minimum cut, read one boundary index per
ray off the cut's source side, and voxelize the resulting star-shaped
region onto the volume's grid.

Two guarantees are checked on every call, not just in tests: the boundary
satisfies the smoothness bound |z_r - z_r'| <= delta_r across every mesh
edge, and its objective is the network cost summed over the chosen nodes
(which the cut construction makes minimal over all smooth boundaries).

``enumerate_optimal_surface`` is the independent exhaustive oracle for that
minimality claim on small instances.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .graphbuild import (
    RaySamples,
    SegmentationParams,
    build_flow_network,
    cumulative_transition_costs,
    estimate_seed_mean,
    node_costs,
    sample_rays,
)
from .maxflow import CutResult, max_flow
from .spheremesh import IcoMesh, locate_triangles, mesh_at_level, ray_adjacency
from .volume import Mask3D, Volume3D

__all__ = [
    "SegmentationResult",
    "segment",
    "solve_boundary",
    "voxelize",
    "enumerate_optimal_surface",
]


@dataclass
class SegmentationResult:
    """One segmentation: per-ray boundary, voxel mask, objective, timings.

    ``boundary_index[r]`` is the outermost source-side node index on ray r
    (0..Z-1).  ``boundary_points[r]`` is its world position
    seed + (z_r + 1) * step * dir(r).  ``objective`` is the network cost
    summed over the boundary nodes.  ``timings_ms`` holds per-stage wall
    times and is the only field that varies between identical runs.
    """

    seed: tuple
    params: SegmentationParams
    boundary_index: np.ndarray
    boundary_points: np.ndarray
    mask: Mask3D
    objective: float
    timings_ms: dict
    seed_mean: float = 0.0
    cut: CutResult = field(repr=False, default=None)

    def report(self) -> dict:
        """JSON-ready sidecar: inputs, objective, timings, mask size."""
        from dataclasses import asdict

        return {
            "seed": [float(x) for x in self.seed],
            "params": asdict(self.params),
            "seed_mean": float(self.seed_mean),
            "objective": float(self.objective),
            "mask_voxels": int(self.mask.count()),
            "mask_volume_cm3": float(
                self.mask.count() * self.mask.voxel_volume_mm3 / 1000.0
            ),
            "timings_ms": {k: float(v) for k, v in self.timings_ms.items()},
        }


def _boundary_from_cut(cut: CutResult, num_rays: int, nodes_per_ray: int,
                       edges: np.ndarray, delta_r: int) -> np.ndarray:
    """Outermost source-side index per ray, with closure/smoothness checks."""
    side = cut.source_side[: num_rays * nodes_per_ray]
    side = side.reshape(num_rays, nodes_per_ray)
    if not side[:, 0].all():
        raise AssertionError("cut left a ray with no source-side node")
    # Downward arcs make each ray's source side a prefix; verify, then the
    # boundary is simply the prefix length minus one.
    prefix_len = side.sum(axis=1)
    idx = np.arange(nodes_per_ray)[None, :]
    if not np.array_equal(side, idx < prefix_len[:, None]):
        raise AssertionError("source side is not a per-ray prefix")
    boundary = (prefix_len - 1).astype(np.int32)
    gap = np.abs(boundary[edges[:, 0]] - boundary[edges[:, 1]])
    if gap.size and int(gap.max()) > delta_r:
        raise AssertionError(
            f"smoothness violated: adjacent boundary gap {int(gap.max())} "
            f"exceeds delta_r={delta_r}"
        )
    return boundary


def solve_boundary(costs: np.ndarray, edges: np.ndarray,
                   params: SegmentationParams) -> tuple[float, np.ndarray, CutResult]:
    """Minimum-cost smooth boundary for a given cost matrix.

    Builds the flow network for ``costs`` (num_rays x nodes_per_ray), solves
    the cut, and returns (objective, boundary_index, cut).  This is the
    network half of ``segment``, exposed so cost matrices can be solved
    directly.
    """
    costs = np.asarray(costs, dtype=np.float64)
    net = build_flow_network(costs, edges, params)
    cut = max_flow(net)
    boundary = _boundary_from_cut(cut, costs.shape[0], costs.shape[1],
                                  edges, params.delta_r)
    objective = float(costs[np.arange(costs.shape[0]), boundary].sum())
    return objective, boundary, cut


def voxelize(mesh: IcoMesh, radii_mm: np.ndarray, seed, dims, spacing,
             origin) -> Mask3D:
    """Star-shaped mask from per-vertex boundary radii.

    A voxel center q is inside iff |q - seed| <= rho(dir), where rho
    interpolates ``radii_mm`` barycentrically on the mesh triangle hit by
    dir = (q - seed) / |q - seed|.  The voxel containing the seed is always
    inside.  Only voxels in the bounding box of the largest radius are
    examined.
    """
    radii = np.asarray(radii_mm, dtype=np.float64)
    if radii.shape != (mesh.vertices.shape[0],):
        raise ValueError(
            f"need one radius per mesh vertex "
            f"({mesh.vertices.shape[0]}), got shape {radii.shape}"
        )
    if not np.all(radii > 0):
        raise ValueError("boundary radii must be positive")
    seed = np.asarray(seed, dtype=np.float64)
    dims = tuple(int(d) for d in dims)
    spacing = np.asarray(spacing, dtype=np.float64)
    origin = np.asarray(origin, dtype=np.float64)

    data = np.zeros(dims, dtype=bool)
    rmax = float(radii.max())
    rmin = float(radii.min())
    lo = np.maximum(np.ceil((seed - rmax - origin) / spacing).astype(int), 0)
    hi = np.minimum(np.floor((seed + rmax - origin) / spacing).astype(int),
                    np.asarray(dims) - 1)
    if np.all(lo <= hi):
        ax = [origin[d] + spacing[d] * np.arange(lo[d], hi[d] + 1)
              for d in range(3)]
        disp = np.stack(np.meshgrid(*[a - seed[d] for d, a in enumerate(ax)],
                                    indexing="ij"), axis=-1)
        dist = np.sqrt((disp ** 2).sum(axis=-1))
        inside = dist <= rmin
        shell = ~inside & (dist <= rmax)
        if shell.any():
            d = disp[shell]
            dn = dist[shell]
            dirs = d / dn[:, None]
            faces, weights = locate_triangles(mesh, dirs)
            rho = (radii[mesh.faces[faces]] * weights).sum(axis=1)
            inside[shell] = dn <= rho
        data[lo[0]:hi[0] + 1, lo[1]:hi[1] + 1, lo[2]:hi[2] + 1] = inside

    sv = np.clip(np.rint((seed - origin) / spacing).astype(int), 0,
                 np.asarray(dims) - 1)
    data[sv[0], sv[1], sv[2]] = True
    return Mask3D(dims=dims, spacing=tuple(spacing), origin=tuple(origin),
                  data=data)


def segment(vol: Volume3D, seed, params: SegmentationParams | None = None) -> SegmentationResult:
    """Segment the blob around ``seed`` (world mm) in ``vol``.

    Raises SeedOutOfBounds if the seed is not strictly inside the volume.
    A constant region (all node costs zero) cannot define a boundary; the
    result is then the full sampled ball and a RuntimeWarning is emitted.
    """
    if params is None:
        params = SegmentationParams()
    timings: dict[str, float] = {}
    t_total = time.perf_counter()

    t0 = time.perf_counter()
    mesh = mesh_at_level(params.mesh_level)
    edges = ray_adjacency(mesh)
    timings["mesh"] = (time.perf_counter() - t0) * 1000.0

    t0 = time.perf_counter()
    rays = sample_rays(vol, seed, mesh, params)
    seed_mean = estimate_seed_mean(vol, seed, params.seed_stat_radius_mm)
    timings["sample"] = (time.perf_counter() - t0) * 1000.0

    t0 = time.perf_counter()
    raw = node_costs(rays, seed_mean)
    costs = cumulative_transition_costs(raw, rays.oob)
    timings["costs"] = (time.perf_counter() - t0) * 1000.0

    if not np.any(costs > 0):
        warnings.warn(
            "all node costs are zero (constant region around the seed); "
            "the result is the full sampled ball",
            RuntimeWarning,
            stacklevel=2,
        )

    t0 = time.perf_counter()
    net = build_flow_network(costs, edges, params)
    timings["graph"] = (time.perf_counter() - t0) * 1000.0

    t0 = time.perf_counter()
    cut = max_flow(net)
    boundary = _boundary_from_cut(cut, rays.num_rays, rays.nodes_per_ray,
                                  edges, params.delta_r)
    objective = float(costs[np.arange(rays.num_rays), boundary].sum())
    timings["mincut"] = (time.perf_counter() - t0) * 1000.0

    t0 = time.perf_counter()
    step = params.step_mm
    seed_arr = np.asarray(seed, dtype=np.float64)
    boundary_points = seed_arr + (boundary[:, None] + 1) * step * mesh.vertices
    # Nodes are shell centers; the region extends half a step beyond the
    # boundary node, so the mask radius gets the half-step added back.
    mask = voxelize(mesh, (boundary + 1.5) * step, seed_arr,
                    vol.dims, vol.spacing, vol.origin)
    timings["voxelize"] = (time.perf_counter() - t0) * 1000.0

    timings["total"] = (time.perf_counter() - t_total) * 1000.0
    return SegmentationResult(
        seed=tuple(float(x) for x in seed_arr),
        params=params,
        boundary_index=boundary,
        boundary_points=boundary_points,
        mask=mask,
        objective=objective,
        timings_ms=timings,
        seed_mean=float(seed_mean),
        cut=cut,
    )


_digit_cache: dict[tuple[int, int], np.ndarray] = {}
_CHUNK = 1 << 20


def _digits_for(lo: int, hi: int, num_rays: int, z: int) -> np.ndarray:
    """Boundary vectors for state indices [lo, hi) in lexicographic order.

    State m maps to the vector whose ray-0 index is the most significant
    base-Z digit, so ascending m enumerates vectors lexicographically.
    """
    if lo == 0 and hi == z ** num_rays and (num_rays, z) in _digit_cache:
        return _digit_cache[(num_rays, z)]
    m = np.arange(lo, hi, dtype=np.int64)
    out = np.empty((hi - lo, num_rays), dtype=np.int8)
    for r in range(num_rays):
        out[:, r] = (m // z ** (num_rays - 1 - r)) % z
    if lo == 0 and hi == z ** num_rays and hi <= _CHUNK:
        _digit_cache[(num_rays, z)] = out
    return out


def enumerate_optimal_surface(costs: np.ndarray, edges: np.ndarray,
                              delta_r: int) -> tuple[float, np.ndarray]:
    """Exhaustive minimum of sum_r costs[r, z_r] over smooth boundaries.

    Smooth means |z_a - z_b| <= delta_r for every edge (a, b).  Returns the
    minimal objective and the lexicographically least argmin.  Limited to
    num_rays <= 12 and nodes_per_ray <= 4 (at most 4^12 states).
    """
    costs = np.asarray(costs, dtype=np.float64)
    num_rays, z = costs.shape
    if num_rays > 12 or z > 4:
        raise ValueError(
            f"exhaustive enumeration supports at most 12 rays x 4 nodes, "
            f"got {num_rays} x {z}"
        )
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    total = z ** num_rays
    offsets = (np.arange(num_rays, dtype=np.int64) * z)
    flat = costs.ravel()
    best_val = np.inf
    best_vec: np.ndarray | None = None
    for lo in range(0, total, _CHUNK):
        hi = min(lo + _CHUNK, total)
        digits = _digits_for(lo, hi, num_rays, z)
        smooth = np.ones(hi - lo, dtype=bool)
        for a, b in edges:
            np.logical_and(smooth,
                           np.abs(digits[:, a].astype(np.int16)
                                  - digits[:, b]) <= delta_r,
                           out=smooth)
        ok = np.flatnonzero(smooth)
        if ok.size == 0:
            continue
        obj = flat[digits[ok].astype(np.int64) + offsets].sum(axis=1)
        k = int(obj.argmin())  # first occurrence = lexicographically least
        if obj[k] < best_val:
            best_val = float(obj[k])
            best_vec = digits[ok[k]].astype(np.int32).copy()
    if best_vec is None:
        raise ValueError("no boundary satisfies the smoothness constraint")
    return best_val, best_vec
