"""From a seed and a sphere mesh to a directed flow network.

Nodes live on rays cast from the seed through every mesh vertex: node (r, z)
sits at ``seed + (z+1) * (L/Z) * dir_r``.  The network encodes a minimal-cost
closed set problem: per-node terminal weights are telescoped per-ray cost
differences, intra-ray arcs enforce downward closure, and inter-ray arcs
bound the boundary-index difference of mesh-adjacent rays by delta_r.
Node (r, z) maps to flow-network node id ``r * Z + z``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spheremesh import MAX_LEVEL, IcoMesh
from .volume import Volume3D, sample_trilinear_many, world_to_voxel

__all__ = [
    "SegmentationParams",
    "RaySamples",
    "FlowNetwork",
    "SeedOutOfBounds",
    "OOB_POLICIES",
    "estimate_seed_mean",
    "sample_rays",
    "node_costs",
    "cumulative_transition_costs",
    "build_flow_network",
    "to_dimacs",
    "parse_dimacs",
]

OOB_POLICIES = ("zero-intensity", "clamp-to-edge")


class SeedOutOfBounds(ValueError):
    """Raised when a seed lies outside the volume's voxel-center box."""


@dataclass(frozen=True)
class SegmentationParams:
    """Ray-graph configuration (defaults follow the reference setup)."""

    mesh_level: int = 5            # 2432 rays; level 6 gives 7292
    nodes_per_ray: int = 50
    ray_length_mm: float = 50.0
    delta_r: int = 1
    seed_stat_radius_mm: float = 2.0
    oob_policy: str = "zero-intensity"

    def __post_init__(self):
        if not 0 <= self.mesh_level <= MAX_LEVEL:
            raise ValueError(f"mesh_level must be in [0, {MAX_LEVEL}], got {self.mesh_level}")
        if self.nodes_per_ray < 2:
            raise ValueError(f"nodes_per_ray must be >= 2, got {self.nodes_per_ray}")
        if not self.ray_length_mm > 0:
            raise ValueError(f"ray_length_mm must be > 0, got {self.ray_length_mm}")
        if not 0 <= self.delta_r <= self.nodes_per_ray - 1:
            raise ValueError(
                f"delta_r must be in [0, nodes_per_ray-1], got {self.delta_r}"
            )
        if not self.seed_stat_radius_mm > 0:
            raise ValueError(
                f"seed_stat_radius_mm must be > 0, got {self.seed_stat_radius_mm}"
            )
        if self.oob_policy not in OOB_POLICIES:
            raise ValueError(f"oob_policy must be one of {OOB_POLICIES}")

    @property
    def step_mm(self) -> float:
        return self.ray_length_mm / self.nodes_per_ray


@dataclass
class RaySamples:
    """Sampled intensities along every ray (R rays x Z nodes)."""

    directions: np.ndarray    # (R, 3) unit vectors
    positions: np.ndarray     # (R, Z, 3) world mm
    intensities: np.ndarray   # (R, Z) float64
    oob: np.ndarray           # (R, Z) bool, geometric out-of-bounds flags
    step_mm: float
    oob_policy: str

    @property
    def num_rays(self) -> int:
        return self.intensities.shape[0]

    @property
    def nodes_per_ray(self) -> int:
        return self.intensities.shape[1]


@dataclass
class FlowNetwork:
    """An s-t network over N non-terminal nodes (ids 0..N-1).

    Terminal capacities are dense arrays (zero means no arc).  Node-node arcs
    carry ``inf_cap`` when structural; ``az_range``/``ar_range`` delimit the
    intra-ray and inter-ray structural arc blocks for ray graphs (empty for
    hand-built or parsed networks).  ``st_cap`` is a direct s->t capacity so
    degenerate textbook networks stay representable.
    """

    num_nodes: int
    source_cap: np.ndarray    # (N,) float64 >= 0
    sink_cap: np.ndarray      # (N,) float64 >= 0
    arc_tail: np.ndarray      # (M,) int32
    arc_head: np.ndarray      # (M,) int32
    arc_cap: np.ndarray       # (M,) float64
    inf_cap: float
    st_cap: float = 0.0
    az_range: tuple[int, int] = (0, 0)
    ar_range: tuple[int, int] = (0, 0)
    num_rays: int = 0
    nodes_per_ray: int = 0
    force: float = field(default=0.0, repr=False)

    @property
    def num_arcs(self) -> int:
        """Arc count as dumped: nonzero terminal arcs + node-node arcs (+ s->t)."""
        return (
            int(np.count_nonzero(self.source_cap))
            + int(np.count_nonzero(self.sink_cap))
            + int(self.arc_tail.shape[0])
            + (1 if self.st_cap > 0 else 0)
        )

    def structural_mask(self) -> np.ndarray:
        """Boolean mask over node-node arcs that carry the INF sentinel."""
        return self.arc_cap >= self.inf_cap

    @classmethod
    def from_arcs(cls, num_nodes: int, arcs, source="s", sink="t") -> "FlowNetwork":
        """Build from ``(u, v, cap)`` triples where u/v are ints or 's'/'t'.

        Arcs into the source or out of the sink never carry flow and are
        dropped; parallel arcs accumulate.
        """
        source_cap = np.zeros(num_nodes, dtype=np.float64)
        sink_cap = np.zeros(num_nodes, dtype=np.float64)
        st_cap = 0.0
        tails, heads, caps = [], [], []
        for u, v, cap in arcs:
            cap = float(cap)
            if cap < 0:
                raise ValueError(f"negative capacity on arc {u}->{v}")
            if u == source and v == sink:
                st_cap += cap
            elif u == source:
                source_cap[int(v)] += cap
            elif v == sink:
                sink_cap[int(u)] += cap
            elif v == source or u == sink:
                continue
            else:
                tails.append(int(u))
                heads.append(int(v))
                caps.append(cap)
        arc_cap = np.asarray(caps, dtype=np.float64)
        inf_cap = float(source_cap.sum() + sink_cap.sum() + arc_cap.sum() + st_cap) + 1.0
        return cls(
            num_nodes=num_nodes,
            source_cap=source_cap,
            sink_cap=sink_cap,
            arc_tail=np.asarray(tails, dtype=np.int32),
            arc_head=np.asarray(heads, dtype=np.int32),
            arc_cap=arc_cap,
            inf_cap=inf_cap,
            st_cap=st_cap,
        )


# ---------------------------------------------------------------------------
# seed statistics and ray sampling
# ---------------------------------------------------------------------------

def _require_seed_in_bounds(vol: Volume3D, seed_mm) -> np.ndarray:
    seed = np.asarray(seed_mm, dtype=np.float64)
    if seed.shape != (3,) or not np.all(np.isfinite(seed)):
        raise SeedOutOfBounds(f"seed must be a finite 3-vector, got {seed_mm!r}")
    u = world_to_voxel(vol, seed)
    hi = np.asarray(vol.dims, dtype=np.float64) - 1.0
    if np.any(u < 0) or np.any(u > hi):
        raise SeedOutOfBounds(
            f"seed ({seed[0]:g}, {seed[1]:g}, {seed[2]:g}) mm maps to voxel "
            f"({u[0]:g}, {u[1]:g}, {u[2]:g}) outside dims {vol.dims}"
        )
    return seed


def estimate_seed_mean(vol: Volume3D, seed_mm, radius_mm: float) -> float:
    """Mean intensity over a fixed lattice covering the ball around the seed.

    The lattice step is min(spacing)/2; only in-bounds lattice points
    contribute.  The seed itself is a lattice point, so an in-bounds seed
    always yields at least one sample.
    """
    seed = _require_seed_in_bounds(vol, seed_mm)
    if not radius_mm > 0:
        raise ValueError(f"radius_mm must be > 0, got {radius_mm}")
    h = min(vol.spacing) / 2.0
    m = int(np.floor(radius_mm / h))
    axis = np.arange(-m, m + 1, dtype=np.float64) * h
    gx, gy, gz = np.meshgrid(axis, axis, axis, indexing="ij")
    offsets = np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)
    offsets = offsets[np.linalg.norm(offsets, axis=1) <= radius_mm]
    pts = seed[None, :] + offsets
    vals, oob = sample_trilinear_many(vol, pts)
    if np.all(oob):
        raise SeedOutOfBounds("seed-statistics ball lies entirely out of bounds")
    return float(np.mean(vals[~oob]))


def sample_rays(vol: Volume3D, seed_mm, mesh: IcoMesh,
                params: SegmentationParams) -> RaySamples:
    """Sample Z nodes per mesh direction: node z at radius (z+1)*(L/Z)."""
    seed = _require_seed_in_bounds(vol, seed_mm)
    dirs = mesh.vertices
    z = np.arange(params.nodes_per_ray, dtype=np.float64) + 1.0
    radii = z * params.step_mm
    positions = seed[None, None, :] + radii[None, :, None] * dirs[:, None, :]
    clamp = params.oob_policy == "clamp-to-edge"
    vals, oob = sample_trilinear_many(
        vol, positions.reshape(-1, 3), oob_value=0.0, clamp=clamp
    )
    shape = (dirs.shape[0], params.nodes_per_ray)
    return RaySamples(
        directions=dirs,
        positions=positions,
        intensities=vals.reshape(shape),
        oob=oob.reshape(shape),
        step_mm=params.step_mm,
        oob_policy=params.oob_policy,
    )


# ---------------------------------------------------------------------------
# node costs
# ---------------------------------------------------------------------------

def node_costs(samples: RaySamples, mu: float) -> np.ndarray:
    """Per-node costs ``|I - mu|``; out-of-bounds nodes cost max in-bounds + 1.

    Under the clamp-to-edge policy out-of-bounds nodes carry edge-clamped
    intensities and are costed like in-bounds ones (no penalty) — otherwise
    the policy would have no observable effect.
    """
    c = np.abs(samples.intensities.astype(np.float64) - float(mu))
    if samples.oob_policy == "zero-intensity" and np.any(samples.oob):
        inb = c[~samples.oob]
        penalty = (float(inb.max()) if inb.size else 0.0) + 1.0
        c = c.copy()
        c[samples.oob] = penalty
    return c


def cumulative_transition_costs(raw_costs: np.ndarray, oob: np.ndarray | None = None,
                                percentile: float = 99.0) -> np.ndarray:
    """Per-ray cumulative costs whose argmin sits at the object boundary.

    Each node gets an affinity ``d = raw - T`` with threshold T at half the
    high-percentile in-bounds raw cost (half the object/background contrast),
    negative inside the object and positive outside.  The returned cost of
    boundary index z is the cumulative sum of d through z, shifted per ray to
    be nonnegative, so minimizing the summed boundary cost places each ray's
    boundary at the last node still matching the seed statistics — robustly,
    because every node along the ray votes.  A constant volume yields raw
    costs of zero everywhere, T = 0 and an all-zero result.
    """
    raw = np.asarray(raw_costs, dtype=np.float64)
    inb = raw if oob is None else raw[~np.asarray(oob)]
    t_half = float(np.percentile(inb, percentile)) / 2.0 if inb.size else 0.0
    cum = np.cumsum(raw - t_half, axis=1)
    cum -= cum.min(axis=1, keepdims=True)
    return cum


# ---------------------------------------------------------------------------
# network assembly
# ---------------------------------------------------------------------------

def build_flow_network(costs: np.ndarray, edges: np.ndarray,
                       params: SegmentationParams) -> FlowNetwork:
    """Telescoped minimal-closed-set network over an (R, Z) cost grid.

    Terminal weights: w(r,0) = c(r,0) - FORCE with FORCE = sum(c)+1 (keeps
    every ray's innermost node in the closed set); w(r,z) = c(r,z)-c(r,z-1).
    Negative w becomes an s->v arc of capacity -w, positive w a v->t arc.
    Structural arcs carry the finite sentinel INF = (sum of terminal
    capacities) + 1: (r,z)->(r,z-1) for z >= 1, and for every mesh edge
    (r,r') both directions and every z: (r,z)->(r', max(0, z-delta_r)).
    """
    costs = np.asarray(costs, dtype=np.float64)
    if costs.ndim != 2:
        raise ValueError(f"costs must be 2-D (rays x nodes), got shape {costs.shape}")
    R, Z = costs.shape
    if Z != params.nodes_per_ray:
        raise ValueError(
            f"costs have {Z} nodes per ray but params.nodes_per_ray={params.nodes_per_ray}"
        )
    if not np.all(np.isfinite(costs)) or np.any(costs < 0):
        raise ValueError("costs must be finite and nonnegative")
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if edges.size and (edges.min() < 0 or edges.max() >= R):
        raise ValueError(f"edge indices out of range for {R} rays")
    if np.any(edges[:, 0] == edges[:, 1]):
        raise ValueError("self-loop in ray adjacency")

    force = float(costs.sum()) + 1.0
    w = np.empty_like(costs)
    w[:, 0] = costs[:, 0] - force
    w[:, 1:] = np.diff(costs, axis=1)
    w = w.reshape(-1)
    source_cap = np.where(w < 0, -w, 0.0)
    sink_cap = np.where(w > 0, w, 0.0)

    # A_z: (r, z) -> (r, z-1) for z >= 1
    node = np.arange(R * Z, dtype=np.int64)
    az_tail = node[node % Z != 0]
    az_head = az_tail - 1

    # A_r: both directions of every mesh edge, all z
    du = np.concatenate([edges[:, 0], edges[:, 1]])
    dv = np.concatenate([edges[:, 1], edges[:, 0]])
    zs = np.arange(Z, dtype=np.int64)
    tz = np.maximum(0, zs - params.delta_r)
    ar_tail = (du[:, None] * Z + zs[None, :]).reshape(-1)
    ar_head = (dv[:, None] * Z + tz[None, :]).reshape(-1)

    arc_tail = np.concatenate([az_tail, ar_tail]).astype(np.int32)
    arc_head = np.concatenate([az_head, ar_head]).astype(np.int32)
    inf_cap = float(source_cap.sum() + sink_cap.sum()) + 1.0
    arc_cap = np.full(arc_tail.shape[0], inf_cap, dtype=np.float64)

    return FlowNetwork(
        num_nodes=R * Z,
        source_cap=source_cap,
        sink_cap=sink_cap,
        arc_tail=arc_tail,
        arc_head=arc_head,
        arc_cap=arc_cap,
        inf_cap=inf_cap,
        az_range=(0, az_tail.shape[0]),
        ar_range=(az_tail.shape[0], arc_tail.shape[0]),
        num_rays=R,
        nodes_per_ray=Z,
        force=force,
    )


# ---------------------------------------------------------------------------
# DIMACS max-flow text (1-based ids; s = N+1, t = N+2)
# ---------------------------------------------------------------------------

def _fmt_cap(cap: float) -> str:
    return str(int(cap)) if float(cap).is_integer() else repr(float(cap))


def to_dimacs(net: FlowNetwork) -> str:
    """Dump as DIMACS max-flow text for cross-checking with external solvers."""
    n = net.num_nodes + 2
    s, t = net.num_nodes + 1, net.num_nodes + 2
    lines = [f"p max {n} {net.num_arcs}", f"n {s} s", f"n {t} t"]
    if net.st_cap > 0:
        lines.append(f"a {s} {t} {_fmt_cap(net.st_cap)}")
    for v in np.flatnonzero(net.source_cap):
        lines.append(f"a {s} {v + 1} {_fmt_cap(net.source_cap[v])}")
    for v in np.flatnonzero(net.sink_cap):
        lines.append(f"a {v + 1} {t} {_fmt_cap(net.sink_cap[v])}")
    for u, v, cap in zip(net.arc_tail, net.arc_head, net.arc_cap):
        lines.append(f"a {u + 1} {v + 1} {_fmt_cap(cap)}")
    return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> FlowNetwork:
    """Parse DIMACS max-flow text into a :class:`FlowNetwork`.

    Node ids are remapped so non-terminals become 0..N-1 in ascending id
    order.  Arcs into the source or out of the sink are dropped (they can
    never carry flow).
    """
    n_decl = None
    source = sink = None
    arcs: list[tuple[int, int, float]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        if parts[0] == "p":
            if len(parts) != 4 or parts[1] != "max":
                raise ValueError(f"line {lineno}: bad problem line {line!r}")
            n_decl = int(parts[2])
        elif parts[0] == "n":
            if len(parts) != 3 or parts[2] not in ("s", "t"):
                raise ValueError(f"line {lineno}: bad node line {line!r}")
            if parts[2] == "s":
                source = int(parts[1])
            else:
                sink = int(parts[1])
        elif parts[0] == "a":
            if len(parts) != 4:
                raise ValueError(f"line {lineno}: bad arc line {line!r}")
            arcs.append((int(parts[1]), int(parts[2]), float(parts[3])))
        else:
            raise ValueError(f"line {lineno}: unknown line type {line!r}")
    if n_decl is None or source is None or sink is None:
        raise ValueError("DIMACS text needs a problem line and both n-lines")
    ids = sorted(set(range(1, n_decl + 1)) - {source, sink})
    remap = {orig: i for i, orig in enumerate(ids)}

    def node(orig):
        if orig == source:
            return "s"
        if orig == sink:
            return "t"
        return remap[orig]

    return FlowNetwork.from_arcs(
        len(ids), [(node(u), node(v), cap) for u, v, cap in arcs]
    )
