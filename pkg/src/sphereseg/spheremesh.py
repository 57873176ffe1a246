"""Triangulated unit-sphere meshes by centroid subdivision of the icosahedron.

Each subdivision step replaces every face with three faces sharing a new
vertex at the face's normalized centroid, so V' = V + F and F' = 3F.  The
vertex-count series is 12, 32, 92, 272, 812, 2432, 7292 for levels 0..6.

Ordering is deterministic: vertices of the parent mesh come first, then one
new vertex per parent face in face order; the children of face f are stored
at indices 3f, 3f+1, 3f+2.  That layout lets point location descend the
subdivision hierarchy instead of scanning all faces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "IcoMesh",
    "MAX_LEVEL",
    "build_icosahedron",
    "subdivide_centroid",
    "mesh_at_level",
    "vertex_adjacency",
    "mesh_edges",
    "locate_triangle",
    "locate_triangles",
    "to_obj",
]

MAX_LEVEL = 7

# Containment slack for spherical-triangle sign tests; dirs exactly on an
# edge must pass for both faces so the lowest face index can win the tie.
_EPS = 1e-12


@dataclass
class IcoMesh:
    """A subdivision level of the icosphere (unit vertices, int32 faces)."""

    level: int
    vertices: np.ndarray                    # (V, 3) float64, unit length
    faces: np.ndarray                       # (F, 3) int32, outward CCW
    parent: "IcoMesh | None" = field(default=None, repr=False)
    _edge_cross: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_faces(self) -> int:
        return self.faces.shape[0]

    def edge_cross(self) -> np.ndarray:
        """(F, 3, 3) cross products (va x vb, vb x vc, vc x va) per face.

        A unit direction d lies in face (a, b, c) iff all three dot products
        with these vectors are >= 0 (outward CCW winding).
        """
        if self._edge_cross is None:
            tri = self.vertices[self.faces]  # (F, 3, 3)
            a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
            self._edge_cross = np.stack(
                [np.cross(a, b), np.cross(b, c), np.cross(c, a)], axis=1
            )
        return self._edge_cross

    def chain(self) -> list["IcoMesh"]:
        """Meshes from level 0 up to and including this one."""
        out, m = [], self
        while m is not None:
            out.append(m)
            m = m.parent
        return out[::-1]


def build_icosahedron() -> IcoMesh:
    """The regular icosahedron: 12 unit vertices, 20 outward-CCW faces."""
    r = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, r, 0], [1, r, 0], [-1, -r, 0], [1, -r, 0],
            [0, -1, r], [0, 1, r], [0, -1, -r], [0, 1, -r],
            [r, 0, -1], [r, 0, 1], [-r, 0, -1], [-r, 0, 1],
        ],
        dtype=np.float64,
    )
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int32,
    )
    mesh = IcoMesh(level=0, vertices=verts, faces=faces)
    tri = verts[faces]
    if not np.all(np.einsum("fi,fi->f", tri[:, 0], np.cross(tri[:, 1], tri[:, 2])) > 0):
        raise AssertionError("icosahedron faces are not consistently outward CCW")
    return mesh


def subdivide_centroid(mesh: IcoMesh) -> IcoMesh:
    """One centroid (1 -> 3) subdivision step."""
    if mesh.level + 1 > MAX_LEVEL:
        raise ValueError(f"subdivision level {mesh.level + 1} exceeds MAX_LEVEL={MAX_LEVEL}")
    tri = mesh.vertices[mesh.faces]                # (F, 3, 3)
    centroids = tri.mean(axis=1)
    centroids /= np.linalg.norm(centroids, axis=1, keepdims=True)
    verts = np.concatenate([mesh.vertices, centroids], axis=0)

    f = mesh.faces
    m = np.arange(mesh.num_faces, dtype=np.int32) + mesh.num_vertices
    # children of face (a, b, c): (a, b, m), (b, c, m), (c, a, m)
    children = np.stack(
        [
            np.stack([f[:, 0], f[:, 1], m], axis=1),
            np.stack([f[:, 1], f[:, 2], m], axis=1),
            np.stack([f[:, 2], f[:, 0], m], axis=1),
        ],
        axis=1,
    ).reshape(-1, 3).astype(np.int32)
    return IcoMesh(level=mesh.level + 1, vertices=verts, faces=children, parent=mesh)


def mesh_at_level(level: int) -> IcoMesh:
    """Icosphere after `level` centroid subdivisions (0 <= level <= 7)."""
    if not 0 <= level <= MAX_LEVEL:
        raise ValueError(f"mesh level must be in [0, {MAX_LEVEL}], got {level}")
    mesh = build_icosahedron()
    for _ in range(level):
        mesh = subdivide_centroid(mesh)
    return mesh


def mesh_edges(mesh: IcoMesh) -> np.ndarray:
    """Unique undirected edges as an (E, 2) int array with e[0] < e[1]."""
    f = mesh.faces
    pairs = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]], axis=0)
    pairs = np.sort(pairs, axis=1)
    return np.unique(pairs, axis=0)


def vertex_adjacency(mesh: IcoMesh) -> list[np.ndarray]:
    """Sorted neighbor index array per vertex (symmetric by construction)."""
    edges = mesh_edges(mesh)
    order = np.argsort(edges[:, 0], kind="stable")
    byfirst = edges[order]
    neighbors: list[list[int]] = [[] for _ in range(mesh.num_vertices)]
    for u, v in byfirst:
        neighbors[u].append(v)
        neighbors[v].append(u)
    return [np.array(sorted(n), dtype=np.int32) for n in neighbors]


_ray_adjacency_cache: dict[tuple[int, int], np.ndarray] = {}


def ray_adjacency(mesh: IcoMesh) -> np.ndarray:
    """Neighboring ray pairs: Delaunay adjacency of the vertex directions.

    Centroid subdivision keeps every ancestor edge in the face-edge set, so
    ``mesh_edges`` pairs vertices up to 63 degrees apart at any level.  For
    smoothness coupling the meaningful notion of "adjacent rays" is directions
    with touching patches on the sphere — the Delaunay triangulation of the
    vertex set, i.e. its convex hull.  At level 0 both edge sets coincide
    (the 30 icosahedron edges); at level 5 the hull's longest edge spans 14
    degrees versus 63 for the face edges.

    Returns unique undirected pairs as an (E, 2) int32 array with e[0] < e[1].
    """
    key = (mesh.level, mesh.num_vertices)
    cached = _ray_adjacency_cache.get(key)
    if cached is not None:
        return cached
    from scipy.spatial import ConvexHull

    hull = ConvexHull(mesh.vertices)
    f = hull.simplices
    pairs = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]], axis=0)
    pairs = np.sort(pairs, axis=1)
    edges = np.unique(pairs, axis=0).astype(np.int32)
    _ray_adjacency_cache[key] = edges
    return edges


def _normalize_dirs(dirs: np.ndarray) -> np.ndarray:
    dirs = np.atleast_2d(np.asarray(dirs, dtype=np.float64))
    norms = np.linalg.norm(dirs, axis=1, keepdims=True)
    if np.any(norms == 0) or not np.all(np.isfinite(norms)):
        raise ValueError("directions must be nonzero finite vectors")
    return dirs / norms


def locate_triangles(mesh: IcoMesh, dirs) -> tuple[np.ndarray, np.ndarray]:
    """Locate the containing face and barycentric weights for many directions.

    Descends the subdivision hierarchy (20 faces at the root, then the three
    children of the current face per level).  Ties on shared edges resolve to
    the lowest face index; child indices are monotone in the parent index so
    choosing the first passing candidate at each level preserves that rule.

    Returns ``(face_indices (n,), weights (n, 3))`` with nonnegative weights
    summing to 1 whose weighted vertex combination is parallel to the input
    direction.
    """
    dirs = _normalize_dirs(dirs)
    n = dirs.shape[0]
    chain = mesh.chain()

    root = chain[0]
    dots = np.einsum("fek,nk->nfe", root.edge_cross(), dirs)
    ok = np.all(dots >= -_EPS, axis=2)                      # (n, 20)
    face = np.argmax(ok, axis=1).astype(np.int64)
    missing = ~ok.any(axis=1)
    if np.any(missing):  # numerically on an edge everywhere fails: least violating
        face[missing] = np.argmax(dots.min(axis=2)[missing], axis=1)

    for level_mesh in chain[1:]:
        cand = (face[:, None] * 3 + np.arange(3)[None, :])   # (n, 3) child faces
        cross = level_mesh.edge_cross()[cand]                # (n, 3, 3, 3)
        dots = np.einsum("ncek,nk->nce", cross, dirs)
        ok = np.all(dots >= -_EPS, axis=2)
        pick = np.argmax(ok, axis=1)
        missing = ~ok.any(axis=1)
        if np.any(missing):
            pick[missing] = np.argmax(dots.min(axis=2)[missing], axis=1)
        face = cand[np.arange(n), pick]

    tri = mesh.vertices[mesh.faces[face]]                    # (n, 3, 3)
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    det = np.einsum("ni,ni->n", a, np.cross(b, c))
    wa = np.einsum("ni,ni->n", dirs, np.cross(b, c))
    wb = np.einsum("ni,ni->n", a, np.cross(dirs, c))
    wc = np.einsum("ni,ni->n", a, np.cross(b, dirs))
    w = np.stack([wa, wb, wc], axis=1) / det[:, None]
    w = np.clip(w, 0.0, None)
    w /= w.sum(axis=1, keepdims=True)
    return face.astype(np.int32), w


def locate_triangle(mesh: IcoMesh, direction) -> tuple[int, np.ndarray]:
    """Single-direction form of :func:`locate_triangles`."""
    face, w = locate_triangles(mesh, np.asarray(direction, dtype=np.float64)[None, :])
    return int(face[0]), w[0]


def to_obj(mesh: IcoMesh) -> str:
    """Wavefront OBJ text (1-indexed faces) for inspection in mesh viewers."""
    lines = [f"v {x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces]
    return "\n".join(lines) + "\n"
