"""Single-seed spherical graph-cut segmentation of blob-like 3D objects.

From one seed point inside an object, rays are cast through the vertices
of a subdivided icosahedron, intensities are sampled along each ray, and a
minimum s-t cut over the resulting node graph picks one boundary node per
ray — an optimal smooth star-shaped surface — which is then voxelized into
a binary mask on the input grid.
"""

from .evalkit import EvalCase, SummaryReport, dice, make_phantom, mask_volume_cm3, summarize
from .graphbuild import FlowNetwork, SeedOutOfBounds, SegmentationParams
from .maxflow import CutResult, brute_force_min_cut, max_flow
from .segmenter import SegmentationResult, enumerate_optimal_surface, segment, voxelize
from .spheremesh import IcoMesh, mesh_at_level, mesh_edges, ray_adjacency
from .volume import (
    GeometryMismatch,
    Mask3D,
    Volume3D,
    VolumeFormatError,
    load_mask,
    load_volume,
    save_mask,
    save_volume,
)

__version__ = "0.1.0"

__all__ = [
    "CutResult",
    "EvalCase",
    "FlowNetwork",
    "GeometryMismatch",
    "IcoMesh",
    "Mask3D",
    "SeedOutOfBounds",
    "SegmentationParams",
    "SegmentationResult",
    "SummaryReport",
    "Volume3D",
    "VolumeFormatError",
    "brute_force_min_cut",
    "dice",
    "enumerate_optimal_surface",
    "load_mask",
    "load_volume",
    "make_phantom",
    "mask_volume_cm3",
    "max_flow",
    "mesh_at_level",
    "mesh_edges",
    "ray_adjacency",
    "save_mask",
    "save_volume",
    "segment",
    "summarize",
    "voxelize",
    "__version__",
]
