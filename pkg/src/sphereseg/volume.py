"""Canonical 3D scalar volumes: file I/O, world/voxel transforms, sampling, slices.

Conventions used throughout the package:

* ``dims = (nx, ny, nz)``; voxel ``(i, j, k)`` has world-space center
  ``origin + (i, j, k) * spacing`` (axis-aligned affine, no shear).
* In-memory scalar data is float32, indexed ``data[i, j, k]``.  On disk the
  payload is row-major with x fastest, i.e. ``flat[i + nx*(j + ny*k)]``.
* The in-bounds region for sampling is the voxel-center bounding box
  ``0 <= u_axis <= n_axis - 1`` in continuous voxel coordinates.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Volume3D",
    "Mask3D",
    "VolumeFormatError",
    "GeometryMismatch",
    "load_volume",
    "save_volume",
    "load_mask",
    "save_mask",
    "world_to_voxel",
    "voxel_to_world",
    "sample_trilinear",
    "sample_trilinear_many",
    "extract_slice",
    "require_same_geometry",
]


class VolumeFormatError(ValueError):
    """Raised for unreadable or unsupported volume files."""


class GeometryMismatch(ValueError):
    """Raised when two volumes/masks disagree on dims, spacing or origin."""


def _as_triplet(x, dtype=float):
    t = tuple(dtype(v) for v in x)
    if len(t) != 3:
        raise ValueError(f"expected 3 components, got {len(t)}")
    return t


@dataclass
class Volume3D:
    """A 3D scalar image with isotropically indexed axis-aligned geometry."""

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    origin: tuple[float, float, float]
    data: np.ndarray  # float32, shape dims, indexed [i, j, k]

    def __post_init__(self):
        self.dims = _as_triplet(self.dims, int)
        self.spacing = _as_triplet(self.spacing)
        self.origin = _as_triplet(self.origin)
        if any(n <= 0 for n in self.dims):
            raise VolumeFormatError(f"dims must be positive, got {self.dims}")
        if any(s <= 0 for s in self.spacing):
            raise VolumeFormatError(f"spacing must be positive, got {self.spacing}")
        if not all(np.isfinite(self.origin)):
            raise VolumeFormatError(f"origin must be finite, got {self.origin}")
        arr = np.asarray(self.data)
        if arr.size != int(np.prod(self.dims)):
            raise VolumeFormatError(
                f"payload size mismatch: dims {self.dims} need {int(np.prod(self.dims))} "
                f"scalars, got {arr.size}"
            )
        arr = arr.reshape(self.dims).astype(np.float32, copy=False)
        if not np.all(np.isfinite(arr)):
            raise VolumeFormatError("volume data contains non-finite values")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        self.data = arr

    @classmethod
    def from_flat(cls, dims, spacing, origin, flat) -> "Volume3D":
        """Build from an x-fastest flat payload (the on-disk layout)."""
        dims = _as_triplet(dims, int)
        arr = np.asarray(flat).reshape(dims[::-1]).transpose(2, 1, 0)
        return cls(dims, spacing, origin, arr)

    def to_flat(self) -> np.ndarray:
        """x-fastest flat payload (inverse of :meth:`from_flat`)."""
        return np.ascontiguousarray(self.data.transpose(2, 1, 0)).reshape(-1)

    @property
    def voxel_volume_mm3(self) -> float:
        sx, sy, sz = self.spacing
        return sx * sy * sz

    def contains_world(self, p) -> bool:
        """True if world point p lies inside the voxel-center bounding box."""
        u = world_to_voxel(self, p)
        return bool(np.all(u >= 0) and np.all(u <= np.asarray(self.dims) - 1))


@dataclass
class Mask3D:
    """A binary volume sharing :class:`Volume3D` geometry conventions."""

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    origin: tuple[float, float, float]
    data: np.ndarray  # bool, shape dims

    def __post_init__(self):
        self.dims = _as_triplet(self.dims, int)
        self.spacing = _as_triplet(self.spacing)
        self.origin = _as_triplet(self.origin)
        if any(n <= 0 for n in self.dims):
            raise VolumeFormatError(f"dims must be positive, got {self.dims}")
        if any(s <= 0 for s in self.spacing):
            raise VolumeFormatError(f"spacing must be positive, got {self.spacing}")
        arr = np.asarray(self.data)
        if arr.size != int(np.prod(self.dims)):
            raise VolumeFormatError(
                f"payload size mismatch: dims {self.dims} need {int(np.prod(self.dims))} "
                f"values, got {arr.size}"
            )
        arr = np.ascontiguousarray(arr.reshape(self.dims).astype(bool))
        arr.setflags(write=False)
        self.data = arr

    @classmethod
    def from_flat(cls, dims, spacing, origin, flat) -> "Mask3D":
        dims = _as_triplet(dims, int)
        arr = np.asarray(flat).reshape(dims[::-1]).transpose(2, 1, 0)
        return cls(dims, spacing, origin, arr)

    def to_flat(self) -> np.ndarray:
        return np.ascontiguousarray(self.data.transpose(2, 1, 0)).reshape(-1)

    @property
    def voxel_volume_mm3(self) -> float:
        sx, sy, sz = self.spacing
        return sx * sy * sz

    def count(self) -> int:
        return int(np.count_nonzero(self.data))


def require_same_geometry(a, b, tol: float = 1e-9) -> None:
    """Raise :class:`GeometryMismatch` unless a and b share dims/spacing/origin."""
    if a.dims != b.dims:
        raise GeometryMismatch(f"dims differ: {a.dims} vs {b.dims}")
    if not np.allclose(a.spacing, b.spacing, rtol=0, atol=tol):
        raise GeometryMismatch(f"spacing differs: {a.spacing} vs {b.spacing}")
    if not np.allclose(a.origin, b.origin, rtol=0, atol=tol):
        raise GeometryMismatch(f"origin differs: {a.origin} vs {b.origin}")


# ---------------------------------------------------------------------------
# coordinate transforms
# ---------------------------------------------------------------------------

def world_to_voxel(vol, p) -> np.ndarray:
    """World mm -> continuous voxel coordinates.  Accepts (3,) or (n, 3)."""
    p = np.asarray(p, dtype=np.float64)
    return (p - np.asarray(vol.origin)) / np.asarray(vol.spacing)


def voxel_to_world(vol, u) -> np.ndarray:
    """Continuous voxel coordinates -> world mm.  Accepts (3,) or (n, 3)."""
    u = np.asarray(u, dtype=np.float64)
    return u * np.asarray(vol.spacing) + np.asarray(vol.origin)


# ---------------------------------------------------------------------------
# trilinear sampling
# ---------------------------------------------------------------------------

def sample_trilinear_many(vol: Volume3D, pts, oob_value: float = 0.0,
                          clamp: bool = False):
    """Trilinear-sample world points.

    Returns ``(values, oob)`` where ``oob`` flags points outside the
    voxel-center bounding box.  Out-of-bounds points get ``oob_value``
    unless ``clamp`` is set, in which case their coordinates are clamped to
    the box edge and sampled there (the flag is still raised).

    Interpolation uses nested lerps (``a + t*(b-a)``) in float64, so constant
    and affine fields are reproduced to float rounding.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
    u = world_to_voxel(vol, pts)
    hi = np.asarray(vol.dims, dtype=np.float64) - 1.0
    oob = np.any((u < 0.0) | (u > hi), axis=1)
    uc = np.clip(u, 0.0, hi)

    base = np.minimum(uc.astype(np.int64), np.asarray(vol.dims) - 2)
    base = np.maximum(base, 0)
    f = uc - base  # fractional position in the cell, in [0, 1]

    d = vol.data
    i0, j0, k0 = base[:, 0], base[:, 1], base[:, 2]
    i1, j1, k1 = np.minimum(i0 + 1, vol.dims[0] - 1), np.minimum(j0 + 1, vol.dims[1] - 1), \
        np.minimum(k0 + 1, vol.dims[2] - 1)
    fx, fy, fz = f[:, 0], f[:, 1], f[:, 2]

    def lerp(a, b, t):
        return a + t * (b - a)

    c000 = d[i0, j0, k0].astype(np.float64)
    c100 = d[i1, j0, k0].astype(np.float64)
    c010 = d[i0, j1, k0].astype(np.float64)
    c110 = d[i1, j1, k0].astype(np.float64)
    c001 = d[i0, j0, k1].astype(np.float64)
    c101 = d[i1, j0, k1].astype(np.float64)
    c011 = d[i0, j1, k1].astype(np.float64)
    c111 = d[i1, j1, k1].astype(np.float64)

    vx00 = lerp(c000, c100, fx)
    vx10 = lerp(c010, c110, fx)
    vx01 = lerp(c001, c101, fx)
    vx11 = lerp(c011, c111, fx)
    vy0 = lerp(vx00, vx10, fy)
    vy1 = lerp(vx01, vx11, fy)
    vals = lerp(vy0, vy1, fz)

    if not clamp:
        vals = np.where(oob, float(oob_value), vals)
    return vals, oob


def sample_trilinear(vol: Volume3D, p, oob_value: float = 0.0,
                     clamp: bool = False):
    """Single-point form of :func:`sample_trilinear_many` -> (value, oob)."""
    vals, oob = sample_trilinear_many(vol, np.asarray(p, dtype=np.float64)[None, :],
                                      oob_value=oob_value, clamp=clamp)
    return float(vals[0]), bool(oob[0])


# ---------------------------------------------------------------------------
# slice extraction with window/level
# ---------------------------------------------------------------------------

_SLICE_AXES = ("axial", "sagittal", "coronal")


def extract_slice(vol: Volume3D, axis: str, index: int,
                  window: tuple[float, float]) -> np.ndarray:
    """Extract a 2D uint8 slice with linear window/level mapping.

    ``window = (center, width)``; intensities map linearly so that
    center-width/2 -> 0 and center+width/2 -> 255, rounded half-up, clamped.

    Returned orientations (row, col):
      axial (index k):    (ny, nx) -> out[j, i] = vol[i, j, k]
      sagittal (index i): (nz, ny) -> out[k, j] = vol[i, j, k]
      coronal (index j):  (nz, nx) -> out[k, i] = vol[i, j, k]
    """
    if axis not in _SLICE_AXES:
        raise ValueError(f"axis must be one of {_SLICE_AXES}, got {axis!r}")
    center, width = float(window[0]), float(window[1])
    if width <= 0:
        raise ValueError(f"window width must be > 0, got {width}")
    nx, ny, nz = vol.dims
    limits = {"axial": nz, "sagittal": nx, "coronal": ny}
    if not 0 <= index < limits[axis]:
        raise IndexError(f"{axis} index {index} out of range [0, {limits[axis]})")

    if axis == "axial":
        plane = vol.data[:, :, index].T
    elif axis == "sagittal":
        plane = vol.data[index, :, :].T
    else:
        plane = vol.data[:, index, :].T

    lo = center - width / 2.0
    g = (plane.astype(np.float64) - lo) / width * 255.0
    g = np.floor(g + 0.5)  # round half up
    return np.clip(g, 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# RVOL: one-line JSON header + raw little-endian payload
# ---------------------------------------------------------------------------

_RVOL_DTYPES = {"i16": np.int16, "u16": np.uint16, "f32": np.float32, "u8": np.uint8}


def _write_rvol(path: str, dims, spacing, origin, arr_flat: np.ndarray, dtype_tag: str):
    header = {
        "dims": list(dims),
        "spacing": [float(s) for s in spacing],
        "origin": [float(o) for o in origin],
        "dtype": dtype_tag,
    }
    payload = np.ascontiguousarray(arr_flat.astype(_RVOL_DTYPES[dtype_tag]))
    if payload.dtype.byteorder == ">":  # pragma: no cover - LE hosts
        payload = payload.byteswap().view(payload.dtype.newbyteorder("<"))
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8"))
        fh.write(b"\n")
        fh.write(payload.tobytes())


def _read_rvol(path: str):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise VolumeFormatError(f"unreadable file: {path} ({exc})") from exc
    nl = raw.find(b"\n")
    if nl < 0:
        raise VolumeFormatError(f"unreadable file: {path} (missing header line)")
    try:
        header = json.loads(raw[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise VolumeFormatError(f"unreadable file: {path} (bad header: {exc})") from exc
    for key in ("dims", "spacing", "origin", "dtype"):
        if key not in header:
            raise VolumeFormatError(f"unreadable file: {path} (header missing {key!r})")
    dtype_tag = header["dtype"]
    if dtype_tag not in _RVOL_DTYPES:
        raise VolumeFormatError(f"unsupported datatype {dtype_tag!r} in {path}")
    dims = _as_triplet(header["dims"], int)
    if any(n <= 0 for n in dims):
        raise VolumeFormatError(f"dims must be positive, got {dims} in {path}")
    dt = np.dtype(_RVOL_DTYPES[dtype_tag]).newbyteorder("<")
    expected = int(np.prod(dims)) * dt.itemsize
    payload = raw[nl + 1:]
    if len(payload) != expected:
        raise VolumeFormatError(
            f"payload size mismatch in {path}: expected {expected} bytes, got {len(payload)}"
        )
    flat = np.frombuffer(payload, dtype=dt)
    return dims, header["spacing"], header["origin"], flat, dtype_tag


# ---------------------------------------------------------------------------
# NIfTI-1 subset: 348-byte header, little-endian, axis-aligned affine only
# ---------------------------------------------------------------------------

_NIFTI_DT = {2: np.uint8, 4: np.int16, 16: np.float32, 512: np.uint16}
_NIFTI_BITPIX = {2: 8, 4: 16, 16: 32, 512: 16}


def _write_nifti(path: str, dims, spacing, origin, arr_flat: np.ndarray, datatype: int):
    hdr = bytearray(348)
    struct.pack_into("<i", hdr, 0, 348)                       # sizeof_hdr
    dim = [3, dims[0], dims[1], dims[2], 1, 1, 1, 1]
    struct.pack_into("<8h", hdr, 40, *dim)
    struct.pack_into("<h", hdr, 70, datatype)
    struct.pack_into("<h", hdr, 72, _NIFTI_BITPIX[datatype])
    pixdim = [1.0, spacing[0], spacing[1], spacing[2], 0.0, 0.0, 0.0, 0.0]
    struct.pack_into("<8f", hdr, 76, *pixdim)
    struct.pack_into("<f", hdr, 108, 352.0)                   # vox_offset
    struct.pack_into("<f", hdr, 112, 1.0)                     # scl_slope
    struct.pack_into("<f", hdr, 116, 0.0)                     # scl_inter
    struct.pack_into("<h", hdr, 252, 1)                       # qform_code
    struct.pack_into("<h", hdr, 254, 1)                       # sform_code
    struct.pack_into("<3f", hdr, 256, 0.0, 0.0, 0.0)          # quatern b, c, d
    struct.pack_into("<3f", hdr, 268, origin[0], origin[1], origin[2])
    struct.pack_into("<4f", hdr, 280, spacing[0], 0.0, 0.0, origin[0])  # srow_x
    struct.pack_into("<4f", hdr, 296, 0.0, spacing[1], 0.0, origin[1])  # srow_y
    struct.pack_into("<4f", hdr, 312, 0.0, 0.0, spacing[2], origin[2])  # srow_z
    hdr[344:348] = b"n+1\x00"

    payload = np.ascontiguousarray(arr_flat.astype(_NIFTI_DT[datatype]))
    with open(path, "wb") as fh:
        fh.write(bytes(hdr))
        fh.write(b"\x00\x00\x00\x00")  # no header extensions
        fh.write(payload.tobytes())


def _read_nifti(path: str):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise VolumeFormatError(f"unreadable file: {path} ({exc})") from exc
    if len(raw) < 352:
        raise VolumeFormatError(f"unreadable file: {path} (truncated header)")
    if struct.unpack_from("<i", raw, 0)[0] != 348:
        raise VolumeFormatError(
            f"unreadable file: {path} (bad header size; only little-endian NIfTI-1 supported)"
        )
    if raw[344:348] != b"n+1\x00":
        raise VolumeFormatError(
            f"unreadable file: {path} (magic {raw[344:348]!r}; single-file n+1 required)"
        )
    dim = struct.unpack_from("<8h", raw, 40)
    ndim = dim[0]
    if ndim < 3 or any(d > 1 for d in dim[4:ndim + 1]):
        raise VolumeFormatError(f"unsupported dimensionality dim={list(dim)} in {path}")
    dims = (dim[1], dim[2], dim[3])
    if any(n <= 0 for n in dims):
        raise VolumeFormatError(f"dims must be positive, got {dims} in {path}")
    datatype = struct.unpack_from("<h", raw, 70)[0]
    if datatype not in _NIFTI_DT:
        raise VolumeFormatError(f"unsupported datatype {datatype} in {path}")
    pixdim = struct.unpack_from("<8f", raw, 76)
    spacing = pixdim[1:4]
    if any(not np.isfinite(s) or s <= 0 for s in spacing):
        raise VolumeFormatError(f"non-positive spacing {spacing} in {path}")
    vox_offset = int(struct.unpack_from("<f", raw, 108)[0])
    if vox_offset < 348:
        raise VolumeFormatError(f"unreadable file: {path} (vox_offset {vox_offset} < 348)")
    scl_slope = struct.unpack_from("<f", raw, 112)[0]
    scl_inter = struct.unpack_from("<f", raw, 116)[0]
    qform_code = struct.unpack_from("<h", raw, 252)[0]
    sform_code = struct.unpack_from("<h", raw, 254)[0]
    quatern = struct.unpack_from("<3f", raw, 256)
    qoffset = struct.unpack_from("<3f", raw, 268)
    if qform_code > 0 and any(abs(q) > 1e-6 for q in quatern):
        raise VolumeFormatError(
            f"unsupported affine in {path}: rotated qform (axis-aligned volumes only)"
        )
    if sform_code > 0:
        srow = np.array([struct.unpack_from("<4f", raw, off) for off in (280, 296, 312)])
        expect = np.zeros((3, 4))
        expect[0, 0], expect[1, 1], expect[2, 2] = spacing
        expect[:, 3] = qoffset if qform_code > 0 else srow[:, 3]
        if not np.allclose(srow[:, :3], expect[:, :3], atol=1e-4):
            raise VolumeFormatError(
                f"unsupported affine in {path}: sform has rotation/shear"
            )
        origin = tuple(float(v) for v in srow[:, 3])
    elif qform_code > 0:
        origin = tuple(float(v) for v in qoffset)
    else:
        origin = (0.0, 0.0, 0.0)

    dt = np.dtype(_NIFTI_DT[datatype]).newbyteorder("<")
    n = int(np.prod(dims))
    expected = vox_offset + n * dt.itemsize
    if len(raw) < expected:
        raise VolumeFormatError(
            f"payload size mismatch in {path}: expected >= {expected} bytes, got {len(raw)}"
        )
    flat = np.frombuffer(raw, dtype=dt, count=n, offset=vox_offset)
    if scl_slope not in (0.0, 1.0) or scl_inter != 0.0:
        slope = scl_slope if scl_slope != 0.0 else 1.0
        flat = flat.astype(np.float64) * slope + scl_inter
    return dims, spacing, origin, flat, datatype


# ---------------------------------------------------------------------------
# public load/save, dispatching on extension
# ---------------------------------------------------------------------------

def _format_of(path) -> str:
    lower = str(path).lower()
    if lower.endswith(".nii"):
        return "nifti"
    if lower.endswith(".rvol"):
        return "rvol"
    raise VolumeFormatError(
        f"unsupported file extension for {path} (use .nii or .rvol)"
    )


def load_volume(path: str) -> Volume3D:
    """Load a scalar volume (.nii or .rvol); values become float32."""
    if _format_of(path) == "nifti":
        dims, spacing, origin, flat, datatype = _read_nifti(path)
        if datatype == 2:
            raise VolumeFormatError(
                f"unsupported datatype 2 (uint8) for volumes in {path}; use load_mask"
            )
    else:
        dims, spacing, origin, flat, tag = _read_rvol(path)
        if tag == "u8":
            raise VolumeFormatError(
                f"unsupported datatype 'u8' for volumes in {path}; use load_mask"
            )
    return Volume3D.from_flat(dims, spacing, origin, np.asarray(flat, dtype=np.float64))


def save_volume(path: str, vol: Volume3D) -> None:
    """Write a float32 volume (.nii datatype float32, or .rvol dtype f32)."""
    flat = vol.to_flat()
    if _format_of(path) == "nifti":
        _write_nifti(path, vol.dims, vol.spacing, vol.origin, flat, datatype=16)
    else:
        _write_rvol(path, vol.dims, vol.spacing, vol.origin, flat, "f32")


def load_mask(path: str) -> Mask3D:
    """Load a binary mask (.nii uint8 or .rvol u8); nonzero -> True."""
    if _format_of(path) == "nifti":
        dims, spacing, origin, flat, datatype = _read_nifti(path)
        if datatype != 2:
            raise VolumeFormatError(
                f"unsupported datatype {datatype} for masks in {path} (uint8 required)"
            )
    else:
        dims, spacing, origin, flat, tag = _read_rvol(path)
        if tag != "u8":
            raise VolumeFormatError(
                f"unsupported datatype {tag!r} for masks in {path} ('u8' required)"
            )
    return Mask3D.from_flat(dims, spacing, origin, np.asarray(flat) != 0)


def save_mask(path: str, mask: Mask3D) -> None:
    """Write a mask as uint8 0/1 (.nii datatype uint8, or .rvol dtype u8)."""
    flat = mask.to_flat().astype(np.uint8)
    if _format_of(path) == "nifti":
        _write_nifti(path, mask.dims, mask.spacing, mask.origin, flat, datatype=2)
    else:
        _write_rvol(path, mask.dims, mask.spacing, mask.origin, flat, "u8")
