"""Overlap metrics, synthetic phantoms, and summary reporting.

Volumes are measured by counting voxels and multiplying by the voxel size.
The overlap score between an automatic mask A and a reference mask R is

    DSC = 2 * V(A intersect R) / (V(A) + V(R))

reported as a fraction in JSON and as a percentage (two decimals) in text
tables.  Summary statistics use the population standard deviation
(divisor n, not n-1).

Phantom noise comes from a counter-based 64-bit generator (Philox), so a
given ``rng_seed`` reproduces the same volume on every platform.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .volume import (
    GeometryMismatch,
    Mask3D,
    Volume3D,
    load_mask,
    require_same_geometry,
)

__all__ = [
    "EvalCase",
    "MetricStats",
    "SummaryReport",
    "dice",
    "mask_volume_cm3",
    "make_phantom",
    "summarize",
    "evaluate_manifest",
]

PHANTOM_SHAPES = ("sphere", "ellipsoid")


def dice(a: Mask3D, r: Mask3D) -> float:
    """Volume-overlap fraction 2*V(A&R)/(V(A)+V(R)) in [0, 1].

    Requires identical grid geometry and at least one nonempty mask; the
    per-voxel volume cancels, so the result only depends on voxel counts.
    """
    require_same_geometry(a, r)
    na = int(np.count_nonzero(a.data))
    nr = int(np.count_nonzero(r.data))
    if na + nr == 0:
        raise ValueError("overlap of two empty masks is undefined")
    ni = int(np.count_nonzero(a.data & r.data))
    return 2.0 * ni / (na + nr)


def mask_volume_cm3(m: Mask3D) -> float:
    """Mask volume in cm^3: voxel count times voxel size."""
    return m.count() * m.voxel_volume_mm3 / 1000.0


def make_phantom(
    shape: str,
    semi_axes_mm,
    center=None,
    dims=(64, 64, 64),
    spacing=(1.0, 1.0, 1.0),
    origin=(0.0, 0.0, 0.0),
    object_intensity: float = 200.0,
    background_intensity: float = 0.0,
    noise_sigma: float = 0.0,
    rng_seed: int = 0,
) -> tuple[Volume3D, Mask3D]:
    """Synthesize a blob volume and its exact ground-truth mask.

    ``shape`` is "sphere" (one radius) or "ellipsoid" (three semi-axes, mm).
    A voxel belongs to the truth mask iff its center satisfies the ellipsoid
    inequality sum(((q - center) / axes)^2) <= 1.  Intensities are the
    background value, the object value inside the truth, plus i.i.d.
    Gaussian noise of ``noise_sigma`` drawn from Philox(rng_seed).
    ``center`` defaults to the middle of the grid.
    """
    if shape not in PHANTOM_SHAPES:
        raise ValueError(f"shape must be one of {PHANTOM_SHAPES}, got {shape!r}")
    axes = np.atleast_1d(np.asarray(semi_axes_mm, dtype=np.float64))
    if shape == "sphere":
        if axes.size == 1:
            axes = np.repeat(axes, 3)
        if axes.size != 3 or not (axes[0] == axes[1] == axes[2]):
            raise ValueError("a sphere takes a single radius")
    if axes.shape != (3,):
        raise ValueError("an ellipsoid takes exactly three semi-axes")
    if not np.all(axes > 0):
        raise ValueError("semi-axes must be positive")

    dims = tuple(int(d) for d in dims)
    spacing = np.asarray(spacing, dtype=np.float64)
    origin = np.asarray(origin, dtype=np.float64)
    hi = origin + (np.asarray(dims) - 1) * spacing
    if center is None:
        center = origin + (np.asarray(dims) - 1) * spacing / 2.0
    center = np.asarray(center, dtype=np.float64)
    if np.any(center - axes < origin) or np.any(center + axes > hi):
        raise ValueError(
            f"object with semi-axes {axes.tolist()} mm at {center.tolist()} "
            f"does not fit in the grid"
        )

    nx, ny, nz = dims
    cx = origin[0] + spacing[0] * np.arange(nx)
    cy = origin[1] + spacing[1] * np.arange(ny)
    cz = origin[2] + spacing[2] * np.arange(nz)
    q2 = (
        (((cx - center[0]) / axes[0]) ** 2)[:, None, None]
        + (((cy - center[1]) / axes[1]) ** 2)[None, :, None]
        + (((cz - center[2]) / axes[2]) ** 2)[None, None, :]
    )
    truth = q2 <= 1.0

    data = np.full(dims, background_intensity, dtype=np.float64)
    data[truth] = object_intensity
    if noise_sigma > 0:
        rng = np.random.Generator(np.random.Philox(rng_seed))
        data += rng.normal(0.0, noise_sigma, size=dims)
    vol = Volume3D(dims=dims, spacing=tuple(spacing), origin=tuple(origin),
                   data=data.astype(np.float32))
    mask = Mask3D(dims=dims, spacing=tuple(spacing), origin=tuple(origin),
                  data=truth)
    return vol, mask


@dataclass
class EvalCase:
    """Per-case record: volumes, voxel counts, and overlap for one mask pair."""

    case_id: str
    dsc: float
    vol_ref_cm3: float
    vol_auto_cm3: float
    voxels_ref: int
    voxels_auto: int
    manual_time_min: float | None = None

    @classmethod
    def from_masks(cls, case_id: str, auto: Mask3D, ref: Mask3D,
                   manual_time_min: float | None = None) -> "EvalCase":
        return cls(
            case_id=str(case_id),
            dsc=dice(auto, ref),
            vol_ref_cm3=mask_volume_cm3(ref),
            vol_auto_cm3=mask_volume_cm3(auto),
            voxels_ref=ref.count(),
            voxels_auto=auto.count(),
            manual_time_min=manual_time_min,
        )


@dataclass
class MetricStats:
    """min/max/mean/population-sigma of one metric across cases."""

    min: float
    max: float
    mean: float
    sigma: float

    @classmethod
    def of(cls, values) -> "MetricStats":
        v = np.asarray(values, dtype=np.float64)
        return cls(min=float(v.min()), max=float(v.max()),
                   mean=float(v.mean()), sigma=float(v.std()))


# (metric key, column header, per-case attribute, render scale, decimals)
_COLUMNS = [
    ("vol_ref_cm3", "Vol ref (cm3)", "vol_ref_cm3", 1.0, 2),
    ("vol_auto_cm3", "Vol auto (cm3)", "vol_auto_cm3", 1.0, 2),
    ("voxels_ref", "Voxels ref", "voxels_ref", 1.0, 1),
    ("voxels_auto", "Voxels auto", "voxels_auto", 1.0, 1),
    ("dsc_percent", "DSC (%)", "dsc", 100.0, 2),
    ("time_min", "Time (min)", "manual_time_min", 1.0, 2),
]


@dataclass
class SummaryReport:
    """Column statistics over a case list, renderable as an aligned table."""

    cases: list
    stats: dict

    def to_json(self) -> str:
        """JSON array of per-case records (overlap as a fraction)."""
        return json.dumps([asdict(c) for c in self.cases], indent=2)

    def render_text(self) -> str:
        cols = [c for c in _COLUMNS
                if c[0] != "time_min" or self._has_times()]
        widths = {}
        header = ["Case"] + [c[1] for c in cols]
        rows = []
        for case in self.cases:
            row = [case.case_id]
            for key, _, attr, scale, dec in cols:
                row.append(f"{getattr(case, attr) * scale:.{dec}f}")
            rows.append(row)
        sep_at = len(rows)
        for label, pick in (("min", "min"), ("max", "max"),
                            ("mu", "mean"), ("sigma", "sigma")):
            row = [label]
            for key, _, attr, scale, dec in cols:
                row.append(f"{getattr(self.stats[key], pick):.{dec}f}")
            rows.append(row)
        table = [header] + rows
        for row in table:
            for i, cell in enumerate(row):
                widths[i] = max(widths.get(i, 0), len(cell))
        out = []
        for n, row in enumerate(table):
            line = "  ".join(cell.rjust(widths[i]) if i else cell.ljust(widths[i])
                             for i, cell in enumerate(row))
            out.append(line.rstrip())
            if n == 0 or n == sep_at:
                out.append("-" * len(line))
        return "\n".join(out) + "\n"

    def _has_times(self) -> bool:
        return all(c.manual_time_min is not None for c in self.cases)


def summarize(cases) -> SummaryReport:
    """Column-wise min/max/mean/population-sigma over at least one case."""
    cases = list(cases)
    if not cases:
        raise ValueError("summarize needs at least one case")
    stats = {}
    for key, _, attr, scale, _ in _COLUMNS:
        if attr == "manual_time_min" and any(
                c.manual_time_min is None for c in cases):
            continue
        stats[key] = MetricStats.of([getattr(c, attr) * scale for c in cases])
    return SummaryReport(cases=cases, stats=stats)


def evaluate_manifest(path) -> list[EvalCase]:
    """Evaluate mask-file pairs listed in a JSON manifest.

    The manifest is a JSON array of objects {"id", "auto", "ref"} whose
    paths are resolved relative to the manifest's directory; an optional
    "manual_time_min" per entry is carried into the report.
    """
    path = Path(path)
    entries = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(entries, list):
        raise ValueError("manifest must be a JSON array of {id, auto, ref}")
    base = path.parent
    cases = []
    for ent in entries:
        auto = load_mask(base / ent["auto"])
        ref = load_mask(base / ent["ref"])
        try:
            cases.append(EvalCase.from_masks(
                ent["id"], auto, ref, ent.get("manual_time_min")))
        except GeometryMismatch as err:
            raise GeometryMismatch(f"case {ent['id']!r}: {err}") from None
    return cases
