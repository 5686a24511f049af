"""Plane sampling grids and calibrated 2D slice rendering.

Pipeline for one slice: project the volume's boundary point cloud onto the
plane basis to get the (s, t) extent, lay out a lattice of 3D sample points
at the requested cm/pixel, convert them to spherical coordinates, and
trilinearly interpolate the voxel grid there. Orientation hyperparameters
(flips, in-plane rotation) are applied to the rendered image afterwards.

Pixel convention: lattice entry (i, j) maps to image (row, col) = (j, i),
i.e. s runs along columns and t increases downward. Positive rotation
angles turn the image counterclockwise; multiples of 90 degrees are exact
index permutations, other angles resample bilinearly with zero fill.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import ndimage

from . import kernels
from .errors import EchoSliceError, PlaneOutsideVolumeError
from .geometry import (PlaneAD, PlaneBasis, cartesian_to_spherical,
                       plane_ad_to_pn, plane_basis, spherical_to_cartesian)
from .volume import VolumeMeta, VolumeSequence

PLANE_TOL = 1e-9


@dataclass(frozen=True)
class SliceExtent:
    s_min: float
    s_max: float
    t_min: float
    t_max: float

    def __post_init__(self):
        if self.s_max < self.s_min or self.t_max < self.t_min:
            raise EchoSliceError("extent max must be >= min")


@dataclass(frozen=True)
class ViewRenderConfig:
    cm_per_pix: float = 0.05
    flip_h: bool = False
    flip_v: bool = False
    rotation_deg: float = 0.0

    def __post_init__(self):
        if self.cm_per_pix <= 0:
            raise EchoSliceError("cm_per_pix must be positive")

    def to_dict(self) -> dict:
        return {
            "cm_per_pix": self.cm_per_pix,
            "flip_h": self.flip_h,
            "flip_v": self.flip_v,
            "rotation_deg": self.rotation_deg,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ViewRenderConfig":
        return cls(
            cm_per_pix=float(d.get("cm_per_pix", 0.05)),
            flip_h=bool(d.get("flip_h", False)),
            flip_v=bool(d.get("flip_v", False)),
            rotation_deg=float(d.get("rotation_deg", 0.0)),
        )


@dataclass(frozen=True)
class SamplingGrid:
    """Per-pixel 3D sample locations for one slice."""

    basis: PlaneBasis
    extent: SliceExtent
    cm_per_pix: float
    width_pix: int
    height_pix: int
    points: np.ndarray = field(repr=False)  # (height, width, 3)


@dataclass(frozen=True)
class SliceImage:
    pixels: np.ndarray = field(repr=False)  # (h, w) uint8
    cm_per_pix: float
    plane: PlaneAD
    frame_no: int


def _boundary_index_mask(ni: int, nj: int, nk: int) -> np.ndarray:
    mask = np.zeros((ni, nj, nk), dtype=bool)
    mask[0, :, :] = mask[-1, :, :] = True
    mask[:, 0, :] = mask[:, -1, :] = True
    mask[:, :, 0] = mask[:, :, -1] = True
    return mask


@lru_cache(maxsize=16)
def _point_cloud(meta: VolumeMeta, boundary_only: bool) -> np.ndarray:
    """Cartesian coordinates of the volume's grid points, (N, 3).

    With boundary_only the six faces of index space are used; projection
    extremes of the pyramid lie on its boundary, so extents are unchanged.
    """
    rho, phi, theta = meta.axis_coords()
    r, p, t = np.meshgrid(rho, phi, theta, indexing="ij")
    pts = spherical_to_cartesian(r, p, t)
    if boundary_only:
        pts = pts[_boundary_index_mask(*pts.shape[:3])]
    out = pts.reshape(-1, 3)
    out.setflags(write=False)
    return out


def slice_extent(
    volume: VolumeSequence | VolumeMeta,
    basis: PlaneBasis,
    boundary_only: bool = True,
) -> SliceExtent:
    """(s, t) range of the volume's point cloud projected onto the plane basis."""
    meta = volume.meta if isinstance(volume, VolumeSequence) else volume
    cloud = _point_cloud(meta, boundary_only)
    rel = cloud - basis.point
    signed = rel @ basis.normal
    if signed.min() > PLANE_TOL or signed.max() < -PLANE_TOL:
        raise PlaneOutsideVolumeError()
    s = rel @ basis.u
    t = rel @ basis.v
    return SliceExtent(float(s.min()), float(s.max()), float(t.min()), float(t.max()))


def make_sampling_grid(
    basis: PlaneBasis, extent: SliceExtent, cm_per_pix: float
) -> SamplingGrid:
    """Uniform lattice over the extent with exact cm/pixel pitch.

    Pixel counts are round(extent / cm_per_pix), at least 1; the (0, 0)
    corner sits exactly at P + s_min*u + t_min*v.
    """
    if cm_per_pix <= 0:
        raise EchoSliceError("cm_per_pix must be positive")
    width = max(1, round((extent.s_max - extent.s_min) / cm_per_pix))
    height = max(1, round((extent.t_max - extent.t_min) / cm_per_pix))
    s = extent.s_min + np.arange(width) * cm_per_pix
    t = extent.t_min + np.arange(height) * cm_per_pix
    points = (
        basis.point[None, None, :]
        + s[None, :, None] * basis.u[None, None, :]
        + t[:, None, None] * basis.v[None, None, :]
    )
    return SamplingGrid(basis, extent, cm_per_pix, width, height, points)


def _fractional_indices(meta: VolumeMeta, xyz: np.ndarray) -> np.ndarray:
    """Map Cartesian points to fractional (i, j, k) grid indices."""
    sph = cartesian_to_spherical(xyz)
    ni, nj, nk, _ = meta.dims
    b = meta.bounds
    out = np.empty_like(sph)
    out[..., 0] = (sph[..., 0] - b.rho_min) / (b.rho_max - b.rho_min) * (ni - 1)
    out[..., 1] = (sph[..., 1] - b.phi_min) / (b.phi_max - b.phi_min) * (nj - 1)
    out[..., 2] = (sph[..., 2] - b.theta_min) / (b.theta_max - b.theta_min) * (nk - 1)
    return out


def sample_at_points(
    volume: VolumeSequence, frame_no: int, xyz: np.ndarray, backend: str | None = None
) -> np.ndarray:
    """Trilinear intensities (float) at arbitrary Cartesian points; 0 outside."""
    coords = _fractional_indices(volume.meta, np.asarray(xyz, float).reshape(-1, 3))
    return kernels.sample_trilinear(volume.frame(frame_no), coords, backend=backend)


def interpolate(
    volume: VolumeSequence, frame_no: int, grid: SamplingGrid, backend: str | None = None
) -> np.ndarray:
    """Raw (unoriented) uint8 image for one frame on a sampling grid."""
    vals = sample_at_points(volume, frame_no, grid.points.reshape(-1, 3), backend)
    img = np.clip(np.rint(vals), 0, 255).astype(np.uint8)
    return img.reshape(grid.height_pix, grid.width_pix)


def _is_quarter_turn(rotation_deg: float) -> bool:
    return abs(rotation_deg - 90.0 * round(rotation_deg / 90.0)) < 1e-9


def orient_image(raw: np.ndarray, config: ViewRenderConfig) -> np.ndarray:
    """Apply flips then in-plane rotation to a raw interpolated image."""
    img = raw
    if config.flip_h:
        img = img[:, ::-1]
    if config.flip_v:
        img = img[::-1, :]
    rot = config.rotation_deg % 360.0
    if rot == 0.0:
        return np.ascontiguousarray(img)
    if _is_quarter_turn(rot):
        return np.ascontiguousarray(np.rot90(img, int(round(rot / 90.0)) % 4))
    return ndimage.rotate(img, rot, reshape=False, order=1, mode="constant", cval=0)


def render_index_map(grid: SamplingGrid, config: ViewRenderConfig) -> np.ndarray:
    """Rendered-pixel -> flat lattice index map; -1 where rotation fill shows.

    For quarter-turn rotations this is the exact permutation the image
    undergoes; other angles use nearest-lattice inversion.
    """
    idx = np.arange(grid.height_pix * grid.width_pix, dtype=np.int64).reshape(
        grid.height_pix, grid.width_pix)
    if config.flip_h:
        idx = idx[:, ::-1]
    if config.flip_v:
        idx = idx[::-1, :]
    rot = config.rotation_deg % 360.0
    if rot == 0.0:
        return np.ascontiguousarray(idx)
    if _is_quarter_turn(rot):
        return np.ascontiguousarray(np.rot90(idx, int(round(rot / 90.0)) % 4))
    mapped = ndimage.rotate(
        idx.astype(np.float64), rot, reshape=False, order=0, mode="constant", cval=-1.0)
    return np.rint(mapped).astype(np.int64)


def pixel_to_world(
    grid: SamplingGrid, config: ViewRenderConfig, pixel: tuple[int, int]
) -> np.ndarray:
    """3D Cartesian point whose rendered position is the given (row, col)."""
    row, col = int(pixel[0]), int(pixel[1])
    idx = render_index_map(grid, config)
    if not (0 <= row < idx.shape[0] and 0 <= col < idx.shape[1]):
        raise EchoSliceError(f"pixel ({row}, {col}) outside image {idx.shape}")
    flat = idx[row, col]
    if flat < 0:
        raise EchoSliceError(f"pixel ({row}, {col}) lies in rotation fill")
    return grid.points[flat // grid.width_pix, flat % grid.width_pix].copy()


def world_to_pixel(
    grid: SamplingGrid, config: ViewRenderConfig, point: np.ndarray
) -> tuple[int, int]:
    """Rendered (row, col) of the lattice point nearest a 3D point."""
    rel = np.asarray(point, float) - grid.basis.point
    col = round((float(rel @ grid.basis.u) - grid.extent.s_min) / grid.cm_per_pix)
    row = round((float(rel @ grid.basis.v) - grid.extent.t_min) / grid.cm_per_pix)
    col = min(max(col, 0), grid.width_pix - 1)
    row = min(max(row, 0), grid.height_pix - 1)
    flat = row * grid.width_pix + col
    idx = render_index_map(grid, config)
    hits = np.argwhere(idx == flat)
    if len(hits) == 0:
        raise EchoSliceError("lattice point is not visible in the rendered image")
    return int(hits[0][0]), int(hits[0][1])


def plane_grid(
    volume: VolumeSequence | VolumeMeta, plane: PlaneAD, cm_per_pix: float
) -> SamplingGrid:
    """Extent + lattice for a plane given in angle-distance form."""
    basis = plane_basis(plane_ad_to_pn(plane))
    extent = slice_extent(volume, basis)
    return make_sampling_grid(basis, extent, cm_per_pix)


def render_slice(
    volume: VolumeSequence,
    plane: PlaneAD,
    frame_no: int,
    config: ViewRenderConfig = ViewRenderConfig(),
    backend: str | None = None,
) -> SliceImage:
    """Render one calibrated, view-oriented slice."""
    grid = plane_grid(volume, plane, config.cm_per_pix)
    raw = interpolate(volume, frame_no, grid, backend)
    return SliceImage(orient_image(raw, config), config.cm_per_pix, plane, frame_no)


def render_sequence(
    volume: VolumeSequence,
    plane: PlaneAD,
    config: ViewRenderConfig = ViewRenderConfig(),
    backend: str | None = None,
) -> list[SliceImage]:
    """Render all frames of a plane, reusing one sampling grid."""
    grid = plane_grid(volume, plane, config.cm_per_pix)
    coords = _fractional_indices(volume.meta, grid.points.reshape(-1, 3))
    frames = []
    for t in range(volume.meta.dims[3]):
        vals = kernels.sample_trilinear(volume.frame(t), coords, backend=backend)
        raw = np.clip(np.rint(vals), 0, 255).astype(np.uint8)
        raw = raw.reshape(grid.height_pix, grid.width_pix)
        frames.append(SliceImage(orient_image(raw, config), config.cm_per_pix, plane, t))
    return frames
