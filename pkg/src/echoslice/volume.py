"""Domain types for decoded 3D echo volumes.

A volume is a 4D grid of 8-bit intensities indexed (i, j, k, t) over the
spherical axes (rho, phi, theta) and time. Physical units are centimeters
for rho and degrees for both angles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CodecError


@dataclass(frozen=True)
class BoundsMatrix:
    """Physical ranges over which the voxel grid is defined."""

    rho_min: float
    rho_max: float
    phi_min: float
    phi_max: float
    theta_min: float
    theta_max: float

    def __post_init__(self):
        if self.rho_min < 0:
            raise CodecError("rho_min must be non-negative")
        for lo, hi, name in (
            (self.rho_min, self.rho_max, "rho"),
            (self.phi_min, self.phi_max, "phi"),
            (self.theta_min, self.theta_max, "theta"),
        ):
            if not hi > lo:
                raise CodecError(f"{name} bounds must satisfy max > min")

    def to_dict(self) -> dict:
        return {
            "rho_min": self.rho_min,
            "rho_max": self.rho_max,
            "phi_min": self.phi_min,
            "phi_max": self.phi_max,
            "theta_min": self.theta_min,
            "theta_max": self.theta_max,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoundsMatrix":
        return cls(**{k: float(d[k]) for k in (
            "rho_min", "rho_max", "phi_min", "phi_max", "theta_min", "theta_max")})


@dataclass(frozen=True)
class VolumeMeta:
    """Grid shape, bounds, and optional frame timing for a volume."""

    dims: tuple[int, int, int, int]  # (I, J, K, T)
    bounds: BoundsMatrix
    frame_interval_ms: float | None = None

    def __post_init__(self):
        i, j, k, t = self.dims
        if min(i, j, k) < 2:
            raise CodecError("spatial dims must be >= 2 (interpolation needs two samples per axis)")
        if t < 1:
            raise CodecError("frame count must be >= 1")
        object.__setattr__(self, "dims", (int(i), int(j), int(k), int(t)))

    @property
    def frame_voxels(self) -> int:
        i, j, k, _ = self.dims
        return i * j * k

    def axis_coords(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Physical coordinate of every index along each spatial axis.

        Linear sampling within the bounds: index 0 maps to the minimum and
        index n-1 to the maximum.
        """
        i, j, k, _ = self.dims
        b = self.bounds
        return (
            np.linspace(b.rho_min, b.rho_max, i),
            np.linspace(b.phi_min, b.phi_max, j),
            np.linspace(b.theta_min, b.theta_max, k),
        )

    def to_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "bounds": self.bounds.to_dict(),
            "frame_interval_ms": self.frame_interval_ms,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VolumeMeta":
        return cls(
            dims=tuple(int(x) for x in d["dims"]),
            bounds=BoundsMatrix.from_dict(d["bounds"]),
            frame_interval_ms=d.get("frame_interval_ms"),
        )


@dataclass(frozen=True)
class VolumeSequence:
    """Decoded voxel grid: uint8 array of shape (I, J, K, T) plus metadata."""

    meta: VolumeMeta
    voxels: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.voxels, dtype=np.uint8)
        if v.shape != self.meta.dims:
            raise CodecError(
                f"voxel array shape {v.shape} does not match dims {self.meta.dims}")
        v.setflags(write=False)
        object.__setattr__(self, "voxels", v)

    def frame(self, t: int) -> np.ndarray:
        """C-contiguous (I, J, K) view of one time frame."""
        _, _, _, nt = self.meta.dims
        if not 0 <= t < nt:
            raise CodecError(f"frame {t} out of range (T={nt})")
        return np.ascontiguousarray(self.voxels[:, :, :, t])
