"""Anatomical landmark localization on the rendered A4C slice.

The scan is acquired from the apical position, so the four-chamber plane
is fixed at angle-distance (0, 0, 90): looking straight down the probe
axis. A pluggable provider finds the LV apex and base pixels on that
rendered slice; lifting them back to 3D through the sampling grid yields
the apex point, the apex-to-base direction, the LV length, and from those
the short-axis and long-axis planes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .errors import AdapterError, LandmarkError
from .geometry import PlaneAD, PlanePN, plane_pn_to_ad, unit
from .resampler import (SamplingGrid, SliceImage, ViewRenderConfig, interpolate,
                        orient_image, pixel_to_world, plane_grid)
from .volume import VolumeSequence

MIN_LV_LENGTH_CM = 2.0  # fail fast on garbage segmentations

_N_A4C = np.array([0.0, 1.0, 0.0])


@dataclass(frozen=True)
class LandmarkProviderResult:
    apex_pixel: tuple[int, int]  # (row, col) in the rendered A4C image
    base_pixel: tuple[int, int]
    lv_mask: np.ndarray | None = None  # binary, same shape as the image


class LandmarkProvider(Protocol):
    def __call__(
        self, image: SliceImage, grid: SamplingGrid, config: ViewRenderConfig
    ) -> LandmarkProviderResult: ...


@dataclass(frozen=True)
class LandmarkSet:
    plane_a4c: PlaneAD
    plane_sax: PlaneAD
    plane_la: PlaneAD
    p_apex: np.ndarray
    v_apex: np.ndarray  # unit, apex -> base
    l_lv: float

    def to_dict(self) -> dict:
        return {
            "plane_a4c": self.plane_a4c.to_json(),
            "plane_sax": self.plane_sax.to_json(),
            "plane_la": self.plane_la.to_json(),
            "p_apex": np.asarray(self.p_apex).tolist(),
            "v_apex": np.asarray(self.v_apex).tolist(),
            "l_lv": self.l_lv,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LandmarkSet":
        return cls(
            plane_a4c=PlaneAD.from_json(d["plane_a4c"]),
            plane_sax=PlaneAD.from_json(d["plane_sax"]),
            plane_la=PlaneAD.from_json(d["plane_la"]),
            p_apex=np.asarray(d["p_apex"], float),
            v_apex=np.asarray(d["v_apex"], float),
            l_lv=float(d["l_lv"]),
        )


def a4c_plane() -> PlaneAD:
    return PlaneAD(0.0, 0.0, 90.0)


def landmark_set_from_apex(p_apex: np.ndarray, base: np.ndarray) -> LandmarkSet:
    """Build the full landmark set from 3D apex and base points."""
    p_apex = np.asarray(p_apex, float)
    base = np.asarray(base, float)
    l_lv = float(np.linalg.norm(base - p_apex))
    if l_lv < MIN_LV_LENGTH_CM:
        raise LandmarkError(f"implausible LV length ({l_lv:.2f} cm)")
    v_apex = (base - p_apex) / l_lv
    plane_sax = plane_pn_to_ad(PlanePN(p_apex, v_apex))
    n_sax = v_apex
    n_la_raw = np.cross(n_sax, _N_A4C)
    if np.linalg.norm(n_la_raw) < 1e-9:
        raise LandmarkError("landmarks unavailable (apex-to-base axis parallel to A4C normal)")
    plane_la = plane_pn_to_ad(PlanePN(p_apex, unit(n_la_raw)))
    return LandmarkSet(a4c_plane(), plane_sax, plane_la, p_apex, v_apex, l_lv)


def render_a4c(
    volume: VolumeSequence, frame_no: int, config: ViewRenderConfig
) -> tuple[SliceImage, SamplingGrid]:
    grid = plane_grid(volume, a4c_plane(), config.cm_per_pix)
    raw = interpolate(volume, frame_no, grid)
    image = SliceImage(orient_image(raw, config), config.cm_per_pix, a4c_plane(), frame_no)
    return image, grid


def locate_landmarks(
    volume: VolumeSequence,
    provider: LandmarkProvider,
    ed_frame: int = 0,
    config: ViewRenderConfig = ViewRenderConfig(),
) -> LandmarkSet:
    """Render the A4C slice, run the provider, and derive the landmark set."""
    image, grid = render_a4c(volume, ed_frame, config)
    try:
        result = provider(image, grid, config)
    except (LandmarkError, AdapterError):
        raise
    except Exception as exc:
        raise LandmarkError(f"landmarks unavailable: {exc}") from exc

    h, w = image.pixels.shape
    for name, (r, c) in (("apex", result.apex_pixel), ("base", result.base_pixel)):
        if not (0 <= r < h and 0 <= c < w):
            raise LandmarkError(f"{name} pixel ({r}, {c}) outside image {h}x{w}")
    if tuple(result.apex_pixel) == tuple(result.base_pixel):
        raise LandmarkError("implausible LV length (apex equals base)")

    p_apex = pixel_to_world(grid, config, result.apex_pixel)
    base = pixel_to_world(grid, config, result.base_pixel)
    return landmark_set_from_apex(p_apex, base)
