"""Synthetic echo phantoms with analytically known anatomy.

Volumes hold ellipsoidal chambers (bright myocardium shell around a darker
blood pool), optional calibration sphere markers, and a cyclic contraction
of the LV. Geometry is exact, so phantoms double as oracles: a landmark
provider that projects the true apex/base into the rendered A4C image and
a view scorer peaked exactly at the true plane of each standard view.

Intensities: shell 200, blood pool 30, markers 255, background 0. Voxels
are labeled by center-point membership (no anti-aliasing).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EchoSliceError
from .geometry import (PlaneAD, plane_angle_between, spherical_to_cartesian,
                       cartesian_to_spherical, unit)
from .landmarks import LandmarkProviderResult, LandmarkSet, landmark_set_from_apex
from .resampler import render_index_map, world_to_pixel
from .search import VIEWS, build_search_ranges
from .volume import BoundsMatrix, VolumeMeta, VolumeSequence

SHELL_INTENSITY = 200
POOL_INTENSITY = 30
MARKER_INTENSITY = 255

SCORE_SIGMA_ANGLE_DEG = 5.0
SCORE_SIGMA_DIST_CM = 0.5


@dataclass(frozen=True)
class Ellipsoid:
    """Oriented ellipsoid; axes rows are the orthonormal principal directions
    and row 0 is treated as the long (apex-to-base) axis."""

    center: np.ndarray
    semi_axes: np.ndarray
    axes: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, float))
        object.__setattr__(self, "semi_axes", np.asarray(self.semi_axes, float))
        object.__setattr__(self, "axes", np.asarray(self.axes, float))
        if np.any(self.semi_axes <= 0):
            raise EchoSliceError("ellipsoid semi-axes must be positive")

    def contains(self, points: np.ndarray, scale: float = 1.0, grow: float = 0.0) -> np.ndarray:
        """Membership of (..., 3) points, with semi-axes scaled then grown by cm."""
        local = (np.asarray(points, float) - self.center) @ self.axes.T
        semi = self.semi_axes * scale + grow
        return np.sum((local / semi) ** 2, axis=-1) <= 1.0

    def surface_points(self, n: int = 400, scale: float = 1.0, grow: float = 0.0,
                       rng: np.random.Generator | None = None) -> np.ndarray:
        rng = rng or np.random.default_rng(0)
        dirs = rng.normal(size=(n, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        semi = self.semi_axes * scale + grow
        return self.center + (dirs * semi) @ self.axes

    def to_json(self) -> dict:
        return {"center": self.center.tolist(), "semi_axes": self.semi_axes.tolist(),
                "axes": self.axes.tolist()}

    @classmethod
    def from_json(cls, d: dict) -> "Ellipsoid":
        return cls(np.asarray(d["center"], float), np.asarray(d["semi_axes"], float),
                   np.asarray(d["axes"], float))


def ellipsoid_along(direction, center, semi_axes) -> Ellipsoid:
    """Ellipsoid whose long axis points along `direction` (in the x-z plane
    the remaining axes are y and direction x y)."""
    d = unit(direction)
    y = np.array([0.0, 1.0, 0.0])
    if abs(float(d @ y)) > 1 - 1e-9:
        raise EchoSliceError("long axis must not be parallel to y")
    u2 = unit(np.cross(d, y))
    u1 = np.cross(u2, d)
    return Ellipsoid(center, semi_axes, np.stack([d, u1, u2]))


@dataclass(frozen=True)
class SphereMarker:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, float))
        if self.radius <= 0:
            raise EchoSliceError("marker radius must be positive")

    def to_json(self) -> dict:
        return {"center": self.center.tolist(), "radius": self.radius}

    @classmethod
    def from_json(cls, d: dict) -> "SphereMarker":
        return cls(np.asarray(d["center"], float), float(d["radius"]))


@dataclass(frozen=True)
class PhantomSpec:
    meta: VolumeMeta
    lv: Ellipsoid | None = None
    la: Ellipsoid | None = None
    rv: Ellipsoid | None = None
    shell_thickness: float = 0.35
    contraction_fraction: float = 0.25
    cycle_phase: int = 0
    sphere_markers: tuple[SphereMarker, ...] = ()
    noise_amplitude: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.contraction_fraction < 1.0:
            raise EchoSliceError("contraction_fraction must be in [0, 1)")
        object.__setattr__(self, "sphere_markers", tuple(self.sphere_markers))

    def to_json(self) -> dict:
        return {
            "meta": self.meta.to_dict(),
            "lv": self.lv.to_json() if self.lv else None,
            "la": self.la.to_json() if self.la else None,
            "rv": self.rv.to_json() if self.rv else None,
            "shell_thickness": self.shell_thickness,
            "contraction_fraction": self.contraction_fraction,
            "cycle_phase": self.cycle_phase,
            "sphere_markers": [m.to_json() for m in self.sphere_markers],
            "noise_amplitude": self.noise_amplitude,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, d: dict) -> "PhantomSpec":
        def ell(v):
            return Ellipsoid.from_json(v) if v else None

        return cls(
            meta=VolumeMeta.from_dict(d["meta"]),
            lv=ell(d.get("lv")),
            la=ell(d.get("la")),
            rv=ell(d.get("rv")),
            shell_thickness=float(d.get("shell_thickness", 0.35)),
            contraction_fraction=float(d.get("contraction_fraction", 0.25)),
            cycle_phase=int(d.get("cycle_phase", 0)),
            sphere_markers=tuple(SphereMarker.from_json(m)
                                 for m in d.get("sphere_markers", [])),
            noise_amplitude=float(d.get("noise_amplitude", 0.0)),
            seed=int(d.get("seed", 0)),
        )


@dataclass(frozen=True)
class PhantomTruth:
    """Analytic ground truth for a phantom with an LV."""

    lv: Ellipsoid  # geometry at end-diastole (scale 1)
    contraction_fraction: float
    cycle_phase: int
    n_frames: int
    landmark_set: LandmarkSet
    view_planes: dict[str, PlaneAD]

    def scale(self, t: int) -> float:
        return 1.0 - self.contraction_fraction * math.sin(
            math.pi * (t - self.cycle_phase) / self.n_frames) ** 2

    def long_axis(self) -> np.ndarray:
        return self.lv.axes[0]

    def apex(self, t: int | None = None) -> np.ndarray:
        s = 1.0 if t is None else self.scale(t)
        return self.lv.center - s * self.lv.semi_axes[0] * self.long_axis()

    def base(self, t: int | None = None) -> np.ndarray:
        s = 1.0 if t is None else self.scale(t)
        return self.lv.center + s * self.lv.semi_axes[0] * self.long_axis()

    def lv_volume(self, t: int = 0) -> float:
        semi = self.lv.semi_axes * self.scale(t)
        return 4.0 / 3.0 * math.pi * float(np.prod(semi))

    def lv_area(self, t: int, frac: float) -> float:
        """Cross-section area at `frac` in [0, 1] along apex -> base."""
        a, b, c = self.lv.semi_axes * self.scale(t)
        x = (2.0 * frac - 1.0) * a  # offset from center along the long axis
        r2 = 1.0 - (x / a) ** 2
        return math.pi * b * c * max(r2, 0.0)

    def to_json(self) -> dict:
        return {
            "lv": self.lv.to_json(),
            "contraction_fraction": self.contraction_fraction,
            "cycle_phase": self.cycle_phase,
            "n_frames": self.n_frames,
            "landmark_set": self.landmark_set.to_dict(),
            "view_planes": {v: p.to_json() for v, p in self.view_planes.items()},
        }

    @classmethod
    def from_json(cls, d: dict) -> "PhantomTruth":
        return cls(
            lv=Ellipsoid.from_json(d["lv"]),
            contraction_fraction=float(d["contraction_fraction"]),
            cycle_phase=int(d["cycle_phase"]),
            n_frames=int(d["n_frames"]),
            landmark_set=LandmarkSet.from_dict(d["landmark_set"]),
            view_planes={v: PlaneAD.from_json(p) for v, p in d["view_planes"].items()},
        )


def _range_midpoint(rng) -> PlaneAD:
    return PlaneAD((rng.d[0] + rng.d[1]) / 2, (rng.phi[0] + rng.phi[1]) / 2,
                   (rng.theta[0] + rng.theta[1]) / 2)


def true_view_planes(lm: LandmarkSet) -> dict[str, PlaneAD]:
    """Ground-truth plane per view: midpoint of each search range, resolving
    the A2C -> A3C -> PLAX chain with the midpoints themselves."""
    planes: dict[str, PlaneAD] = {}
    selected: dict[str, PlaneAD] = {}
    for view in ("A4C", "A2C", "A3C", "PLAX", "A5C", "SAX_apex", "SAX_PAP", "SAX_MV"):
        rng = build_search_ranges(lm, selected, views=[view])[view]
        planes[view] = _range_midpoint(rng)
        selected[view] = planes[view]
    return planes


def _check_inside_bounds(points: np.ndarray, bounds: BoundsMatrix, what: str) -> None:
    sph = cartesian_to_spherical(points)
    ok = (
        (sph[..., 0] >= bounds.rho_min) & (sph[..., 0] <= bounds.rho_max)
        & (sph[..., 1] >= bounds.phi_min) & (sph[..., 1] <= bounds.phi_max)
        & (sph[..., 2] >= bounds.theta_min) & (sph[..., 2] <= bounds.theta_max)
    )
    if not ok.all():
        raise EchoSliceError(f"structure outside bounds: {what}")


def generate_phantom(spec: PhantomSpec) -> tuple[VolumeSequence, PhantomTruth | None]:
    """Voxelize the phantom and return it with its analytic truth (if it
    has an LV). Deterministic given the spec (including its seed)."""
    meta = spec.meta
    ni, nj, nk, nt = meta.dims
    if spec.cycle_phase >= nt:
        raise EchoSliceError("cycle_phase must be below the frame count")

    for ell, name in ((spec.lv, "lv"), (spec.la, "la"), (spec.rv, "rv")):
        if ell is not None:
            _check_inside_bounds(
                ell.surface_points(grow=spec.shell_thickness), meta.bounds, name)
    for m, marker in enumerate(spec.sphere_markers):
        _check_inside_bounds(
            Ellipsoid(marker.center, np.full(3, marker.radius)).surface_points(),
            meta.bounds, f"marker {m}")

    rho, phi, theta = meta.axis_coords()
    r, p, t = np.meshgrid(rho, phi, theta, indexing="ij")
    coords = spherical_to_cartesian(r, p, t)  # (I, J, K, 3)

    truth = None
    if spec.lv is not None:
        lm = landmark_set_from_apex(
            spec.lv.center - spec.lv.semi_axes[0] * spec.lv.axes[0],
            spec.lv.center + spec.lv.semi_axes[0] * spec.lv.axes[0],
        )
        truth = PhantomTruth(spec.lv, spec.contraction_fraction, spec.cycle_phase,
                             nt, lm, true_view_planes(lm))

    rng = np.random.default_rng(spec.seed)
    voxels = np.zeros((ni, nj, nk, nt), dtype=np.uint8)
    for f in range(nt):
        frame = np.zeros((ni, nj, nk), dtype=np.uint8)
        for ell in (spec.rv, spec.la):
            if ell is not None:
                frame[ell.contains(coords, grow=spec.shell_thickness)] = SHELL_INTENSITY
                frame[ell.contains(coords)] = POOL_INTENSITY
        if spec.lv is not None:
            s = truth.scale(f)
            frame[spec.lv.contains(coords, scale=s, grow=spec.shell_thickness)] = SHELL_INTENSITY
            frame[spec.lv.contains(coords, scale=s)] = POOL_INTENSITY
        for marker in spec.sphere_markers:
            dist2 = np.sum((coords - marker.center) ** 2, axis=-1)
            frame[dist2 <= marker.radius**2] = MARKER_INTENSITY
        if spec.noise_amplitude > 0:
            factor = 1.0 + spec.noise_amplitude * rng.uniform(-1.0, 1.0, frame.shape)
            frame = np.clip(np.rint(frame * factor), 0, 255).astype(np.uint8)
        voxels[:, :, :, f] = frame
    return VolumeSequence(meta, voxels), truth


def phantom_landmark_provider(truth: PhantomTruth):
    """Oracle provider: projects the true apex/base through the same
    sampling grid used for rendering; masks are analytic LV membership."""

    def provider(image, grid, config) -> LandmarkProviderResult:
        f = image.frame_no
        apex_px = world_to_pixel(grid, config, truth.apex(f))
        base_px = world_to_pixel(grid, config, truth.base(f))
        lattice_mask = truth.lv.contains(grid.points, scale=truth.scale(f))
        idx = render_index_map(grid, config)
        rendered_mask = np.zeros(idx.shape, dtype=bool)
        visible = idx >= 0
        rendered_mask[visible] = lattice_mask.reshape(-1)[idx[visible]]
        return LandmarkProviderResult(apex_px, base_px, rendered_mask)

    return provider


def plane_score(candidate: PlaneAD, target: PlaneAD) -> float:
    angle, dist = plane_angle_between(candidate, target)
    return math.exp(-(angle**2 / SCORE_SIGMA_ANGLE_DEG**2
                      + dist**2 / SCORE_SIGMA_DIST_CM**2))


def phantom_scorer(truth: PhantomTruth):
    """Oracle scorer, strictly maximized at the true plane of each view."""

    def scorer(images, target_view: str) -> list[float]:
        target = truth.view_planes[target_view]
        return [plane_score(img.plane, target) for img in images]

    return scorer


def standard_phantom(
    seed: int = 0,
    dims: tuple[int, int, int, int] = (48, 44, 44, 2),
    contraction_fraction: float = 0.2,
    n_markers: int = 0,
) -> PhantomSpec:
    """Randomized but always-valid phantom: LV long axis in the y = 0 plane
    pointing away from the probe, so the A4C plane is exactly (0, 0, 90)."""
    rng = np.random.default_rng(seed)
    bounds = BoundsMatrix(0.5, 13.0, -40.0, 40.0, -40.0, 40.0)
    meta = VolumeMeta(dims, bounds, frame_interval_ms=33.0)

    tilt = math.radians(rng.uniform(-8.0, 8.0))
    axis = np.array([math.cos(tilt), 0.0, math.sin(tilt)])
    l_lv = rng.uniform(7.0, 9.0)
    short = rng.uniform(1.5, 1.9, size=2)
    apex_dist = rng.uniform(2.2, 2.8)
    center = (apex_dist + l_lv / 2) * axis
    lv = ellipsoid_along(axis, center, np.array([l_lv / 2, short[0], short[1]]))

    markers = []
    for _ in range(n_markers):
        markers.append(SphereMarker(
            spherical_to_cartesian(rng.uniform(6.0, 9.0),
                                   rng.uniform(-20.0, 20.0),
                                   rng.uniform(-20.0, 20.0)),
            rng.uniform(0.8, 1.2)))
    return PhantomSpec(meta, lv=lv, contraction_fraction=contraction_fraction,
                       sphere_markers=tuple(markers), seed=seed)
