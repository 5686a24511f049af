"""Spherical/Cartesian conversion and the three plane parametrizations.

Coordinate conventions: rho is distance from the origin in cm, phi is the
azimuthal angle in the x-z plane measured from the x axis, theta is the
elevation angle from the x-z plane. Angles are degrees everywhere in the
public API; radians appear only inside trig calls. Conversion:

    x = rho * cos(phi) * cos(theta)
    y = rho * sin(theta)
    z = rho * sin(phi) * cos(theta)

Planes come in three interconvertible forms:
  * point-normal (P, n)            — derived from landmarks
  * angle-distance (d, phi_n, theta_n) — used for search (3 DOF)
  * parametric basis (P, u, v)     — used to sample images
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError

# Tolerance below which the normal is treated as parallel to the x axis
# when choosing the in-plane basis.
AXIS_PARALLEL_TOL = 1e-6

_X_AXIS = np.array([1.0, 0.0, 0.0])
_Y_AXIS = np.array([0.0, 1.0, 0.0])


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0 or not np.isfinite(n):
        raise GeometryError("cannot normalize zero or non-finite vector")
    return v / n


def spherical_to_cartesian(rho, phi, theta) -> np.ndarray:
    """Map spherical (cm, deg, deg) to Cartesian cm; broadcasts, returns (..., 3)."""
    rho = np.asarray(rho, dtype=float)
    p = np.radians(np.asarray(phi, dtype=float))
    t = np.radians(np.asarray(theta, dtype=float))
    ct = np.cos(t)
    return np.stack(
        np.broadcast_arrays(rho * np.cos(p) * ct, rho * np.sin(t), rho * np.sin(p) * ct),
        axis=-1,
    )


def cartesian_to_spherical(xyz) -> np.ndarray:
    """Inverse of :func:`spherical_to_cartesian`; returns (..., 3) = (rho, phi, theta).

    The origin maps to (0, 0, 0); on the poles (x = z = 0) phi is defined
    as 0 via atan2(0, 0).
    """
    xyz = np.asarray(xyz, dtype=float)
    x, y, z = xyz[..., 0], xyz[..., 1], xyz[..., 2]
    rho = np.sqrt(x * x + y * y + z * z)
    safe = np.where(rho > 0.0, rho, 1.0)
    theta = np.degrees(np.arcsin(np.clip(y / safe, -1.0, 1.0)))
    phi = np.degrees(np.arctan2(z, x))
    return np.stack(np.broadcast_arrays(rho, phi, theta), axis=-1)


def grid_coordinate(meta, i: int, j: int, k: int) -> tuple[float, float, float]:
    """Spherical coordinate (rho, phi, theta) of grid index (i, j, k)."""
    ni, nj, nk, _ = meta.dims
    if not (0 <= i < ni and 0 <= j < nj and 0 <= k < nk):
        raise GeometryError(f"index ({i}, {j}, {k}) out of range for dims {meta.dims}")
    b = meta.bounds
    return (
        b.rho_min + i * (b.rho_max - b.rho_min) / (ni - 1),
        b.phi_min + j * (b.phi_max - b.phi_min) / (nj - 1),
        b.theta_min + k * (b.theta_max - b.theta_min) / (nk - 1),
    )


@dataclass(frozen=True)
class PlanePN:
    """Point-normal form. The normal is normalized on construction."""

    point: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.point, dtype=float)
        if p.shape != (3,) or not np.all(np.isfinite(p)):
            raise GeometryError("plane point must be a finite 3-vector")
        object.__setattr__(self, "point", p)
        object.__setattr__(self, "normal", unit(self.normal))

    def signed_distance(self, q) -> np.ndarray:
        """n . (q - P) for one point or an (..., 3) array of points."""
        q = np.asarray(q, dtype=float)
        return (q - self.point) @ self.normal

    def to_json(self) -> dict:
        return {"p": self.point.tolist(), "n": self.normal.tolist()}

    @classmethod
    def from_json(cls, d: dict) -> "PlanePN":
        return cls(np.asarray(d["p"], float), np.asarray(d["n"], float))


@dataclass(frozen=True)
class PlaneAD:
    """Angle-distance form: signed distance d (cm) from the origin along the
    normal, whose direction is (phi_n, theta_n) in degrees.

    Canonical planes (as produced by plane_pn_to_ad) have theta_n within
    [-90, 90]; values beyond that are allowed so view searches can sweep
    through the pole (e.g. a five-chamber range reaching past theta = 90).
    """

    d: float
    phi_n: float
    theta_n: float

    def __post_init__(self):
        if not -180.0 <= self.theta_n <= 180.0:
            raise GeometryError("theta_n must be within [-180, 180]")
        for name in ("d", "phi_n", "theta_n"):
            object.__setattr__(self, name, float(getattr(self, name)))

    def params(self) -> tuple[float, float, float]:
        return (self.d, self.phi_n, self.theta_n)

    def to_json(self) -> dict:
        return {"d": self.d, "phi_n": self.phi_n, "theta_n": self.theta_n}

    @classmethod
    def from_json(cls, d: dict) -> "PlaneAD":
        return cls(d["d"], d["phi_n"], d["theta_n"])


@dataclass(frozen=True)
class PlaneBasis:
    """Parametric form Q(s, t) = P + s*u + t*v with u, v an orthonormal
    in-plane basis."""

    point: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))
        object.__setattr__(self, "u", unit(self.u))
        object.__setattr__(self, "v", unit(self.v))
        if abs(float(self.u @ self.v)) > 1e-9:
            raise GeometryError("basis vectors must be orthogonal")

    @property
    def normal(self) -> np.ndarray:
        # For a basis built as v = n x u this recovers n: u x (n x u) = n.
        return unit(np.cross(self.u, self.v))

    def to_json(self) -> dict:
        return {"p": self.point.tolist(), "u": self.u.tolist(), "v": self.v.tolist()}

    @classmethod
    def from_json(cls, d: dict) -> "PlaneBasis":
        return cls(np.asarray(d["p"], float), np.asarray(d["u"], float),
                   np.asarray(d["v"], float))


def plane_pn_to_ad(plane: PlanePN) -> PlaneAD:
    """d = n.P, phi_n = atan2(n_z, n_x), theta_n = asin(n_y), angles in degrees.

    At the poles (|n_y| = 1) phi_n is 0 by the atan2(0, 0) convention.
    """
    n = plane.normal
    d = float(n @ plane.point)
    theta_n = math.degrees(math.asin(max(-1.0, min(1.0, float(n[1])))))
    phi_n = math.degrees(math.atan2(float(n[2]), float(n[0])))
    return PlaneAD(d, phi_n, theta_n)


def plane_ad_to_pn(plane: PlaneAD) -> PlanePN:
    """Reconstruct n from its direction angles and place P = d * n."""
    p = math.radians(plane.phi_n)
    t = math.radians(plane.theta_n)
    n = np.array([math.cos(t) * math.cos(p), math.sin(t), math.cos(t) * math.sin(p)])
    return PlanePN(plane.d * n, n)


def plane_basis(plane: PlanePN) -> PlaneBasis:
    """In-plane basis u = n x [1,0,0], falling back to n x [0,1,0] when the
    normal is (near-)parallel to the x axis; v = n x u. Both normalized."""
    n = plane.normal
    u = np.cross(n, _X_AXIS)
    if np.linalg.norm(u) < AXIS_PARALLEL_TOL:
        u = np.cross(n, _Y_AXIS)
    u = unit(u)
    v = np.cross(n, u)
    return PlaneBasis(plane.point, u, v)


def plane_point(basis: PlaneBasis, s: float, t: float) -> np.ndarray:
    return basis.point + s * basis.u + t * basis.v


def plane_angle_between(a: PlaneAD, b: PlaneAD) -> tuple[float, float]:
    """(angle_deg, distance_cm) separating two planes as geometric sets.

    (d, n) and (-d, -n) describe the same plane, so the comparison picks
    the normal sign that minimizes the angle.
    """
    na = plane_ad_to_pn(a).normal
    nb = plane_ad_to_pn(b).normal
    dot = float(na @ nb)
    sign = 1.0 if dot >= 0.0 else -1.0
    cosang = max(-1.0, min(1.0, abs(dot)))
    angle = math.degrees(math.acos(cosang))
    dist = abs(a.d - sign * b.d)
    return angle, dist
