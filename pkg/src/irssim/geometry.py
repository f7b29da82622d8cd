"""Vector algebra, rotation sequences, link geometry, and LoS occlusion.

World coordinates are right-handed with +z up; distances in meters and
angles in radians unless a name says otherwise. The inclination of a link
a->b is measured from the +z axis (0 means a sits straight above b); the
azimuth is the four-quadrant angle of (a - b) in the xy plane, in (-pi, pi].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "GeometryError",
    "ZeroDistance",
    "LengthMismatch",
    "Axis",
    "Vec3",
    "RotationSequence",
    "LinkGeometry",
    "BuildingBox",
    "IrsFrame",
    "distance",
    "link_geometry",
    "rotation_matrix",
    "to_irs_frame",
    "from_irs_frame",
    "los_blocked",
    "los_blocked_batch",
]


class GeometryError(ValueError):
    """Invalid geometric input."""


class ZeroDistance(GeometryError):
    """Two points coincide where a direction is required."""


class LengthMismatch(GeometryError):
    """Rotation axes and angles differ in length."""


class Axis(str, Enum):
    X = "X"
    Y = "Y"
    Z = "Z"


@dataclass(frozen=True)
class Vec3:
    """Point or displacement in world coordinates (meters)."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise GeometryError(f"non-finite vector component: ({self.x}, {self.y}, {self.z})")

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def scaled(self, s: float) -> "Vec3":
        return Vec3(self.x * s, self.y * s, self.z * s)

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


@dataclass(frozen=True)
class RotationSequence:
    """Ordered elementary rotations, applied first-to-last about world axes."""

    axes: tuple[Axis, ...] = ()
    angles_deg: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if len(self.axes) != len(self.angles_deg):
            raise LengthMismatch(
                f"{len(self.axes)} axes vs {len(self.angles_deg)} angles"
            )
        for a in self.angles_deg:
            if not math.isfinite(a):
                raise GeometryError(f"non-finite rotation angle: {a}")


@dataclass(frozen=True)
class LinkGeometry:
    """Distance plus inclination/azimuth of one link endpoint seen from the other."""

    distance: float
    inclination_rad: float
    azimuth_rad: float


@dataclass(frozen=True)
class BuildingBox:
    """Axis-aligned box obstacle, min corner plus edge lengths."""

    min_corner: Vec3
    size: Vec3

    def __post_init__(self) -> None:
        if min(self.size.x, self.size.y, self.size.z) <= 0:
            raise GeometryError(f"building size must be positive, got {self.size}")

    @property
    def max_corner(self) -> Vec3:
        return self.min_corner + self.size

    @classmethod
    def from_footprint_center(cls, center_x: float, center_y: float, size: Vec3) -> "BuildingBox":
        """Box whose ground footprint is centered at (center_x, center_y), base at z=0."""
        return cls(Vec3(center_x - size.x / 2.0, center_y - size.y / 2.0, 0.0), size)


def distance(a: Vec3, b: Vec3) -> float:
    """Euclidean distance between two points."""
    return (a - b).norm()


def _clamp_unit(x: float) -> float:
    # absorbs rounding at near-vertical links before acos
    return max(-1.0, min(1.0, x))


def link_geometry(a: Vec3, b: Vec3) -> LinkGeometry:
    """Distance, inclination, and azimuth of a as seen from b.

    Raises ZeroDistance when the points coincide. The azimuth is mapped to
    (-pi, pi], the inclination to [0, pi].
    """
    d = distance(a, b)
    if d == 0.0:
        raise ZeroDistance(f"coincident points at ({a.x}, {a.y}, {a.z})")
    inclination = math.acos(_clamp_unit((a.z - b.z) / d))
    azimuth = math.atan2(a.y - b.y, a.x - b.x)
    if azimuth == -math.pi:
        azimuth = math.pi
    return LinkGeometry(distance=d, inclination_rad=inclination, azimuth_rad=azimuth)


def _elementary_rotation(axis: Axis, angle_deg: float) -> np.ndarray:
    a = math.radians(angle_deg)
    c, s = math.cos(a), math.sin(a)
    if axis is Axis.X:
        return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    if axis is Axis.Y:
        return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_matrix(seq: RotationSequence) -> np.ndarray:
    """Compose the sequence into one orthonormal matrix.

    The first listed rotation is applied first: R = R_n @ ... @ R_1.
    """
    out = np.eye(3)
    for axis, angle in zip(seq.axes, seq.angles_deg):
        out = _elementary_rotation(axis, angle) @ out
    return out


@dataclass(frozen=True)
class IrsFrame:
    """Pose of a reflective surface: center position plus rotation from world axes.

    The surface lattice lies in the local xy plane with the normal along
    local +z; an unrotated surface faces straight up.
    """

    center: Vec3
    rotation: RotationSequence = RotationSequence()

    @cached_property
    def matrix(self) -> np.ndarray:
        return rotation_matrix(self.rotation)

    def to_local(self, point: Vec3) -> Vec3:
        v = self.matrix.T @ (point - self.center).as_array()
        return Vec3(float(v[0]), float(v[1]), float(v[2]))

    def to_world(self, point_local: Vec3) -> Vec3:
        v = self.matrix @ point_local.as_array()
        return Vec3(float(v[0]) + self.center.x, float(v[1]) + self.center.y, float(v[2]) + self.center.z)


def to_irs_frame(point: Vec3, irs_center: Vec3, seq: RotationSequence) -> Vec3:
    """Express a world point in the surface-local frame."""
    return IrsFrame(irs_center, seq).to_local(point)


def from_irs_frame(point_local: Vec3, irs_center: Vec3, seq: RotationSequence) -> Vec3:
    """Inverse of to_irs_frame."""
    return IrsFrame(irs_center, seq).to_world(point_local)


# Divisors below this are treated as axis-parallel in the slab test; the
# substituted tiny denominator keeps interior/exterior decisions correct.
_SLAB_EPS = 1e-12


def los_blocked_batch(a: Vec3, targets: np.ndarray, buildings: Sequence[BuildingBox]) -> np.ndarray:
    """Segment-vs-box interior test from one origin to many targets.

    targets has shape (n, 3). Returns a boolean array: True where the open
    segment (a, target) passes through any box interior (slab method clipped
    to the segment).
    """
    targets = np.asarray(targets, dtype=float)
    n = targets.shape[0]
    blocked = np.zeros(n, dtype=bool)
    if not buildings or n == 0:
        return blocked
    origin = a.as_array()
    d = targets - origin[None, :]
    d_safe = np.where(np.abs(d) < _SLAB_EPS, _SLAB_EPS, d)
    for box in buildings:
        lo = box.min_corner.as_array()
        hi = box.max_corner.as_array()
        t0 = (lo[None, :] - origin[None, :]) / d_safe
        t1 = (hi[None, :] - origin[None, :]) / d_safe
        tmin = np.minimum(t0, t1).max(axis=1)
        tmax = np.maximum(t0, t1).min(axis=1)
        enter = np.maximum(tmin, 0.0)
        leave = np.minimum(tmax, 1.0)
        blocked |= enter < leave
    return blocked


def los_blocked(a: Vec3, b: Vec3, buildings: Sequence[BuildingBox] | Iterable[BuildingBox]) -> bool:
    """True iff the open segment (a, b) intersects any building interior."""
    if a == b:
        raise ZeroDistance("LoS test needs distinct endpoints")
    boxes = list(buildings)
    if not boxes:
        return False
    return bool(los_blocked_batch(a, b.as_array()[None, :], boxes)[0])
