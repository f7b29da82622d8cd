"""Time-parameterized positions: hover, circular orbit, waypoint paths."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .geometry import Vec3

__all__ = ["MobilityError", "MobilityKind", "CircleSpec", "MobilityModel", "position_at"]


class MobilityError(ValueError):
    """Invalid mobility description."""


class MobilityKind(str, Enum):
    STATIC = "STATIC"
    CIRCULAR = "CIRCULAR"
    WAYPOINT = "WAYPOINT"


@dataclass(frozen=True)
class CircleSpec:
    """Horizontal orbit at the center's altitude.

    direction +1 is counter-clockwise viewed from above, -1 clockwise.
    """

    center: Vec3
    radius_m: float
    speed_mps: float
    start_angle_rad: float = 0.0
    direction: int = 1

    def __post_init__(self) -> None:
        if self.radius_m <= 0:
            raise MobilityError(f"orbit radius must be positive, got {self.radius_m}")
        if self.speed_mps < 0:
            raise MobilityError(f"orbit speed must be nonnegative, got {self.speed_mps}")
        if self.direction not in (-1, 1):
            raise MobilityError(f"orbit direction must be +-1, got {self.direction}")


@dataclass(frozen=True)
class MobilityModel:
    kind: MobilityKind
    static_pos: Vec3 | None = None
    circle: CircleSpec | None = None
    waypoints: tuple[tuple[Vec3, float], ...] = ()

    def __post_init__(self) -> None:
        if self.kind is MobilityKind.STATIC and self.static_pos is None:
            raise MobilityError("STATIC mobility needs a position")
        if self.kind is MobilityKind.CIRCULAR and self.circle is None:
            raise MobilityError("CIRCULAR mobility needs a circle spec")
        if self.kind is MobilityKind.WAYPOINT:
            if not self.waypoints:
                raise MobilityError("WAYPOINT mobility needs at least one waypoint")
            times = [t for _, t in self.waypoints]
            if any(b <= a for a, b in zip(times, times[1:])):
                raise MobilityError(f"waypoint times must increase strictly, got {times}")


def position_at(model: MobilityModel, t: float) -> Vec3:
    """Position at time t (>= 0); waypoint paths clamp at both ends."""
    if t < 0:
        raise MobilityError(f"negative time {t}")
    if model.kind is MobilityKind.STATIC:
        assert model.static_pos is not None
        return model.static_pos
    if model.kind is MobilityKind.CIRCULAR:
        c = model.circle
        assert c is not None
        angle = c.start_angle_rad + c.direction * (c.speed_mps / c.radius_m) * t
        return Vec3(
            c.center.x + c.radius_m * math.cos(angle),
            c.center.y + c.radius_m * math.sin(angle),
            c.center.z,
        )
    pts = model.waypoints
    if t <= pts[0][1]:
        return pts[0][0]
    if t >= pts[-1][1]:
        return pts[-1][0]
    for (p0, t0), (p1, t1) in zip(pts, pts[1:]):
        if t0 <= t <= t1:
            frac = (t - t0) / (t1 - t0)
            return p0 + (p1 - p0).scaled(frac)
    return pts[-1][0]
