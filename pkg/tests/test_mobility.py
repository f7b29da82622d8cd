import math

import numpy as np
import pytest

from irssim.geometry import Vec3, distance
from irssim.mobility import CircleSpec, MobilityError, MobilityKind, MobilityModel, position_at

HOVER = MobilityModel(kind=MobilityKind.STATIC, static_pos=Vec3(200, 200, 75))

ORBIT = MobilityModel(
    kind=MobilityKind.CIRCULAR,
    circle=CircleSpec(center=Vec3(200, 200, 50), radius_m=150.0, speed_mps=10.0,
                      start_angle_rad=math.pi, direction=-1),
)

PATH = MobilityModel(
    kind=MobilityKind.WAYPOINT,
    waypoints=((Vec3(0, 0, 10), 1.0), (Vec3(10, 0, 10), 2.0), (Vec3(10, 20, 10), 4.0)),
)


class TestStatic:
    def test_constant(self):
        for t in (0.0, 3.7, 1e4):
            assert position_at(HOVER, t) == Vec3(200, 200, 75)


class TestCircular:
    def test_on_circle_always(self):
        for t in np.linspace(0, 200, 57):
            p = position_at(ORBIT, float(t))
            assert distance(p, Vec3(200, 200, 50)) == pytest.approx(150.0, abs=1e-9)
            assert p.z == 50.0

    def test_third_arc_lands_rotated(self):
        # independent oracle: rotate the start point by the swept angle
        arc_t = 2 * math.pi * 150 / 10 / 3
        p = position_at(ORBIT, arc_t)
        swept = -(10.0 / 150.0) * arc_t  # clockwise
        start = np.array([200 - 150, 200, 50])
        c, s = math.cos(swept), math.sin(swept)
        rel = start[:2] - np.array([200, 200])
        want = np.array([200, 200]) + np.array([c * rel[0] - s * rel[1], s * rel[0] + c * rel[1]])
        assert p.x == pytest.approx(want[0], abs=1e-9)
        assert p.y == pytest.approx(want[1], abs=1e-9)
        # one third of the orbit takes ~31.416 s at 10 m/s on r=150
        assert arc_t == pytest.approx(31.4159265, abs=1e-6)

    def test_speed_matches_numeric_derivative(self):
        delta = 1e-6
        for t in (0.0, 17.3, 80.0):
            a = position_at(ORBIT, t)
            b = position_at(ORBIT, t + delta)
            assert distance(a, b) / delta == pytest.approx(10.0, rel=1e-6)

    def test_validation(self):
        with pytest.raises(MobilityError):
            CircleSpec(center=Vec3(0, 0, 0), radius_m=-1.0, speed_mps=1.0)
        with pytest.raises(MobilityError):
            CircleSpec(center=Vec3(0, 0, 0), radius_m=1.0, speed_mps=1.0, direction=2)


class TestWaypoint:
    def test_clamp_before_first(self):
        assert position_at(PATH, 0.0) == Vec3(0, 0, 10)

    def test_clamp_after_last(self):
        assert position_at(PATH, 100.0) == Vec3(10, 20, 10)

    def test_linear_interpolation(self):
        p = position_at(PATH, 1.5)
        assert (p.x, p.y, p.z) == (5.0, 0.0, 10.0)
        p = position_at(PATH, 3.0)
        assert (p.x, p.y, p.z) == (10.0, 10.0, 10.0)

    def test_continuity(self):
        # no jumps beyond segment speed times the probe step
        dt = 1e-4
        max_speed = 10.0  # fastest segment in PATH
        ts = np.arange(0.0, 5.0, dt)
        prev = position_at(PATH, 0.0)
        for t in ts[1:]:
            cur = position_at(PATH, float(t))
            assert distance(cur, prev) <= max_speed * dt * 1.01
            prev = cur

    def test_times_strictly_increasing(self):
        with pytest.raises(MobilityError):
            MobilityModel(
                kind=MobilityKind.WAYPOINT,
                waypoints=((Vec3(0, 0, 0), 1.0), (Vec3(1, 0, 0), 1.0)),
            )

    def test_negative_time(self):
        with pytest.raises(MobilityError):
            position_at(HOVER, -0.1)
