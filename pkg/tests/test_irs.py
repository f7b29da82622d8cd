import math

import numpy as np
import pytest

from irssim.geometry import Vec3
from irssim.irs import (
    DegenerateGeometry,
    EmptySchedule,
    IrsError,
    IrsSpec,
    PatchConfiguration,
    PatchSpec,
    PhaseParams,
    configuration_at,
    configuration_window_at,
    element_centers,
    element_offsets,
    element_phase,
    optimal_phases,
    patch_layout,
    validate_layout,
    wrap_phase,
)


def full_patch(spec):
    return PatchSpec(0, spec.columns - 1, 0, spec.rows - 1)


class TestElementCenters:
    def test_2x2_symmetric(self):
        spec = IrsSpec(rows=2, columns=2, pru_x=0.01, pru_y=0.01)
        centers = element_centers(spec, full_patch(spec))
        assert sorted(centers) == [(-0.005, -0.005), (-0.005, 0.005), (0.005, -0.005), (0.005, 0.005)]

    def test_1x1_at_origin(self):
        spec = IrsSpec(rows=1, columns=1, pru_x=0.01, pru_y=0.01)
        assert element_centers(spec, full_patch(spec)) == [(0.0, 0.0)]

    def test_100x100_extremes(self):
        spec = IrsSpec(rows=100, columns=100, pru_x=0.01, pru_y=0.01)
        centers = element_centers(spec, full_patch(spec))
        xs = [c[0] for c in centers]
        ys = [c[1] for c in centers]
        assert min(xs) == pytest.approx(-0.495) and max(xs) == pytest.approx(0.495)
        assert min(ys) == pytest.approx(-0.495) and max(ys) == pytest.approx(0.495)

    def test_offsets_consecutive(self):
        spec = IrsSpec(rows=4, columns=6, pru_x=0.01, pru_y=0.01)
        ox, oy = element_offsets(spec, PatchSpec(2, 4, 1, 3))
        assert ox.shape == (9,)
        assert sorted(set(ox)) == [-0.5, 0.5, 1.5]
        assert sorted(set(oy)) == [-0.5, 0.5, 1.5]

    def test_layout_center(self):
        spec = IrsSpec(rows=100, columns=100, pru_x=0.01, pru_y=0.01)
        left = patch_layout(spec, PatchSpec(0, 49, 0, 99))
        assert left.m_cols == 50 and left.m_rows == 100
        assert left.center_off_x == pytest.approx(-25.0)
        assert left.center_off_y == pytest.approx(0.0)


class TestValidateLayout:
    def setup_method(self):
        self.spec = IrsSpec(rows=100, columns=100, pru_x=0.01, pru_y=0.01)

    def test_split_in_half_ok(self):
        conf = PatchConfiguration(
            patches=(PatchSpec(0, 49, 0, 99), PatchSpec(50, 99, 0, 99)), period_s=1.0
        )
        assert validate_layout(self.spec, conf) == []

    def test_overlap_reported(self):
        conf = PatchConfiguration(
            patches=(PatchSpec(0, 50, 0, 99), PatchSpec(50, 99, 0, 99)), period_s=1.0
        )
        errors = validate_layout(self.spec, conf)
        assert len(errors) == 1 and "overlap" in errors[0]

    def test_out_of_bounds_reported(self):
        conf = PatchConfiguration(patches=(PatchSpec(0, 120, 0, 99),), period_s=1.0)
        errors = validate_layout(self.spec, conf)
        assert len(errors) == 1 and "bounds" in errors[0]

    def test_empty_patch_rejected_at_construction(self):
        with pytest.raises(IrsError):
            PatchSpec(5, 4, 0, 9)

    def test_one_element_overlap_detected(self):
        # every single-element shift of a valid split must be caught
        conf = PatchConfiguration(
            patches=(PatchSpec(0, 49, 0, 99), PatchSpec(49, 99, 0, 99)), period_s=1.0
        )
        assert validate_layout(self.spec, conf)

    def test_square_elements_enforced(self):
        with pytest.raises(IrsError):
            IrsSpec(rows=10, columns=10, pru_x=0.01, pru_y=0.02)


class TestOptimalPhases:
    def test_both_on_normal(self):
        ph = optimal_phases(Vec3(0, 0, 100), Vec3(0, 0, 50))
        assert ph.phi_x == pytest.approx(0.0) and ph.phi_y == pytest.approx(0.0)

    def test_mirror_symmetric_cancels_x(self):
        ph = optimal_phases(Vec3(-30, 10, 40), Vec3(30, 10, 40))
        assert ph.phi_x == pytest.approx(0.0, abs=1e-15)

    def test_degenerate(self):
        with pytest.raises(DegenerateGeometry):
            optimal_phases(Vec3(0, 0, 0), Vec3(1, 1, 1))

    def test_cancels_direction_cosines(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            bs = Vec3(*(float(v) for v in rng.uniform(-100, 100, 3)))
            gu = Vec3(*(float(v) for v in rng.uniform(-100, 100, 3)))
            if bs.norm() == 0 or gu.norm() == 0:
                continue
            ph = optimal_phases(bs, gu)
            psi_x = bs.x / bs.norm() + gu.x / gu.norm() + ph.phi_x
            psi_y = bs.y / bs.norm() + gu.y / gu.norm() + ph.phi_y
            assert abs(psi_x) < 1e-12 and abs(psi_y) < 1e-12


class TestElementPhase:
    def test_zero_params(self):
        ph = PhaseParams(0.0, 0.0)
        for i in (-3, 0, 4):
            assert element_phase(ph, i, i, 1.0) == 0.0

    def test_wrap_boundary(self):
        # pi wraps to -pi
        ph = PhaseParams(1.0, 1.0)
        assert element_phase(ph, 1, 1, math.pi) == pytest.approx(-math.pi)

    def test_matches_direct_formula(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            ph = PhaseParams(float(rng.uniform(-3, 3)), float(rng.uniform(-3, 3)))
            i, ip = int(rng.integers(-50, 51)), int(rng.integers(-50, 51))
            ell = float(rng.uniform(0.1, 2.0))
            raw = ell * ((i - 0.5) * ph.phi_x + (ip - 0.5) * ph.phi_y)
            got = element_phase(ph, i, ip, ell)
            assert -math.pi <= got < math.pi
            assert math.cos(got) == pytest.approx(math.cos(raw), abs=1e-9)
            assert math.sin(got) == pytest.approx(math.sin(raw), abs=1e-9)

    def test_odd_under_reflection(self):
        # reflecting (i - 1/2) about the lattice center negates the phase
        ph = PhaseParams(0.7, 0.7)
        ell = 1.3
        for i, ip in ((2, 5), (-1, 3), (4, 4)):
            a = element_phase(ph, i, ip, ell)
            b = element_phase(ph, 1 - i, 1 - ip, ell)
            assert wrap_phase(a + b) == pytest.approx(0.0, abs=1e-12)


class TestConfigurationAt:
    def setup_method(self):
        p = PatchSpec(0, 9, 0, 9)
        self.schedule = [
            PatchConfiguration(patches=(p,), period_s=5.0),
            PatchConfiguration(patches=(p, p), period_s=10.0),
        ]

    def test_first_window(self):
        assert configuration_at(self.schedule, 3.0) is self.schedule[0]

    def test_half_open_boundary(self):
        assert configuration_at(self.schedule, 5.0) is self.schedule[1]

    def test_last_persists(self):
        assert configuration_at(self.schedule, 99.0) is self.schedule[1]
        idx, start = configuration_window_at(self.schedule, 99.0)
        assert idx == 1 and start == 5.0

    def test_empty_schedule(self):
        with pytest.raises(EmptySchedule):
            configuration_at([], 0.0)
