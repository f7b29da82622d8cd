"""Exact element-level sampler vs the closed-form statistics."""

import math

import numpy as np
import pytest

from irssim.channel import (
    ChannelParams,
    ExactChannelSnapshot,
    PatchChannel,
    cascaded_terms,
    combine_stats,
    direct_link_terms,
    hop_geometry,
    kappa_bar,
    kappa_tilde,
    sample_exact_gain,
)
from irssim.geometry import Axis, IrsFrame, RotationSequence, Vec3, link_geometry
from irssim.irs import IrsSpec, PatchSpec, PhaseParams, element_offsets, optimal_phases, patch_layout

BS = Vec3(100, 200, 30)
GU = Vec3(300, 200, 0)

# K-factors of 300 dB make kbar collapse to exactly 1.0 in doubles, which
# is the no-scatter limit of the model
PURE_LOS = ChannelParams(carrier_hz=5.15e9, alpha_direct=3.0,
                         k_min_db=300.0, k_max_db=300.0, k_nlos_db=300.0)
FADED = ChannelParams(carrier_hz=5.15e9, alpha_direct=3.0)


def build_snapshot(params, uavs, patch_splits, phases=None, rng=None, with_direct=True):
    """Closed-form terms plus the matching element-level snapshot."""
    terms = []
    patches = []
    for ui, (uav, rot, spec) in enumerate(uavs):
        frame = IrsFrame(uav, rot)
        bu = hop_geometry(frame, uav, BS, params, True)
        ug = hop_geometry(frame, uav, GU, params, True)
        for patch in patch_splits[ui]:
            if phases is None:
                ph = optimal_phases(frame.to_local(BS), frame.to_local(GU))
            elif phases == "random":
                ph = PhaseParams(float(rng.uniform(-2, 2)), float(rng.uniform(-2, 2)))
            else:
                ph = phases
            layout = patch_layout(spec, patch)
            t = cascaded_terms(BS, uav, GU, frame, ph, layout, params,
                               uav_key=f"u{ui}", n_elems_surface=spec.n_elements)
            terms.append(t)
            ox, oy = element_offsets(spec, patch)
            patches.append(PatchChannel(
                eta=t.eta, ell=t.ell,
                kbar_bu=kappa_bar(bu.kappa), ktilde_bu=kappa_tilde(bu.kappa),
                kbar_ug=kappa_bar(ug.kappa), ktilde_ug=kappa_tilde(ug.kappa),
                ax_bu=bu.ax, ay_bu=bu.ay, ax_ug=ug.ax, ay_ug=ug.ay,
                omega_bu=params.ell_for * bu.distance,
                omega_ug=params.ell_for * ug.distance,
                phi_x=ph.phi_x, phi_y=ph.phi_y, off_x=ox, off_y=oy,
            ))
    direct = direct_link_terms(link_geometry(BS, GU), params, True) if with_direct else None
    stats = combine_stats(terms, direct)
    return stats, ExactChannelSnapshot(direct=direct, patches=tuple(patches))


def random_split(rng, spec):
    """Split the lattice into 1, 2, or 4 non-overlapping rectangles."""
    mode = int(rng.integers(0, 3))
    cmax, rmax = spec.columns - 1, spec.rows - 1
    if mode == 0 or spec.columns < 2 or spec.rows < 2:
        return [PatchSpec(0, cmax, 0, rmax)]
    cut_c = int(rng.integers(1, spec.columns))
    if mode == 1:
        return [PatchSpec(0, cut_c - 1, 0, rmax), PatchSpec(cut_c, cmax, 0, rmax)]
    cut_r = int(rng.integers(1, spec.rows))
    return [
        PatchSpec(0, cut_c - 1, 0, cut_r - 1),
        PatchSpec(cut_c, cmax, 0, cut_r - 1),
        PatchSpec(0, cut_c - 1, cut_r, rmax),
        PatchSpec(cut_c, cmax, cut_r, rmax),
    ]


class TestPureLosIdentity:
    def test_random_multi_uav_multi_patch(self):
        # pins every sign and index convention of the coherent sum
        rng = np.random.default_rng(42)
        axes = (Axis.X, Axis.Y, Axis.Z)
        for _ in range(100):
            uavs = []
            splits = []
            for _u in range(int(rng.integers(1, 3))):
                uav = Vec3(float(rng.uniform(50, 350)), float(rng.uniform(50, 350)),
                           float(rng.uniform(40, 120)))
                rot = RotationSequence(
                    (Axis.X, axes[int(rng.integers(0, 3))]),
                    (180.0, float(rng.uniform(0, 360))),
                )
                spec = IrsSpec(rows=int(rng.integers(2, 12)), columns=int(rng.integers(2, 12)),
                               pru_x=0.01, pru_y=0.01, rotation=rot)
                uavs.append((uav, rot, spec))
                splits.append(random_split(rng, spec))
            stats, snap = build_snapshot(PURE_LOS, uavs, splits, phases="random", rng=rng)
            gamma = sample_exact_gain(np.random.default_rng(0), snap, 1)[0]
            nu = math.sqrt(stats.nu_sq)
            assert abs(gamma) == pytest.approx(nu, rel=1e-6)

    def test_empty_sample_request(self):
        uav = Vec3(200, 200, 75)
        rot = RotationSequence((Axis.X,), (180.0,))
        spec = IrsSpec(rows=4, columns=4, pru_x=0.01, pru_y=0.01, rotation=rot)
        _, snap = build_snapshot(PURE_LOS, [(uav, rot, spec)], [[PatchSpec(0, 3, 0, 3)]])
        out = sample_exact_gain(np.random.default_rng(0), snap, 0)
        assert out.shape == (0,)


class TestMoments:
    def _snapshot_8x8(self):
        uav = Vec3(200, 200, 75)
        rot = RotationSequence((Axis.X,), (180.0,))
        spec = IrsSpec(rows=8, columns=8, pru_x=0.01, pru_y=0.01, rotation=rot)
        return build_snapshot(FADED, [(uav, rot, spec)], [[PatchSpec(0, 7, 0, 7)]])

    def test_mean_power_tracks_omega(self):
        stats, snap = self._snapshot_8x8()
        samples = np.abs(sample_exact_gain(np.random.default_rng(5), snap, 30_000))
        mean_power = float(np.mean(samples**2))
        # 3 standard errors of the sample mean
        se = float(np.std(samples**2)) / math.sqrt(len(samples))
        assert abs(mean_power - stats.omega_pow) <= 3 * se

    def test_deterministic_pure_los_draws(self):
        uav = Vec3(200, 200, 75)
        rot = RotationSequence((Axis.X,), (180.0,))
        spec = IrsSpec(rows=4, columns=4, pru_x=0.01, pru_y=0.01, rotation=rot)
        _, snap = build_snapshot(PURE_LOS, [(uav, rot, spec)], [[PatchSpec(0, 3, 0, 3)]])
        s = np.abs(sample_exact_gain(np.random.default_rng(8), snap, 100))
        assert float(np.std(s)) / float(np.mean(s)) < 1e-12

    def test_identical_calls_identical_draws(self):
        stats, snap = self._snapshot_8x8()
        a = sample_exact_gain(np.random.default_rng(3), snap, 500)
        b = sample_exact_gain(np.random.default_rng(3), snap, 500)
        assert np.array_equal(a, b)

    def test_chunked_draws_share_statistics(self):
        stats, snap = self._snapshot_8x8()
        a = np.abs(sample_exact_gain(np.random.default_rng(3), snap, 4000, chunk=4000))
        b = np.abs(sample_exact_gain(np.random.default_rng(4), snap, 4000, chunk=137))
        assert np.mean(a**2) == pytest.approx(np.mean(b**2), rel=0.1)

    def test_monotone_array_gain(self):
        # quadrupling the element count adds 12.04 dB of coherent peak power
        uav = Vec3(200, 200, 75)
        rot = RotationSequence((Axis.X,), (180.0,))
        prev = None
        for n in (8, 16, 32):
            spec = IrsSpec(rows=n, columns=n, pru_x=0.01, pru_y=0.01, rotation=rot)
            stats, _ = build_snapshot(
                PURE_LOS, [(uav, rot, spec)], [[PatchSpec(0, n - 1, 0, n - 1)]],
                with_direct=False,
            )
            if prev is not None:
                gain_db = 10 * math.log10(stats.nu_sq / prev)
                assert gain_db == pytest.approx(12.0412, abs=0.01)
            prev = stats.nu_sq
