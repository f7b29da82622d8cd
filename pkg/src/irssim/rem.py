"""Radio environment maps: downlink SINR over a ground lattice.

Every lattice point acts as a wideband virtual receiver: it sees the
direct link plus every patch reflection with the phases currently serving
the real assigned users, so off-target points show the sidelobes. All
per-point math is independent, which makes row-chunked and whole-grid
evaluation bit-identical in BOUND mode; REALIZED mode derives its noise
per row for the same reason.
"""

from __future__ import annotations

import math

import numpy as np

from .channel import (
    db_to_linear,
    dirichlet_kernel_array,
    gamma_eps_array,
    MultipathMode,
)
from .config import RemMode, ScenarioConfig
from .engine import SnapshotState, dbm_to_w, noise_power_w, step
from .geometry import los_blocked_batch
from .irs import patch_layout
from .output import RemGrid, grid_samples

__all__ = ["generate_rem"]


def _kappa_law_array(theta: np.ndarray, k_min_db: float, k_max_db: float) -> np.ndarray:
    k_min = db_to_linear(k_min_db)
    k_max = db_to_linear(k_max_db)
    log_ratio = math.log(k_max / k_min) if k_max != k_min else 0.0
    return k_min * np.exp((2.0 / math.pi) * log_ratio * np.abs(math.pi / 2.0 - theta))


def _point_stats(
    config: ScenarioConfig,
    state: SnapshotState,
    px: np.ndarray,
    py: np.ndarray,
    z: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-point coherent power, scattered power, and coherent phasor."""
    params = config.channel
    bs = config.base_station
    n = px.shape[0]
    pts = np.column_stack((px, py, np.full(n, z)))

    # direct link
    dx = bs.position.x - px
    dy = bs.position.y - py
    dz = bs.position.z - z
    d_bg = np.sqrt(dx * dx + dy * dy + dz * dz)
    d_amp = np.maximum(d_bg, 1.0)
    if params.no_direct_link:
        lam_sq = np.zeros(n)
    else:
        lam_sq = params.beta_bg * d_amp ** (-params.alpha_direct) * params.pattern_bg
    blocked = los_blocked_batch(bs.position, pts, config.world.buildings)
    with np.errstate(invalid="ignore"):
        theta_bg = np.arccos(np.clip(dz / np.where(d_bg == 0.0, 1.0, d_bg), -1.0, 1.0))
    kap_bg = np.where(
        blocked,
        db_to_linear(params.k_nlos_db),
        _kappa_law_array(theta_bg, params.k_min_db, params.k_max_db),
    )
    kbar_bg = kap_bg / (kap_bg + 1.0)
    ktilde_bg = 1.0 / (kap_bg + 1.0)
    omega0 = params.ell_for * d_bg
    direct_amp = np.sqrt(lam_sq * kbar_bg)
    direct_coh = direct_amp * np.exp(-1j * omega0)

    refl_sum = np.zeros(n, dtype=complex)
    abs_sum = np.zeros(n)
    diffuse = np.zeros(n)
    if not params.no_irs_link:
        for drone in config.drones:
            pos = state.drone_positions[drone.id]
            frame = state.frames[drone.id]
            rot = frame.matrix
            bs_local = frame.to_local(bs.position)
            d_bu = (bs.position - pos).norm()
            ax_bu = bs_local.x / d_bu
            ay_bu = bs_local.y / d_bu
            cos_bu = bs_local.z / d_bu
            bu_blocked = los_blocked_batch(bs.position, pos.as_array()[None, :], config.world.buildings)[0]
            theta_bu = math.acos(max(-1.0, min(1.0, (bs.position.z - pos.z) / d_bu)))
            if bu_blocked:
                kap_bu = db_to_linear(params.k_nlos_db)
            else:
                kap_bu = float(
                    _kappa_law_array(np.array([theta_bu]), params.k_min_db, params.k_max_db)[0]
                )

            rel = pts - pos.as_array()[None, :]
            local = rel @ rot  # row vectors: local = R^T v
            d_ug = np.sqrt((rel * rel).sum(axis=1))
            d_ug_safe = np.where(d_ug == 0.0, 1.0, d_ug)
            ax_ug = local[:, 0] / d_ug_safe
            ay_ug = local[:, 1] / d_ug_safe
            cos_ug = local[:, 2] / d_ug_safe
            ug_blocked = los_blocked_batch(pos, pts, config.world.buildings)
            theta_ug = np.arccos(np.clip((pos.z - z) / d_ug_safe, -1.0, 1.0))
            kap_ug = np.where(
                ug_blocked,
                db_to_linear(params.k_nlos_db),
                _kappa_law_array(theta_ug, params.k_min_db, params.k_max_db),
            )
            kbar_bu = kap_bu / (kap_bu + 1.0)
            ktilde_bu = 1.0 / (kap_bu + 1.0)
            kbar_ug = kap_ug / (kap_ug + 1.0)
            ktilde_ug = 1.0 / (kap_ug + 1.0)
            kbar_bug = kbar_bu * kbar_ug
            ktilde_bug = kbar_bu * ktilde_ug + ktilde_bu * kbar_ug

            pattern = np.full(n, params.pattern_bug)
            q = params.pattern_cos_exponent
            if q > 0.0:
                pattern = pattern * (
                    max(cos_bu, 0.0) ** q * np.clip(cos_ug, 0.0, None) ** q
                )
            eta = np.sqrt(params.beta_bug * pattern) / (
                max(d_bu, 1.0) * np.maximum(d_ug, 1.0)
            )
            omega = params.ell_for * (d_bu + d_ug)
            diffuse += drone.irs.n_elements * eta * eta * ktilde_bug

            for asg in state.assignments[drone.id]:
                layout = patch_layout(drone.irs, asg.patch)
                ell = params.wavenumber_ell(layout.pru)
                psi_x = ax_bu + ax_ug + asg.phases.phi_x
                psi_y = ay_bu + ay_ug + asg.phases.phi_y
                d_x = dirichlet_kernel_array(ell * psi_x / 2.0, layout.m_cols)
                d_y = dirichlet_kernel_array(ell * psi_y / 2.0, layout.m_rows)
                offset = ell * (layout.center_off_x * psi_x + layout.center_off_y * psi_y)
                mu = eta * np.sqrt(kbar_bug) * d_x * d_y * np.exp(1j * (offset - omega))
                refl_sum += mu
                abs_sum += np.abs(mu)

    two_sigma_sq = diffuse + lam_sq * ktilde_bg
    mode = params.multipath_mode
    if mode is MultipathMode.SIMULATED:
        nu_sq = np.abs(refl_sum + direct_coh) ** 2
    else:
        base = np.abs(refl_sum) ** 2 + direct_amp * direct_amp
        cross = 2.0 * abs_sum * direct_amp
        if mode is MultipathMode.CONSTRUCTIVE:
            nu_sq = base + cross
        else:
            nu_sq = np.maximum(base - cross, 0.0)
    return nu_sq, two_sigma_sq, refl_sum + direct_coh


def generate_rem(
    config: ScenarioConfig,
    t: float,
    z_m: float | None = None,
    resolution: float | None = None,
    mode: RemMode | None = None,
    *,
    origin_m: tuple[float, float] = (0.0, 0.0),
    extent_m: tuple[float, float] | None = None,
    chunk_rows: int | None = None,
    seed: int | None = None,
) -> RemGrid:
    """Downlink SINR map at time t over the area lattice.

    The lattice places samples at origin + k/sqrt(resolution) along each
    axis. chunk_rows bounds how many rows are evaluated per pass without
    changing the result.
    """
    z = config.rem.z_m if z_m is None else z_m
    res = config.rem.resolution_samples_per_m2 if resolution is None else resolution
    mode = config.rem.mode if mode is None else mode
    extent = config.world.area_m if extent_m is None else extent_m
    if res <= 0:
        raise ValueError(f"resolution must be positive, got {res}")

    state = step(config, t)
    nx = grid_samples(extent[0], res)
    ny = grid_samples(extent[1], res)
    if nx < 1 or ny < 1:
        raise ValueError(f"degenerate grid {nx}x{ny}; enlarge the extent or resolution")
    step_m = 1.0 / math.sqrt(res)
    xs = origin_m[0] + np.arange(nx) * step_m
    ys = origin_m[1] + np.arange(ny) * step_m

    tx_w = dbm_to_w(config.base_station.tx_power_dbm)
    noise = noise_power_w(config.bandwidth_hz, config.noise_figure_ue_db)
    seed_base = config.sim.seed if seed is None else seed
    t_key = int(round(t * 1e6))

    values = np.empty((ny, nx))
    block = ny if chunk_rows is None else max(1, chunk_rows)
    for r0 in range(0, ny, block):
        r1 = min(r0 + block, ny)
        yy, xx = np.meshgrid(ys[r0:r1], xs, indexing="ij")
        px = xx.ravel()
        py = yy.ravel()
        nu_sq, two_sigma_sq, coh = _point_stats(config, state, px, py, z)
        if mode is RemMode.BOUND:
            gain = gamma_eps_array(nu_sq, two_sigma_sq, config.channel.outage_eps)
        else:
            gain = np.empty(px.shape[0])
            for iy in range(r0, r1):
                sl = slice((iy - r0) * nx, (iy - r0 + 1) * nx)
                rng = np.random.default_rng((seed_base, t_key, iy))
                noise_c = math.sqrt(0.5) * (
                    rng.standard_normal(nx) + 1j * rng.standard_normal(nx)
                )
                g = coh[sl] + np.sqrt(two_sigma_sq[sl]) * noise_c
                gain[sl] = np.abs(g) ** 2
        sinr = tx_w * gain / noise
        with np.errstate(divide="ignore"):
            values[r0:r1, :] = (10.0 * np.log10(sinr)).reshape(r1 - r0, nx)
    return RemGrid(
        origin_m=origin_m,
        extent_m=(float(extent[0]), float(extent[1])),
        resolution_samples_per_m2=res,
        z_m=z,
        t_s=t,
        values=values,
    )
