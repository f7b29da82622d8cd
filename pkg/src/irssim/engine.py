"""Deterministic time-stepped simulation loop.

Each step resolves mobility, the active patch configuration, the serving
assignments (with freshly pointed phases), and per-user LoS states; KPI
evaluation is a pure function of that snapshot. Policy clocks run local to
the active configuration window, so a reconfiguration restarts its serving
schedules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .channel import (
    AllLinksSuppressed,
    CascadedLinkTerms,
    DirectLinkTerms,
    ExactChannelSnapshot,
    PatchChannel,
    cascaded_kappas,
    cascaded_terms,
    combine_stats,
    direct_link_terms,
    gain_lowerbound,
    hop_geometry,
    kappa_bar,
    kappa_tilde,
    sample_exact_gain,
)
from .config import NodeRole, ScenarioConfig
from .geometry import IrsFrame, Vec3, link_geometry, los_blocked
from .irs import configuration_window_at, element_offsets, optimal_phases, patch_layout
from .mobility import position_at
from .output import rate as map_rate
from .scheduling import PatchAssignment, ServingPair, assignments_at

__all__ = [
    "EngineError",
    "UnknownNode",
    "Direction",
    "EvalMode",
    "KpiRecord",
    "SnapshotState",
    "noise_power_w",
    "step",
    "gather_terms",
    "evaluate_gu",
    "build_exact_snapshot",
    "run",
]

BOLTZMANN = 1.380649e-23
NOISE_TEMPERATURE_K = 290.0


class EngineError(ValueError):
    """Invalid engine request."""


class UnknownNode(EngineError):
    """A node id is not part of the scenario."""


class Direction(str, Enum):
    UPLINK = "UPLINK"
    DOWNLINK = "DOWNLINK"


class EvalMode(str, Enum):
    BOUND = "BOUND"
    REALIZED = "REALIZED"


@dataclass(frozen=True)
class KpiRecord:
    t_s: float
    gu_id: str
    direction: Direction
    gain_linear: float
    sinr_db: float
    rate_bps: float
    served: bool


@dataclass(frozen=True, eq=False)
class SnapshotState:
    """World state at one instant, sufficient for any KPI evaluation."""

    t: float
    drone_positions: dict[str, Vec3]
    frames: dict[str, IrsFrame]
    config_index: dict[str, int]
    assignments: dict[str, tuple[PatchAssignment, ...]]
    direct_los: dict[str, bool]


def noise_power_w(bandwidth_hz: float, noise_figure_db: float) -> float:
    """Thermal noise power over the bandwidth at 290 K plus the noise figure."""
    return BOLTZMANN * NOISE_TEMPERATURE_K * bandwidth_hz * 10.0 ** (noise_figure_db / 10.0)


def dbm_to_w(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def step(config: ScenarioConfig, t: float) -> SnapshotState:
    """Resolve the deterministic world snapshot at time t."""
    if t < 0 or t > config.sim.duration_s + 1e-9:
        raise EngineError(f"time {t} outside the mission window [0, {config.sim.duration_s}]")
    bs = config.base_station
    positions: dict[str, Vec3] = {}
    frames: dict[str, IrsFrame] = {}
    config_index: dict[str, int] = {}
    assignments: dict[str, tuple[PatchAssignment, ...]] = {}
    for drone in config.drones:
        pos = position_at(drone.mobility, t)
        frame = IrsFrame(center=pos, rotation=drone.irs.rotation)
        idx, window_start = configuration_window_at(drone.schedule, t)
        conf = drone.schedule[idx]
        policies = drone.policies[idx]
        t_local = t - window_start

        def phase_for(pair: ServingPair, _frame=frame):
            bs_node = config.node(pair.bs_node_id)
            gu_node = config.node(pair.gu_node_id)
            return optimal_phases(_frame.to_local(bs_node.position), _frame.to_local(gu_node.position))

        positions[drone.id] = pos
        frames[drone.id] = frame
        config_index[drone.id] = idx
        assignments[drone.id] = tuple(assignments_at(conf, policies, t_local, phase_for))
    direct_los = {
        gu.id: not los_blocked(bs.position, gu.position, config.world.buildings)
        for gu in config.ground_users
    }
    return SnapshotState(
        t=t,
        drone_positions=positions,
        frames=frames,
        config_index=config_index,
        assignments=assignments,
        direct_los=direct_los,
    )


def gather_terms(
    config: ScenarioConfig,
    state: SnapshotState,
    rx: Vec3,
    only_gu: str | None,
    direct_los: bool | None = None,
) -> tuple[DirectLinkTerms, list[CascadedLinkTerms]]:
    """Direct and reflected closed-form terms toward a receive point.

    only_gu filters reflected contributions to patches assigned to that
    user (per-subcarrier isolation); None keeps every patch, which is the
    wideband-probe view used by environment maps.
    """
    bs = config.base_station
    params = config.channel
    if direct_los is None:
        direct_los = not los_blocked(bs.position, rx, config.world.buildings)
    direct = direct_link_terms(link_geometry(bs.position, rx), params, direct_los)
    cascades: list[CascadedLinkTerms] = []
    if not params.no_irs_link:
        for drone in config.drones:
            pos = state.drone_positions[drone.id]
            frame = state.frames[drone.id]
            bu_los = not los_blocked(bs.position, pos, config.world.buildings)
            ug_los = not los_blocked(pos, rx, config.world.buildings)
            for asg in state.assignments[drone.id]:
                if only_gu is not None and asg.pair.gu_node_id != only_gu:
                    continue
                cascades.append(
                    cascaded_terms(
                        bs.position,
                        pos,
                        rx,
                        frame,
                        asg.phases,
                        patch_layout(drone.irs, asg.patch),
                        params,
                        bu_los=bu_los,
                        ug_los=ug_los,
                        uav_key=drone.id,
                        n_elems_surface=drone.irs.n_elements,
                    )
                )
    return direct, cascades


def build_exact_snapshot(
    config: ScenarioConfig, state: SnapshotState, gu_id: str
) -> ExactChannelSnapshot:
    """Element-level channel description for the exact sampler."""
    gu = config.node(gu_id)
    bs = config.base_station
    params = config.channel
    direct = direct_link_terms(
        link_geometry(bs.position, gu.position), params, state.direct_los[gu_id]
    )
    patches: list[PatchChannel] = []
    if not params.no_irs_link:
        for drone in config.drones:
            pos = state.drone_positions[drone.id]
            frame = state.frames[drone.id]
            bu_los = not los_blocked(bs.position, pos, config.world.buildings)
            ug_los = not los_blocked(pos, gu.position, config.world.buildings)
            bu = hop_geometry(frame, pos, bs.position, params, bu_los)
            ug = hop_geometry(frame, pos, gu.position, params, ug_los)
            for asg in state.assignments[drone.id]:
                if asg.pair.gu_node_id != gu_id:
                    continue
                layout = patch_layout(drone.irs, asg.patch)
                off_x, off_y = element_offsets(drone.irs, asg.patch)
                # keep amplitudes identical to the closed form
                ref = cascaded_terms(
                    bs.position, pos, gu.position, frame, asg.phases, layout, params,
                    bu_los=bu_los, ug_los=ug_los,
                )
                patches.append(
                    PatchChannel(
                        eta=ref.eta,
                        ell=ref.ell,
                        kbar_bu=kappa_bar(bu.kappa),
                        ktilde_bu=kappa_tilde(bu.kappa),
                        kbar_ug=kappa_bar(ug.kappa),
                        ktilde_ug=kappa_tilde(ug.kappa),
                        ax_bu=bu.ax,
                        ay_bu=bu.ay,
                        ax_ug=ug.ax,
                        ay_ug=ug.ay,
                        omega_bu=params.ell_for * bu.distance,
                        omega_ug=params.ell_for * ug.distance,
                        phi_x=asg.phases.phi_x,
                        phi_y=asg.phases.phi_y,
                        off_x=off_x,
                        off_y=off_y,
                    )
                )
    return ExactChannelSnapshot(direct=direct, patches=tuple(patches))


def evaluate_gu(
    config: ScenarioConfig,
    state: SnapshotState,
    gu_id: str,
    direction: Direction,
    mode: EvalMode = EvalMode.BOUND,
    rng: np.random.Generator | None = None,
) -> KpiRecord:
    """KPIs for one ground user at the snapshot instant.

    BOUND evaluates the outage-constrained gain; REALIZED draws one exact
    element-level fading realization (rng required).
    """
    gu = config.node(gu_id)
    if gu.role is not NodeRole.GU:
        raise UnknownNode(f"{gu_id!r} is not a ground user")
    bs = config.base_station
    params = config.channel
    direct, cascades = gather_terms(
        config, state, gu.position, only_gu=gu_id, direct_los=state.direct_los[gu_id]
    )
    served = bool(cascades)
    if mode is EvalMode.REALIZED:
        if rng is None:
            raise EngineError("REALIZED evaluation needs a random generator")
        snapshot = build_exact_snapshot(config, state, gu_id)
        if snapshot.direct.lam == 0.0 and not snapshot.patches:
            gain = 0.0
        else:
            gain = float(np.abs(sample_exact_gain(rng, snapshot, 1)[0]) ** 2)
    else:
        try:
            stats = combine_stats(cascades, direct, mode=params.multipath_mode)
            gain = gain_lowerbound(stats, params.outage_eps).gamma_eps
        except AllLinksSuppressed:
            gain = 0.0

    if direction is Direction.DOWNLINK:
        tx_w = dbm_to_w(bs.tx_power_dbm)
        noise = noise_power_w(config.bandwidth_hz, config.noise_figure_ue_db)
    else:
        tx_w = dbm_to_w(gu.tx_power_dbm)
        noise = noise_power_w(config.bandwidth_hz, config.noise_figure_enb_db)
    sinr = tx_w * gain / noise
    sinr_db = 10.0 * math.log10(sinr) if sinr > 0.0 else -math.inf
    rate_bps = map_rate(sinr_db, config.bandwidth_hz, config.rate_mapper)
    return KpiRecord(
        t_s=state.t,
        gu_id=gu_id,
        direction=direction,
        gain_linear=gain,
        sinr_db=sinr_db,
        rate_bps=rate_bps,
        served=served,
    )


def time_grid(duration_s: float, step_s: float) -> list[float]:
    n = int(math.floor(duration_s / step_s + 1e-9))
    return [k * step_s for k in range(n + 1)]


def run(config: ScenarioConfig, mode: EvalMode = EvalMode.BOUND) -> list[KpiRecord]:
    """Full mission sweep; identical (config, mode) gives identical records.

    REALIZED draws use seeds derived per (step, user, direction), so the
    evaluation order cannot change the outputs.
    """
    records: list[KpiRecord] = []
    gus = config.ground_users
    for k, t in enumerate(time_grid(config.sim.duration_s, config.sim.step_s)):
        state = step(config, t)
        for gi, gu in enumerate(gus):
            for di, direction in enumerate((Direction.DOWNLINK, Direction.UPLINK)):
                rng = None
                if mode is EvalMode.REALIZED:
                    rng = np.random.default_rng((config.sim.seed, k, gi, di))
                records.append(evaluate_gu(config, state, gu.id, direction, mode, rng))
    return records
