"""Declarative JSON scenario: parse, validate, default-fill, serialize.

Schema (keys mirroring the surface/channel property names are spelled
exactly as the device exposes them; everything artifact-defined is
snake_case):

{
  "world": {
    "area_m": [x, y],                        # default [400, 400]
    "buildings": [{"center_m": [x, y], "size_m": [dx, dy, dz]}, ...]
  },
  "channel": {
    "CarrierFrequency": Hz,                  # required
    "AlphaLoss": exponent >= 2,              # required
    "Bandwidth": Hz,                         # default 5e6
    "KMin": dB, "KMax": dB,                  # defaults 6, 10
    "KNlos": dB or "-inf",                   # default 0
    "OutageProbability": (0,1),              # default 0.01
    "NoDirectLink": bool, "NoIrsLink": bool, # defaults false
    "MultipathInterference": "DESTRUCTIVE"|"SIMULATED"|"CONSTRUCTIVE",
    "BetaBG"|"BetaBU"|"BetaUG": linear,      # default free-space at 1 m
    "PatternBG"|"PatternBUG": linear,        # default 1.0
    "PatternCosExponent": q,                 # default 0 (isotropic)
    "noise_figure_ue_db": dB,                # default 9
    "noise_figure_enb_db": dB,               # default 5
    "rate_mapper": {"mode": "CQI_TABLE"|"TRUNCATED_SHANNON"}
  },
  "nodes": [{"id", "role": "BS"|"GU", "position": [x,y,z],
             "tx_power_dbm": dBm}],          # default 49 BS / 24 GU
  "drones": [{
    "id", "mobility": {...},
    "irs": {
      "Rows", "Columns",
      "PruX", "PruY",                        # default 0.01
      "RotoAxis": ["X_AXIS", ...], "RotoAngles": [deg, ...],
      "Periods": [s, ...],                   # one per configuration
      "configurations": [{"patches": [{"Size": [x0,x1,y0,y1] | "full",
                                       "ServingConfigurator": {...}}]}]
    }
  }],
  "sim": {"duration_s", "step_s", "seed"},   # defaults step 0.1, seed 1
  "rem": {"z_m", "resolution_samples_per_m2", "mode"}  # defaults 0, 16, BOUND
}

Serving configurators:
  {"type": "DefinedServingConfigurator",
   "slots": [{"pair": [bs_id, gu_id], "duration_s": s}, ...]}
  {"type": "PeriodicServingConfigurator", "pairs": [[bs,gu],...], "slot_s": s}
  {"type": "RandomServingConfigurator", "pairs": [...], "slot_s": s,
   "seed": int (optional, derived from sim.seed otherwise)}

Mobility:
  {"kind": "STATIC", "position": [x,y,z]}
  {"kind": "CIRCULAR", "center": [x,y,z], "radius_m", "speed_mps",
   "start_angle_rad": rad, "direction": 1|-1}
  {"kind": "WAYPOINT", "waypoints": [{"position": [x,y,z], "time_s": t}, ...]}

Unknown keys are rejected with JSON-pointer paths; a parse never returns a
partial config.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .channel import ChannelParams, MultipathMode
from .geometry import Axis, BuildingBox, RotationSequence, Vec3
from .irs import IrsSpec, PatchConfiguration, PatchSpec, validate_layout
from .mobility import CircleSpec, MobilityKind, MobilityModel
from .output import RateMapper, RateMapperMode, default_cqi_mapper, truncated_shannon_mapper
from .scheduling import PolicyKind, ServingPair, ServingPolicy

__all__ = [
    "ConfigIssue",
    "ScenarioFormatError",
    "NodeRole",
    "RemMode",
    "NodeConfig",
    "DroneConfig",
    "WorldConfig",
    "SimConfig",
    "RemDefaults",
    "ScenarioConfig",
    "parse_scenario",
    "validate_scenario",
    "to_document",
    "apply_overrides",
]

DEFAULTS = {
    "Bandwidth": 5e6,
    "KMin": 6.0,
    "KMax": 10.0,
    "KNlos": 0.0,
    "OutageProbability": 0.01,
    "PruX": 0.01,
    "PruY": 0.01,
    "tx_power_bs_dbm": 49.0,
    "tx_power_gu_dbm": 24.0,
    "noise_figure_ue_db": 9.0,
    "noise_figure_enb_db": 5.0,
    "area_m": (400.0, 400.0),
    "step_s": 0.1,
    "seed": 1,
    "rem_z_m": 0.0,
    "rem_resolution": 16.0,
}

_AXIS_NAMES = {"X_AXIS": Axis.X, "Y_AXIS": Axis.Y, "Z_AXIS": Axis.Z}


@dataclass(frozen=True)
class ConfigIssue:
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


class ScenarioFormatError(ValueError):
    """Raised when a scenario document cannot be turned into a config."""

    def __init__(self, issues: list[ConfigIssue]):
        self.issues = issues
        super().__init__("; ".join(str(i) for i in issues))


class NodeRole(str, Enum):
    BS = "BS"
    GU = "GU"


class RemMode(str, Enum):
    BOUND = "BOUND"
    REALIZED = "REALIZED"


@dataclass(frozen=True)
class NodeConfig:
    id: str
    role: NodeRole
    position: Vec3
    tx_power_dbm: float


@dataclass(frozen=True)
class DroneConfig:
    id: str
    mobility: MobilityModel
    irs: IrsSpec
    schedule: tuple[PatchConfiguration, ...]
    policies: tuple[tuple[ServingPolicy, ...], ...]  # one tuple per configuration


@dataclass(frozen=True)
class WorldConfig:
    area_m: tuple[float, float]
    buildings: tuple[BuildingBox, ...] = ()


@dataclass(frozen=True)
class SimConfig:
    duration_s: float
    step_s: float
    seed: int


@dataclass(frozen=True)
class RemDefaults:
    z_m: float
    resolution_samples_per_m2: float
    mode: RemMode


@dataclass(frozen=True)
class ScenarioConfig:
    world: WorldConfig
    channel: ChannelParams
    bandwidth_hz: float
    noise_figure_ue_db: float
    noise_figure_enb_db: float
    rate_mapper: RateMapper
    nodes: tuple[NodeConfig, ...]
    drones: tuple[DroneConfig, ...]
    sim: SimConfig
    rem: RemDefaults

    def node(self, node_id: str) -> NodeConfig:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    @property
    def base_station(self) -> NodeConfig:
        return next(n for n in self.nodes if n.role is NodeRole.BS)

    @property
    def ground_users(self) -> tuple[NodeConfig, ...]:
        return tuple(n for n in self.nodes if n.role is NodeRole.GU)


class _Ctx:
    """Error accumulator with JSON-pointer paths."""

    def __init__(self) -> None:
        self.issues: list[ConfigIssue] = []

    def error(self, path: str, message: str) -> None:
        self.issues.append(ConfigIssue(path, message))

    def check_keys(self, obj: dict, path: str, allowed: set[str]) -> None:
        for key in obj:
            if key not in allowed:
                self.error(f"{path}/{key}", "unknown key")

    def number(self, obj: dict, key: str, path: str, default=None, required=False):
        if key not in obj:
            if required:
                self.error(f"{path}/{key}", "missing required key")
            return default
        v = obj[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.error(f"{path}/{key}", f"expected a number, got {type(v).__name__}")
            return default
        return float(v)

    def db_number(self, obj: dict, key: str, path: str, default=None):
        """Number in dB, also accepting the strings '-inf' / 'inf'."""
        if key not in obj:
            return default
        v = obj[key]
        if isinstance(v, str):
            if v in ("-inf", "inf"):
                return float(v)
            self.error(f"{path}/{key}", f"expected a number or '-inf'/'inf', got {v!r}")
            return default
        return self.number(obj, key, path, default)

    def integer(self, obj: dict, key: str, path: str, default=None, required=False):
        if key not in obj:
            if required:
                self.error(f"{path}/{key}", "missing required key")
            return default
        v = obj[key]
        if isinstance(v, bool) or not isinstance(v, int):
            self.error(f"{path}/{key}", f"expected an integer, got {type(v).__name__}")
            return default
        return v

    def boolean(self, obj: dict, key: str, path: str, default=False):
        if key not in obj:
            return default
        v = obj[key]
        if not isinstance(v, bool):
            self.error(f"{path}/{key}", f"expected a boolean, got {type(v).__name__}")
            return default
        return v

    def string(self, obj: dict, key: str, path: str, default=None, required=False):
        if key not in obj:
            if required:
                self.error(f"{path}/{key}", "missing required key")
            return default
        v = obj[key]
        if not isinstance(v, str):
            self.error(f"{path}/{key}", f"expected a string, got {type(v).__name__}")
            return default
        return v

    def obj(self, parent: dict, key: str, path: str, required=False) -> dict | None:
        if key not in parent:
            if required:
                self.error(f"{path}/{key}", "missing required section")
            return None
        v = parent[key]
        if not isinstance(v, dict):
            self.error(f"{path}/{key}", f"expected an object, got {type(v).__name__}")
            return None
        return v

    def array(self, parent: dict, key: str, path: str, required=False) -> list | None:
        if key not in parent:
            if required:
                self.error(f"{path}/{key}", "missing required array")
            return None
        v = parent[key]
        if not isinstance(v, list):
            self.error(f"{path}/{key}", f"expected an array, got {type(v).__name__}")
            return None
        return v

    def vec3(self, value: Any, path: str) -> Vec3 | None:
        if (
            not isinstance(value, list)
            or len(value) != 3
            or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in value)
        ):
            self.error(path, "expected [x, y, z] numbers")
            return None
        return Vec3(float(value[0]), float(value[1]), float(value[2]))


def _parse_world(ctx: _Ctx, doc: dict) -> WorldConfig:
    section = ctx.obj(doc, "world", "")
    if section is None:
        return WorldConfig(area_m=DEFAULTS["area_m"])
    ctx.check_keys(section, "/world", {"area_m", "buildings"})
    area = DEFAULTS["area_m"]
    if "area_m" in section:
        raw = section["area_m"]
        if (
            not isinstance(raw, list)
            or len(raw) != 2
            or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in raw)
        ):
            ctx.error("/world/area_m", "expected [x, y] numbers")
        elif raw[0] <= 0 or raw[1] <= 0:
            ctx.error("/world/area_m", "area sides must be positive")
        else:
            area = (float(raw[0]), float(raw[1]))
    buildings: list[BuildingBox] = []
    raw_buildings = ctx.array(section, "buildings", "/world") or []
    for i, entry in enumerate(raw_buildings):
        path = f"/world/buildings/{i}"
        if not isinstance(entry, dict):
            ctx.error(path, "expected an object")
            continue
        ctx.check_keys(entry, path, {"center_m", "size_m"})
        center = entry.get("center_m")
        size = ctx.vec3(entry.get("size_m"), f"{path}/size_m")
        if (
            not isinstance(center, list)
            or len(center) != 2
            or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in center)
        ):
            ctx.error(f"{path}/center_m", "expected [x, y] numbers")
            continue
        if size is None:
            continue
        try:
            buildings.append(
                BuildingBox.from_footprint_center(float(center[0]), float(center[1]), size)
            )
        except ValueError as exc:
            ctx.error(path, str(exc))
    return WorldConfig(area_m=area, buildings=tuple(buildings))


def _parse_channel(
    ctx: _Ctx, doc: dict
) -> tuple[ChannelParams | None, float, float, float, RateMapper]:
    section = ctx.obj(doc, "channel", "", required=True)
    bandwidth = DEFAULTS["Bandwidth"]
    nf_ue = DEFAULTS["noise_figure_ue_db"]
    nf_enb = DEFAULTS["noise_figure_enb_db"]
    mapper = default_cqi_mapper()
    if section is None:
        return None, bandwidth, nf_ue, nf_enb, mapper
    allowed = {
        "CarrierFrequency", "AlphaLoss", "Bandwidth", "KMin", "KMax", "KNlos",
        "OutageProbability", "NoDirectLink", "NoIrsLink", "MultipathInterference",
        "BetaBG", "BetaBU", "BetaUG", "PatternBG", "PatternBUG", "PatternCosExponent",
        "noise_figure_ue_db", "noise_figure_enb_db", "rate_mapper",
    }
    ctx.check_keys(section, "/channel", allowed)
    carrier = ctx.number(section, "CarrierFrequency", "/channel", required=True)
    alpha = ctx.number(section, "AlphaLoss", "/channel", required=True)
    bandwidth = ctx.number(section, "Bandwidth", "/channel", bandwidth)
    nf_ue = ctx.number(section, "noise_figure_ue_db", "/channel", nf_ue)
    nf_enb = ctx.number(section, "noise_figure_enb_db", "/channel", nf_enb)
    mp_raw = ctx.string(section, "MultipathInterference", "/channel", MultipathMode.SIMULATED.value)
    mode = None
    try:
        mode = MultipathMode(mp_raw)
    except ValueError:
        ctx.error("/channel/MultipathInterference", f"unknown mode {mp_raw!r}")
    mapper_obj = ctx.obj(section, "rate_mapper", "/channel")
    if mapper_obj is not None:
        ctx.check_keys(mapper_obj, "/channel/rate_mapper", {"mode"})
        mm = ctx.string(mapper_obj, "mode", "/channel/rate_mapper", RateMapperMode.CQI_TABLE.value)
        if mm == RateMapperMode.TRUNCATED_SHANNON.value:
            mapper = truncated_shannon_mapper()
        elif mm != RateMapperMode.CQI_TABLE.value:
            ctx.error("/channel/rate_mapper/mode", f"unknown mode {mm!r}")
    if bandwidth is not None and bandwidth <= 0:
        ctx.error("/channel/Bandwidth", "bandwidth must be positive")
    kwargs = dict(
        carrier_hz=carrier,
        alpha_direct=alpha,
        k_min_db=ctx.db_number(section, "KMin", "/channel", DEFAULTS["KMin"]),
        k_max_db=ctx.db_number(section, "KMax", "/channel", DEFAULTS["KMax"]),
        k_nlos_db=ctx.db_number(section, "KNlos", "/channel", DEFAULTS["KNlos"]),
        outage_eps=ctx.number(section, "OutageProbability", "/channel", DEFAULTS["OutageProbability"]),
        no_direct_link=ctx.boolean(section, "NoDirectLink", "/channel"),
        no_irs_link=ctx.boolean(section, "NoIrsLink", "/channel"),
        multipath_mode=mode or MultipathMode.SIMULATED,
        beta_bg=ctx.number(section, "BetaBG", "/channel"),
        beta_bu=ctx.number(section, "BetaBU", "/channel"),
        beta_ug=ctx.number(section, "BetaUG", "/channel"),
        pattern_bg=ctx.number(section, "PatternBG", "/channel", 1.0),
        pattern_bug=ctx.number(section, "PatternBUG", "/channel", 1.0),
        pattern_cos_exponent=ctx.number(section, "PatternCosExponent", "/channel", 0.0),
    )
    if carrier is None or alpha is None or ctx.issues:
        # build only when the section is structurally sound so far
        if carrier is None or alpha is None:
            return None, bandwidth, nf_ue, nf_enb, mapper
    try:
        params = ChannelParams(**kwargs)
    except ValueError as exc:
        ctx.error("/channel", str(exc))
        return None, bandwidth, nf_ue, nf_enb, mapper
    return params, bandwidth, nf_ue, nf_enb, mapper


def _parse_nodes(ctx: _Ctx, doc: dict) -> tuple[NodeConfig, ...]:
    raw = ctx.array(doc, "nodes", "", required=True) or []
    nodes: list[NodeConfig] = []
    seen: set[str] = set()
    for i, entry in enumerate(raw):
        path = f"/nodes/{i}"
        if not isinstance(entry, dict):
            ctx.error(path, "expected an object")
            continue
        ctx.check_keys(entry, path, {"id", "role", "position", "tx_power_dbm"})
        node_id = ctx.string(entry, "id", path, required=True)
        role_raw = ctx.string(entry, "role", path, required=True)
        pos = ctx.vec3(entry.get("position"), f"{path}/position") if "position" in entry else None
        if "position" not in entry:
            ctx.error(f"{path}/position", "missing required key")
        role = None
        if role_raw is not None:
            try:
                role = NodeRole(role_raw)
            except ValueError:
                ctx.error(f"{path}/role", f"role must be BS or GU, got {role_raw!r}")
        if node_id is not None:
            if node_id in seen:
                ctx.error(f"{path}/id", f"duplicate node id {node_id!r}")
            seen.add(node_id)
        if node_id is None or role is None or pos is None:
            continue
        default_power = (
            DEFAULTS["tx_power_bs_dbm"] if role is NodeRole.BS else DEFAULTS["tx_power_gu_dbm"]
        )
        power = ctx.number(entry, "tx_power_dbm", path, default_power)
        nodes.append(NodeConfig(id=node_id, role=role, position=pos, tx_power_dbm=power))
    return tuple(nodes)


def _parse_pair(ctx: _Ctx, value: Any, path: str) -> ServingPair | None:
    if not isinstance(value, list) or len(value) != 2 or not all(isinstance(v, str) for v in value):
        ctx.error(path, "expected [bs_id, gu_id]")
        return None
    try:
        return ServingPair(bs_node_id=value[0], gu_node_id=value[1])
    except ValueError as exc:
        ctx.error(path, str(exc))
        return None


def _parse_policy(ctx: _Ctx, entry: Any, path: str, derived_seed: int) -> ServingPolicy | None:
    if not isinstance(entry, dict):
        ctx.error(path, "expected a serving configurator object")
        return None
    kind = ctx.string(entry, "type", path, required=True)
    if kind == "DefinedServingConfigurator":
        ctx.check_keys(entry, path, {"type", "slots"})
        slots_raw = ctx.array(entry, "slots", path, required=True) or []
        slots = []
        for i, slot in enumerate(slots_raw):
            spath = f"{path}/slots/{i}"
            if not isinstance(slot, dict):
                ctx.error(spath, "expected an object")
                continue
            ctx.check_keys(slot, spath, {"pair", "duration_s"})
            pair = _parse_pair(ctx, slot.get("pair"), f"{spath}/pair")
            duration = ctx.number(slot, "duration_s", spath, required=True)
            if pair is not None and duration is not None:
                slots.append((pair, duration))
        if not slots:
            ctx.error(path, "DEFINED policy needs at least one slot")
            return None
        try:
            return ServingPolicy(kind=PolicyKind.DEFINED, slots=tuple(slots))
        except ValueError as exc:
            ctx.error(path, str(exc))
            return None
    if kind in ("PeriodicServingConfigurator", "RandomServingConfigurator"):
        allowed = {"type", "pairs", "slot_s"}
        policy_kind = PolicyKind.PERIODIC
        if kind == "RandomServingConfigurator":
            allowed.add("seed")
            policy_kind = PolicyKind.RANDOM
        ctx.check_keys(entry, path, allowed)
        pairs_raw = ctx.array(entry, "pairs", path, required=True) or []
        pairs = []
        for i, p in enumerate(pairs_raw):
            pair = _parse_pair(ctx, p, f"{path}/pairs/{i}")
            if pair is not None:
                pairs.append(pair)
        slot_s = ctx.number(entry, "slot_s", path, required=True)
        seed = ctx.integer(entry, "seed", path, derived_seed)
        if not pairs or slot_s is None:
            return None
        try:
            return ServingPolicy(
                kind=policy_kind, pairs=tuple(pairs), slot_s=slot_s, seed=seed
            )
        except ValueError as exc:
            ctx.error(path, str(exc))
            return None
    if kind is not None:
        ctx.error(f"{path}/type", f"unknown serving configurator {kind!r}")
    return None


def _parse_patch_size(ctx: _Ctx, value: Any, path: str, spec: IrsSpec | None) -> PatchSpec | None:
    if value == "full":
        if spec is None:
            return None
        return PatchSpec(0, spec.columns - 1, 0, spec.rows - 1)
    if (
        not isinstance(value, list)
        or len(value) != 4
        or any(isinstance(v, bool) or not isinstance(v, int) for v in value)
    ):
        ctx.error(path, 'expected "full" or four integer indexes [x0, x1, y0, y1]')
        return None
    try:
        return PatchSpec(value[0], value[1], value[2], value[3])
    except ValueError as exc:
        ctx.error(path, str(exc))
        return None


def _parse_mobility(ctx: _Ctx, entry: Any, path: str) -> MobilityModel | None:
    if not isinstance(entry, dict):
        ctx.error(path, "expected a mobility object")
        return None
    kind_raw = ctx.string(entry, "kind", path, required=True)
    if kind_raw == MobilityKind.STATIC.value:
        ctx.check_keys(entry, path, {"kind", "position"})
        if "position" not in entry:
            ctx.error(f"{path}/position", "missing required key")
            return None
        pos = ctx.vec3(entry.get("position"), f"{path}/position")
        if pos is None:
            return None
        return MobilityModel(kind=MobilityKind.STATIC, static_pos=pos)
    if kind_raw == MobilityKind.CIRCULAR.value:
        ctx.check_keys(
            entry, path, {"kind", "center", "radius_m", "speed_mps", "start_angle_rad", "direction"}
        )
        center = ctx.vec3(entry.get("center"), f"{path}/center") if "center" in entry else None
        if "center" not in entry:
            ctx.error(f"{path}/center", "missing required key")
        radius = ctx.number(entry, "radius_m", path, required=True)
        speed = ctx.number(entry, "speed_mps", path, required=True)
        start = ctx.number(entry, "start_angle_rad", path, 0.0)
        direction = ctx.integer(entry, "direction", path, 1)
        if center is None or radius is None or speed is None:
            return None
        try:
            return MobilityModel(
                kind=MobilityKind.CIRCULAR,
                circle=CircleSpec(
                    center=center,
                    radius_m=radius,
                    speed_mps=speed,
                    start_angle_rad=start,
                    direction=direction,
                ),
            )
        except ValueError as exc:
            ctx.error(path, str(exc))
            return None
    if kind_raw == MobilityKind.WAYPOINT.value:
        ctx.check_keys(entry, path, {"kind", "waypoints"})
        raw = ctx.array(entry, "waypoints", path, required=True) or []
        points = []
        for i, wp in enumerate(raw):
            wpath = f"{path}/waypoints/{i}"
            if not isinstance(wp, dict):
                ctx.error(wpath, "expected an object")
                continue
            ctx.check_keys(wp, wpath, {"position", "time_s"})
            pos = ctx.vec3(wp.get("position"), f"{wpath}/position")
            ts = ctx.number(wp, "time_s", wpath, required=True)
            if pos is not None and ts is not None:
                points.append((pos, ts))
        if not points:
            ctx.error(path, "WAYPOINT mobility needs at least one waypoint")
            return None
        try:
            return MobilityModel(kind=MobilityKind.WAYPOINT, waypoints=tuple(points))
        except ValueError as exc:
            ctx.error(path, str(exc))
            return None
    if kind_raw is not None:
        ctx.error(f"{path}/kind", f"unknown mobility kind {kind_raw!r}")
    return None


def _parse_rotation(ctx: _Ctx, section: dict, path: str) -> RotationSequence | None:
    axes_raw = ctx.array(section, "RotoAxis", path) or []
    angles_raw = ctx.array(section, "RotoAngles", path) or []
    axes = []
    for i, name in enumerate(axes_raw):
        if not isinstance(name, str) or name not in _AXIS_NAMES:
            ctx.error(f"{path}/RotoAxis/{i}", f"expected one of {sorted(_AXIS_NAMES)}, got {name!r}")
            return None
        axes.append(_AXIS_NAMES[name])
    angles = []
    for i, a in enumerate(angles_raw):
        if isinstance(a, bool) or not isinstance(a, (int, float)):
            ctx.error(f"{path}/RotoAngles/{i}", "expected a number in degrees")
            return None
        angles.append(float(a))
    try:
        return RotationSequence(axes=tuple(axes), angles_deg=tuple(angles))
    except ValueError as exc:
        ctx.error(f"{path}/RotoAxis", str(exc))
        return None


def _parse_drones(ctx: _Ctx, doc: dict, sim_seed: int) -> tuple[DroneConfig, ...]:
    raw = ctx.array(doc, "drones", "") or []
    drones: list[DroneConfig] = []
    seen: set[str] = set()
    for di, entry in enumerate(raw):
        path = f"/drones/{di}"
        if not isinstance(entry, dict):
            ctx.error(path, "expected an object")
            continue
        ctx.check_keys(entry, path, {"id", "mobility", "irs"})
        drone_id = ctx.string(entry, "id", path, required=True)
        if drone_id is not None:
            if drone_id in seen:
                ctx.error(f"{path}/id", f"duplicate drone id {drone_id!r}")
            seen.add(drone_id)
        mobility = None
        if "mobility" not in entry:
            ctx.error(f"{path}/mobility", "missing required section")
        else:
            mobility = _parse_mobility(ctx, entry["mobility"], f"{path}/mobility")
        irs_section = ctx.obj(entry, "irs", path, required=True)
        if irs_section is None or drone_id is None or mobility is None:
            continue
        ipath = f"{path}/irs"
        ctx.check_keys(
            irs_section,
            ipath,
            {"Rows", "Columns", "PruX", "PruY", "RotoAxis", "RotoAngles", "Periods", "configurations"},
        )
        rows = ctx.integer(irs_section, "Rows", ipath, required=True)
        cols = ctx.integer(irs_section, "Columns", ipath, required=True)
        pru_x = ctx.number(irs_section, "PruX", ipath, DEFAULTS["PruX"])
        pru_y = ctx.number(irs_section, "PruY", ipath, DEFAULTS["PruY"])
        rotation = _parse_rotation(ctx, irs_section, ipath)
        if rows is None or cols is None or rotation is None:
            continue
        try:
            spec = IrsSpec(rows=rows, columns=cols, pru_x=pru_x, pru_y=pru_y, rotation=rotation)
        except ValueError as exc:
            ctx.error(ipath, str(exc))
            continue
        periods = ctx.array(irs_section, "Periods", ipath, required=True)
        confs_raw = ctx.array(irs_section, "configurations", ipath, required=True)
        if periods is None or confs_raw is None:
            continue
        if len(periods) != len(confs_raw):
            ctx.error(
                f"{ipath}/Periods",
                f"{len(periods)} periods for {len(confs_raw)} configurations",
            )
            continue
        schedule: list[PatchConfiguration] = []
        policies: list[tuple[ServingPolicy, ...]] = []
        ok = True
        for ci, (period, conf) in enumerate(zip(periods, confs_raw)):
            cpath = f"{ipath}/configurations/{ci}"
            if isinstance(period, bool) or not isinstance(period, (int, float)) or period <= 0:
                ctx.error(f"{ipath}/Periods/{ci}", f"expected a positive duration, got {period!r}")
                ok = False
                continue
            if not isinstance(conf, dict):
                ctx.error(cpath, "expected an object")
                ok = False
                continue
            ctx.check_keys(conf, cpath, {"patches"})
            patches_raw = ctx.array(conf, "patches", cpath, required=True) or []
            patches: list[PatchSpec] = []
            conf_policies: list[ServingPolicy] = []
            for pi, p in enumerate(patches_raw):
                ppath = f"{cpath}/patches/{pi}"
                if not isinstance(p, dict):
                    ctx.error(ppath, "expected an object")
                    ok = False
                    continue
                ctx.check_keys(p, ppath, {"Size", "ServingConfigurator"})
                if "Size" not in p:
                    ctx.error(f"{ppath}/Size", "missing required key")
                    ok = False
                    continue
                patch = _parse_patch_size(ctx, p["Size"], f"{ppath}/Size", spec)
                if "ServingConfigurator" not in p:
                    ctx.error(f"{ppath}/ServingConfigurator", "missing required section")
                    ok = False
                    continue
                derived_seed = _derive_seed(sim_seed, di, ci, pi)
                policy = _parse_policy(
                    ctx, p["ServingConfigurator"], f"{ppath}/ServingConfigurator", derived_seed
                )
                if patch is None or policy is None:
                    ok = False
                    continue
                patches.append(patch)
                conf_policies.append(policy)
            if not patches:
                ctx.error(cpath, "configuration needs at least one patch")
                ok = False
                continue
            try:
                schedule.append(PatchConfiguration(patches=tuple(patches), period_s=float(period)))
            except ValueError as exc:
                ctx.error(cpath, str(exc))
                ok = False
                continue
            policies.append(tuple(conf_policies))
        if not ok or not schedule:
            continue
        drones.append(
            DroneConfig(
                id=drone_id,
                mobility=mobility,
                irs=spec,
                schedule=tuple(schedule),
                policies=tuple(policies),
            )
        )
    return tuple(drones)


def _derive_seed(sim_seed: int, *parts: int) -> int:
    out = sim_seed & 0xFFFFFFFF
    for p in parts:
        out = (out * 1_000_003 + p + 1) & 0xFFFFFFFF
    return out


def _parse_sim(ctx: _Ctx, doc: dict) -> SimConfig | None:
    section = ctx.obj(doc, "sim", "", required=True)
    if section is None:
        return None
    ctx.check_keys(section, "/sim", {"duration_s", "step_s", "seed"})
    duration = ctx.number(section, "duration_s", "/sim", required=True)
    step = ctx.number(section, "step_s", "/sim", DEFAULTS["step_s"])
    seed = ctx.integer(section, "seed", "/sim", DEFAULTS["seed"])
    if duration is None:
        return None
    if duration < 0:
        ctx.error("/sim/duration_s", "duration must be nonnegative")
        return None
    if step is None or step <= 0:
        ctx.error("/sim/step_s", "step must be positive")
        return None
    return SimConfig(duration_s=duration, step_s=step, seed=seed)


def _parse_rem(ctx: _Ctx, doc: dict) -> RemDefaults:
    section = ctx.obj(doc, "rem", "")
    z = DEFAULTS["rem_z_m"]
    res = DEFAULTS["rem_resolution"]
    mode = RemMode.BOUND
    if section is None:
        return RemDefaults(z_m=z, resolution_samples_per_m2=res, mode=mode)
    ctx.check_keys(section, "/rem", {"z_m", "resolution_samples_per_m2", "mode"})
    z = ctx.number(section, "z_m", "/rem", z)
    res = ctx.number(section, "resolution_samples_per_m2", "/rem", res)
    raw_mode = ctx.string(section, "mode", "/rem", mode.value)
    try:
        mode = RemMode(raw_mode)
    except ValueError:
        ctx.error("/rem/mode", f"unknown REM mode {raw_mode!r}")
    if res is not None and res <= 0:
        ctx.error("/rem/resolution_samples_per_m2", "resolution must be positive")
    return RemDefaults(z_m=z, resolution_samples_per_m2=res, mode=mode)


def parse_scenario(source: str | dict) -> ScenarioConfig:
    """Parse a JSON document (text or dict) into a resolved config.

    Raises ScenarioFormatError with every collected issue; a config is
    returned only when the whole document is clean.
    """
    ctx = _Ctx()
    if isinstance(source, str):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ScenarioFormatError([ConfigIssue("", f"invalid JSON: {exc}")]) from exc
    else:
        doc = source
    if not isinstance(doc, dict):
        raise ScenarioFormatError([ConfigIssue("", "top-level value must be an object")])

    ctx.check_keys(doc, "", {"world", "channel", "nodes", "drones", "sim", "rem"})
    world = _parse_world(ctx, doc)
    channel, bandwidth, nf_ue, nf_enb, mapper = _parse_channel(ctx, doc)
    nodes = _parse_nodes(ctx, doc)
    sim = _parse_sim(ctx, doc)
    drones = _parse_drones(ctx, doc, sim.seed if sim else DEFAULTS["seed"])
    rem = _parse_rem(ctx, doc)

    if ctx.issues or channel is None or sim is None:
        if not ctx.issues:
            ctx.error("", "incomplete scenario")
        raise ScenarioFormatError(ctx.issues)
    return ScenarioConfig(
        world=world,
        channel=channel,
        bandwidth_hz=bandwidth,
        noise_figure_ue_db=nf_ue,
        noise_figure_enb_db=nf_enb,
        rate_mapper=mapper,
        nodes=nodes,
        drones=drones,
        sim=sim,
        rem=rem,
    )


def validate_scenario(config: ScenarioConfig) -> list[ConfigIssue]:
    """Cross-checks beyond structure; empty list means the scenario is runnable."""
    issues: list[ConfigIssue] = []
    bs_nodes = [n for n in config.nodes if n.role is NodeRole.BS]
    if len(bs_nodes) != 1:
        issues.append(ConfigIssue("/nodes", f"exactly one BS node required, found {len(bs_nodes)}"))
    node_ids = {n.id for n in config.nodes}
    roles = {n.id: n.role for n in config.nodes}
    ax, ay = config.world.area_m
    for bi, b in enumerate(config.world.buildings):
        hi = b.max_corner
        if b.min_corner.x < 0 or b.min_corner.y < 0 or hi.x > ax or hi.y > ay:
            issues.append(
                ConfigIssue(f"/world/buildings/{bi}", "building footprint outside the area")
            )
    for di, drone in enumerate(config.drones):
        for ci, conf in enumerate(drone.schedule):
            for msg in validate_layout(drone.irs, conf):
                issues.append(ConfigIssue(f"/drones/{di}/irs/configurations/{ci}", msg))
            for pi, policy in enumerate(drone.policies[ci]):
                pairs = (
                    [p for p, _ in policy.slots]
                    if policy.kind is PolicyKind.DEFINED
                    else list(policy.pairs)
                )
                ppath = f"/drones/{di}/irs/configurations/{ci}/patches/{pi}/ServingConfigurator"
                for pair in pairs:
                    for nid, want in ((pair.bs_node_id, NodeRole.BS), (pair.gu_node_id, NodeRole.GU)):
                        if nid not in node_ids:
                            issues.append(ConfigIssue(ppath, f"unknown node id {nid!r}"))
                        elif roles[nid] is not want:
                            issues.append(
                                ConfigIssue(ppath, f"node {nid!r} is not a {want.value} node")
                            )
    if not 0.0 < config.channel.outage_eps < 1.0:
        issues.append(ConfigIssue("/channel/OutageProbability", "must lie in (0, 1)"))
    return issues


def _db_value(x: float):
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return x


def _pair_doc(pair: ServingPair) -> list[str]:
    return [pair.bs_node_id, pair.gu_node_id]


def _policy_doc(policy: ServingPolicy) -> dict:
    if policy.kind is PolicyKind.DEFINED:
        return {
            "type": "DefinedServingConfigurator",
            "slots": [
                {"pair": _pair_doc(p), "duration_s": d} for p, d in policy.slots
            ],
        }
    doc = {
        "type": (
            "PeriodicServingConfigurator"
            if policy.kind is PolicyKind.PERIODIC
            else "RandomServingConfigurator"
        ),
        "pairs": [_pair_doc(p) for p in policy.pairs],
        "slot_s": policy.slot_s,
    }
    if policy.kind is PolicyKind.RANDOM:
        doc["seed"] = policy.seed
    return doc


def _mobility_doc(m: MobilityModel) -> dict:
    if m.kind is MobilityKind.STATIC:
        p = m.static_pos
        return {"kind": "STATIC", "position": [p.x, p.y, p.z]}
    if m.kind is MobilityKind.CIRCULAR:
        c = m.circle
        return {
            "kind": "CIRCULAR",
            "center": [c.center.x, c.center.y, c.center.z],
            "radius_m": c.radius_m,
            "speed_mps": c.speed_mps,
            "start_angle_rad": c.start_angle_rad,
            "direction": c.direction,
        }
    return {
        "kind": "WAYPOINT",
        "waypoints": [
            {"position": [p.x, p.y, p.z], "time_s": t} for p, t in m.waypoints
        ],
    }


_AXIS_TO_NAME = {Axis.X: "X_AXIS", Axis.Y: "Y_AXIS", Axis.Z: "Z_AXIS"}


def to_document(config: ScenarioConfig) -> dict:
    """Canonical resolved JSON document; parse(to_document(c)) == c."""
    ch = config.channel
    doc: dict = {
        "world": {
            "area_m": list(config.world.area_m),
            "buildings": [
                {
                    "center_m": [b.min_corner.x + b.size.x / 2.0, b.min_corner.y + b.size.y / 2.0],
                    "size_m": [b.size.x, b.size.y, b.size.z],
                }
                for b in config.world.buildings
            ],
        },
        "channel": {
            "CarrierFrequency": ch.carrier_hz,
            "AlphaLoss": ch.alpha_direct,
            "Bandwidth": config.bandwidth_hz,
            "KMin": _db_value(ch.k_min_db),
            "KMax": _db_value(ch.k_max_db),
            "KNlos": _db_value(ch.k_nlos_db),
            "OutageProbability": ch.outage_eps,
            "NoDirectLink": ch.no_direct_link,
            "NoIrsLink": ch.no_irs_link,
            "MultipathInterference": ch.multipath_mode.value,
            "BetaBG": ch.beta_bg,
            "BetaBU": ch.beta_bu,
            "BetaUG": ch.beta_ug,
            "PatternBG": ch.pattern_bg,
            "PatternBUG": ch.pattern_bug,
            "PatternCosExponent": ch.pattern_cos_exponent,
            "noise_figure_ue_db": config.noise_figure_ue_db,
            "noise_figure_enb_db": config.noise_figure_enb_db,
            "rate_mapper": {"mode": config.rate_mapper.mode.value},
        },
        "nodes": [
            {
                "id": n.id,
                "role": n.role.value,
                "position": [n.position.x, n.position.y, n.position.z],
                "tx_power_dbm": n.tx_power_dbm,
            }
            for n in config.nodes
        ],
        "drones": [
            {
                "id": d.id,
                "mobility": _mobility_doc(d.mobility),
                "irs": {
                    "Rows": d.irs.rows,
                    "Columns": d.irs.columns,
                    "PruX": d.irs.pru_x,
                    "PruY": d.irs.pru_y,
                    "RotoAxis": [_AXIS_TO_NAME[a] for a in d.irs.rotation.axes],
                    "RotoAngles": list(d.irs.rotation.angles_deg),
                    "Periods": [c.period_s for c in d.schedule],
                    "configurations": [
                        {
                            "patches": [
                                {
                                    "Size": list(patch.size_index),
                                    "ServingConfigurator": _policy_doc(policy),
                                }
                                for patch, policy in zip(conf.patches, d.policies[ci])
                            ]
                        }
                        for ci, conf in enumerate(d.schedule)
                    ],
                },
            }
            for d in config.drones
        ],
        "sim": {
            "duration_s": config.sim.duration_s,
            "step_s": config.sim.step_s,
            "seed": config.sim.seed,
        },
        "rem": {
            "z_m": config.rem.z_m,
            "resolution_samples_per_m2": config.rem.resolution_samples_per_m2,
            "mode": config.rem.mode.value,
        },
    }
    return doc


def apply_overrides(doc: dict, overrides: dict[str, Any]) -> dict:
    """Set dotted-path keys in a raw document (list indexes as integers)."""
    for dotted, value in overrides.items():
        parts = dotted.split(".")
        target: Any = doc
        for i, part in enumerate(parts[:-1]):
            key: Any = int(part) if part.lstrip("-").isdigit() else part
            if isinstance(target, list):
                target = target[key]
            else:
                if key not in target:
                    target[key] = {}
                target = target[key]
        last: Any = parts[-1]
        if isinstance(target, list):
            target[int(last)] = value
        else:
            target[last] = value
    return doc
