"""SINR-to-rate mapping, REM grid container, throughput aggregation, writers.

CSV contracts (consumed by the plotting frontend, keep them bit-exact):
  REM:  header "x_m,y_m,sinr_db", rows in row-major y-then-x order
  KPI:  header "t_s,gu_id,direction,gain_db,sinr_db,rate_bps,served"
Floats are serialized with repr(); -inf prints as "-inf".
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "RateMapperMode",
    "RateMapper",
    "default_cqi_mapper",
    "truncated_shannon_mapper",
    "rate",
    "RemGrid",
    "aggregate_throughput",
    "write_kpi_csv",
    "write_rem_csv",
    "write_manifest",
    "write_sweep_csv",
    "KPI_CSV_HEADER",
    "REM_CSV_HEADER",
]

# 15-entry spectral-efficiency ladder of the LTE channel-quality indexes,
# with commonly used minimum-SINR switching thresholds.
LTE_CQI_TABLE_DB: tuple[tuple[float, float], ...] = (
    (-6.7, 0.1523),
    (-4.7, 0.2344),
    (-2.3, 0.3770),
    (0.2, 0.6016),
    (2.4, 0.8770),
    (4.3, 1.1758),
    (5.9, 1.4766),
    (8.1, 1.9141),
    (10.3, 2.4063),
    (11.7, 2.7305),
    (14.1, 3.3223),
    (16.3, 3.9023),
    (18.7, 4.5234),
    (21.0, 5.1152),
    (22.7, 5.5547),
)

# Peak rate of the 5 MHz profile; the table ladder is anchored so its top
# entry yields exactly this at the reference bandwidth.
DEFAULT_RATE_CAP_BPS = 18.336e6
REFERENCE_BANDWIDTH_HZ = 5e6

KPI_CSV_HEADER = "t_s,gu_id,direction,gain_db,sinr_db,rate_bps,served"
REM_CSV_HEADER = "x_m,y_m,sinr_db"


class RateMapperMode(str, Enum):
    CQI_TABLE = "CQI_TABLE"
    TRUNCATED_SHANNON = "TRUNCATED_SHANNON"


@dataclass(frozen=True)
class RateMapper:
    """SINR to achievable-rate mapping.

    CQI_TABLE selects the largest threshold at or below the SINR and scales
    the cap by efficiency/top-efficiency and bandwidth/reference-bandwidth;
    below the lowest threshold the rate is zero. TRUNCATED_SHANNON is the
    capped Shannon bound without a cutoff.
    """

    mode: RateMapperMode
    table: tuple[tuple[float, float], ...] = LTE_CQI_TABLE_DB
    cap_bps: float = DEFAULT_RATE_CAP_BPS
    ref_bandwidth_hz: float = REFERENCE_BANDWIDTH_HZ

    def __post_init__(self) -> None:
        if self.cap_bps <= 0:
            raise ValueError(f"rate cap must be positive, got {self.cap_bps}")
        thresholds = [thr for thr, _ in self.table]
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            raise ValueError("table thresholds must be strictly increasing")


def default_cqi_mapper() -> RateMapper:
    return RateMapper(mode=RateMapperMode.CQI_TABLE)


def truncated_shannon_mapper() -> RateMapper:
    return RateMapper(mode=RateMapperMode.TRUNCATED_SHANNON)


def rate(sinr_db: float, bandwidth_hz: float, mapper: RateMapper) -> float:
    """Achievable rate in bit/s for one SINR sample."""
    if bandwidth_hz <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth_hz}")
    if mapper.mode is RateMapperMode.TRUNCATED_SHANNON:
        if math.isinf(sinr_db) and sinr_db < 0:
            return 0.0
        sinr_lin = 10.0 ** (sinr_db / 10.0)
        return min(mapper.cap_bps, bandwidth_hz * math.log2(1.0 + sinr_lin))
    eff = 0.0
    for threshold_db, efficiency in mapper.table:
        if sinr_db >= threshold_db:
            eff = efficiency
        else:
            break
    if eff == 0.0:
        return 0.0
    top_eff = mapper.table[-1][1]
    scaled = (eff / top_eff) * mapper.cap_bps * (bandwidth_hz / mapper.ref_bandwidth_hz)
    return min(mapper.cap_bps, scaled)


@dataclass(frozen=True, eq=False)
class RemGrid:
    """Rectangular SINR sample lattice at fixed height and time.

    values[iy, ix] holds dB SINR at (origin + ix*step, origin + iy*step);
    -inf marks zero gain.
    """

    origin_m: tuple[float, float]
    extent_m: tuple[float, float]
    resolution_samples_per_m2: float
    z_m: float
    t_s: float
    values: np.ndarray

    @property
    def step_m(self) -> float:
        return 1.0 / math.sqrt(self.resolution_samples_per_m2)

    def x_coords(self) -> np.ndarray:
        return self.origin_m[0] + np.arange(self.values.shape[1]) * self.step_m

    def y_coords(self) -> np.ndarray:
        return self.origin_m[1] + np.arange(self.values.shape[0]) * self.step_m


def grid_samples(extent_m: float, resolution_samples_per_m2: float) -> int:
    """Number of lattice samples along one axis."""
    return int(round(extent_m * math.sqrt(resolution_samples_per_m2)))


def aggregate_throughput(records: Sequence, horizon_s: float) -> tuple[dict[str, float], float]:
    """Time-weighted mean rate per ground user plus the mean across users.

    Each record covers [t, t + step) clipped to [0, horizon]; the step is
    inferred from the record time grid (single-time records span the whole
    horizon). Record ordering does not matter.
    """
    if horizon_s <= 0:
        raise ValueError(f"horizon must be positive, got {horizon_s}")
    times = sorted({r.t_s for r in records})
    if not times:
        return {}, 0.0
    if len(times) > 1:
        step = min(b - a for a, b in zip(times, times[1:]))
    else:
        step = horizon_s
    totals: dict[str, float] = {}
    for r in records:
        weight = max(0.0, min(r.t_s + step, horizon_s) - max(r.t_s, 0.0))
        totals[r.gu_id] = totals.get(r.gu_id, 0.0) + r.rate_bps * weight
    per_gu = {gu: total / horizon_s for gu, total in sorted(totals.items())}
    overall = sum(per_gu.values()) / len(per_gu) if per_gu else 0.0
    return per_gu, overall


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_kpi_csv(records: Iterable, path: str | Path) -> Path:
    path = Path(path)
    lines = [KPI_CSV_HEADER]
    for r in records:
        gain_db = -math.inf if r.gain_linear == 0.0 else 10.0 * math.log10(r.gain_linear)
        lines.append(
            ",".join(
                (
                    _fmt(float(r.t_s)),
                    r.gu_id,
                    r.direction.value,
                    _fmt(gain_db),
                    _fmt(float(r.sinr_db)),
                    _fmt(float(r.rate_bps)),
                    _fmt(bool(r.served)),
                )
            )
        )
    path.write_text("\n".join(lines) + "\n")
    return path


def write_rem_csv(grid: RemGrid, path: str | Path) -> Path:
    path = Path(path)
    xs = grid.x_coords()
    ys = grid.y_coords()
    lines = [REM_CSV_HEADER]
    for iy in range(grid.values.shape[0]):
        y = float(ys[iy])
        row = grid.values[iy]
        for ix in range(grid.values.shape[1]):
            lines.append(f"{_fmt(float(xs[ix]))},{_fmt(y)},{_fmt(float(row[ix]))}")
    path.write_text("\n".join(lines) + "\n")
    return path


def write_sweep_csv(rows: Sequence[dict], path: str | Path) -> Path:
    """Sweep summary: value,gu_id,direction,mean_sinr_db,mean_rate_bps."""
    path = Path(path)
    lines = ["value,gu_id,direction,mean_sinr_db,mean_rate_bps"]
    for row in rows:
        lines.append(
            ",".join(
                (
                    _fmt(row["value"]),
                    row["gu_id"],
                    row["direction"],
                    _fmt(float(row["mean_sinr_db"])),
                    _fmt(float(row["mean_rate_bps"])),
                )
            )
        )
    path.write_text("\n".join(lines) + "\n")
    return path


def write_manifest(manifest: dict, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
