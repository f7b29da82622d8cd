"""Readers for the simulator's CSV and manifest contracts.

Only the documented file formats are touched here; nothing imports the
simulator itself. Malformed rows are reported with their 1-based line
number.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger("plotviz")

REM_HEADER = ["x_m", "y_m", "sinr_db"]
KPI_HEADER = ["t_s", "gu_id", "direction", "gain_db", "sinr_db", "rate_bps", "served"]
SWEEP_HEADER = ["value", "gu_id", "direction", "mean_sinr_db", "mean_rate_bps"]


class CsvFormatError(ValueError):
    """A CSV file does not match its contract."""


def _rows(path: Path, expected_header: list[str]):
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}:1: empty file, expected header {expected_header}")
        if header != expected_header:
            raise CsvFormatError(f"{path}:1: header {header} != {expected_header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(expected_header):
                raise CsvFormatError(
                    f"{path}:{lineno}: expected {len(expected_header)} fields, got {len(row)}"
                )
            yield lineno, row


def _float(path: Path, lineno: int, name: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise CsvFormatError(f"{path}:{lineno}: bad {name} value {raw!r}") from None


@dataclass
class RemData:
    xs: np.ndarray          # sorted unique x coordinates
    ys: np.ndarray          # sorted unique y coordinates
    sinr_db: np.ndarray     # shape (len(ys), len(xs)), NaN where -inf


def read_rem(path: str | Path) -> RemData:
    path = Path(path)
    xs, ys, vs = [], [], []
    for lineno, row in _rows(path, REM_HEADER):
        xs.append(_float(path, lineno, "x_m", row[0]))
        ys.append(_float(path, lineno, "y_m", row[1]))
        vs.append(_float(path, lineno, "sinr_db", row[2]))
    if not xs:
        log.warning("%s holds no samples, rendering an empty canvas", path)
        return RemData(np.array([]), np.array([]), np.empty((0, 0)))
    x = np.array(xs)
    y = np.array(ys)
    v = np.array(vs)
    ux = np.unique(x)
    uy = np.unique(y)
    grid = np.full((uy.size, ux.size), np.nan)
    ix = np.searchsorted(ux, x)
    iy = np.searchsorted(uy, y)
    grid[iy, ix] = np.where(np.isneginf(v), np.nan, v)
    return RemData(xs=ux, ys=uy, sinr_db=grid)


@dataclass
class KpiData:
    t_s: np.ndarray
    gu_id: list[str]
    direction: list[str]
    sinr_db: np.ndarray
    rate_bps: np.ndarray
    served: np.ndarray


def read_kpi(path: str | Path) -> KpiData:
    path = Path(path)
    t, gu, direction, sinr, rate_, served = [], [], [], [], [], []
    for lineno, row in _rows(path, KPI_HEADER):
        t.append(_float(path, lineno, "t_s", row[0]))
        gu.append(row[1])
        direction.append(row[2])
        sinr.append(_float(path, lineno, "sinr_db", row[4]))
        rate_.append(_float(path, lineno, "rate_bps", row[5]))
        if row[6] not in ("true", "false"):
            raise CsvFormatError(f"{path}:{lineno}: bad served flag {row[6]!r}")
        served.append(row[6] == "true")
    if not t:
        log.warning("%s holds no records, rendering an empty canvas", path)
    return KpiData(
        t_s=np.array(t), gu_id=gu, direction=direction,
        sinr_db=np.array(sinr), rate_bps=np.array(rate_), served=np.array(served, dtype=bool),
    )


@dataclass
class SweepData:
    value: np.ndarray
    gu_id: list[str]
    direction: list[str]
    mean_sinr_db: np.ndarray
    mean_rate_bps: np.ndarray


def read_sweep(path: str | Path) -> SweepData:
    path = Path(path)
    value, gu, direction, sinr, rate_ = [], [], [], [], []
    for lineno, row in _rows(path, SWEEP_HEADER):
        value.append(_float(path, lineno, "value", row[0]))
        gu.append(row[1])
        direction.append(row[2])
        sinr.append(_float(path, lineno, "mean_sinr_db", row[3]))
        rate_.append(_float(path, lineno, "mean_rate_bps", row[4]))
    if not value:
        log.warning("%s holds no rows, rendering an empty canvas", path)
    return SweepData(
        value=np.array(value), gu_id=gu, direction=direction,
        mean_sinr_db=np.array(sinr), mean_rate_bps=np.array(rate_),
    )


@dataclass
class ManifestOverlay:
    buildings: list[tuple[float, float, float, float]]  # (min_x, min_y, dx, dy)
    bs_nodes: list[tuple[str, float, float]]
    gu_nodes: list[tuple[str, float, float]]
    drones: list[tuple[str, float, float]]


def read_manifest_overlay(path: str | Path) -> ManifestOverlay:
    doc = json.loads(Path(path).read_text())
    config = doc.get("config", doc)
    buildings = []
    for b in config.get("world", {}).get("buildings", []):
        cx, cy = b["center_m"]
        dx, dy, _dz = b["size_m"]
        buildings.append((cx - dx / 2.0, cy - dy / 2.0, dx, dy))
    bs_nodes, gu_nodes = [], []
    for n in config.get("nodes", []):
        entry = (n["id"], n["position"][0], n["position"][1])
        (bs_nodes if n.get("role") == "BS" else gu_nodes).append(entry)
    drones = []
    for d in config.get("drones", []):
        mob = d.get("mobility", {})
        if mob.get("kind") == "STATIC":
            drones.append((d["id"], mob["position"][0], mob["position"][1]))
    return ManifestOverlay(buildings=buildings, bs_nodes=bs_nodes, gu_nodes=gu_nodes, drones=drones)
