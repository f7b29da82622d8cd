"""Figure rendering for the simulator's CSV outputs.

Five plot kinds: REM heatmaps (with building/node overlays from the run
manifest), 3D beam surfaces, sweep curves, per-user rate traces, and
throughput bar charts. Rendering is deterministic: identical inputs and
style give byte-identical images.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Rectangle

from .io import (
    KpiData,
    ManifestOverlay,
    read_kpi,
    read_manifest_overlay,
    read_rem,
    read_sweep,
)

log = logging.getLogger("plotviz")

KINDS = ("rem_heatmap", "beam_3d", "curve", "trace", "bars")


@dataclass
class PlotJob:
    kind: str
    inputs: list[tuple[str, Path]]          # (label, path) pairs
    out: Path
    manifest: Path | None = None
    direction: str = "UPLINK"
    vmin: float | None = None
    vmax: float | None = None
    title: str | None = None
    dpi: int = 120

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown plot kind {self.kind!r}, expected one of {KINDS}")
        if not self.inputs:
            raise ValueError("at least one --in file is required")


def _save(fig, job: PlotJob) -> Path:
    job.out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(job.out, dpi=job.dpi, metadata={"Software": "plotviz"})
    plt.close(fig)
    return job.out


def _overlay(ax, overlay: ManifestOverlay) -> None:
    for min_x, min_y, dx, dy in overlay.buildings:
        ax.add_patch(Rectangle((min_x, min_y), dx, dy, fill=False,
                               edgecolor="black", linewidth=1.2))
    for name, x, y in overlay.bs_nodes:
        ax.plot(x, y, marker="^", color="red", markersize=9)
        ax.annotate(name, (x, y), textcoords="offset points", xytext=(4, 4), fontsize=7)
    for name, x, y in overlay.gu_nodes:
        ax.plot(x, y, marker="o", color="white", markeredgecolor="black", markersize=5)
    for name, x, y in overlay.drones:
        ax.plot(x, y, marker="x", color="magenta", markersize=8)


def render_rem_heatmap(job: PlotJob) -> Path:
    data = read_rem(job.inputs[0][1])
    fig, ax = plt.subplots(figsize=(7, 6))
    if data.xs.size and data.ys.size:
        mesh = ax.pcolormesh(data.xs, data.ys, np.ma.masked_invalid(data.sinr_db),
                             shading="nearest", cmap="viridis", vmin=job.vmin, vmax=job.vmax)
        fig.colorbar(mesh, ax=ax, label="SINR [dB]")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal")
    ax.set_title(job.title or "Downlink radio environment map")
    if job.manifest is not None:
        _overlay(ax, read_manifest_overlay(job.manifest))
    return _save(fig, job)


def render_beam_3d(job: PlotJob) -> Path:
    data = read_rem(job.inputs[0][1])
    fig = plt.figure(figsize=(8, 6))
    ax = fig.add_subplot(projection="3d")
    if data.xs.size and data.ys.size:
        xx, yy = np.meshgrid(data.xs, data.ys)
        zz = data.sinr_db.copy()
        floor = np.nanmin(zz) if np.isfinite(np.nanmin(zz)) else 0.0
        zz = np.where(np.isnan(zz), floor, zz)
        ax.plot_surface(xx, yy, zz, cmap="viridis", rstride=1, cstride=1,
                        linewidth=0, antialiased=False)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_zlabel("SINR [dB]")
    ax.set_title(job.title or "Reflected beam footprint")
    return _save(fig, job)


def render_curve(job: PlotJob) -> Path:
    data = read_sweep(job.inputs[0][1])
    mask = [d == job.direction for d in data.direction]
    values = sorted(set(data.value[mask])) if data.value.size else []
    rates, sinrs = [], []
    for v in values:
        sel = [m and data.value[i] == v for i, m in enumerate(mask)]
        rates.append(float(np.mean(data.mean_rate_bps[sel])) / 1e6)
        sinrs.append(float(np.mean(data.mean_sinr_db[sel])))
    fig, ax_rate = plt.subplots(figsize=(7, 5))
    ax_sinr = ax_rate.twinx()
    if values:
        ax_rate.plot(values, rates, marker="o", color="tab:blue", label="rate")
        ax_sinr.plot(values, sinrs, marker="s", color="tab:orange", label="SINR")
    ax_rate.set_xlabel("swept value")
    ax_rate.set_ylabel("max achievable rate [Mbps]", color="tab:blue")
    ax_sinr.set_ylabel("SINR [dB]", color="tab:orange")
    ax_rate.set_title(job.title or f"{job.direction.lower()} rate and SINR vs swept parameter")
    return _save(fig, job)


def render_trace(job: PlotJob) -> Path:
    data = read_kpi(job.inputs[0][1])
    fig, ax = plt.subplots(figsize=(8, 5))
    users = sorted(set(data.gu_id))
    for gu in users:
        sel = [g == gu and d == job.direction for g, d in zip(data.gu_id, data.direction)]
        if not any(sel):
            continue
        order = np.argsort(data.t_s[sel])
        ax.plot(data.t_s[sel][order], data.rate_bps[sel][order] / 1e6, label=gu)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("max achievable rate [Mbps]")
    ax.set_title(job.title or f"{job.direction.lower()} rate trace")
    if users:
        ax.legend(fontsize=7, ncol=2)
    return _save(fig, job)


def _mean_throughput(data: KpiData, direction: str) -> float:
    """Mean over users of each user's average rate."""
    per_gu: dict[str, list[float]] = {}
    for g, d, r in zip(data.gu_id, data.direction, data.rate_bps):
        if d == direction:
            per_gu.setdefault(g, []).append(r)
    if not per_gu:
        return 0.0
    return float(np.mean([np.mean(v) for v in per_gu.values()]))


def render_bars(job: PlotJob) -> Path:
    labels, heights = [], []
    for label, path in job.inputs:
        data = read_kpi(path)
        labels.append(label)
        heights.append(_mean_throughput(data, job.direction) / 1e6)
    fig, ax = plt.subplots(figsize=(6, 5))
    ax.bar(range(len(labels)), heights, color="tab:blue", width=0.6)
    ax.set_xticks(range(len(labels)), labels)
    ax.set_ylabel("average throughput [Mbps]")
    ax.set_title(job.title or f"{job.direction.lower()} average throughput")
    return _save(fig, job)


_RENDERERS = {
    "rem_heatmap": render_rem_heatmap,
    "beam_3d": render_beam_3d,
    "curve": render_curve,
    "trace": render_trace,
    "bars": render_bars,
}


def render(job: PlotJob) -> Path:
    """Render one job to its output image and return the path."""
    return _RENDERERS[job.kind](job)
