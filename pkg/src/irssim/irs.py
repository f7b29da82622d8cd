"""Reflective-surface model: element lattice, patch layout, phases, schedules.

Element indexing: patches address the lattice with 0-based (column, row)
indexes whose origin is the (min-x, min-y) corner in the surface-local
frame. Internally the lattice is centered on the surface origin, so a
column c maps to the offset c - (columns - 1)/2 in units of the element
side (0.5-element granularity covers odd and even dimensions alike).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import RotationSequence, Vec3

__all__ = [
    "IrsError",
    "DegenerateGeometry",
    "EmptySchedule",
    "IrsSpec",
    "PatchSpec",
    "PatchConfiguration",
    "PhaseParams",
    "PatchLayout",
    "element_offsets",
    "element_centers",
    "patch_layout",
    "validate_layout",
    "optimal_phases",
    "element_phase",
    "wrap_phase",
    "configuration_at",
    "configuration_window_at",
]

TWO_PI = 2.0 * math.pi


class IrsError(ValueError):
    """Invalid surface or patch description."""


class DegenerateGeometry(IrsError):
    """A pointing target coincides with the surface center."""


class EmptySchedule(IrsError):
    """A configuration schedule has no entries."""


@dataclass(frozen=True)
class IrsSpec:
    """Surface lattice: rows x columns elements of side pru_x = pru_y meters."""

    rows: int
    columns: int
    pru_x: float
    pru_y: float
    rotation: RotationSequence = RotationSequence()

    def __post_init__(self) -> None:
        if self.rows < 1 or self.columns < 1:
            raise IrsError(f"surface needs at least 1x1 elements, got {self.rows}x{self.columns}")
        if self.pru_x <= 0 or self.pru_y <= 0:
            raise IrsError("element side lengths must be positive")
        if self.pru_x != self.pru_y:
            raise IrsError("the model uses square elements: PruX must equal PruY")

    @property
    def n_elements(self) -> int:
        return self.rows * self.columns


@dataclass(frozen=True)
class PatchSpec:
    """Inclusive element-index rectangle [x_start..x_end] x [y_start..y_end]."""

    x_start: int
    x_end: int
    y_start: int
    y_end: int

    def __post_init__(self) -> None:
        if self.x_start < 0 or self.y_start < 0:
            raise IrsError(f"negative patch index in {self.size_index}")
        if self.x_end < self.x_start or self.y_end < self.y_start:
            raise IrsError(f"empty patch {self.size_index}")

    @property
    def size_index(self) -> tuple[int, int, int, int]:
        return (self.x_start, self.x_end, self.y_start, self.y_end)

    @property
    def m_cols(self) -> int:
        return self.x_end - self.x_start + 1

    @property
    def m_rows(self) -> int:
        return self.y_end - self.y_start + 1

    @property
    def n_elements(self) -> int:
        return self.m_cols * self.m_rows


@dataclass(frozen=True)
class PatchConfiguration:
    """One patch layout the surface adopts for period_s seconds."""

    patches: tuple[PatchSpec, ...]
    period_s: float

    def __post_init__(self) -> None:
        if self.period_s <= 0:
            raise IrsError(f"configuration period must be positive, got {self.period_s}")


@dataclass(frozen=True)
class PhaseParams:
    """Direction-cosine phase offsets shared by every element of a patch."""

    phi_x: float
    phi_y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.phi_x) and math.isfinite(self.phi_y)):
            raise IrsError(f"non-finite phase parameters ({self.phi_x}, {self.phi_y})")


@dataclass(frozen=True)
class PatchLayout:
    """Geometry of a patch on its surface, in units of the element side."""

    m_cols: int
    m_rows: int
    center_off_x: float
    center_off_y: float
    pru: float


def _column_offset(index: int, columns: int) -> float:
    return index - (columns - 1) / 2.0


def element_offsets(spec: IrsSpec, patch: PatchSpec) -> tuple[np.ndarray, np.ndarray]:
    """Per-element lattice offsets (units of the element side), row-major."""
    _check_bounds(spec, patch, raise_on_error=True)
    cols = np.arange(patch.x_start, patch.x_end + 1) - (spec.columns - 1) / 2.0
    rows = np.arange(patch.y_start, patch.y_end + 1) - (spec.rows - 1) / 2.0
    oy, ox = np.meshgrid(rows, cols, indexing="ij")
    return ox.ravel(), oy.ravel()


def element_centers(spec: IrsSpec, patch: PatchSpec) -> list[tuple[float, float]]:
    """Element midpoints in surface-local meters, row-major."""
    ox, oy = element_offsets(spec, patch)
    d = spec.pru_x
    return [(float(x) * d, float(y) * d) for x, y in zip(ox, oy)]


def patch_layout(spec: IrsSpec, patch: PatchSpec) -> PatchLayout:
    _check_bounds(spec, patch, raise_on_error=True)
    return PatchLayout(
        m_cols=patch.m_cols,
        m_rows=patch.m_rows,
        center_off_x=_column_offset((patch.x_start + patch.x_end) / 2.0, spec.columns),
        center_off_y=_column_offset((patch.y_start + patch.y_end) / 2.0, spec.rows),
        pru=spec.pru_x,
    )


def _check_bounds(spec: IrsSpec, patch: PatchSpec, raise_on_error: bool = False) -> str | None:
    msg = None
    if patch.x_end >= spec.columns or patch.y_end >= spec.rows:
        msg = (
            f"patch {patch.size_index} exceeds surface bounds "
            f"{spec.columns}x{spec.rows} (columns x rows)"
        )
    if msg and raise_on_error:
        raise IrsError(msg)
    return msg


def validate_layout(spec: IrsSpec, config: PatchConfiguration) -> list[str]:
    """Out-of-bounds and pairwise-overlap violations, empty list when valid."""
    errors: list[str] = []
    if not config.patches:
        errors.append("configuration has no patches")
    for idx, patch in enumerate(config.patches):
        msg = _check_bounds(spec, patch)
        if msg:
            errors.append(f"patch {idx}: {msg}")
    for i in range(len(config.patches)):
        for j in range(i + 1, len(config.patches)):
            a, b = config.patches[i], config.patches[j]
            if (
                a.x_start <= b.x_end
                and b.x_start <= a.x_end
                and a.y_start <= b.y_end
                and b.y_start <= a.y_end
            ):
                errors.append(
                    f"patches {i} and {j} overlap: {a.size_index} vs {b.size_index}"
                )
    return errors


def optimal_phases(bs_local: Vec3, gu_local: Vec3) -> PhaseParams:
    """Phase offsets that steer a patch to reflect coherently between two points.

    Both points are expressed in the surface-local frame. The result cancels
    the combined incident+departing direction cosines, so the patch's
    pointing error is zero toward this pair.
    """
    d_bs = bs_local.norm()
    d_gu = gu_local.norm()
    if d_bs == 0.0 or d_gu == 0.0:
        raise DegenerateGeometry("pointing target coincides with the surface center")
    return PhaseParams(
        phi_x=-(bs_local.x / d_bs + gu_local.x / d_gu),
        phi_y=-(bs_local.y / d_bs + gu_local.y / d_gu),
    )


def wrap_phase(x: float) -> float:
    """Map an angle to [-pi, pi)."""
    return (x + math.pi) % TWO_PI - math.pi


def element_phase(params: PhaseParams, i: float, i_prime: float, ell: float) -> float:
    """Phase shift of the element at lattice indexes (i, i_prime), wrapped.

    Indexes follow the centered convention where element i occupies the
    offset (i - 1/2) element sides from the surface center.
    """
    return wrap_phase(ell * ((i - 0.5) * params.phi_x + (i_prime - 0.5) * params.phi_y))


def configuration_window_at(
    schedule: list[PatchConfiguration] | tuple[PatchConfiguration, ...], t: float
) -> tuple[int, float]:
    """Index and start time of the configuration active at time t.

    Windows are half-open [start, start + period); past the last window the
    final configuration persists.
    """
    if not schedule:
        raise EmptySchedule("no patch configurations defined")
    if t < 0:
        raise IrsError(f"negative time {t}")
    start = 0.0
    for idx, conf in enumerate(schedule):
        if t < start + conf.period_s:
            return idx, start
        start += conf.period_s
    return len(schedule) - 1, start - schedule[-1].period_s


def configuration_at(
    schedule: list[PatchConfiguration] | tuple[PatchConfiguration, ...], t: float
) -> PatchConfiguration:
    """The configuration active at time t (see configuration_window_at)."""
    idx, _ = configuration_window_at(schedule, t)
    return schedule[idx]
