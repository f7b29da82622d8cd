"""Serving policies: which node pair each patch assists per time window."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .irs import PatchConfiguration, PatchSpec, PhaseParams

__all__ = [
    "SchedulingError",
    "EmptyPolicy",
    "PolicyCountMismatch",
    "PolicyKind",
    "ServingPair",
    "ServingPolicy",
    "PatchAssignment",
    "pair_at",
    "assignments_at",
]


class SchedulingError(ValueError):
    """Invalid serving policy or assignment request."""


class EmptyPolicy(SchedulingError):
    """A policy carries no pairs or slots."""


class PolicyCountMismatch(SchedulingError):
    """A configuration's patch count differs from its policy count."""


class PolicyKind(str, Enum):
    DEFINED = "DEFINED"
    PERIODIC = "PERIODIC"
    RANDOM = "RANDOM"


@dataclass(frozen=True)
class ServingPair:
    """Base-station / ground-user pair a patch assists."""

    bs_node_id: str
    gu_node_id: str

    def __post_init__(self) -> None:
        if self.bs_node_id == self.gu_node_id:
            raise SchedulingError(f"serving pair needs distinct nodes, got {self.bs_node_id} twice")


@dataclass(frozen=True)
class ServingPolicy:
    """One patch's serving schedule.

    DEFINED walks `slots` (pair, duration) in order and keeps the last pair
    afterwards. PERIODIC round-robins `pairs` every slot_s seconds. RANDOM
    draws one of `pairs` per slot window from a counter-based seeded stream,
    so queries at any time order agree.
    """

    kind: PolicyKind
    slots: tuple[tuple[ServingPair, float], ...] = ()
    pairs: tuple[ServingPair, ...] = ()
    slot_s: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind is PolicyKind.DEFINED:
            if not self.slots:
                raise EmptyPolicy("DEFINED policy needs at least one slot")
            for _, duration in self.slots:
                if duration <= 0 or not math.isfinite(duration):
                    raise SchedulingError(f"slot duration must be positive, got {duration}")
        else:
            if not self.pairs:
                raise EmptyPolicy(f"{self.kind.value} policy needs at least one pair")
            if self.slot_s <= 0 or not math.isfinite(self.slot_s):
                raise SchedulingError(f"slot length must be positive, got {self.slot_s}")


def pair_at(policy: ServingPolicy, t: float) -> ServingPair:
    """The pair the policy serves at time t (>= 0)."""
    if t < 0:
        raise SchedulingError(f"negative time {t}")
    if policy.kind is PolicyKind.DEFINED:
        start = 0.0
        for pair, duration in policy.slots:
            if t < start + duration:
                return pair
            start += duration
        return policy.slots[-1][0]
    window = int(t // policy.slot_s)
    if policy.kind is PolicyKind.PERIODIC:
        return policy.pairs[window % len(policy.pairs)]
    rng = np.random.default_rng((policy.seed, window))
    return policy.pairs[int(rng.integers(len(policy.pairs)))]


@dataclass(frozen=True)
class PatchAssignment:
    """A patch, the pair it currently assists, and its pointing phases."""

    patch: PatchSpec
    pair: ServingPair
    phases: PhaseParams


def assignments_at(
    configuration: PatchConfiguration,
    policies: Sequence[ServingPolicy],
    t: float,
    phase_for: Callable[[ServingPair], PhaseParams],
) -> list[PatchAssignment]:
    """Join the active patch layout with its serving decisions at time t.

    phase_for supplies freshly computed pointing phases for a pair (the
    caller owns the geometry).
    """
    if len(policies) != len(configuration.patches):
        raise PolicyCountMismatch(
            f"{len(configuration.patches)} patches but {len(policies)} policies"
        )
    out = []
    for patch, policy in zip(configuration.patches, policies):
        pair = pair_at(policy, t)
        out.append(PatchAssignment(patch=patch, pair=pair, phases=phase_for(pair)))
    return out
