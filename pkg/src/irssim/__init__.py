"""System-level simulator for multi-UAV IRS-assisted radio links.

Closed-form cascaded-Rician channel statistics with an exact per-element
Monte-Carlo sampler for self-validation, patch/serving configurators for
drone-mounted reflective surfaces, a deterministic KPI engine, radio
environment maps, and CSV/JSON outputs.
"""

from .channel import (
    ChannelParams,
    MultipathMode,
    RicianStats,
    combine_stats,
    gain_lowerbound,
    inverse_q,
    k_factor,
    sample_exact_gain,
    zeta,
)
from .config import ScenarioConfig, parse_scenario, to_document, validate_scenario
from .engine import Direction, EvalMode, KpiRecord, evaluate_gu, run, step
from .geometry import BuildingBox, Vec3
from .irs import IrsSpec, PatchConfiguration, PatchSpec, PhaseParams, optimal_phases
from .mobility import MobilityModel, position_at
from .output import RateMapper, RemGrid, aggregate_throughput, rate
from .rem import generate_rem
from .scheduling import ServingPair, ServingPolicy, pair_at

__version__ = "0.1.0"

__all__ = [
    "ChannelParams",
    "MultipathMode",
    "RicianStats",
    "combine_stats",
    "gain_lowerbound",
    "inverse_q",
    "k_factor",
    "sample_exact_gain",
    "zeta",
    "ScenarioConfig",
    "parse_scenario",
    "to_document",
    "validate_scenario",
    "Direction",
    "EvalMode",
    "KpiRecord",
    "evaluate_gu",
    "run",
    "step",
    "BuildingBox",
    "Vec3",
    "IrsSpec",
    "PatchConfiguration",
    "PatchSpec",
    "PhaseParams",
    "optimal_phases",
    "MobilityModel",
    "position_at",
    "RateMapper",
    "RemGrid",
    "aggregate_throughput",
    "rate",
    "generate_rem",
    "ServingPair",
    "ServingPolicy",
    "pair_at",
    "__version__",
]
