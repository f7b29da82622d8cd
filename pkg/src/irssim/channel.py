"""Closed-form cascaded-Rician channel statistics and the exact sampler.

All internal math is linear-scale; dB appears only in named `_db` inputs.
Phase conventions, shared by the closed form and the element-level sampler:
a hop of length D carries the bulk phase -2*pi*f*D/c, and the element at
lattice offsets (ox, oy) adds the steering phase +ell*(ox*ax + oy*ay)
toward a target with local direction cosines (ax, ay), ell = 2*pi*f*d/c
with d the element side. Reflection phases enter as +phi. These signs are
pinned by one requirement: with all scatter removed, the coherent amplitude
of the closed form must equal the magnitude of the summed element phasors.

Amplitude terms floor link distances at the 1 m reference; propagation
phases always use the true distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Sequence

import numpy as np

from .geometry import IrsFrame, LinkGeometry, Vec3, distance
from .irs import PatchLayout, PhaseParams

__all__ = [
    "SPEED_OF_LIGHT",
    "ChannelError",
    "InvalidRange",
    "OutOfDomain",
    "NoCrossover",
    "DegenerateGeometry",
    "AllLinksSuppressed",
    "MultipathMode",
    "ChannelParams",
    "HopGeometry",
    "DirectLinkTerms",
    "CascadedLinkTerms",
    "RicianStats",
    "OutageGain",
    "PatchChannel",
    "ExactChannelSnapshot",
    "db_to_linear",
    "linear_to_db",
    "free_space_beta",
    "k_factor",
    "kappa_bar",
    "kappa_tilde",
    "hop_geometry",
    "direct_link_terms",
    "cascaded_terms",
    "combine_stats",
    "dirichlet_kernel",
    "dirichlet_kernel_array",
    "q_function",
    "inverse_q",
    "zeta",
    "zeta_array",
    "gain_lowerbound",
    "gamma_eps_array",
    "sample_exact_gain",
]

SPEED_OF_LIGHT = 299_792_458.0


class ChannelError(ValueError):
    """Invalid channel parameterization or state."""


class InvalidRange(ChannelError):
    """A bound pair is out of order."""


class OutOfDomain(ChannelError):
    """Argument outside the function's domain."""


class NoCrossover(ChannelError):
    """The piecewise outage factor has no branch intersection for this epsilon."""


class DegenerateGeometry(ChannelError):
    """A link of zero length cannot carry a far-field model."""


class AllLinksSuppressed(ChannelError):
    """Both the direct and every reflected contribution are absent."""


class MultipathMode(str, Enum):
    """How the direct/reflected interference term is evaluated."""

    DESTRUCTIVE = "DESTRUCTIVE"
    SIMULATED = "SIMULATED"
    CONSTRUCTIVE = "CONSTRUCTIVE"


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    if x == 0.0:
        return -math.inf
    return 10.0 * math.log10(x)


def free_space_beta(carrier_hz: float) -> float:
    """Free-space power gain at the 1 m reference distance: (c / 4 pi f)^2."""
    amp = SPEED_OF_LIGHT / (4.0 * math.pi * carrier_hz)
    return amp * amp


@dataclass(frozen=True)
class ChannelParams:
    """Channel-wide constants shared by every link of a scenario.

    beta_* are linear power gains at 1 m and default to the free-space
    value at the carrier. pattern_bg / pattern_bug are radiation-pattern
    products (unitless, default isotropic); pattern_cos_exponent > 0
    additionally applies a cos(theta)^q element pattern per reflected hop.
    """

    carrier_hz: float
    alpha_direct: float
    k_min_db: float = 6.0
    k_max_db: float = 10.0
    k_nlos_db: float = 0.0
    outage_eps: float = 0.01
    no_direct_link: bool = False
    no_irs_link: bool = False
    multipath_mode: MultipathMode = MultipathMode.SIMULATED
    beta_bg: float | None = None
    beta_bu: float | None = None
    beta_ug: float | None = None
    pattern_bg: float = 1.0
    pattern_bug: float = 1.0
    pattern_cos_exponent: float = 0.0

    def __post_init__(self) -> None:
        if self.carrier_hz <= 0:
            raise ChannelError(f"carrier frequency must be positive, got {self.carrier_hz}")
        if not 0.0 < self.outage_eps < 1.0:
            raise ChannelError(f"outage probability must lie in (0, 1), got {self.outage_eps}")
        if self.k_max_db < self.k_min_db:
            raise InvalidRange(f"KMax {self.k_max_db} dB < KMin {self.k_min_db} dB")
        if self.alpha_direct < 2.0:
            raise ChannelError(f"direct pathloss exponent must be >= 2, got {self.alpha_direct}")
        default = free_space_beta(self.carrier_hz)
        for name in ("beta_bg", "beta_bu", "beta_ug"):
            value = getattr(self, name)
            if value is None:
                object.__setattr__(self, name, default)
            elif value <= 0:
                raise ChannelError(f"{name} must be positive, got {value}")
        if self.pattern_bg <= 0 or self.pattern_bug <= 0:
            raise ChannelError("radiation pattern products must be positive")

    @property
    def beta_bug(self) -> float:
        return self.beta_bu * self.beta_ug

    @property
    def ell_for(self) -> float:
        return 2.0 * math.pi * self.carrier_hz / SPEED_OF_LIGHT

    def wavenumber_ell(self, pru: float) -> float:
        """ell = 2 pi f d / c for an element side of d meters."""
        return 2.0 * math.pi * self.carrier_hz * pru / SPEED_OF_LIGHT


def k_factor(inclination_rad: float, k_min_db: float, k_max_db: float) -> float:
    """Elevation-dependent Rician K-factor, linear scale.

    Equals the maximum at vertical incidence (0 or pi) and the minimum at
    horizontal (pi/2), interpolating exponentially in |pi/2 - theta|.
    """
    if k_max_db < k_min_db:
        raise InvalidRange(f"k_max_db {k_max_db} < k_min_db {k_min_db}")
    k_min = db_to_linear(k_min_db)
    k_max = db_to_linear(k_max_db)
    log_ratio = math.log(k_max / k_min) if k_max != k_min else 0.0
    return k_min * math.exp((2.0 / math.pi) * log_ratio * abs(math.pi / 2.0 - inclination_rad))


def kappa_bar(kappa: float) -> float:
    """Coherent power fraction kappa / (kappa + 1)."""
    if math.isinf(kappa):
        return 1.0
    return kappa / (kappa + 1.0)


def kappa_tilde(kappa: float) -> float:
    """Scattered power fraction 1 / (kappa + 1)."""
    if math.isinf(kappa):
        return 0.0
    return 1.0 / (kappa + 1.0)


@dataclass(frozen=True)
class DirectLinkTerms:
    """Amplitude, K-factor split, and propagation phase of the direct link."""

    lam: float
    kappa_bg: float
    kbar_bg: float
    ktilde_bg: float
    phase: float


def direct_link_terms(geom: LinkGeometry, params: ChannelParams, los: bool) -> DirectLinkTerms:
    """Direct-link amplitude scale and Rician split for one geometry.

    NLoS swaps the elevation K-factor law for the configured NLoS K-factor.
    The no-direct-link flag zeroes the amplitude but keeps the phase.
    """
    if los:
        kap = k_factor(geom.inclination_rad, params.k_min_db, params.k_max_db)
    else:
        kap = db_to_linear(params.k_nlos_db)
    if params.no_direct_link:
        lam = 0.0
    else:
        d_amp = max(geom.distance, 1.0)
        lam = math.sqrt(params.beta_bg * d_amp ** (-params.alpha_direct) * params.pattern_bg)
    phase = params.ell_for * geom.distance
    return DirectLinkTerms(
        lam=lam,
        kappa_bg=kap,
        kbar_bg=kappa_bar(kap),
        ktilde_bg=kappa_tilde(kap),
        phase=phase,
    )


@dataclass(frozen=True)
class HopGeometry:
    """One reflected hop as seen from the surface center.

    ax, ay are local direction cosines (sin(theta) cos(phi), sin(theta)
    sin(phi)) toward the endpoint; cos_theta_local is the local elevation
    cosine used by the optional element pattern; kappa comes from the
    world-frame inclination of the hop (or the NLoS value).
    """

    distance: float
    ax: float
    ay: float
    cos_theta_local: float
    kappa: float


def hop_geometry(
    frame: IrsFrame, surface_pos: Vec3, endpoint: Vec3, params: ChannelParams, los: bool = True
) -> HopGeometry:
    d = distance(surface_pos, endpoint)
    if d == 0.0:
        raise DegenerateGeometry("hop endpoint coincides with the surface")
    local = frame.to_local(endpoint)
    if los:
        cos_world = max(-1.0, min(1.0, (endpoint.z - surface_pos.z) / d))
        kap = k_factor(math.acos(cos_world), params.k_min_db, params.k_max_db)
    else:
        kap = db_to_linear(params.k_nlos_db)
    return HopGeometry(
        distance=d,
        ax=local.x / d,
        ay=local.y / d,
        cos_theta_local=local.z / d,
        kappa=kap,
    )


def dirichlet_kernel(x: float, m: int) -> float:
    """sin(m x) / sin(x) with the removable singularity evaluated exactly."""
    s = math.sin(x)
    if abs(s) < 1e-12:
        return m * math.cos(m * x) / math.cos(x)
    return math.sin(m * x) / s


def dirichlet_kernel_array(x: np.ndarray, m: int) -> np.ndarray:
    s = np.sin(x)
    near = np.abs(s) < 1e-12
    safe = np.where(near, 1.0, s)
    with np.errstate(invalid="ignore"):
        regular = np.sin(m * x) / safe
    limit = m * np.cos(m * x) / np.cos(x)
    return np.where(near, limit, regular)


@dataclass(frozen=True, eq=False)
class CascadedLinkTerms:
    """Closed-form description of one patch's reflected contribution.

    mu is the full complex coherent phasor (array factor with its patch
    position phase, times exp(-j omega)); mu_mag is its magnitude.
    """

    eta: float
    omega: float
    psi_x: float
    psi_y: float
    mu: complex
    mu_mag: float
    kbar_bug: float
    ktilde_bug: float
    m_rows: int
    m_cols: int
    ell: float
    uav_key: str = "uav"
    n_elems_surface: int | None = None


def _cascade_amplitude(
    bu: HopGeometry, ug: HopGeometry, params: ChannelParams
) -> float:
    pattern = params.pattern_bug
    q = params.pattern_cos_exponent
    if q > 0.0:
        pattern *= max(bu.cos_theta_local, 0.0) ** q * max(ug.cos_theta_local, 0.0) ** q
        if pattern == 0.0:
            return 0.0
    d_bu = max(bu.distance, 1.0)
    d_ug = max(ug.distance, 1.0)
    return math.sqrt(params.beta_bug * pattern) / (d_bu * d_ug)


def cascaded_kappas(kappa_bu: float, kappa_ug: float) -> tuple[float, float]:
    """Coherent and scattered power fractions of the two-hop product channel."""
    kbar = kappa_bar(kappa_bu) * kappa_bar(kappa_ug)
    ktilde = kappa_bar(kappa_bu) * kappa_tilde(kappa_ug) + kappa_tilde(kappa_bu) * kappa_bar(kappa_ug)
    return kbar, ktilde


def cascaded_terms(
    bs: Vec3,
    uav: Vec3,
    gu: Vec3,
    frame: IrsFrame,
    phases: PhaseParams,
    layout: PatchLayout,
    params: ChannelParams,
    *,
    bu_los: bool = True,
    ug_los: bool = True,
    uav_key: str = "uav",
    n_elems_surface: int | None = None,
) -> CascadedLinkTerms:
    """Closed-form reflected-path terms for one (surface, patch, node pair)."""
    bu = hop_geometry(frame, uav, bs, params, bu_los)
    ug = hop_geometry(frame, uav, gu, params, ug_los)

    psi_x = bu.ax + ug.ax + phases.phi_x
    psi_y = bu.ay + ug.ay + phases.phi_y
    ell = params.wavenumber_ell(layout.pru)

    d_x = dirichlet_kernel(ell * psi_x / 2.0, layout.m_cols)
    d_y = dirichlet_kernel(ell * psi_y / 2.0, layout.m_rows)

    eta = _cascade_amplitude(bu, ug, params)
    kbar_bug, ktilde_bug = cascaded_kappas(bu.kappa, ug.kappa)
    omega = params.ell_for * (bu.distance + ug.distance)
    offset_phase = ell * (layout.center_off_x * psi_x + layout.center_off_y * psi_y)
    mu = (
        eta
        * math.sqrt(kbar_bug)
        * d_x
        * d_y
        * complex(math.cos(offset_phase - omega), math.sin(offset_phase - omega))
    )
    return CascadedLinkTerms(
        eta=eta,
        omega=omega,
        psi_x=psi_x,
        psi_y=psi_y,
        mu=mu,
        mu_mag=abs(mu),
        kbar_bug=kbar_bug,
        ktilde_bug=ktilde_bug,
        m_rows=layout.m_rows,
        m_cols=layout.m_cols,
        ell=ell,
        uav_key=uav_key,
        n_elems_surface=n_elems_surface,
    )


@dataclass(frozen=True)
class RicianStats:
    """Rician approximation of the aggregate gain envelope."""

    nu_sq: float
    two_sigma_sq: float
    kappa: float
    omega_pow: float

    @classmethod
    def from_powers(cls, nu_sq: float, two_sigma_sq: float) -> "RicianStats":
        if two_sigma_sq > 0.0:
            kap = nu_sq / two_sigma_sq
        elif nu_sq > 0.0:
            kap = math.inf
        else:
            kap = 0.0
        return cls(nu_sq=nu_sq, two_sigma_sq=two_sigma_sq, kappa=kap, omega_pow=nu_sq + two_sigma_sq)


def combine_stats(
    cascaded: Sequence[CascadedLinkTerms],
    direct: DirectLinkTerms | None,
    n_elems_total: int | None = None,
    mode: MultipathMode = MultipathMode.SIMULATED,
) -> RicianStats:
    """Aggregate direct and reflected contributions into Rician statistics.

    The coherent power is the squared magnitude of the summed complex
    phasors; in DESTRUCTIVE / CONSTRUCTIVE mode the direct-reflected cross
    term is forced to its worst / best case instead of the actual phases.
    The scattered power counts each surface once (per-surface element count
    from the terms, falling back to n_elems_total).
    """
    lam = direct.lam if direct is not None else 0.0
    terms = list(cascaded)
    if not terms and lam == 0.0:
        raise AllLinksSuppressed("no direct link and no reflected contribution")

    reflected = sum((t.mu for t in terms), 0j)
    if direct is not None and lam > 0.0:
        amp = lam * math.sqrt(direct.kbar_bg)
        direct_coh = amp * complex(math.cos(direct.phase), -math.sin(direct.phase))
    else:
        amp = 0.0
        direct_coh = 0j

    if mode is MultipathMode.SIMULATED:
        nu_sq = abs(reflected + direct_coh) ** 2
    else:
        cross = 2.0 * sum(t.mu_mag for t in terms) * amp
        base = abs(reflected) ** 2 + amp * amp
        if mode is MultipathMode.CONSTRUCTIVE:
            nu_sq = base + cross
        else:
            # worst case can overshoot below zero when reflections cancel
            nu_sq = max(base - cross, 0.0)

    two_sigma_sq = lam * lam * direct.ktilde_bg if direct is not None else 0.0
    seen: set[str] = set()
    for t in terms:
        if t.uav_key in seen:
            continue
        seen.add(t.uav_key)
        n = t.n_elems_surface if t.n_elems_surface is not None else n_elems_total
        if n is None:
            raise ChannelError("surface element count missing: set n_elems_surface or n_elems_total")
        two_sigma_sq += n * t.eta * t.eta * t.ktilde_bug

    return RicianStats.from_powers(nu_sq, two_sigma_sq)


# --- outage lower bound -----------------------------------------------------


def q_function(z: float) -> float:
    """Complementary standard-normal integral."""
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def _norm_pdf(z: float) -> float:
    return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


# Acklam's rational approximation of the standard normal quantile.
_PPF_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
          1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_PPF_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
          6.680131188771972e01, -1.328068155288572e01)
_PPF_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
          -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_PPF_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
          3.754408661907416e00)
_PPF_P_LOW = 0.02425


def _norm_ppf_estimate(p: float) -> float:
    a, b, c, d = _PPF_A, _PPF_B, _PPF_C, _PPF_D
    if p < _PPF_P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    if p > 1.0 - _PPF_P_LOW:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    q = p - 0.5
    r = q * q
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / (
        ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0
    )


def inverse_q(p: float) -> float:
    """z with Q(z) = p, refined by Newton steps to better than 1e-9."""
    if not 0.0 < p < 1.0:
        raise OutOfDomain(f"inverse Q-function needs p in (0, 1), got {p}")
    z = -_norm_ppf_estimate(p)
    for _ in range(3):
        pdf = _norm_pdf(z)
        if pdf == 0.0:
            break
        z += (q_function(z) - p) / pdf
    return z


def _zeta_small(kappa: float, eps: float) -> float:
    if kappa > 1400.0:  # exp overflow guard; only reachable while bracketing K0
        return math.inf
    return math.sqrt(-2.0 * math.log1p(-eps)) * math.exp(kappa / 2.0)


def _zeta_large(x: float, q_inv: float) -> float:
    # x = sqrt(2 kappa), valid for x above the inverse-Q value
    return x + math.log(x / (x - q_inv)) / (2.0 * q_inv) - q_inv


@lru_cache(maxsize=None)
def _zeta_crossover(eps: float) -> float:
    """sqrt(2 kappa) at which the two outage-factor branches intersect."""
    q_inv = inverse_q(eps)
    if abs(q_inv) < 1e-12:
        return math.inf  # the large-kappa branch degenerates; keep the small one
    lo = max(q_inv, 0.0) + 1e-12 * max(1.0, abs(q_inv))
    hi = max(q_inv, 0.0) + 50.0

    def diff(x: float) -> float:
        return _zeta_large(x, q_inv) - _zeta_small(x * x / 2.0, eps)

    f_lo, f_hi = diff(lo), diff(hi)
    if not (f_lo > 0.0 and f_hi < 0.0):
        raise NoCrossover(f"no branch intersection for eps={eps}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if diff(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def zeta(kappa: float, eps: float) -> tuple[float, float]:
    """Outage amplitude factor and the branch crossover point K0.

    Returns (zeta, k0); the small-kappa branch applies for
    kappa <= k0^2 / 2, the asymptotic branch above it.
    """
    if kappa < 0.0:
        raise OutOfDomain(f"kappa must be nonnegative, got {kappa}")
    k0 = _zeta_crossover(eps)
    if math.isfinite(k0) and kappa > k0 * k0 / 2.0:
        return _zeta_large(math.sqrt(2.0 * kappa), inverse_q(eps)), k0
    return _zeta_small(kappa, eps), k0


def zeta_array(kappa: np.ndarray, eps: float) -> np.ndarray:
    """Vectorized zeta over finite, nonnegative kappa values."""
    kappa = np.asarray(kappa, dtype=float)
    k0 = _zeta_crossover(eps)
    scale = math.sqrt(-2.0 * math.log1p(-eps))
    if not math.isfinite(k0):
        with np.errstate(over="ignore"):
            return scale * np.exp(kappa / 2.0)
    q_inv = inverse_q(eps)
    thresh = k0 * k0 / 2.0
    small_mask = kappa <= thresh
    small = scale * np.exp(np.where(small_mask, kappa, 0.0) / 2.0)
    x = np.sqrt(2.0 * np.where(small_mask, thresh + 1.0, kappa))
    large = x + np.log(x / (x - q_inv)) / (2.0 * q_inv) - q_inv
    return np.where(small_mask, small, large)


@dataclass(frozen=True)
class OutageGain:
    """Outage-constrained lower bound on the channel power gain."""

    zeta: float
    k0: float
    gamma_eps: float


def gain_lowerbound(stats: RicianStats, eps: float) -> OutageGain:
    """Power gain exceeded with probability 1 - eps under the Rician fit.

    A fully deterministic channel (infinite K-factor) keeps its whole power.
    The result is clamped to the average power.
    """
    if math.isinf(stats.kappa):
        return OutageGain(zeta=math.inf, k0=_zeta_crossover(eps), gamma_eps=stats.omega_pow)
    z, k0 = zeta(stats.kappa, eps)
    gamma = z * z * stats.omega_pow / (2.0 * (stats.kappa + 1.0))
    return OutageGain(zeta=z, k0=k0, gamma_eps=min(gamma, stats.omega_pow))


def gamma_eps_array(nu_sq: np.ndarray, two_sigma_sq: np.ndarray, eps: float) -> np.ndarray:
    """Vectorized outage lower bound from raw coherent/scattered powers."""
    nu_sq = np.asarray(nu_sq, dtype=float)
    two_sigma_sq = np.asarray(two_sigma_sq, dtype=float)
    omega = nu_sq + two_sigma_sq
    out = np.zeros_like(omega)
    scattered = two_sigma_sq > 0.0
    if np.any(scattered):
        kap = nu_sq[scattered] / two_sigma_sq[scattered]
        z = zeta_array(kap, eps)
        with np.errstate(over="ignore", invalid="ignore"):
            gamma = z * z * omega[scattered] / (2.0 * (kap + 1.0))
        out[scattered] = np.minimum(gamma, omega[scattered])
    deterministic = ~scattered & (nu_sq > 0.0)
    out[deterministic] = nu_sq[deterministic]
    return out


# --- exact element-level sampler --------------------------------------------


@dataclass(frozen=True, eq=False)
class PatchChannel:
    """Element-level description of one patch for the exact sampler."""

    eta: float
    ell: float
    kbar_bu: float
    ktilde_bu: float
    kbar_ug: float
    ktilde_ug: float
    ax_bu: float
    ay_bu: float
    ax_ug: float
    ay_ug: float
    omega_bu: float
    omega_ug: float
    phi_x: float
    phi_y: float
    off_x: np.ndarray
    off_y: np.ndarray


@dataclass(frozen=True, eq=False)
class ExactChannelSnapshot:
    """Everything the exact sampler needs for one receiver at one instant."""

    direct: DirectLinkTerms | None
    patches: tuple[PatchChannel, ...]


def _complex_normal(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    return math.sqrt(0.5) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def sample_exact_gain(
    rng: np.random.Generator,
    snapshot: ExactChannelSnapshot,
    n_samples: int,
    chunk: int = 20_000,
) -> np.ndarray:
    """Draw aggregate complex gains from the exact per-element model.

    Every element of every patch gets independent Rician hop coefficients
    whose deterministic components carry the steering and bulk phases; the
    per-element products are summed through the reflection phases and the
    direct link is added on top.
    """
    out = np.empty(n_samples, dtype=complex)
    if n_samples == 0:
        return out

    prepared = []
    for p in snapshot.patches:
        chi_bu = p.ell * (p.off_x * p.ax_bu + p.off_y * p.ay_bu) - p.omega_bu
        chi_ug = p.ell * (p.off_x * p.ax_ug + p.off_y * p.ay_ug) - p.omega_ug
        refl = np.exp(1j * p.ell * (p.off_x * p.phi_x + p.off_y * p.phi_y))
        prepared.append(
            (
                p,
                math.sqrt(p.kbar_bu) * np.exp(1j * chi_bu),
                math.sqrt(p.kbar_ug) * np.exp(1j * chi_ug),
                refl,
            )
        )

    direct = snapshot.direct
    done = 0
    while done < n_samples:
        size = min(chunk, n_samples - done)
        acc = np.zeros(size, dtype=complex)
        for p, los_bu, los_ug, refl in prepared:
            m = p.off_x.shape[0]
            h_bu = los_bu[None, :] + math.sqrt(p.ktilde_bu) * _complex_normal(rng, (size, m))
            h_ug = los_ug[None, :] + math.sqrt(p.ktilde_ug) * _complex_normal(rng, (size, m))
            acc += p.eta * (h_bu * h_ug * refl[None, :]).sum(axis=1)
        if direct is not None and direct.lam > 0.0:
            h_bg = math.sqrt(direct.kbar_bg) * np.exp(-1j * direct.phase) + math.sqrt(
                direct.ktilde_bg
            ) * _complex_normal(rng, (size,))
            acc += direct.lam * h_bg
        out[done : done + size] = acc
        done += size
    return out
