"""Two-user uplink through a STAR surface: NOMA and OMA link metrics.

User r sits on the reflection side and user t on the transmission side. The
BS decodes user r first, treating user t as noise, then decodes user t after
(possibly imperfect) successive interference cancellation.

Every function works on a single realization or on a batch: channel arrays
carry the M elements on their last axis and any leading axes are batch axes.
"""
import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .channels import LinkSet, RicianLink
from .config import (
    DEFAULT_BS_DISTANCE,
    DEFAULT_K_DB,
    DEFAULT_NOISE_DBM,
    DEFAULT_PATHLOSS_EXPONENT,
    DEFAULT_RATE,
    DEFAULT_USER_DISTANCE,
    TOL,
    db_to_linear,
    dbm_to_watts,
    rate_threshold,
)
from .em import StarCoefficients
from .errors import DomainError


class Scheme(str, enum.Enum):
    NOMA = "noma"
    OMA = "oma"


class User(str, enum.Enum):
    R = "r"
    T = "t"


def _default_links():
    k = float(db_to_linear(DEFAULT_K_DB))
    return LinkSet(
        h=RicianLink.from_distance(k, DEFAULT_BS_DISTANCE, DEFAULT_PATHLOSS_EXPONENT),
        g_r=RicianLink.from_distance(k, DEFAULT_USER_DISTANCE, DEFAULT_PATHLOSS_EXPONENT),
        g_t=RicianLink.from_distance(k, DEFAULT_USER_DISTANCE, DEFAULT_PATHLOSS_EXPONENT),
    )


@dataclass(frozen=True)
class UplinkScenario:
    """Surface, power and rate settings of one uplink operating point.

    ``beta_r=None`` completes the lossless energy split
    ``beta_r = sqrt(1 - beta_t**2)``. ``ms_fraction`` switches to the
    mode-switching profile: that fraction of elements (rounded up) is
    transmit-only, the rest reflect-only. ``sic_mode='residual'`` scales the
    post-SIC interference by user r's gain instead of user t's own gain.
    """

    m_elements: int = 64
    beta_t: float = 0.2
    beta_r: Optional[float] = None
    p: float = 0.01
    noise: float = float(dbm_to_watts(DEFAULT_NOISE_DBM))
    alpha0: float = 0.0
    rate_r: float = DEFAULT_RATE
    rate_t: float = DEFAULT_RATE
    scheme: Scheme = Scheme.NOMA
    ms_fraction: Optional[float] = None
    links: LinkSet = field(default_factory=_default_links)
    sic_mode: str = "printed"
    ms_permutation_seed: Optional[int] = None

    def __post_init__(self):
        if self.m_elements < 1:
            raise DomainError("m_elements must be >= 1")
        if not 0.0 <= self.beta_t <= 1.0:
            raise DomainError(f"beta_t must lie in [0, 1], got {self.beta_t}")
        if self.beta_r is None:
            object.__setattr__(self, "beta_r", math.sqrt(1.0 - self.beta_t**2))
        if not 0.0 <= self.beta_r <= 1.0:
            raise DomainError(f"beta_r must lie in [0, 1], got {self.beta_r}")
        if self.beta_t**2 + self.beta_r**2 > 1.0 + TOL.passivity:
            raise DomainError("beta_t**2 + beta_r**2 exceeds 1")
        if not 0.0 <= self.alpha0 <= 1.0:
            raise DomainError(f"alpha0 must lie in [0, 1], got {self.alpha0}")
        if self.p < 0 or self.noise <= 0:
            raise DomainError("need p >= 0 and noise > 0")
        if self.rate_r <= 0 or self.rate_t <= 0:
            raise DomainError("target rates must be positive")
        if self.ms_fraction is not None and not 0.0 <= self.ms_fraction <= 1.0:
            raise DomainError("ms_fraction must lie in [0, 1]")
        if self.sic_mode not in ("printed", "residual"):
            raise DomainError(f"unknown sic_mode {self.sic_mode!r}")
        object.__setattr__(self, "scheme", Scheme(self.scheme))

    @property
    def gamma_r(self):
        return rate_threshold(self.rate_r)

    @property
    def gamma_t(self):
        return rate_threshold(self.rate_t)

    @property
    def transmit_snr(self):
        return self.p / self.noise

    @property
    def sic_fails(self):
        """True when residual interference alone caps user t below its threshold."""
        return self.alpha0 > 0 and 1.0 / self.alpha0 <= self.gamma_t

    def with_snr_db(self, snr_db):
        return replace(self, p=self.noise * db_to_linear(snr_db))

    def with_beta_t(self, beta_t):
        return replace(self, beta_t=beta_t, beta_r=None)


@dataclass(frozen=True)
class SinrPair:
    sinr_r: np.ndarray
    sinr_t: np.ndarray


def build_surface(sc):
    """Per-element amplitudes ``(beta_t_m, beta_r_m)`` for the scenario's profile."""
    m = sc.m_elements
    if sc.ms_fraction is None:
        return np.full(m, sc.beta_t), np.full(m, sc.beta_r)
    n_t = math.ceil(sc.ms_fraction * m - 1e-9)
    transmit = np.zeros(m, dtype=bool)
    transmit[:n_t] = True
    if sc.ms_permutation_seed is not None:
        transmit = np.random.default_rng(sc.ms_permutation_seed).permutation(transmit)
    return transmit.astype(float), (~transmit).astype(float)


def cophase_coefficients(real, sc):
    """Coefficients whose phases align every cascaded term of each user."""
    beta_t, beta_r = build_surface(sc)
    phi_t = -np.angle(real.g_t * real.h)
    phi_r = -np.angle(real.g_r * real.h)
    return StarCoefficients(beta_t * np.exp(1j * phi_t), beta_r * np.exp(1j * phi_r))


def _check_length(real, coeffs):
    for name in ("t", "r"):
        if np.shape(getattr(coeffs, name))[-1:] != (real.m_elements,):
            raise DomainError(f"coefficient list '{name}' does not match {real.m_elements} elements")


def received_signal(real, sc, coeffs, s_r, s_t, noise_draw):
    _check_length(real, coeffs)
    root_p = math.sqrt(sc.p)
    y_r = np.sum(real.g_r * real.h * coeffs.r, axis=-1) * root_p * s_r
    y_t = np.sum(real.g_t * real.h * coeffs.t, axis=-1) * root_p * s_t
    return y_r + y_t + noise_draw


def channel_gains(real, coeffs):
    """Effective power gains ``|sum g h c|^2`` of the reflection and transmission paths."""
    _check_length(real, coeffs)
    g_r = np.abs(np.sum(real.g_r * real.h * coeffs.r, axis=-1)) ** 2
    g_t = np.abs(np.sum(real.g_t * real.h * coeffs.t, axis=-1)) ** 2
    return g_r, g_t


def noma_sinrs(real, sc, coeffs):
    if sc.scheme is not Scheme.NOMA:
        raise DomainError("noma_sinrs requires a NOMA scenario")
    g_r, g_t = channel_gains(real, coeffs)
    p, n0 = sc.p, sc.noise
    sinr_r = p * g_r / (p * g_t + n0)
    residual = g_t if sc.sic_mode == "printed" else g_r
    sinr_t = p * g_t / (sc.alpha0 * p * residual + n0)
    return SinrPair(sinr_r, sinr_t)


def noma_outage_events(sp, sc):
    """Outage indicators; a SINR exactly at its threshold counts as outage."""
    ok_r = sp.sinr_r > sc.gamma_r
    ok_t = sp.sinr_t > sc.gamma_t
    return ~ok_r, ~(ok_r & ok_t)


def high_snr_outage_event(real, sc, coeffs=None):
    """Outage indicators in the noise-free limit: the gain-ratio event drives both users."""
    coeffs = cophase_coefficients(real, sc) if coeffs is None else coeffs
    g_r, g_t = channel_gains(real, coeffs)
    out_r = g_r <= sc.gamma_r * g_t
    if sc.sic_fails:
        return out_r, np.ones_like(out_r, dtype=bool)
    return out_r, np.copy(out_r)


def oma_snr_and_outage(real, sc, user, phases=None):
    """OMA SNR with unit amplitudes and its outage against ``2**(2R) - 1``.

    ``phases`` defaults to the cophase choice for the requested user.
    """
    user = User(user)
    g = real.g_r if user is User.R else real.g_t
    rate = sc.rate_r if user is User.R else sc.rate_t
    cascade = g * real.h
    if phases is None:
        amp = np.sum(np.abs(cascade), axis=-1)
    else:
        amp = np.abs(np.sum(cascade * np.exp(1j * np.asarray(phases)), axis=-1))
    snr = sc.p * amp**2 / sc.noise
    return snr, ~(snr > rate_threshold(2.0 * rate))
