"""High-SNR outage floors from the normal approximation of the cascaded gains.

At high transmit SNR both NOMA users fail exactly when ``H_r / H_t`` drops
below ``sqrt(gamma_r)``. For large M the two sums are approximately jointly
normal (they share the BS-side amplitudes), so the floor is the CDF of a ratio
of correlated normals, evaluated with the classic single-Phi approximation
that is accurate while the denominator stays well away from zero.
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

from .channels import CascadedStats, cascaded_stats
from .errors import ApproximationWarning, DomainError
from .config import TOL


@dataclass(frozen=True)
class RatioNormalParams:
    mu1: float
    mu2: float
    sigma1: float
    sigma2: float
    rho: float = 0.0

    def __post_init__(self):
        if not (self.sigma1 > 0 and self.sigma2 > 0):
            raise DomainError("standard deviations must be positive")
        if not -1.0 < self.rho < 1.0:
            raise DomainError(f"correlation must lie in (-1, 1), got {self.rho}")


@dataclass(frozen=True)
class FloorQuery:
    gamma_r: float
    beta_t: float
    beta_r: float
    m_elements: int
    stats_r: CascadedStats
    stats_t: CascadedStats
    alpha0: float = 0.0
    gamma_t: float = 2.0**1.5 - 1.0

    @classmethod
    def from_scenario(cls, sc):
        stats_r, stats_t = cascaded_stats(sc.links.h, sc.links.g_r, sc.links.g_t)
        return cls(
            gamma_r=sc.gamma_r,
            beta_t=sc.beta_t,
            beta_r=sc.beta_r,
            m_elements=sc.m_elements,
            stats_r=stats_r,
            stats_t=stats_t,
            alpha0=sc.alpha0,
            gamma_t=sc.gamma_t,
        )

    @property
    def threshold(self):
        if self.beta_r <= 0:
            raise DomainError("beta_r must be positive for a finite outage threshold")
        return math.sqrt(self.gamma_r) * self.beta_t / self.beta_r


def normal_cdf(y):
    out = 0.5 * special.erfc(-np.asarray(y, dtype=float) / math.sqrt(2.0))
    return float(out) if out.ndim == 0 else out


def ratio_cdf(x, p, warn=True):
    """Approximate ``Pr{W1 / W2 < x}`` for correlated normals with ``W2 > 0``."""
    if warn and p.mu2 / p.sigma2 < TOL.ratio_regime:
        warnings.warn(
            f"denominator mean is only {p.mu2 / p.sigma2:.2f} std above zero",
            ApproximationWarning,
            stacklevel=2,
        )
    x = np.asarray(x, dtype=float)
    # sigma1*sigma2*xi(x), written so that sigma2 -> 0 stays finite
    scale = np.sqrt(x**2 * p.sigma2**2 - 2.0 * p.rho * x * p.sigma1 * p.sigma2 + p.sigma1**2)
    return normal_cdf((p.mu2 * x - p.mu1) / scale)


def xi(x, sigma_r, sigma_t, rho):
    return np.sqrt(x**2 / sigma_r**2 - 2.0 * rho * x / (sigma_r * sigma_t) + 1.0 / sigma_t**2)


def _floor_t(common, alpha0, gamma_t):
    if alpha0 > 0 and 1.0 / alpha0 <= gamma_t:
        return 1.0
    return common


def error_floor(q, moments="sum"):
    """High-SNR outage floors ``(p_r, p_t)``.

    ``moments='sum'`` builds the statistics of the M-element sums
    (``M*mu``, ``sqrt(M)*sigma``). ``moments='element'`` plugs the
    per-element statistics in directly and is kept only for comparison.
    """
    x0 = q.threshold
    r, t = q.stats_r, q.stats_t
    if moments == "sum":
        m = q.m_elements
        params = RatioNormalParams(m * r.mu, m * t.mu, math.sqrt(m) * r.sigma, math.sqrt(m) * t.sigma, r.rho)
    elif moments == "element":
        params = RatioNormalParams(r.mu, t.mu, r.sigma, t.sigma, r.rho)
    else:
        raise ValueError(f"unknown moments mode {moments!r}")
    common = ratio_cdf(x0, params, warn=moments == "sum")
    return common, _floor_t(common, q.alpha0, q.gamma_t)


def floor_for_ms(fraction, m_elements, stats_r, stats_t, gamma_r, alpha0=0.0, gamma_t=2.0**1.5 - 1.0):
    """Floors for mode switching: disjoint transmit-only and reflect-only element sets."""
    if not 0.0 < fraction < 1.0:
        raise DomainError("mode-switching fraction must lie in (0, 1)")
    n_t = math.ceil(fraction * m_elements - 1e-9)
    n_r = m_elements - n_t
    if n_t == 0 or n_r == 0:
        raise DomainError(f"fraction {fraction} leaves one element set empty at M={m_elements}")
    params = RatioNormalParams(
        n_r * stats_r.mu,
        n_t * stats_t.mu,
        math.sqrt(n_r) * stats_r.sigma,
        math.sqrt(n_t) * stats_t.sigma,
        0.0,
    )
    common = ratio_cdf(math.sqrt(gamma_r), params)
    return common, _floor_t(common, alpha0, gamma_t)
