"""Rician links, cascaded STAR channels and their statistics.

Each element sees a BS-side link ``h_m`` and a user-side link ``g_m``. With
cophased coefficients the per-user channel gain is a sum of products of two
Rician amplitudes; this module samples those products, evaluates their exact
density as a double Bessel series, and builds the density of the M-fold sum
numerically.
"""
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special
from scipy.integrate import trapezoid

from .config import (
    DEFAULT_K_DB,
    DEFAULT_PATHLOSS_EXPONENT,
    TOL,
    db_to_linear,
)
from .errors import DomainError, ResolutionError, SeriesTruncationWarning


@dataclass(frozen=True)
class RicianLink:
    """Rician amplitude with shape ``k`` (linear) and mean power ``omega``."""

    k: float
    omega: float

    def __post_init__(self):
        if not self.k >= 0:
            raise DomainError(f"Rician factor must be >= 0, got {self.k}")
        if not self.omega > 0:
            raise DomainError(f"mean power must be > 0, got {self.omega}")

    @classmethod
    def from_db(cls, k_db, omega=1.0):
        return cls(float(db_to_linear(k_db)), omega)

    @classmethod
    def from_distance(cls, k, distance, exponent=DEFAULT_PATHLOSS_EXPONENT):
        """Fold a power-law path loss ``distance**-exponent`` into ``omega``."""
        if not distance > 0:
            raise DomainError(f"distance must be > 0, got {distance}")
        return cls(k, float(distance) ** (-exponent))

    @property
    def alpha2(self):
        """Line-of-sight power ``K*Omega/(K+1)``."""
        return self.k * self.omega / (self.k + 1.0)

    @property
    def beta(self):
        """Per-component variance of the scattered part, ``Omega/(2(K+1))``."""
        return self.omega / (2.0 * (self.k + 1.0))

    @property
    def mean_amplitude(self):
        return math.sqrt(self.beta) * math.sqrt(math.pi / 2.0) * laguerre_half(self.k)

    def scaled(self, c):
        return RicianLink(self.k, self.omega * c)


@dataclass(frozen=True)
class LinkSet:
    """The three links of the two-user uplink: RIS-BS and RIS-user r/t."""

    h: RicianLink
    g_r: RicianLink
    g_t: RicianLink

    @classmethod
    def from_distances(cls, k, d_bs, d_r, d_t, exponent=DEFAULT_PATHLOSS_EXPONENT):
        return cls(
            RicianLink.from_distance(k, d_bs, exponent),
            RicianLink.from_distance(k, d_r, exponent),
            RicianLink.from_distance(k, d_t, exponent),
        )


@dataclass(frozen=True)
class CascadedStats:
    mu: float
    sigma: float
    rho: float = 0.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"cascaded std must be > 0, got {self.sigma}")
        if not -1.0 <= self.rho <= 1.0:
            raise DomainError(f"correlation must lie in [-1, 1], got {self.rho}")


@dataclass(frozen=True)
class ChannelRealization:
    """Complex element channels; the last axis indexes the M elements."""

    h: np.ndarray
    g_r: np.ndarray
    g_t: np.ndarray

    def __post_init__(self):
        shapes = {np.shape(self.h), np.shape(self.g_r), np.shape(self.g_t)}
        if len(shapes) != 1:
            raise DomainError(f"channel sequences differ in shape: {sorted(shapes)}")
        if np.ndim(self.h) == 0 or np.shape(self.h)[-1] < 1:
            raise DomainError("a realization needs at least one element")

    @property
    def m_elements(self):
        return np.shape(self.h)[-1]


@dataclass(frozen=True)
class GridSpec:
    min: float
    max: float
    points: int

    def __post_init__(self):
        if not self.max > self.min:
            raise DomainError("grid max must exceed grid min")
        if self.points < 2:
            raise DomainError("grid needs at least two points")

    @property
    def x(self):
        return np.linspace(self.min, self.max, self.points)

    @property
    def step(self):
        return (self.max - self.min) / (self.points - 1)


@dataclass(frozen=True)
class DiscreteDensity:
    x: np.ndarray
    pdf: np.ndarray

    def integral(self):
        return float(trapezoid(self.pdf, self.x))

    def mean(self):
        return float(trapezoid(self.x * self.pdf, self.x))

    def var(self):
        m = self.mean()
        return float(trapezoid((self.x - m) ** 2 * self.pdf, self.x))


# ---------------------------------------------------------------------------
# sampling


def sample_rician(link, rng, size=None):
    """Complex Rician coefficient: LoS phasor plus circular Gaussian scatter.

    The LoS phase is uniform, so the coefficient phase is uniform too.
    """
    nu = math.sqrt(link.alpha2)
    s = math.sqrt(link.beta)
    phase = rng.uniform(0.0, 2.0 * np.pi, size)
    scatter = rng.normal(0.0, s, size) + 1j * rng.normal(0.0, s, size)
    return nu * np.exp(1j * phase) + scatter


def draw_realization(links, m_elements, rng, size=()):
    shape = ((size,) if isinstance(size, int) else tuple(size)) + (m_elements,)
    return ChannelRealization(
        h=sample_rician(links.h, rng, shape),
        g_r=sample_rician(links.g_r, rng, shape),
        g_t=sample_rician(links.g_t, rng, shape),
    )


def cophased_channel(real, beta_r, beta_t):
    """Aggregate amplitudes ``(H_r, H_t)`` when every term is phase aligned."""
    for name, b in (("beta_r", beta_r), ("beta_t", beta_t)):
        if np.any(np.asarray(b) < 0) or np.any(np.asarray(b) > 1):
            raise DomainError(f"{name} must lie in [0, 1]")
    a = np.abs(real.h)
    h_r = np.sum(beta_r * a * np.abs(real.g_r), axis=-1)
    h_t = np.sum(beta_t * a * np.abs(real.g_t), axis=-1)
    return h_r, h_t


# ---------------------------------------------------------------------------
# closed-form statistics


def laguerre_half(x):
    """Laguerre function ``L_{1/2}(-x)`` for ``x >= 0``.

    Uses ``L_{1/2}(-x) = e^{-x/2}[(1+x) I0(x/2) + x I1(x/2)]`` with
    exponentially scaled Bessel functions so large ``x`` cannot overflow.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("laguerre_half expects x >= 0")
    out = (1.0 + x) * special.i0e(x / 2.0) + x * special.i1e(x / 2.0)
    return float(out) if out.ndim == 0 else out


def cascaded_moments(bs, user):
    """Mean and std of one cascaded amplitude ``|h||g|``."""
    mu = (
        0.25
        * math.sqrt(math.pi * bs.omega / (bs.k + 1.0))
        * laguerre_half(bs.k)
        * math.sqrt(math.pi * user.omega / (user.k + 1.0))
        * laguerre_half(user.k)
    )
    var = bs.omega * user.omega - mu**2
    return mu, math.sqrt(var)


def correlation_rho(bs, user_r, user_t):
    """Correlation of ``|h||g_r|`` and ``|h||g_t|`` through their shared ``|h|``.

    Elements are i.i.d., so this is also the correlation of the sums H_r, H_t.
    """
    mu_r, s_r = cascaded_moments(bs, user_r)
    mu_t, s_t = cascaded_moments(bs, user_t)
    cov = bs.omega * user_r.mean_amplitude * user_t.mean_amplitude - mu_r * mu_t
    return cov / (s_r * s_t)


def cascaded_stats(bs, user_r, user_t):
    rho = correlation_rho(bs, user_r, user_t)
    return (
        CascadedStats(*cascaded_moments(bs, user_r), rho=rho),
        CascadedStats(*cascaded_moments(bs, user_t), rho=rho),
    )


def _log_kve(orders, z):
    """``log(K_n(z) e^z)`` for integer orders (rows) and arguments (cols)."""
    n = orders[:, None].astype(float)
    with np.errstate(over="ignore", divide="ignore"):
        val = np.log(special.kve(n, z[None, :]))
    bad = ~np.isfinite(val)
    if np.any(bad):
        # small-argument form K_n(z) ~ Gamma(n)/2 (2/z)^n, reached only when kve overflows
        nn = np.broadcast_to(n, val.shape)
        zz = np.broadcast_to(z[None, :], val.shape)
        val = np.where(
            bad,
            special.gammaln(np.maximum(nn, 1.0)) + nn * np.log(2.0 / zz) - math.log(2.0) + zz,
            val,
        )
    return val


def _series_chunk(x, bs, user, tol, cap, n=16):
    """Sum the double series for a 1-d chunk of strictly positive ``x``."""
    b_h, b_g = bs.beta, user.beta
    z = x / math.sqrt(b_h * b_g)
    log_pref = np.log(x / (b_h * b_g)) - (bs.k + user.k)
    la = math.log(bs.alpha2 / (4.0 * b_h**2)) if bs.alpha2 > 0 else None
    lb = math.log(user.alpha2 / (4.0 * b_g**2)) if user.alpha2 > 0 else None
    half_log_ratio = 0.5 * math.log(b_h / b_g)
    logx = np.log(x)

    while True:
        ni = n if la is not None else 0
        nl = n if lb is not None else 0
        i = np.arange(ni + 1)
        l = np.arange(nl + 1)
        logk = _log_kve(np.arange(max(ni, nl) + 1), z)  # (orders, N)
        d = i[:, None] - l[None, :]
        lt = (
            log_pref[:, None, None]
            - 2.0 * special.gammaln(i + 1.0)[None, :, None]
            - 2.0 * special.gammaln(l + 1.0)[None, None, :]
            + d[None, :, :] * half_log_ratio
            + logk[np.abs(d)].transpose(2, 0, 1)
            - z[:, None, None]
        )
        if la is not None:
            lt = lt + (i[None, :, None] * (la + logx[:, None, None]))
        if lb is not None:
            lt = lt + (l[None, None, :] * (lb + logx[:, None, None]))
        top = np.max(lt, axis=(1, 2))
        safe_top = np.where(np.isfinite(top), top, 0.0)
        terms = np.exp(lt - safe_top[:, None, None])
        total = terms.sum(axis=(1, 2))
        edge = np.zeros_like(total)
        if ni:
            edge = np.maximum(edge, terms[:, -1, :].max(axis=1))
        if nl:
            edge = np.maximum(edge, terms[:, :, -1].max(axis=1))
        dens = np.where(np.isfinite(top), total * np.exp(safe_top), 0.0)
        # points whose density underflows need no further terms
        negligible = dens < TOL.pdf_floor
        converged = bool(np.all((edge <= tol * total) | negligible))
        if converged or n >= cap:
            return dens, converged, n
        n = min(2 * n, cap)


def product_rician_pdf(x, bs, user, tol=TOL.series, full_output=False, chunk=256):
    """Density of the product of two independent Rician amplitudes.

    Evaluates the double Bessel-K series in log space. The series is
    truncated once its boundary terms fall below ``tol`` times the running
    sum, with both indices capped at ``TOL.series_cap``. With
    ``full_output`` the return value is ``(pdf, info)`` where ``info`` holds
    ``converged`` and the largest index used; otherwise a failed cap emits
    :class:`SeriesTruncationWarning`.
    """
    if not tol > 0:
        raise DomainError("tol must be > 0")
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xa < 0):
        raise DomainError("product density is defined for x >= 0")
    out = np.zeros_like(xa)
    pos = np.flatnonzero(xa > 0)
    pos = pos[np.argsort(xa[pos], kind="stable")]
    mu, sigma = cascaded_moments(bs, user)
    tail_start = mu + 10.0 * sigma
    converged = True
    n_used = 0
    n = 8
    for start in range(0, pos.size, chunk):
        idx = pos[start : start + chunk]
        # x is ascending, so the truncation index only grows from chunk to chunk
        dens, ok, n = _series_chunk(xa[idx], bs, user, tol, TOL.series_cap, n)
        out[idx] = dens
        converged &= ok
        n_used = max(n_used, n)
        # the density decays monotonically in the far tail; once it underflows we are done
        if xa[idx[0]] > tail_start and dens.max() < TOL.pdf_floor:
            break
    if np.ndim(x) == 0:
        out = float(out[0])
    if full_output:
        return out, {"converged": converged, "terms": n_used}
    if not converged:
        warnings.warn("product Rician series hit its index cap", SeriesTruncationWarning, stacklevel=2)
    return out


def product_rician_cdf(x, bs, user, tol=TOL.series):
    """Reference CDF by adaptive quadrature of :func:`product_rician_pdf`."""
    from scipy import integrate

    def one(b):
        return integrate.quad(lambda u: product_rician_pdf(u, bs, user, tol), 0.0, b, limit=200)[0] if b > 0 else 0.0

    xa = np.asarray(x, dtype=float)
    if xa.ndim == 0:
        return one(float(xa))
    return np.array([one(b) for b in xa.ravel()]).reshape(xa.shape)


# ---------------------------------------------------------------------------
# sum density and Gaussian-approximation quality


def default_grid(m_elements, bs, user, points=2**14, spread=12.0):
    """Grid ``[0, M(mu + spread*sigma)]``; wider than the 8-sigma minimum to keep the tail."""
    mu, sigma = cascaded_moments(bs, user)
    return GridSpec(0.0, m_elements * (mu + spread * sigma), points)


def _cell_masses(x, bs, user):
    """Probability of each grid cell ``[x_k - dx/2, x_k + dx/2]`` (Simpson rule)."""
    dx = x[1] - x[0]
    half = np.empty(2 * x.size - 1)
    half[0::2] = x
    half[1::2] = x[:-1] + dx / 2
    f = product_rician_pdf(half, bs, user)
    f_mid = f[0::2]
    f_edge = f[1::2]  # f at x_k + dx/2
    mass = np.empty_like(x)
    mass[1:-1] = dx / 6.0 * (f_edge[:-1] + 4.0 * f_mid[1:-1] + f_edge[1:])
    first_quarter = product_rician_pdf(dx / 4, bs, user) if x[0] == 0 else f_mid[0]
    mass[0] = dx / 12.0 * (f_mid[0] + 4.0 * first_quarter + f_edge[0])
    mass[-1] = dx / 2.0 * f_mid[-1]
    return mass


def _self_convolve(p, m, method):
    """M-fold self-convolution of a lattice probability vector, truncated to its length."""
    if m == 1:
        return p.copy()
    n = p.size
    if method == "fft":
        nfft = 1 << int(math.ceil(math.log2(2 * n)))
        return np.fft.irfft(np.fft.rfft(p, nfft) ** m, nfft)[:n]
    if method == "direct":
        support = np.flatnonzero(p > 0)
        g = p[: support[-1] + 1] if support.size else p[:1]
        acc = g
        for _ in range(m - 1):
            acc = np.convolve(acc, g)[:n]
        out = np.zeros(n)
        out[: acc.size] = acc
        return out
    raise ValueError(f"unknown convolution method {method!r}")


def sum_pdf_exact(m_elements, bs, user, grid=None, method="fft"):
    """Density of the sum of ``m_elements`` i.i.d. cascaded amplitudes on a grid.

    The single-element series density is integrated over grid cells and the
    resulting lattice distribution is self-convolved ``m_elements - 1`` times.
    ``method='fft'`` uses a zero-padded cyclic convolution; ``'direct'`` keeps
    full relative accuracy in the tails at quadratic cost. A mass drift beyond
    ``TOL.normalization_drift`` raises :class:`ResolutionError`; otherwise the
    result is renormalised.
    """
    if m_elements < 1:
        raise DomainError("need at least one element")
    grid = grid or default_grid(m_elements, bs, user)
    if grid.min != 0:
        raise DomainError("sum density grid must start at 0")
    x = grid.x
    masses = _self_convolve(_cell_masses(x, bs, user), m_elements, method)
    pdf = np.where(masses > 0, masses, 0.0) / grid.step
    mass = trapezoid(pdf, x)
    if abs(mass - 1.0) > TOL.normalization_drift:
        raise ResolutionError(f"density mass {mass:.6g} drifts from 1; refine the grid")
    return DiscreteDensity(x, pdf / mass)


def gaussian_pdf(x, mean, std):
    return np.exp(-0.5 * ((x - mean) / std) ** 2) / (std * math.sqrt(2.0 * math.pi))


def kl_divergence(x, f_gauss, f_exact, floor=TOL.pdf_floor):
    """Gaussian-weighted ``int f_gauss log(f_gauss / f_exact)`` over ``f_exact > floor``."""
    keep = f_exact > floor
    integrand = np.zeros_like(x, dtype=float)
    g = f_gauss[keep]
    with np.errstate(divide="ignore", invalid="ignore"):
        integrand[keep] = np.where(g > 0, g * np.log(g / f_exact[keep]), 0.0)
    return float(trapezoid(integrand, x))


def kl_gaussian_approx(m_elements, bs, user, grid=None, method="direct", exact=None):
    """KL quality of the normal approximation to the M-fold sum density.

    The normal has mean ``M*mu`` and variance ``M*sigma^2``. ``exact`` may be a
    precomputed :class:`DiscreteDensity` (used by self-tests).
    """
    mu, sigma = cascaded_moments(bs, user)
    if exact is None:
        exact = sum_pdf_exact(m_elements, bs, user, grid, method=method)
    f_gauss = gaussian_pdf(exact.x, m_elements * mu, math.sqrt(m_elements) * sigma)
    return kl_divergence(exact.x, f_gauss, exact.pdf)


def default_links(k_db=DEFAULT_K_DB, omega=1.0):
    link = RicianLink.from_db(k_db, omega)
    return LinkSet(link, link, link)
