import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special, stats

from starris.channels import (
    ChannelRealization,
    GridSpec,
    LinkSet,
    RicianLink,
    cascaded_moments,
    cascaded_stats,
    cophased_channel,
    correlation_rho,
    default_links,
    draw_realization,
    kl_divergence,
    kl_gaussian_approx,
    laguerre_half,
    product_rician_cdf,
    product_rician_pdf,
    sample_rician,
    sum_pdf_exact,
)
from starris.errors import DomainError

K_DEFAULT = 10**0.13


def rice_pdf(link):
    """scipy's Rice law in amplitude for a link with (K, Omega)."""
    nu, s = math.sqrt(link.alpha2), math.sqrt(link.beta)
    return lambda a: stats.rice.pdf(a, nu / s, scale=s)


def product_pdf_by_quadrature(z, bs, user):
    fh, fg = rice_pdf(bs), rice_pdf(user)
    val, _ = integrate.quad(lambda a: fh(a) * fg(z / a) / a, 0, np.inf, limit=200)
    return val


def test_rician_parameters():
    link = RicianLink(3.0, 2.0)
    assert link.alpha2 == pytest.approx(1.5)
    assert link.beta == pytest.approx(0.25)
    assert link.alpha2 + 2 * link.beta == pytest.approx(link.omega)


def test_link_validation():
    with pytest.raises(DomainError):
        RicianLink(-0.1, 1.0)
    with pytest.raises(DomainError):
        RicianLink(1.0, 0.0)
    with pytest.raises(DomainError):
        RicianLink.from_distance(1.0, 0.0)


def test_distance_power_law():
    assert RicianLink.from_distance(1.0, 10.0, 2.2).omega == pytest.approx(10**-2.2)


def test_laguerre_half_values():
    assert laguerre_half(0.0) == 1.0
    # L_{1/2}(-x) ~ 2 sqrt(x / pi) for large x
    assert laguerre_half(1e6) / (2 * math.sqrt(1e6 / math.pi)) == pytest.approx(1.0, rel=1e-6)
    with pytest.raises(DomainError):
        laguerre_half(-1.0)


@given(st.floats(0, 50), st.floats(0.01, 100))
def test_rician_mean_matches_scipy(k, omega):
    link = RicianLink(k, omega)
    nu, s = math.sqrt(link.alpha2), math.sqrt(link.beta)
    assert link.mean_amplitude == pytest.approx(stats.rice.mean(nu / s, scale=s), rel=1e-9)


def test_rayleigh_product_mean_is_quarter_pi():
    mu, sigma = cascaded_moments(RicianLink(0, 1), RicianLink(0, 1))
    assert abs(mu - math.pi / 4) < 1e-12
    assert sigma**2 == pytest.approx(1 - math.pi**2 / 16, rel=1e-12)


def test_default_moments_frozen():
    l = default_links()
    mu, sigma = cascaded_moments(l.h, l.g_r)
    assert mu == pytest.approx(0.836597615081045, rel=1e-12)
    assert sigma == pytest.approx(0.5478178807237928, rel=1e-12)
    assert correlation_rho(l.h, l.g_r, l.g_t) == pytest.approx(0.45551491965981233, rel=1e-12)


@given(st.floats(0, 20), st.floats(0.1, 10), st.floats(0, 20), st.floats(0.1, 10), st.floats(0.1, 10))
def test_correlation_is_scale_free(kh, oh, kg, og, c):
    h, g = RicianLink(kh, oh), RicianLink(kg, og)
    rho = correlation_rho(h, g, g)
    assert 0 <= rho < 1
    assert correlation_rho(h.scaled(c), g.scaled(c), g) == pytest.approx(rho, rel=1e-9, abs=1e-12)


def test_sampling_moments(rng):
    link = RicianLink(K_DEFAULT, 2.0)
    x = sample_rician(link, rng, 400_000)
    assert np.mean(np.abs(x) ** 2) == pytest.approx(2.0, rel=0.01)
    assert np.mean(np.abs(x)) == pytest.approx(link.mean_amplitude, rel=0.005)
    # the line-of-sight phase is uniform, so the complex mean vanishes
    assert abs(np.mean(x)) < 0.01


def test_draw_realization_shapes(rng):
    real = draw_realization(default_links(), 7, rng, (3, 5))
    assert real.h.shape == (3, 5, 7)
    assert real.m_elements == 7
    with pytest.raises(DomainError):
        ChannelRealization(np.ones(3), np.ones(4), np.ones(3))


def test_cophased_channel_is_real_and_maximal(rng):
    real = draw_realization(default_links(), 16, rng, 100)
    h_r, h_t = cophased_channel(real, 0.9, 0.3)
    assert np.allclose(h_r, 0.9 * np.sum(np.abs(real.g_r * real.h), axis=-1))
    assert np.allclose(h_t, 0.3 * np.sum(np.abs(real.g_t * real.h), axis=-1))


def test_product_pdf_rayleigh_closed_form():
    # |h||g| for unit-power Rayleigh links has density 4 z K0(2 z)
    z = np.array([0.05, 0.5, 1.0, 2.5])
    np.testing.assert_allclose(product_rician_pdf(z, RicianLink(0, 1), RicianLink(0, 1)), 4 * z * special.k0(2 * z), rtol=1e-12)


@pytest.mark.parametrize(
    "bs, user, z",
    [
        (RicianLink(K_DEFAULT, 1.0), RicianLink(K_DEFAULT, 1.0), 0.5),
        (RicianLink(3.0, 2.0), RicianLink(0.5, 0.7), 1.3),
        (RicianLink(10.0, 1.0), RicianLink(0.0, 1.0), 0.9),
    ],
)
def test_product_pdf_matches_quadrature(bs, user, z):
    assert product_rician_pdf(np.array([z]), bs, user)[0] == pytest.approx(product_pdf_by_quadrature(z, bs, user), rel=1e-8)


def test_product_pdf_frozen_values():
    l = RicianLink(K_DEFAULT, 1.0)
    assert product_rician_pdf(np.array([0.5]), l, l)[0] == pytest.approx(0.8396961173552173, rel=1e-10)
    got = product_rician_pdf(np.array([1.3]), RicianLink(3, 2), RicianLink(0.5, 0.7))[0]
    assert got == pytest.approx(0.43246499200601884, rel=1e-10)


@pytest.mark.parametrize("k", [0.0, K_DEFAULT, 5.0])
def test_product_pdf_normalised_with_correct_mean(k):
    bs = user = RicianLink(k, 1.0)
    mass, _ = integrate.quad(lambda z: product_rician_pdf(np.array([z]), bs, user)[0], 0, np.inf, limit=200)
    mean, _ = integrate.quad(lambda z: z * product_rician_pdf(np.array([z]), bs, user)[0], 0, np.inf, limit=200)
    assert mass == pytest.approx(1.0, abs=1e-8)
    assert mean == pytest.approx(cascaded_moments(bs, user)[0], rel=1e-8)


def test_product_pdf_edge_cases():
    l = RicianLink(K_DEFAULT, 1.0)
    assert product_rician_pdf(np.array([0.0]), l, l).tolist() == [0.0]
    with pytest.raises(DomainError):
        product_rician_pdf(np.array([-1.0]), l, l)
    pdf, info = product_rician_pdf(np.array([0.7, 1.4]), l, l, full_output=True)
    assert info["converged"] and info["terms"] >= 1


def test_product_cdf_monotone():
    l = RicianLink(K_DEFAULT, 1.0)
    c = product_rician_cdf(np.array([0.2, 0.8, 1.5, 6.0]), l, l)
    assert np.all(np.diff(c) > 0)
    assert c[-1] == pytest.approx(1.0, abs=1e-6)


def test_sum_density_moments():
    l = RicianLink(K_DEFAULT, 1.0)
    mu, sigma = cascaded_moments(l, l)
    for m in (1, 4, 20):
        dens = sum_pdf_exact(m, l, l)
        assert dens.integral() == pytest.approx(1.0, abs=1e-9)
        assert dens.mean() == pytest.approx(m * mu, rel=1e-4)
        assert dens.var() == pytest.approx(m * sigma**2, rel=1e-3)


def test_sum_density_methods_agree():
    l = RicianLink(0.0, 1.0)
    a = sum_pdf_exact(6, l, l, method="fft")
    b = sum_pdf_exact(6, l, l, method="direct")
    assert np.max(np.abs(a.pdf - b.pdf)) < 1e-9 * np.max(a.pdf)


def test_kl_of_identical_densities_is_zero():
    x = np.linspace(-5, 5, 1001)
    f = stats.norm.pdf(x)
    assert kl_divergence(x, f, f) == pytest.approx(0.0, abs=1e-15)


def test_kl_frozen_values():
    l = RicianLink(K_DEFAULT, 1.0)
    assert kl_gaussian_approx(5, l, l) == pytest.approx(0.03574334710836772, rel=1e-3)
    assert kl_gaussian_approx(10, l, l) == pytest.approx(0.01350420674642945, rel=1e-3)


def test_kl_stable_under_grid_refinement():
    # the Gaussian puts weight where the exact density is ~1e-13 of its peak, so tails must stay accurate
    l = RicianLink(K_DEFAULT, 1.0)
    mu, sigma = cascaded_moments(l, l)
    top = 5 * (mu + 12 * sigma)
    coarse = kl_gaussian_approx(5, l, l, grid=GridSpec(0.0, top, 2**13))
    fine = kl_gaussian_approx(5, l, l, grid=GridSpec(0.0, top, 2**15))
    assert coarse == pytest.approx(fine, rel=5e-3)


def test_grid_spec_validation():
    assert GridSpec(0.0, 1.0, 11).step == pytest.approx(0.1)
    with pytest.raises(DomainError):
        GridSpec(1.0, 1.0, 11)


def test_link_set_from_distances():
    ls = LinkSet.from_distances(2.0, 50.0, 10.0, 20.0)
    assert ls.g_t.omega < ls.g_r.omega
    stats_r, stats_t = cascaded_stats(ls.h, ls.g_r, ls.g_t)
    assert stats_r.rho == stats_t.rho
