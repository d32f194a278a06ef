import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from starris.access import (
    Scheme,
    UplinkScenario,
    User,
    build_surface,
    channel_gains,
    cophase_coefficients,
    high_snr_outage_event,
    noma_outage_events,
    noma_sinrs,
    oma_snr_and_outage,
    received_signal,
    SinrPair,
)
from starris.channels import default_links, draw_realization
from starris.em import StarCoefficients
from starris.errors import DomainError

LINKS = default_links()


@pytest.fixture
def batch(rng):
    return draw_realization(LINKS, 16, rng, 2000)


def test_beta_r_completes_energy_split():
    sc = UplinkScenario(beta_t=0.6)
    assert sc.beta_r == pytest.approx(0.8)
    assert sc.gamma_r == pytest.approx(2**1.5 - 1)


def test_scenario_validation():
    with pytest.raises(DomainError):
        UplinkScenario(beta_t=0.8, beta_r=0.8)
    with pytest.raises(DomainError):
        UplinkScenario(alpha0=1.5)
    with pytest.raises(DomainError):
        UplinkScenario(sic_mode="other")
    with pytest.raises(DomainError):
        UplinkScenario(m_elements=0)


def test_snr_helper():
    sc = UplinkScenario().with_snr_db(40.0)
    assert 10 * math.log10(sc.transmit_snr) == pytest.approx(40.0)


def test_cophasing_aligns_every_term(batch):
    sc = UplinkScenario(m_elements=16, links=LINKS)
    g_r, g_t = channel_gains(batch, cophase_coefficients(batch, sc))
    assert np.allclose(np.sqrt(g_r), sc.beta_r * np.sum(np.abs(batch.g_r * batch.h), axis=-1))
    assert np.allclose(np.sqrt(g_t), sc.beta_t * np.sum(np.abs(batch.g_t * batch.h), axis=-1))


def test_received_signal_is_superposition(batch):
    sc = UplinkScenario(m_elements=16, links=LINKS, p=0.04)
    c = cophase_coefficients(batch, sc)
    y = received_signal(batch, sc, c, 1.0, 1.0, 0.0)
    g_r, g_t = channel_gains(batch, c)
    assert np.allclose(y, 0.2 * (np.sqrt(g_r) + np.sqrt(g_t)))


def test_coefficient_length_checked(batch):
    sc = UplinkScenario(m_elements=16, links=LINKS)
    with pytest.raises(DomainError):
        channel_gains(batch, StarCoefficients(np.ones(15), np.ones(15)))


@given(st.floats(0.01, 1.0), st.floats(1e-6, 1e6), st.floats(1e-6, 1e6), st.floats(1e-3, 1e3))
def test_sic_error_caps_user_t(alpha0, g_r, g_t, p):
    from starris.channels import ChannelRealization

    real = ChannelRealization(np.array([1.0]), np.array([math.sqrt(g_r)]), np.array([math.sqrt(g_t)]))
    sc = UplinkScenario(m_elements=1, beta_t=1.0, beta_r=0.0, alpha0=alpha0, p=p, links=LINKS)
    sinr = noma_sinrs(real, sc, StarCoefficients(np.ones(1), np.ones(1)))
    # strict in exact arithmetic; rounding can reach the cap when noise is negligible
    assert sinr.sinr_t <= (1.0 / alpha0) * (1 + 1e-12)


@given(st.floats(-20, 40), st.floats(0.1, 20))
def test_outage_events_monotone_in_power(snr_db, step_db):
    real = draw_realization(LINKS, 8, np.random.default_rng(7), 256)
    sc = UplinkScenario(m_elements=8, links=LINKS, alpha0=0.1).with_snr_db(snr_db)
    hi = sc.with_snr_db(snr_db + step_db)
    lo_r, lo_t = noma_outage_events(noma_sinrs(real, sc, cophase_coefficients(real, sc)), sc)
    hi_r, hi_t = noma_outage_events(noma_sinrs(real, hi, cophase_coefficients(real, hi)), hi)
    assert np.all(hi_r <= lo_r) and np.all(hi_t <= lo_t)


def test_threshold_counts_as_outage():
    sc = UplinkScenario()
    at = SinrPair(np.array([sc.gamma_r]), np.array([sc.gamma_t]))
    out_r, out_t = noma_outage_events(at, sc)
    assert out_r[0] and out_t[0]


def test_user_t_needs_user_r_decoded():
    sc = UplinkScenario()
    out_r, out_t = noma_outage_events(SinrPair(np.array([0.1]), np.array([100.0])), sc)
    assert out_r[0] and out_t[0]


def test_no_transmission_path_means_user_t_outage(batch):
    sc = UplinkScenario(m_elements=16, beta_t=0.0, links=LINKS, p=1.0)
    out_r, out_t = noma_outage_events(noma_sinrs(batch, sc, cophase_coefficients(batch, sc)), sc)
    assert out_t.all()
    g_r = channel_gains(batch, cophase_coefficients(batch, sc))[0]
    np.testing.assert_array_equal(out_r, ~(sc.p * g_r / sc.noise > sc.gamma_r))


def test_residual_mode_differs_from_printed(batch):
    sc = UplinkScenario(m_elements=16, links=LINKS, alpha0=0.3, p=1.0)
    c = cophase_coefficients(batch, sc)
    printed = noma_sinrs(batch, sc, c).sinr_t
    residual = noma_sinrs(batch, replace(sc, sic_mode="residual"), c).sinr_t
    assert not np.allclose(printed, residual)


def test_high_snr_event_with_failed_sic(batch):
    sc = UplinkScenario(m_elements=16, links=LINKS, alpha0=0.6)
    assert sc.sic_fails
    out_r, out_t = high_snr_outage_event(batch, sc)
    assert out_t.all()
    assert not out_r.all()


def test_high_snr_event_is_gain_ratio(batch):
    sc = UplinkScenario(m_elements=16, links=LINKS, beta_t=0.6)
    out_r, out_t = high_snr_outage_event(batch, sc)
    g_r, g_t = channel_gains(batch, cophase_coefficients(batch, sc))
    np.testing.assert_array_equal(out_r, g_r <= sc.gamma_r * g_t)
    np.testing.assert_array_equal(out_r, out_t)


def test_mode_switching_surface():
    bt, br = build_surface(UplinkScenario(m_elements=10, ms_fraction=0.25))
    assert bt.sum() == 3 and br.sum() == 7
    assert np.all(bt + br == 1.0)
    bt2, _ = build_surface(UplinkScenario(m_elements=10, ms_fraction=0.25, ms_permutation_seed=4))
    assert bt2.sum() == 3


def test_oma_uses_double_rate_threshold(batch):
    sc = UplinkScenario(m_elements=16, links=LINKS, scheme=Scheme.OMA, p=1.0)
    snr, out = oma_snr_and_outage(batch, sc, User.T)
    np.testing.assert_array_equal(out, ~(snr > 2**3 - 1))
    amp = np.sum(np.abs(batch.g_t * batch.h), axis=-1)
    assert np.allclose(snr, amp**2 / sc.noise)


def test_oma_cophasing_is_optimal(batch):
    sc = UplinkScenario(m_elements=16, links=LINKS, scheme=Scheme.OMA)
    best, _ = oma_snr_and_outage(batch, sc, User.R)
    rand, _ = oma_snr_and_outage(batch, sc, User.R, phases=np.random.default_rng(1).uniform(0, 6.3, 16))
    assert np.all(rand <= best * (1 + 1e-12))


def test_noma_sinrs_reject_oma_scenario(batch):
    sc = UplinkScenario(m_elements=16, links=LINKS, scheme="oma")
    with pytest.raises(DomainError):
        noma_sinrs(batch, sc, cophase_coefficients(batch, sc))
