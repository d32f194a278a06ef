import math
import warnings
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from starris.access import UplinkScenario, high_snr_outage_event
from starris.analysis import FloorQuery, RatioNormalParams, error_floor, floor_for_ms, normal_cdf, ratio_cdf
from starris.channels import CascadedStats, cascaded_stats, default_links, draw_realization
from starris.errors import ApproximationWarning, DomainError

LINKS = default_links()


def scenario(**kw):
    return UplinkScenario(links=LINKS, **kw)


def test_normal_cdf_values():
    assert normal_cdf(0.0) == 0.5
    assert normal_cdf(1.959963984540054) == pytest.approx(0.975, abs=1e-12)


def test_ratio_cdf_frozen_value():
    assert ratio_cdf(1.0, RatioNormalParams(1, 2, 0.5, 0.4, 0.3), warn=False) == pytest.approx(0.9683411065849772, rel=1e-12)


def test_ratio_cdf_matches_linear_combination(rng):
    # with W2 far from zero, W1/W2 < x iff W1 - x W2 < 0
    p = RatioNormalParams(3.0, 10.0, 1.0, 1.0, 0.4)
    cov = [[1.0, 0.4], [0.4, 1.0]]
    w = rng.multivariate_normal([3.0, 10.0], cov, size=400_000)
    for x in (0.2, 0.3, 0.4):
        assert ratio_cdf(x, p) == pytest.approx(np.mean(w[:, 0] / w[:, 1] < x), abs=0.003)


@given(st.floats(-5, 5), st.floats(0.01, 5), st.floats(-0.9, 0.9), st.floats(0, 3), st.floats(0.01, 1))
def test_ratio_cdf_monotone_in_x(mu1, s1, rho, x, dx):
    p = RatioNormalParams(mu1, 10.0, s1, 1.0, rho)
    assert ratio_cdf(x, p) <= ratio_cdf(x + dx, p) + 1e-15


@given(st.floats(0.01, 100), st.floats(0, 3))
def test_ratio_cdf_scale_invariant(c, x):
    p = RatioNormalParams(1.0, 5.0, 0.7, 0.9, 0.2)
    q = RatioNormalParams(c * 1.0, c * 5.0, c * 0.7, c * 0.9, 0.2)
    assert ratio_cdf(x, q) == pytest.approx(ratio_cdf(x, p), rel=1e-9, abs=1e-300)


def test_ratio_cdf_warns_near_zero_denominator():
    with pytest.warns(ApproximationWarning):
        ratio_cdf(1.0, RatioNormalParams(1.0, 1.0, 1.0, 1.0))


def test_ratio_params_validated():
    with pytest.raises(DomainError):
        RatioNormalParams(1, 1, 0, 1)
    with pytest.raises(DomainError):
        RatioNormalParams(1, 1, 1, 1, rho=1.0)


def test_floor_frozen_value():
    p_r, p_t = error_floor(FloorQuery.from_scenario(scenario(m_elements=4)))
    assert p_r == pytest.approx(0.007447521023550111, rel=1e-10)
    assert p_t == p_r


@given(st.floats(0.05, 0.65), st.floats(0.01, 0.2))
def test_floor_increases_with_beta_t(bt, step):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ApproximationWarning)
        lo = error_floor(FloorQuery.from_scenario(scenario(m_elements=16).with_beta_t(bt)))[0]
        hi = error_floor(FloorQuery.from_scenario(scenario(m_elements=16).with_beta_t(bt + step)))[0]
    assert hi >= lo


def test_floor_is_distance_free():
    near = UplinkScenario(m_elements=16)
    unit = scenario(m_elements=16)
    assert error_floor(FloorQuery.from_scenario(near))[0] == pytest.approx(
        error_floor(FloorQuery.from_scenario(unit))[0], rel=1e-9
    )


def test_failed_sic_pins_user_t_floor():
    q = FloorQuery.from_scenario(scenario(alpha0=0.6))
    p_r, p_t = error_floor(q)
    assert p_t == 1.0 and p_r < 1.0


def test_zero_beta_r_rejected():
    with pytest.raises(DomainError):
        FloorQuery.from_scenario(scenario(beta_t=1.0)).threshold


@pytest.mark.parametrize("beta_t", [0.5, 0.6])
def test_floor_matches_noise_free_simulation(beta_t):
    sc = scenario(m_elements=32).with_beta_t(beta_t)
    real = draw_realization(LINKS, 32, np.random.default_rng(3), 100_000)
    mc = high_snr_outage_event(real, sc)[0].mean()
    assert error_floor(FloorQuery.from_scenario(sc))[0] == pytest.approx(mc, abs=0.01)


def test_ms_floor_matches_simulation():
    stats_r, stats_t = cascaded_stats(LINKS.h, LINKS.g_r, LINKS.g_t)
    sc = scenario(m_elements=16, ms_fraction=0.25)
    real = draw_realization(LINKS, 16, np.random.default_rng(5), 100_000)
    mc = high_snr_outage_event(real, sc)[0].mean()
    assert floor_for_ms(0.25, 16, stats_r, stats_t, sc.gamma_r)[0] == pytest.approx(mc, abs=0.005)


def test_ms_floor_rejects_degenerate_partition():
    s = CascadedStats(1.0, 0.5, 0.3)
    with pytest.raises(DomainError):
        floor_for_ms(0.0, 8, s, s, 1.8)
    with pytest.raises(DomainError):
        floor_for_ms(0.99, 4, s, s, 1.8)
