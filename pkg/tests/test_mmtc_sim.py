"""Tests for the grant-free machine-type traffic simulator."""

import math
from dataclasses import replace

import numpy as np
import pytest

from wlmimo.mmtc_sim import (
    MmtcConfig,
    MmtcResult,
    half_tti_mode,
    operating_snr,
    run_scenario,
    supported_users,
)
from wlmimo.montecarlo import Estimate, derive_rng


def wl_cfg(**kw):
    defaults = dict(users=1000, m_rx=1, family="wl")
    defaults.update(kw)
    return MmtcConfig(**defaults)


def flat_single_tone_cfg(**kw):
    """One user, one tone, deterministic unit attenuation, saturated arrivals."""
    defaults = dict(
        users=1, m_rx=1, family="wl", arrival_rate=20.0,
        tones=1, subcarrier_hz=3.75e3, bandwidth_hz=3.75e3,
        tx_power_dbm=-120.0, pathloss_intercept_db=0.0,
        pathloss_slope_db=0.0, shadow_sigma_db=0.0,
    )
    defaults.update(kw)
    return MmtcConfig(**defaults)


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ValueError):
        wl_cfg(tones=40)                      # grid no longer fills the band
    with pytest.raises(ValueError):
        wl_cfg(half_tti=True)                 # WL has no half-TTI variant
    with pytest.raises(ValueError):
        wl_cfg(drop_target=0.0)
    with pytest.raises(ValueError):
        wl_cfg(users=-1)
    with pytest.raises(ValueError):
        wl_cfg(family="ml")


def test_config_derived_properties():
    cfg = wl_cfg(m_rx=2)
    assert cfg.capacity == 4
    assert MmtcConfig(users=1, m_rx=2, family="cl").capacity == 2
    assert cfg.tx_probability == pytest.approx(1 - math.exp(-4.16e-4))
    assert cfg.sinr_threshold == pytest.approx(2 ** 0.6 - 1)
    assert MmtcConfig(users=1, m_rx=1, family="cl").sinr_threshold \
        == pytest.approx(2 ** 0.3 - 1)
    assert cfg.label == "WL"


def test_operating_snr_budget():
    # 23 dBm against thermal noise over one 3.75 kHz tone
    cfg = wl_cfg()
    snr_db = 10 * math.log10(operating_snr(cfg))
    expect = 23.0 - (-174.0 + 10 * math.log10(3750.0))
    assert snr_db == pytest.approx(expect, abs=1e-9)
    assert expect == pytest.approx(161.26, abs=0.01)


def test_half_tti_mode_transform():
    cfg = MmtcConfig(users=10, m_rx=1, family="cl")
    half = half_tti_mode(cfg)
    assert half.half_tti is True
    assert half.rate == 0.6
    assert half.arrival_rate == pytest.approx(cfg.arrival_rate / 2)
    assert half.tti_ms == 16.0
    assert half.label == "CL-half-TTI"
    with pytest.raises(ValueError):
        half_tti_mode(half)
    with pytest.raises(ValueError):
        half_tti_mode(wl_cfg())


# ---------------------------------------------------------------------------
# Scenario runs
# ---------------------------------------------------------------------------

def test_empty_population_produces_zeros():
    res = run_scenario(wl_cfg(users=0), 1000, derive_rng(1, "empty"))
    assert res.offered == 0
    assert res.decoded == 0
    assert res.drop_prob.value == 0.0
    assert res.throughput.value == 0.0


def test_run_scenario_needs_slots():
    with pytest.raises(ValueError):
        run_scenario(wl_cfg(), 100, derive_rng(1, "short"))


def test_single_user_drop_matches_closed_form():
    """With one user on one tone and flat unit attenuation, the only loss
    is link outage and its probability is exactly 1 - exp(-gamma_t/(2 snr))."""
    cfg = flat_single_tone_cfg()
    res = run_scenario(cfg, 30_000, derive_rng(2, "oracle"))
    snr = operating_snr(cfg)
    truth = 1.0 - math.exp(-cfg.sinr_threshold / (2.0 * snr))
    assert res.dropped_overload == 0
    se = max(res.drop_prob.stderr, 1e-6)
    assert abs(res.drop_prob.value - truth) < 4 * se
    assert res.drop_prob.ci_lo <= truth <= res.drop_prob.ci_hi


def test_throughput_bookkeeping_identity():
    cfg = flat_single_tone_cfg()
    res = run_scenario(cfg, 2_000, derive_rng(3, "tput"))
    per_packet = cfg.packet_bits / (cfg.tti_ms / 1000.0 * cfg.bandwidth_hz)
    assert res.throughput.value == pytest.approx(
        res.decoded / res.ttis * per_packet, rel=1e-12)


def test_conservation_and_capacity_accounting():
    cfg = wl_cfg(users=30_000, m_rx=2)
    res = run_scenario(cfg, 3_000, derive_rng(4, "conserve"))
    assert res.decoded + res.dropped == res.offered
    assert 0 < res.max_decoded_collision <= cfg.capacity
    # offered volume should match the thinned-arrival mean
    expect = cfg.users * cfg.tx_probability * res.ttis
    assert abs(res.offered - expect) < 5 * math.sqrt(expect)


def test_saturated_single_tone_overloads():
    cfg = flat_single_tone_cfg(users=8, family="cl", tx_power_dbm=23.0)
    res = run_scenario(cfg, 1_000, derive_rng(5, "overload"))
    assert res.dropped_overload > 0
    assert res.drop_prob.value > 0.9


def test_drop_grows_with_population():
    small = run_scenario(wl_cfg(users=2_000), 2_000, derive_rng(6, "mono", 0))
    large = run_scenario(wl_cfg(users=64_000), 2_000, derive_rng(6, "mono", 1))
    assert large.drop_prob.value > small.drop_prob.value


def test_half_tti_relieves_collision_pressure():
    base = MmtcConfig(users=50_000, m_rx=1, family="cl")
    full = run_scenario(base, 2_000, derive_rng(7, "half", 0))
    half = run_scenario(half_tti_mode(base), 2_000, derive_rng(7, "half", 1))
    assert half.drop_prob.value < full.drop_prob.value


def test_run_scenario_deterministic():
    cfg = wl_cfg(users=5_000)
    a = run_scenario(cfg, 1_500, derive_rng(8, "det"))
    b = run_scenario(cfg, 1_500, derive_rng(8, "det"))
    assert a == b


def test_result_validation():
    cfg = wl_cfg()
    est = Estimate(0.0, 0.0, 0.0, 0.0, 1, "bernoulli")
    with pytest.raises(ValueError):
        MmtcResult(config=cfg, ttis=10, offered=5, decoded=3,
                   dropped_overload=1, dropped_outage=0, drop_prob=est,
                   throughput=est, max_decoded_collision=1)
    with pytest.raises(ValueError):
        MmtcResult(config=cfg, ttis=10, offered=5, decoded=4,
                   dropped_overload=1, dropped_outage=0, drop_prob=est,
                   throughput=est, max_decoded_collision=3)


# ---------------------------------------------------------------------------
# Grid sweeps
# ---------------------------------------------------------------------------

def test_supported_users_finds_the_boundary():
    cfg = wl_cfg()
    out = supported_users(cfg, [500, 64_000], ttis=4_000, seed=99)
    assert out.qualified is True
    assert out.users == 500
    assert out.target == 0.01
    assert len(out.results) == 2
    assert out.results[1].drop_prob.ci_hi > 0.01


def test_supported_users_can_fail_everywhere():
    cfg = wl_cfg()
    out = supported_users(cfg, [32_000, 64_000], ttis=1_000, seed=100,
                          drop_target=1e-6)
    assert out.qualified is False
    assert out.users == 0


def test_supported_users_validates_grid():
    cfg = wl_cfg()
    with pytest.raises(ValueError):
        supported_users(cfg, [], ttis=1_000, seed=1)
    with pytest.raises(ValueError):
        supported_users(cfg, [2_000, 1_000], ttis=1_000, seed=1)
    with pytest.raises(ValueError):
        supported_users(cfg, [1_000], ttis=1_000, seed=1, drop_target=2.0)
