"""Reference beamformers, random phases and the exhaustive oracle."""

import numpy as np
import pytest

from secbeam.algorithms import solve_active
from secbeam.baselines import (OracleBudget, OracleBudgetError,
                               brute_force_passive_oracle,
                               irs_free_optimize, mrt_beamformers,
                               random_phase_baseline)
from secbeam.channel import ChannelSet
from secbeam.config import AlgoConfig
from secbeam.metrics import (BeamformingState, min_secrecy_rate,
                             min_secrecy_rates_batch)


def _tiny_set(rng, kk=1, mm=2, sizes=(2,)):
    def cn(*shape):
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    return ChannelSet(
        f_bs_irs=[np.outer(cn(n), cn(mm)) for n in sizes],
        h_bs_user=cn(kk, mm), g_bs_eve=cn(mm),
        h_irs_user=[cn(kk, n) for n in sizes],
        g_irs_eve=[cn(n) for n in sizes])


def test_mrt_normalization_and_direction(make_bench_channels, bench_system):
    channels = make_bench_channels(seed=0)
    w = mrt_beamformers(channels, bench_system.p_bs)
    assert float(np.sum(np.abs(w) ** 2)) \
        == pytest.approx(bench_system.p_bs, rel=1e-12)
    for k in range(channels.n_users):
        nw = np.linalg.norm(w[k])
        assert nw == pytest.approx(
            np.sqrt(bench_system.p_bs / channels.n_users), rel=1e-12)
        h = channels.h_bs_user[k]
        # fully aligned: inner product meets the Cauchy-Schwarz bound
        assert abs(np.vdot(h, w[k])) \
            == pytest.approx(nw * np.linalg.norm(h), rel=1e-12)


def test_mrt_zero_channel_fallback(unit_system):
    ch = ChannelSet(
        f_bs_irs=[], h_bs_user=np.array([[0.0 + 0j, 0.0 + 0j]]),
        g_bs_eve=np.array([0.1 + 0j, 0.1 + 0j]), h_irs_user=[],
        g_irs_eve=[])
    with pytest.warns(UserWarning):
        w = mrt_beamformers(ch, 4.0)
    assert float(np.sum(np.abs(w) ** 2)) == pytest.approx(4.0)
    assert np.allclose(w[0], w[0][0])  # uniform beam


def test_irs_free_matches_surface_free_set(bench_system):
    rng = np.random.default_rng(3)
    ch = _tiny_set(rng, kk=2, mm=3, sizes=(2, 2))
    bare = ChannelSet(f_bs_irs=[], h_bs_user=ch.h_bs_user,
                      g_bs_eve=ch.g_bs_eve, h_irs_user=[], g_irs_eve=[])
    cfg = AlgoConfig(max_inner_active=8)
    w_a, alpha, _ = irs_free_optimize(ch, bench_system, cfg, seed=5)
    assert np.all(alpha == 0.0)
    rng2 = np.random.default_rng(5)
    w0 = rng2.standard_normal((2, 3)) + 1j * rng2.standard_normal((2, 3))
    w0 *= np.sqrt(bench_system.p_bs / np.sum(np.abs(w0) ** 2))
    w_b, _ = solve_active(bare, np.zeros(0), np.zeros(0), w0, bench_system,
                          cfg)
    assert np.allclose(w_a, w_b, atol=1e-9)
    rate_a = min_secrecy_rate(
        ch, BeamformingState(w_a, alpha, np.zeros(4)),
        bench_system.noise_user, bench_system.noise_eve)
    rate_b = min_secrecy_rate(
        bare, BeamformingState(w_b, np.zeros(0), np.zeros(0)),
        bench_system.noise_user, bench_system.noise_eve)
    assert rate_a == pytest.approx(rate_b, abs=1e-9)


def test_random_baseline_deterministic_and_ordered(make_bench_channels,
                                                   bench_system):
    channels = make_bench_channels(seed=2)
    w = mrt_beamformers(channels, bench_system.p_bs)
    s1 = random_phase_baseline(channels, w, 4, 50, 9, bench_system)
    s2 = random_phase_baseline(channels, w, 4, 50, 9, bench_system)
    assert np.array_equal(s1.rates, s2.rates)
    assert s1.best >= s1.mean >= s1.worst
    assert s1.best == float(np.max(s1.rates))
    s3 = random_phase_baseline(channels, w, 4, 50, 10, bench_system)
    assert not np.array_equal(s1.rates, s3.rates)
    with pytest.raises(ValueError):
        random_phase_baseline(channels, w, 4, 0, 9, bench_system)


def test_random_baseline_single_level_degenerate(make_bench_channels,
                                                 bench_system):
    channels = make_bench_channels(seed=2)
    w = mrt_beamformers(channels, bench_system.p_bs)
    with pytest.raises(ValueError):
        random_phase_baseline(channels, w, 1, 10, 0, bench_system)


def test_oracle_hand_check(unit_system):
    # one element, two levels: flipping the sign boosts the user by 9x
    ch = ChannelSet(
        f_bs_irs=[np.array([[1.0 + 0j]])],
        h_bs_user=np.array([[1.0 + 0j]]),
        g_bs_eve=np.array([0.1 + 0j]),
        h_irs_user=[np.array([[-2.0 + 0j]])],
        g_irs_eve=[np.array([0.05 + 0j])])
    w = np.array([[1.0 + 0j]])
    res = brute_force_passive_oracle(ch, w, 2, unit_system)
    assert res.n_evaluated == 2
    assert list(res.indices) == [1]
    assert res.alpha == pytest.approx([-1.0], abs=1e-12)
    want = np.log2(1.0 + 9.0) - np.log2(1.0 + 0.05 ** 2)
    assert res.rate == pytest.approx(want, rel=1e-12)


def test_oracle_tie_keeps_first_index(unit_system):
    # dead surfaces: every combination ties, the all-zero index wins
    ch = ChannelSet(
        f_bs_irs=[np.zeros((2, 1), dtype=complex)],
        h_bs_user=np.array([[1.0 + 0j]]),
        g_bs_eve=np.array([0.1 + 0j]),
        h_irs_user=[np.zeros((1, 2), dtype=complex)],
        g_irs_eve=[np.zeros(2, dtype=complex)])
    w = np.array([[1.0 + 0j]])
    res = brute_force_passive_oracle(ch, w, 4, unit_system)
    assert res.n_evaluated == 16
    assert list(res.indices) == [0, 0]
    assert res.alpha == pytest.approx([1.0, 1.0])


def test_oracle_dominates_sampled_grid_points(bench_system):
    rng = np.random.default_rng(8)
    ch = _tiny_set(rng, kk=1, mm=2, sizes=(2,))
    w = mrt_beamformers(ch, bench_system.p_bs)
    res = brute_force_passive_oracle(ch, w, 8, bench_system)
    assert res.n_evaluated == 64
    idx = rng.integers(0, 8, size=(20, 2))
    from secbeam.algorithms import phase_levels
    alphas = phase_levels(8)[idx]
    rates = min_secrecy_rates_batch(ch, w, alphas, bench_system.noise_user,
                                    bench_system.noise_eve)
    assert res.rate >= float(np.max(rates)) - 1e-12
    summary = random_phase_baseline(ch, w, 8, 40, 0, bench_system)
    assert res.rate >= summary.best - 1e-12


def test_oracle_budget_refusal(bench_system):
    rng = np.random.default_rng(1)
    ch = _tiny_set(rng, kk=1, mm=2, sizes=(4, 4))
    w = mrt_beamformers(ch, bench_system.p_bs)
    with pytest.raises(OracleBudgetError, match="budget"):
        brute_force_passive_oracle(ch, w, 4, bench_system,
                                   OracleBudget(max_combinations=1000))
    bare = ChannelSet(f_bs_irs=[], h_bs_user=ch.h_bs_user,
                      g_bs_eve=ch.g_bs_eve, h_irs_user=[], g_irs_eve=[])
    with pytest.raises(ValueError):
        brute_force_passive_oracle(bare, w, 4, bench_system)


def test_oracle_chunking_invariant(bench_system):
    rng = np.random.default_rng(12)
    ch = _tiny_set(rng, kk=2, mm=2, sizes=(3,))
    w = mrt_beamformers(ch, bench_system.p_bs)
    full = brute_force_passive_oracle(ch, w, 4, bench_system,
                                      OracleBudget(chunk=64))
    tiny = brute_force_passive_oracle(ch, w, 4, bench_system,
                                      OracleBudget(chunk=5))
    assert full.rate == tiny.rate
    assert np.array_equal(full.indices, tiny.indices)
