"""Shared fixtures: small deterministic channel realizations.

Unit tests draw channels from the strong-cascade desk setup so that the
reflected path actually matters to the quantities under test; the stock
propagation constants keep it tens of dB below the direct path.
"""

import numpy as np
import pytest

from secbeam.channel import gen_channel_set
from secbeam.config import AlgoConfig, SystemConfig
from secbeam.harness import oracle_bench


@pytest.fixture(scope="session")
def bench22():
    """(params, geometry, system) for two users and two surfaces."""
    return oracle_bench(n_users=2, n_irs=2)


@pytest.fixture(scope="session")
def make_bench_channels(bench22):
    """Factory: seeded channels on the two-user two-surface bench."""
    params, geometry, _ = bench22

    def make(seed=0, m_antennas=4, n_elements=4):
        return gen_channel_set(seed, params, geometry, m_antennas,
                               n_elements)

    return make


@pytest.fixture(scope="session")
def bench_system(bench22):
    return bench22[2]


@pytest.fixture()
def small_channels(make_bench_channels):
    """One fixed small realization: K=2, M=4, L=2, N=4."""
    return make_bench_channels(seed=3)


@pytest.fixture()
def small_state(small_channels, bench_system):
    """A feasible (w, alpha) pair on the small realization."""
    rng = np.random.default_rng(7)
    kk = small_channels.n_users
    mm = small_channels.m_antennas
    nl = small_channels.total_elements
    w = rng.standard_normal((kk, mm)) + 1j * rng.standard_normal((kk, mm))
    w *= np.sqrt(bench_system.p_bs / np.sum(np.abs(w) ** 2))
    alpha = np.exp(2j * np.pi * rng.uniform(0.0, 1.0, nl))
    return w, alpha


@pytest.fixture()
def quick_cfg():
    return AlgoConfig(max_inner_active=5, max_inner_passive=5, max_outer=5)


@pytest.fixture()
def unit_system():
    """All powers one; keeps hand computations readable."""
    return SystemConfig(p_bs=1.0, noise_user=1.0, noise_eve=1.0)
