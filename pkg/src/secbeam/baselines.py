"""Reference schemes and the exhaustive discrete-phase oracle.

The oracle enumerates the full discrete phase grid in lexicographic index
order over fixed-size chunks, so the work splits into disjoint index
ranges with a deterministic reduction: the best rate wins and exact ties
keep the lexicographically smallest index tuple. It refuses oversized
grids outright instead of silently sampling.
"""

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .algorithms import Trace, phase_levels, solve_active
from .config import AlgoConfig, SystemConfig
from .metrics import min_secrecy_rates_batch


@dataclass
class OracleBudget:
    """Hard limits for the exhaustive search."""

    max_combinations: int = 4096
    max_runtime_s: float = 60.0
    chunk: int = 1024


class OracleBudgetError(RuntimeError):
    """Raised when an exhaustive search would exceed its budget."""


def mrt_beamformers(channels, p_bs: float) -> np.ndarray:
    """Per-user matched filters with an equal power split.

    Each beam points along the user's direct BS channel (the conjugate of
    the effective channel row), so user k sees amplitude
    sqrt(p_bs/K) * ||h_k||. A user with an exactly zero channel gets a
    uniform beam instead, with a warning.
    """
    kk = channels.n_users
    mm = channels.m_antennas
    w = np.zeros((kk, mm), dtype=complex)
    scale = math.sqrt(p_bs / kk)
    for k in range(kk):
        h = channels.h_bs_user[k]
        nrm = float(np.linalg.norm(h))
        if nrm == 0.0:
            warnings.warn(f"zero direct channel for user {k}; "
                          "falling back to a uniform beam")
            w[k] = scale / math.sqrt(mm)
        else:
            w[k] = scale * h / nrm
    return w


def irs_free_optimize(channels, system: SystemConfig, cfg: AlgoConfig, seed):
    """Transmit-only optimization with every surface contribution zeroed.

    Draws the same seeded start as the full optimizer, sets all phases to
    zero (which annihilates the cascaded terms) and runs the transmit SCA
    loop to convergence. Returns (w, alpha, trace) with alpha all zero.
    """
    rng = np.random.default_rng(seed)
    kk = channels.n_users
    mm = channels.m_antennas
    w0 = rng.standard_normal((kk, mm)) + 1j * rng.standard_normal((kk, mm))
    w0 *= math.sqrt(system.p_bs / float(np.sum(np.abs(w0) ** 2)))
    alpha = np.zeros(channels.total_elements, dtype=complex)
    eps = np.zeros(channels.total_elements)
    trace = Trace()
    w, _ = solve_active(channels, alpha, eps, w0, system, cfg, outer_iter=1,
                        trace=trace)
    return w, alpha, trace


@dataclass
class RandomPhaseSummary:
    mean: float
    best: float
    worst: float
    rates: np.ndarray = field(repr=False)


def random_phase_baseline(channels, w, n_levels: int, n_samples: int, seed,
                          system: SystemConfig) -> RandomPhaseSummary:
    """Distribution of the worst-user rate over uniform grid phases."""
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    rng = np.random.default_rng(seed)
    levels = phase_levels(n_levels)
    idx = rng.integers(0, n_levels, size=(n_samples, channels.total_elements))
    alphas = levels[idx]
    rates = min_secrecy_rates_batch(channels, w, alphas, system.noise_user,
                                    system.noise_eve)
    return RandomPhaseSummary(float(np.mean(rates)), float(np.max(rates)),
                              float(np.min(rates)), rates)


@dataclass
class OracleResult:
    rate: float
    alpha: np.ndarray
    indices: np.ndarray
    n_evaluated: int


def brute_force_passive_oracle(channels, w, n_levels: int,
                               system: SystemConfig,
                               budget: OracleBudget = None) -> OracleResult:
    """Exact maximizer of the worst-user rate over the full phase grid.

    Every element independently takes one of ``n_levels`` grid phases;
    all ``n_levels ** total_elements`` combinations are evaluated. Raises
    :class:`OracleBudgetError` before starting if the grid exceeds the
    combination budget and mid-run if the runtime budget is exhausted.
    """
    budget = budget or OracleBudget()
    nl = channels.total_elements
    if nl == 0:
        raise ValueError("no surface elements to search over")
    total = n_levels ** nl
    if total > budget.max_combinations:
        raise OracleBudgetError(
            f"{total} combinations exceed the budget of "
            f"{budget.max_combinations}; refusing to search")
    levels = phase_levels(n_levels)
    # element 0 is the most significant digit: enumeration is lexicographic
    radix = n_levels ** np.arange(nl - 1, -1, -1, dtype=np.int64)
    best_rate = -np.inf
    best_combo = -1
    t0 = time.perf_counter()
    for start in range(0, total, budget.chunk):
        if time.perf_counter() - t0 > budget.max_runtime_s:
            raise OracleBudgetError("runtime budget exhausted mid-search")
        stop = min(start + budget.chunk, total)
        combos = np.arange(start, stop, dtype=np.int64)
        digits = (combos[:, None] // radix[None, :]) % n_levels
        alphas = levels[digits]
        rates = min_secrecy_rates_batch(channels, w, alphas,
                                        system.noise_user, system.noise_eve)
        j = int(np.argmax(rates))  # first maximum within the chunk
        if rates[j] > best_rate:  # strict: earlier chunks keep ties
            best_rate = float(rates[j])
            best_combo = int(combos[j])
    digits = (np.int64(best_combo) // radix) % n_levels
    return OracleResult(best_rate, levels[digits], digits.astype(int), total)
