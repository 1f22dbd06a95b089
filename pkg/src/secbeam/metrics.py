"""Secrecy-rate metrics on top of a channel realization.

Two equivalent parameterizations of the cascaded link are maintained. With
surface phases alpha and beamformers w_i, the effective row seen by user k
is ``xi_k = h_irs_k^H Theta F + h_bs_k^H`` (a function of alpha), while the
same inner product can be written ``alpha^T h'_{k,i} + h''_{k,i}`` with
``h'_{k,i} = diag(h_irs_k)^* F w_i`` (a function of w). Both forms are kept
because the transmit and phase optimizers each need their own one affine.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class BeamformingState:
    """Transmit beamformers (K, M), surface phases (sum N_l,) and slacks."""

    w: np.ndarray
    alpha: np.ndarray
    eps: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=complex)
        self.alpha = np.asarray(self.alpha, dtype=complex).reshape(-1)
        self.eps = np.asarray(self.eps, dtype=float).reshape(-1)
        if self.eps.shape != self.alpha.shape:
            raise ValueError("eps must match alpha in length")

    def total_power(self) -> float:
        return float(np.sum(np.abs(self.w) ** 2))


@dataclass
class AggregatedChannels:
    """Both parameterizations of the effective links.

    ``xi[k]`` is the effective row for user k and ``rho`` the eavesdropper
    row, both against the beamformer columns. ``h_prime[k, i]`` and scalar
    ``h_dprime[k, i]`` express the same product as an affine function of
    alpha; ``g_prime[i]``, ``g_dprime[i]`` are the eavesdropper versions.
    """

    xi: np.ndarray
    rho: np.ndarray
    h_prime: np.ndarray
    h_dprime: np.ndarray
    g_prime: np.ndarray
    g_dprime: np.ndarray


def effective_rows(channels, alpha):
    """Effective user rows xi (K, M) and eavesdropper row rho (M,)."""
    alpha = np.asarray(alpha, dtype=complex).reshape(-1)
    if alpha.shape[0] != channels.total_elements:
        raise ValueError("alpha length must equal the total element count")
    kk = channels.n_users
    xi = np.conj(channels.h_bs_user).copy()
    rho = np.conj(channels.g_bs_eve).copy()
    if channels.total_elements:
        f = channels.stacked_f()
        for k in range(kk):
            xi[k] += (np.conj(channels.stacked_h_irs(k)) * alpha) @ f
        rho += (np.conj(channels.stacked_g_irs()) * alpha) @ f
    return xi, rho


def phase_parameterization(channels, w):
    """Cascade terms as affine functions of alpha, for fixed beamformers."""
    w = np.asarray(w, dtype=complex)
    kk, _ = w.shape
    nl = channels.total_elements
    f = channels.stacked_f()
    fw = f @ w.T  # (nl, K)
    h_prime = np.zeros((kk, kk, nl), dtype=complex)
    for k in range(kk):
        h_prime[k] = (np.conj(channels.stacked_h_irs(k))[None, :] * fw.T)
    h_dprime = np.conj(channels.h_bs_user) @ w.T  # (K, K): [k, i]
    g_prime = np.conj(channels.stacked_g_irs())[None, :] * fw.T  # (K, nl)
    g_dprime = np.conj(channels.g_bs_eve) @ w.T  # (K,)
    return h_prime, h_dprime, g_prime, g_dprime


def effective_channels(channels, alpha, w) -> AggregatedChannels:
    """Populate both parameterizations for one (alpha, w) pair."""
    xi, rho = effective_rows(channels, alpha)
    h_prime, h_dprime, g_prime, g_dprime = phase_parameterization(channels, w)
    return AggregatedChannels(xi, rho, h_prime, h_dprime, g_prime, g_dprime)


def _signal_tables(channels, state):
    # S[k, i] = xi_k . w_i, e[i] = rho . w_i
    xi, rho = effective_rows(channels, state.alpha)
    s = xi @ state.w.T
    e = rho @ state.w.T
    return s, e


def sinr_user(k, channels, state, noise_user):
    """Downlink SINR of user k under interference from the other beams."""
    if noise_user <= 0.0:
        raise ValueError("noise power must be positive")
    s, _ = _signal_tables(channels, state)
    return _sinr_from_row(np.abs(s[k]) ** 2, k, noise_user)


def sinr_eve(k, channels, state, noise_eve):
    """Eavesdropper SINR when it targets the stream of user k."""
    if noise_eve <= 0.0:
        raise ValueError("noise power must be positive")
    _, e = _signal_tables(channels, state)
    return _sinr_from_row(np.abs(e) ** 2, k, noise_eve)


def _sinr_from_row(powers, k, noise):
    interference = float(np.sum(powers) - powers[k])
    return float(powers[k] / (interference + noise))


def secrecy_rate(k, channels, state, noise_user, noise_eve, clamp=True):
    """Rate margin of user k over the eavesdropper, floored at zero."""
    gu = sinr_user(k, channels, state, noise_user)
    ge = sinr_eve(k, channels, state, noise_eve)
    r = np.log2(1.0 + gu) - np.log2(1.0 + ge)
    return float(max(0.0, r)) if clamp else float(r)


def min_secrecy_rate(channels, state, noise_user, noise_eve, clamp=True):
    rates = secrecy_rates(channels, state, noise_user, noise_eve, clamp=clamp)
    return float(np.min(rates))


def secrecy_rates(channels, state, noise_user, noise_eve, clamp=True):
    """All per-user secrecy rates in one pass."""
    if noise_user <= 0.0 or noise_eve <= 0.0:
        raise ValueError("noise power must be positive")
    s, e = _signal_tables(channels, state)
    sp = np.abs(s) ** 2
    ep = np.abs(e) ** 2
    kk = sp.shape[0]
    rates = np.empty(kk)
    e_total = float(np.sum(ep))
    for k in range(kk):
        gu = sp[k, k] / (np.sum(sp[k]) - sp[k, k] + noise_user)
        ge = ep[k] / (e_total - ep[k] + noise_eve)
        rates[k] = np.log2(1.0 + gu) - np.log2(1.0 + ge)
    return np.maximum(rates, 0.0) if clamp else rates


def modified_objective(channels, state, noise_user, noise_eve, penalty, clamp=True):
    """Worst-user secrecy rate plus the weighted slack total.

    ``penalty`` must be negative; slack only ever lowers the objective.
    """
    if penalty >= 0.0:
        raise ValueError("penalty must be negative")
    base = min_secrecy_rate(channels, state, noise_user, noise_eve, clamp=clamp)
    return float(base + penalty * np.sum(state.eps))


def min_secrecy_rates_batch(channels, w, alphas, noise_user, noise_eve):
    """Worst-user secrecy rate for each row of ``alphas`` at fixed w.

    Vectorized over candidates; used by the exhaustive phase search and the
    random-phase baseline.
    """
    if noise_user <= 0.0 or noise_eve <= 0.0:
        raise ValueError("noise power must be positive")
    alphas = np.asarray(alphas, dtype=complex)
    if alphas.ndim != 2:
        raise ValueError("alphas must be (candidates, elements)")
    h_prime, h_dprime, g_prime, g_dprime = phase_parameterization(channels, w)
    kk = h_dprime.shape[0]
    c = alphas.shape[0]
    v = alphas @ h_prime.reshape(kk * kk, -1).T + h_dprime.reshape(-1)
    vp = np.abs(v.reshape(c, kk, kk)) ** 2
    ep = np.abs(alphas @ g_prime.T + g_dprime) ** 2
    e_total = np.sum(ep, axis=1)
    rates = np.empty((c, kk))
    for k in range(kk):
        row = vp[:, k, :]
        gu = row[:, k] / (np.sum(row, axis=1) - row[:, k] + noise_user)
        ge = ep[:, k] / (e_total - ep[:, k] + noise_eve)
        rates[:, k] = np.log2(1.0 + gu) - np.log2(1.0 + ge)
    return np.min(np.maximum(rates, 0.0), axis=1)
