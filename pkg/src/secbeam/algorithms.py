"""Alternating secrecy-rate maximization and discrete phase mapping.

Outer loop: alternate between the transmit block (beamformers, slacks
held fixed) and the phase block (phases plus slacks), each solved by a
successive convex approximation loop that rebuilds and solves one conic
subproblem per iteration.

Traced objectives are the penalized worst-user rate with the rates left
unclamped; the positive-part clamp is applied only in the reported
``min_rate`` column. The clamp is a monotone transform stacked on top of a
constant during the transmit block, but during the phase block it can mask
slack changes, so the convergence bookkeeping works on the unclamped value
that the subproblems actually bound.

Numerical guards when advancing a linearization point: iterates are pulled
back onto the power ball / unit disk when the solver leaves them a
tolerance outside, and carried exponents are floored at their defining
sums. Both guards act at solver-tolerance scale and keep every
linearization point feasible for the next subproblem.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .config import AlgoConfig, SystemConfig
from .conic import STATUS_INACCURATE, STATUS_OPTIMAL, solve
from .metrics import (BeamformingState, effective_rows, min_secrecy_rate,
                      modified_objective, phase_parameterization)
from .sca import (ActiveLinearization, PassiveLinearization,
                  build_active_subproblem, build_passive_subproblem,
                  defining_active_aux, init_active_aux,
                  init_passive_aux)

TRACE_COLUMNS = ("outer_iter", "inner_algo", "inner_iter", "objective",
                 "min_rate", "sum_eps", "status")


@dataclass
class TraceRow:
    outer_iter: int
    inner_algo: str
    inner_iter: int
    objective: float
    min_rate: float
    sum_eps: float
    status: str
    taylor_gap: float = 0.0  # diagnostic, not exported


class Trace(list):
    """Iteration log; a list of :class:`TraceRow` with CSV export."""

    def add(self, *args, **kwargs):
        self.append(TraceRow(*args, **kwargs))

    def rows_for(self, inner_algo=None, outer_iter=None):
        out = self
        if inner_algo is not None:
            out = [r for r in out if r.inner_algo == inner_algo]
        if outer_iter is not None:
            out = [r for r in out if r.outer_iter == outer_iter]
        return list(out)

    def to_csv(self, path_or_fh):
        if hasattr(path_or_fh, "write"):
            self._write(path_or_fh)
        else:
            with open(path_or_fh, "w", newline="") as fh:
                self._write(fh)

    def _write(self, fh):
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for r in self:
            writer.writerow([r.outer_iter, r.inner_algo, r.inner_iter,
                             repr(r.objective), repr(r.min_rate),
                             repr(r.sum_eps), r.status])


def _converged(j_new, j_prev, tol):
    # relative stopping rule with an absolute fallback for tiny values
    denom = abs(j_prev)
    if denom < 1e-12:
        return abs(j_new - j_prev) <= tol
    return abs(j_new - j_prev) / denom <= tol


def _objective_pair(channels, state, system, penalty):
    unclamped = modified_objective(channels, state, system.noise_user,
                                   system.noise_eve, penalty, clamp=False)
    clamped_min = min_secrecy_rate(channels, state, system.noise_user,
                                   system.noise_eve, clamp=True)
    return unclamped, clamped_min


def _project_power(w, p_bs):
    total = float(np.sum(np.abs(w) ** 2))
    if total > p_bs > 0.0:
        w = w * math.sqrt(p_bs / total)
    return w


def phase_influence(channels, w, system: SystemConfig) -> float:
    """Largest relative effect the phases can have on any SINR term.

    For fixed beamformers every received power is |p . alpha + d|^2 with
    p the cascade row and d the direct part. The ratio bounds how much
    any power-plus-noise term can move over the unit polydisc; rates then
    move by at most the returned value divided by ln 2. Used to skip the
    phase block when the surfaces are too weak for the solver to see.
    """
    if channels.total_elements == 0:
        return 0.0
    h_prime, h_dprime, g_prime, g_dprime = phase_parameterization(channels, w)
    worst = 0.0
    for part, direct, noise in ((h_prime, h_dprime, system.noise_user),
                                (g_prime, g_dprime, system.noise_eve)):
        reach = np.sum(np.abs(part), axis=-1)
        base = np.abs(direct)
        rel = (2.0 * base * reach + reach ** 2) / (base ** 2 + noise)
        worst = max(worst, float(np.max(rel)))
    return worst


def solve_active(channels, alpha, eps, w0, system: SystemConfig,
                 cfg: AlgoConfig, outer_iter=1, trace=None):
    """Transmit-block SCA loop at fixed phases and slacks.

    Returns the final beamformers and the trace. On solver failure the
    best iterate so far is returned with the failure recorded.
    """
    trace = Trace() if trace is None else trace
    alpha = np.asarray(alpha, dtype=complex).reshape(-1)
    eps = np.asarray(eps, dtype=float).reshape(-1)
    w_bar = np.asarray(w0, dtype=complex).copy()
    total = float(np.sum(np.abs(w_bar) ** 2))
    if total > system.p_bs * (1.0 + 1e-6):
        raise ValueError("w0 exceeds the transmit power budget")
    w_bar = _project_power(w_bar, system.p_bs)

    sum_eps = float(np.sum(eps))
    state = BeamformingState(w_bar, alpha, eps)
    j_prev, min_rate = _objective_pair(channels, state, system, cfg.penalty)
    trace.add(outer_iter, "active", 0, j_prev, min_rate, sum_eps, "init")

    q_bar, r_bar = init_active_aux(w_bar, channels, alpha, system)
    for t in range(1, cfg.max_inner_active + 1):
        lin = ActiveLinearization(w_bar, q_bar, r_bar)
        hand = build_active_subproblem(channels, alpha, lin, system)
        gap = hand.problem.max_violation(hand.taylor_x) if cfg.check_taylor else 0.0
        res = solve(hand.problem, backend=cfg.backend)
        if res.status not in (STATUS_OPTIMAL, STATUS_INACCURATE):
            trace.add(outer_iter, "active", t, j_prev, min_rate, sum_eps,
                      res.status, gap)
            break
        w_new, _, _ = hand.extract(res)
        w_cand = _project_power(w_new, system.p_bs)
        state = BeamformingState(w_cand, alpha, eps)
        j_new, rate_new = _objective_pair(channels, state, system,
                                          cfg.penalty)
        # the conservative full-sum start may put the first solved step
        # below the carried-in value by design; any other regression
        # means the returned point is unusable, so keep the old iterate
        first_exact = t == 1 and res.status == STATUS_OPTIMAL
        if not first_exact and j_new < j_prev - 1e-9:
            trace.add(outer_iter, "active", t, j_prev, min_rate, sum_eps,
                      "stalled", gap)
            break
        w_bar = w_cand
        min_rate = rate_new
        # re-linearize at the defining exponents of the new iterate, not
        # the solver's (possibly slack) values: tightness at the
        # expansion point is what keeps the trace non-decreasing
        q_bar, r_bar = defining_active_aux(w_bar, channels, alpha, system)
        trace.add(outer_iter, "active", t, j_new, min_rate, sum_eps,
                  res.status, gap)
        if _converged(j_new, j_prev, cfg.tol_inner_active):
            break
        j_prev = j_new
    return w_bar, trace


def solve_passive(channels, w, alpha0, eps0, system: SystemConfig,
                  cfg: AlgoConfig, outer_iter=1, trace=None):
    """Phase-block SCA loop at fixed beamformers.

    Slacks are re-optimized alongside the phases. Returns the final
    phases, slacks and the trace.
    """
    trace = Trace() if trace is None else trace
    w = np.asarray(w, dtype=complex)
    alpha_bar = np.asarray(alpha0, dtype=complex).reshape(-1).copy()
    if np.any(np.abs(alpha_bar) > 1.0 + 1e-6):
        raise ValueError("alpha0 must lie in the closed unit disk")
    alpha_bar = _clip_disk(alpha_bar)
    eps = np.asarray(eps0, dtype=float).reshape(-1).copy()

    state = BeamformingState(w, alpha_bar, eps)
    j_prev, min_rate = _objective_pair(channels, state, system, cfg.penalty)
    trace.add(outer_iter, "passive", 0, j_prev, min_rate, float(np.sum(eps)),
              "init")

    # a surface too weak to shift any rate past the stopping tolerance
    # only feeds the solver degenerate rows; keep the current phases
    if phase_influence(channels, w, system) < cfg.min_phase_influence:
        trace.add(outer_iter, "passive", 1, j_prev, min_rate,
                  float(np.sum(eps)), "negligible")
        return alpha_bar, eps, trace

    n_bar, u_bar = init_passive_aux(alpha_bar, channels, w, system)
    for t in range(1, cfg.max_inner_passive + 1):
        lin = PassiveLinearization(alpha_bar, n_bar, u_bar)
        hand = build_passive_subproblem(channels, w, lin, system, cfg.penalty)
        gap = hand.problem.max_violation(hand.taylor_x) if cfg.check_taylor else 0.0
        res = solve(hand.problem, backend=cfg.backend)
        if res.status not in (STATUS_OPTIMAL, STATUS_INACCURATE):
            trace.add(outer_iter, "passive", t, j_prev, min_rate,
                      float(np.sum(eps)), res.status, gap)
            break
        alpha_new, eps_new, _, _ = hand.extract(res)
        alpha_cand = _clip_disk(alpha_new)
        eps_cand = np.clip(eps_new, 0.0, 1.0)
        state = BeamformingState(w, alpha_cand, eps_cand)
        j_new, rate_new = _objective_pair(channels, state, system,
                                          cfg.penalty)
        # the linearization here is tight at the expansion point, so a
        # drop can only come from an unusable solver point; discard it
        if j_new < j_prev - 1e-9:
            trace.add(outer_iter, "passive", t, j_prev, min_rate,
                      float(np.sum(eps)), "stalled", gap)
            break
        alpha_bar = alpha_cand
        eps = eps_cand
        min_rate = rate_new
        n_bar, u_bar = init_passive_aux(alpha_bar, channels, w, system)
        trace.add(outer_iter, "passive", t, j_new, min_rate,
                  float(np.sum(eps)), res.status, gap)
        if _converged(j_new, j_prev, cfg.tol_inner_passive):
            break
        j_prev = j_new
    if np.any(np.abs(alpha_bar) > 1.0 + 1e-6):  # output contract
        raise RuntimeError("phase iterate left the unit disk")
    return alpha_bar, eps, trace


def _clip_disk(alpha):
    mag = np.abs(alpha)
    over = mag > 1.0
    if np.any(over):
        alpha = alpha.copy()
        alpha[over] = alpha[over] / mag[over]
    return alpha


@dataclass
class BcdResult:
    """Outcome of the full alternating optimization."""

    w: np.ndarray
    alpha: np.ndarray
    eps: np.ndarray
    trace: Trace
    objective: float
    min_rate: float
    n_outer: int
    status: str

    @property
    def state(self):
        return BeamformingState(self.w, self.alpha, self.eps)


def bcd_optimize(channels, system: SystemConfig, cfg: AlgoConfig,
                 seed) -> BcdResult:
    """Full alternating optimization from a seeded random start.

    With no surface elements the phase block is skipped and the transmit
    block alone is run to convergence.
    """
    rng = np.random.default_rng(seed)
    kk = channels.n_users
    mm = channels.m_antennas
    nl = channels.total_elements

    w0 = rng.standard_normal((kk, mm)) + 1j * rng.standard_normal((kk, mm))
    w0 *= math.sqrt(system.p_bs / float(np.sum(np.abs(w0) ** 2)))

    trace = Trace()
    if nl == 0:
        alpha = np.zeros(0, dtype=complex)
        eps = np.zeros(0)
        w, _ = solve_active(channels, alpha, eps, w0, system, cfg,
                            outer_iter=1, trace=trace)
        state = BeamformingState(w, alpha, eps)
        j, min_rate = _objective_pair(channels, state, system, cfg.penalty)
        trace.add(1, "outer", 0, j, min_rate, 0.0, "ok")
        return BcdResult(w, alpha, eps, trace, j, min_rate, 1, "converged")

    alpha = np.exp(2j * math.pi * rng.uniform(0.0, 1.0, nl))
    eps = np.zeros(nl)
    w = w0
    state = BeamformingState(w, alpha, eps)
    j_prev, _ = _objective_pair(channels, state, system, cfg.penalty)
    status = "max-iterations"
    t = 0
    for t in range(1, cfg.max_outer + 1):
        w, _ = solve_active(channels, alpha, eps, w, system, cfg,
                            outer_iter=t, trace=trace)
        alpha, eps, _ = solve_passive(channels, w, alpha, eps, system, cfg,
                                      outer_iter=t, trace=trace)
        state = BeamformingState(w, alpha, eps)
        j, min_rate = _objective_pair(channels, state, system, cfg.penalty)
        trace.add(t, "outer", 0, j, min_rate, float(np.sum(eps)), "ok")
        bad = [r for r in trace if r.outer_iter == t
               and r.status not in ("init", "ok", "negligible", "stalled",
                                    STATUS_OPTIMAL, STATUS_INACCURATE)]
        if bad:
            status = f"solver-{bad[0].status}"
            break
        if _converged(j, j_prev, cfg.tol_outer):
            status = "converged"
            break
        j_prev = j
    state = BeamformingState(w, alpha, eps)
    j, min_rate = _objective_pair(channels, state, system, cfg.penalty)
    return BcdResult(w, alpha, eps, trace, j, min_rate, t, status)


# ---------------------------------------------------------------------------
# discrete phases


def phase_levels(n_levels: int) -> np.ndarray:
    if n_levels < 2:
        raise ValueError("need at least two phase levels")
    return np.exp(2j * math.pi * np.arange(n_levels) / n_levels)


def map_phases(alpha, n_levels: int):
    """Snap each relaxed phase to the nearest grid point.

    Distance ties resolve to the smallest grid index; the origin therefore
    maps to index 0. Returns (snapped alpha, indices). Applying the map to
    its own output is a no-op.
    """
    levels = phase_levels(n_levels)
    alpha = np.asarray(alpha, dtype=complex).reshape(-1)
    dist = np.abs(alpha[:, None] - levels[None, :])
    idx = np.argmin(dist, axis=1)  # first minimum wins ties
    return levels[idx], idx


def evaluate_mapped(channels, w, alpha_hat, n_levels: int,
                    system: SystemConfig) -> float:
    """Worst-user secrecy rate at a discrete phase vector.

    Rejects inputs that are not exactly on the grid of ``n_levels`` points.
    """
    levels = phase_levels(n_levels)
    alpha_hat = np.asarray(alpha_hat, dtype=complex).reshape(-1)
    if alpha_hat.size:
        dist = np.min(np.abs(alpha_hat[:, None] - levels[None, :]), axis=1)
        if np.any(dist > 1e-9):
            raise ValueError("phases are off the discrete grid")
    state = BeamformingState(w, alpha_hat, np.zeros(alpha_hat.size))
    return min_secrecy_rate(channels, state, system.noise_user,
                            system.noise_eve, clamp=True)
