"""Convex subproblem builders for the alternating secrecy-rate optimizer.

Both blocks follow the same recipe. Rates are split with auxiliary
exponents (2^p style variables), the concave sides are kept exact through
exponential cones, and the convex sides are linearized at the current
iterate. The gradient of a squared modulus |a^T x + b|^2 with respect to
the stacked real representation of x is twice the block product returned
by :func:`half_gradient`.

All rate bookkeeping inside the subproblems is noise normalized: channel
rows are divided by the receiver noise standard deviation so that every
quadratic constraint carries a unit offset. Public linearization values
(q_bar and friends) stay in physical units; builders shift them
internally. The subproblems are exact at the linearization point, so that
point (with its implied auxiliaries) is always feasible.
"""

from dataclasses import dataclass

import numpy as np

from .conic import ConicProblem, LinExpr, dot_expr
from .metrics import effective_rows, phase_parameterization

LN2 = float(np.log(2.0))


def half_gradient(a, x_bar, b):
    """Half of the gradient of |a^T x + b|^2 at x_bar, stacked (re, im).

    Returns the pair (g_re, g_im); the true gradient with respect to
    (Re x, Im x) is exactly twice this output.
    """
    a = np.asarray(a, dtype=complex).reshape(-1)
    x_bar = np.asarray(x_bar, dtype=complex).reshape(-1)
    c = np.dot(a, x_bar) + b  # plain transpose, no conjugation
    g_re = a.real * c.real + a.imag * c.imag
    g_im = -a.imag * c.real + a.real * c.imag
    return g_re, g_im


def _tangent_two_pow(value_log2, var_expr):
    """Affine upper contact of 2^x at x = value_log2, as an expression."""
    lvl = 2.0 ** value_log2
    return var_expr * (LN2 * lvl) + lvl * (1.0 - LN2 * value_log2)


# ---------------------------------------------------------------------------
# transmit (active) block


@dataclass
class ActiveLinearization:
    """Current iterate for the transmit block, physical units."""

    w_bar: np.ndarray  # (K, M)
    q_bar: np.ndarray  # (K,) log2 of interference-plus-noise at each user
    r_bar: float  # log2 of total eavesdropper receive power plus noise


@dataclass
class ActiveHandle:
    """A built transmit subproblem plus its variable references."""

    problem: ConicProblem
    w: list
    p: object
    q: object
    s: object
    r: object
    a: object
    taylor_x: np.ndarray
    noise_user: float
    noise_eve: float

    def extract(self, result):
        """Beamformers and physical-unit aux values from a solve result."""
        w = np.array([result.value(wi) for wi in self.w])
        q_phys = result.value(self.q) + np.log2(self.noise_user)
        r_phys = float(result.value(self.r)[0]) + np.log2(self.noise_eve)
        return w, q_phys, r_phys


def init_active_aux(w_bar, channels, alpha, system):
    """Starting exponents for the transmit block: q_bar from each user's
    full receive power (intended stream included), r_bar from the total
    eavesdropper receive power.

    The full-sum start is conservative: the expansion point stays
    feasible, but the first solved iterate can undervalue the rates and
    land below the carried-in point. Later iterations re-linearize at
    interference-only defining values (:func:`defining_active_aux`) and
    improve monotonically from there."""
    xi, rho = effective_rows(channels, alpha)
    s = xi @ w_bar.T
    e = rho @ w_bar.T
    q_bar = np.log2(np.sum(np.abs(s) ** 2, axis=1) + system.noise_user)
    r_bar = float(np.log2(np.sum(np.abs(e) ** 2) + system.noise_eve))
    return q_bar, r_bar


def defining_active_aux(w_bar, channels, alpha, system):
    """Exponents that make the transmit subproblem tight at w_bar:
    interference-plus-noise for q_bar, total eavesdropper power for
    r_bar. Tightness at the expansion point is what the monotone
    improvement argument needs."""
    xi, rho = effective_rows(channels, alpha)
    sp = np.abs(xi @ w_bar.T) ** 2
    ep = np.abs(rho @ w_bar.T) ** 2
    q_bar = np.log2(np.sum(sp, axis=1) - np.diag(sp) + system.noise_user)
    r_bar = float(np.log2(np.sum(ep) + system.noise_eve))
    return q_bar, r_bar


def build_active_subproblem(channels, alpha, lin: ActiveLinearization,
                            system) -> ActiveHandle:
    """Transmit-side convex subproblem at the given linearization point."""
    kk = channels.n_users
    mm = channels.m_antennas
    xi, rho = effective_rows(channels, alpha)
    xi_t = xi / np.sqrt(system.noise_user)
    rho_t = rho / np.sqrt(system.noise_eve)
    q_bar_t = lin.q_bar - np.log2(system.noise_user)
    r_bar_t = lin.r_bar - np.log2(system.noise_eve)
    w_bar = np.asarray(lin.w_bar, dtype=complex)

    prob = ConicProblem()
    w_vars = [prob.add_complex_vars(f"w{i}", mm) for i in range(kk)]
    p_var = prob.add_real_vars("p", kk)
    q_var = prob.add_real_vars("q", kk)
    s_var = prob.add_real_vars("s", kk)
    r_var = prob.add_real_vars("r", 1)
    a_var = prob.add_real_vars("a", 1)
    prob.set_objective_max(a_var[0] - r_var[0])

    # total transmit power
    power_terms = []
    for wv in w_vars:
        power_terms.extend(wv.re[j] for j in range(mm))
        power_terms.extend(wv.im[j] for j in range(mm))
    prob.add_quad_le_affine(power_terms, 0.0, system.p_bs)

    # worst-user epigraph links
    for k in range(kk):
        prob.add_linear(p_var[k] - q_var[k] + s_var[k], ">=", a_var[0])

    # per-user products, both parameterization values at the iterate
    sw = xi_t @ w_bar.T  # sw[k, i] = xi_k . w_bar_i
    ew = rho_t @ w_bar.T

    for k in range(kk):
        # signal side: affine minorant of the full receive power vs 2^p
        affine = LinExpr(const=float(np.sum(np.abs(sw[k]) ** 2) + 1.0))
        for i in range(kk):
            g_re, g_im = half_gradient(xi_t[k], w_bar[i], 0.0)
            affine = affine + dot_expr(w_vars[i].re.indices, 2.0 * g_re)
            affine = affine + dot_expr(w_vars[i].im.indices, 2.0 * g_im)
            affine = affine - float(2.0 * (g_re @ w_bar[i].real
                                           + g_im @ w_bar[i].imag))
        prob.add_two_pow_le_affine(p_var[k], affine)

    for k in range(kk):
        # interference side: exact quadratic vs tangent of 2^q
        terms = []
        for i in range(kk):
            if i == k:
                continue
            re, im = w_vars[i].dot(xi_t[k])
            terms.extend((re, im))
        prob.add_quad_le_affine(
            terms, 1.0, _tangent_two_pow(q_bar_t[k], q_var[k]))

    # eavesdropper total power: built once, abstract count stays per user
    terms = []
    for i in range(kk):
        re, im = w_vars[i].dot(rho_t)
        terms.extend((re, im))
    prob.add_quad_le_affine(
        terms, 1.0, _tangent_two_pow(r_bar_t, r_var[0]), count=kk)

    for k in range(kk):
        # eavesdropper leakage floor: affine minorant vs 2^s
        keep = [i for i in range(kk) if i != k]
        affine = LinExpr(
            const=float(np.sum(np.abs(ew[keep]) ** 2) + 1.0))
        for i in keep:
            g_re, g_im = half_gradient(rho_t, w_bar[i], 0.0)
            affine = affine + dot_expr(w_vars[i].re.indices, 2.0 * g_re)
            affine = affine + dot_expr(w_vars[i].im.indices, 2.0 * g_im)
            affine = affine - float(2.0 * (g_re @ w_bar[i].real
                                           + g_im @ w_bar[i].imag))
        prob.add_two_pow_le_affine(s_var[k], affine)

    # the linearization point with implied auxiliaries is feasible
    x0 = np.zeros(prob.n_scalars)
    for i, wv in enumerate(w_vars):
        x0[wv.re.indices] = w_bar[i].real
        x0[wv.im.indices] = w_bar[i].imag
    p0 = np.log2(np.sum(np.abs(sw) ** 2, axis=1) + 1.0)
    s0 = np.array([
        np.log2(np.sum(np.abs(ew[[i for i in range(kk) if i != k]]) ** 2) + 1.0)
        for k in range(kk)])
    x0[p_var.indices] = p0
    x0[q_var.indices] = q_bar_t
    x0[s_var.indices] = s0
    x0[r_var.indices] = r_bar_t
    x0[a_var.indices] = float(np.min(p0 - q_bar_t + s0))

    return ActiveHandle(prob, w_vars, p_var, q_var, s_var, r_var, a_var, x0,
                        system.noise_user, system.noise_eve)


# ---------------------------------------------------------------------------
# phase (passive) block


@dataclass
class PassiveLinearization:
    """Current iterate for the phase block, physical units."""

    alpha_bar: np.ndarray  # (sum N_l,)
    n_bar: np.ndarray  # (K,)
    u_bar: float


@dataclass
class PassiveHandle:
    problem: ConicProblem
    alpha: object
    eps: object
    m: object
    n: object
    z: object
    u: object
    b: object
    taylor_x: np.ndarray
    noise_user: float
    noise_eve: float

    def extract(self, result):
        """Phases, slacks and physical-unit aux values from a result."""
        alpha = result.value(self.alpha)
        eps = result.value(self.eps)
        n_phys = result.value(self.n) + np.log2(self.noise_user)
        u_phys = float(result.value(self.u)[0]) + np.log2(self.noise_eve)
        return alpha, eps, n_phys, u_phys


def init_passive_aux(alpha_bar, channels, w, system):
    """Starting exponents for the phase block, physical units."""
    h_prime, h_dprime, g_prime, g_dprime = phase_parameterization(channels, w)
    kk = w.shape[0]
    v = h_prime @ alpha_bar + h_dprime  # [k, i]
    e = g_prime @ alpha_bar + g_dprime
    vp = np.abs(v) ** 2
    n_bar = np.empty(kk)
    for k in range(kk):
        n_bar[k] = np.log2(np.sum(vp[k]) - vp[k, k] + system.noise_user)
    u_bar = float(np.log2(np.sum(np.abs(e) ** 2) + system.noise_eve))
    return n_bar, u_bar


def build_passive_subproblem(channels, w, lin: PassiveLinearization, system,
                             penalty) -> PassiveHandle:
    """Phase-side convex subproblem at the given linearization point.

    Requires every surface to carry the same element count so the phase
    vector blocks are interchangeable.
    """
    sizes = set(channels.irs_sizes)
    if len(sizes) > 1:
        raise ValueError(
            "phase subproblem requires equal element counts per surface, "
            f"got {channels.irs_sizes}")
    if penalty >= 0.0:
        raise ValueError("penalty must be negative")
    kk = channels.n_users
    nl = channels.total_elements
    if nl == 0:
        raise ValueError("no surface elements to optimize")

    h_prime, h_dprime, g_prime, g_dprime = phase_parameterization(channels, w)
    su = np.sqrt(system.noise_user)
    se = np.sqrt(system.noise_eve)
    hp = h_prime / su
    hd = h_dprime / su
    gp = g_prime / se
    gd = g_dprime / se
    n_bar_t = lin.n_bar - np.log2(system.noise_user)
    u_bar_t = lin.u_bar - np.log2(system.noise_eve)
    a_bar = np.asarray(lin.alpha_bar, dtype=complex).reshape(-1)

    prob = ConicProblem()
    al = prob.add_complex_vars("alpha", nl)
    eps = prob.add_real_vars("eps", nl)
    m_var = prob.add_real_vars("m", kk)
    n_var = prob.add_real_vars("n", kk)
    z_var = prob.add_real_vars("z", kk)
    u_var = prob.add_real_vars("u", 1)
    b_var = prob.add_real_vars("b", 1)
    obj = b_var[0] - u_var[0] + eps.sum() * penalty
    prob.set_objective_max(obj)

    # per-element modulus cap and linearized modulus floor with slack
    for j in range(nl):
        prob.add_quad_le_affine([al.re[j], al.im[j]], 0.0, 1.0)
    for j in range(nl):
        floor = (al.re[j] * (2.0 * a_bar[j].real)
                 + al.im[j] * (2.0 * a_bar[j].imag)
                 + eps[j] - (abs(a_bar[j]) ** 2 + 1.0))
        prob.add_linear(floor, ">=", 0.0)
    for j in range(nl):
        prob.add_linear(eps[j], ">=", 0.0)
        prob.add_linear(eps[j], "<=", 1.0, count=0)

    for k in range(kk):
        prob.add_linear(m_var[k] - n_var[k] + z_var[k], ">=", b_var[0])

    v_bar = hp @ a_bar + hd  # [k, i]
    e_bar = gp @ a_bar + gd

    for k in range(kk):
        # signal side minorant vs 2^m
        affine = LinExpr(const=float(np.sum(np.abs(v_bar[k]) ** 2) + 1.0))
        for i in range(kk):
            g_re, g_im = half_gradient(hp[k, i], a_bar, hd[k, i])
            affine = affine + dot_expr(al.re.indices, 2.0 * g_re)
            affine = affine + dot_expr(al.im.indices, 2.0 * g_im)
            affine = affine - float(2.0 * (g_re @ a_bar.real
                                           + g_im @ a_bar.imag))
        prob.add_two_pow_le_affine(m_var[k], affine)

    for k in range(kk):
        # interference side vs tangent of 2^n
        terms = []
        for i in range(kk):
            if i == k:
                continue
            re, im = al.dot(hp[k, i])
            terms.extend((re + float(hd[k, i].real), im + float(hd[k, i].imag)))
        prob.add_quad_le_affine(
            terms, 1.0, _tangent_two_pow(n_bar_t[k], n_var[k]))

    # eavesdropper total power, built once
    terms = []
    for i in range(kk):
        re, im = al.dot(gp[i])
        terms.extend((re + float(gd[i].real), im + float(gd[i].imag)))
    prob.add_quad_le_affine(terms, 1.0, _tangent_two_pow(u_bar_t, u_var[0]))

    for k in range(kk):
        # eavesdropper leakage floor vs 2^z
        keep = [i for i in range(kk) if i != k]
        affine = LinExpr(
            const=float(np.sum(np.abs(e_bar[keep]) ** 2) + 1.0))
        for i in keep:
            g_re, g_im = half_gradient(gp[i], a_bar, gd[i])
            affine = affine + dot_expr(al.re.indices, 2.0 * g_re)
            affine = affine + dot_expr(al.im.indices, 2.0 * g_im)
            affine = affine - float(2.0 * (g_re @ a_bar.real
                                           + g_im @ a_bar.imag))
        prob.add_two_pow_le_affine(z_var[k], affine)

    x0 = np.zeros(prob.n_scalars)
    x0[al.re.indices] = a_bar.real
    x0[al.im.indices] = a_bar.imag
    x0[eps.indices] = np.clip(1.0 - np.abs(a_bar) ** 2, 0.0, 1.0)
    m0 = np.log2(np.sum(np.abs(v_bar) ** 2, axis=1) + 1.0)
    z0 = np.array([
        np.log2(np.sum(np.abs(e_bar[[i for i in range(kk) if i != k]]) ** 2)
                + 1.0)
        for k in range(kk)])
    x0[m_var.indices] = m0
    x0[n_var.indices] = n_bar_t
    x0[z_var.indices] = z0
    x0[u_var.indices] = u_bar_t
    x0[b_var.indices] = float(np.min(m0 - n_bar_t + z0))

    return PassiveHandle(prob, al, eps, m_var, n_var, z_var, u_var, b_var, x0,
                         system.noise_user, system.noise_eve)


def stats_for_dims(n_users, m_antennas, n_elements, n_irs, seed=0):
    """Abstract variable/constraint counts of both subproblem families.

    Builds throwaway instances at the requested dimensions and reads the
    bookkeeping off the problems: counts depend only on the sizes, never
    on the channel draw. Returns ((active_vars, active_cons),
    (passive_vars, passive_cons)); the passive pair is None without
    surfaces.
    """
    from .channel import ChannelSet
    from .config import SystemConfig

    rng = np.random.default_rng(seed)

    def cn(*shape):
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    channels = ChannelSet(
        f_bs_irs=[np.outer(cn(n_elements), cn(m_antennas))
                  for _ in range(n_irs)],
        h_bs_user=cn(n_users, m_antennas),
        g_bs_eve=cn(m_antennas),
        h_irs_user=[cn(n_users, n_elements) for _ in range(n_irs)],
        g_irs_eve=[cn(n_elements) for _ in range(n_irs)],
    )
    system = SystemConfig(p_bs=1.0, noise_user=1.0, noise_eve=1.0)
    total = n_elements * n_irs
    alpha = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, total))
    w = cn(n_users, m_antennas)
    w *= np.sqrt(system.p_bs / np.sum(np.abs(w) ** 2))

    q_bar, r_bar = init_active_aux(w, channels, alpha, system)
    active = build_active_subproblem(
        channels, alpha, ActiveLinearization(w, q_bar, r_bar), system)
    active_stats = active.problem.stats()

    if n_irs == 0:
        return active_stats, None
    n_bar, u_bar = init_passive_aux(alpha, channels, w, system)
    passive = build_passive_subproblem(
        channels, w, PassiveLinearization(alpha, n_bar, u_bar), system,
        penalty=-100.0)
    return active_stats, passive.problem.stats()
