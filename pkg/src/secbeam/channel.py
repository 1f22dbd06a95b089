"""Geometric mmWave channel generation for a multi-surface secure downlink.

A base station with M antennas serves K users while an eavesdropper listens,
optionally helped by L passive reflecting surfaces. Every link is a sum of a
small number of planar-wave paths with complex gains drawn from a log-distance
path-loss model.

Conventions
-----------
* BS array: uniform linear array, half-wavelength spacing, laid along the
  x axis. Departure azimuth ``phi`` is measured from broadside (+y), so a
  terminal straight ahead of the BS sits at ``phi = 0``.
* Surface arrays: uniform planar array in a near-square ``n_az x n_el``
  layout. ``phi`` is the polar angle from +z, ``psi`` the azimuth folded
  into ``[0, pi)``.
* One shadowing draw and hence one path-loss value per link, shared by all
  paths of that link. The first path of a multipath link points along the
  geometric line of sight, the remaining paths get uniformly drawn angles.
* The random draw order per realization is fixed and never depends on M or
  N, so realizations with different array sizes share path gains and
  angles. Sweeps over array size are therefore paired sample by sample.
"""

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# parameters and containers


@dataclass
class PathLossModel:
    """Log-distance model: mu_db + 10 * exponent * log10(d) + shadowing."""

    mu_db: float
    exponent: float
    shadow_std_db: float = 0.0


@dataclass
class ChannelParams:
    """Propagation constants.

    ``pl_terminal`` applies to every link whose receiver is a user or the
    eavesdropper (from the BS or from a surface); ``pl_bs_irs`` applies to
    the BS-to-surface hop. ``bs_gain`` is a common amplitude gain on all
    links leaving the BS. Carrier and bandwidth are informational.
    """

    n_paths: int = 3
    bs_gain: float = 1.0
    pl_terminal: PathLossModel = field(
        default_factory=lambda: PathLossModel(61.4, 2.0, 5.8)
    )
    pl_bs_irs: PathLossModel = field(
        default_factory=lambda: PathLossModel(72.0, 2.92, 8.7)
    )
    carrier_hz: float = 28e9
    bandwidth_hz: float = 100e6

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be at least 1")


@dataclass
class Geometry:
    """Node positions in meters. ``irs`` has shape (L, 3), ``users`` (K, 3)."""

    bs: np.ndarray
    irs: np.ndarray
    users: np.ndarray
    eve: np.ndarray

    def __post_init__(self):
        self.bs = np.asarray(self.bs, dtype=float).reshape(3)
        self.irs = np.asarray(self.irs, dtype=float).reshape(-1, 3)
        self.users = np.asarray(self.users, dtype=float).reshape(-1, 3)
        self.eve = np.asarray(self.eve, dtype=float).reshape(3)
        if self.users.shape[0] < 1:
            raise ValueError("need at least one user")

    @property
    def n_users(self) -> int:
        return self.users.shape[0]

    @property
    def n_irs(self) -> int:
        return self.irs.shape[0]


@dataclass
class ChannelSet:
    """One realization of every link in the system.

    ``f_bs_irs[l]`` is the (N_l, M) rank-one BS-to-surface matrix,
    ``h_bs_user[k]`` the direct user link, ``h_irs_user[l][k]`` the
    surface-to-user link and ``g_*`` the eavesdropper counterparts.
    """

    f_bs_irs: list
    h_bs_user: np.ndarray
    g_bs_eve: np.ndarray
    h_irs_user: list
    g_irs_eve: list

    @property
    def m_antennas(self) -> int:
        return self.h_bs_user.shape[1]

    @property
    def n_users(self) -> int:
        return self.h_bs_user.shape[0]

    @property
    def n_irs(self) -> int:
        return len(self.f_bs_irs)

    @property
    def irs_sizes(self) -> tuple:
        return tuple(f.shape[0] for f in self.f_bs_irs)

    @property
    def total_elements(self) -> int:
        return sum(self.irs_sizes)

    def stacked_f(self) -> np.ndarray:
        """All surface matrices stacked into (sum N_l, M)."""
        if self.n_irs == 0:
            return np.zeros((0, self.m_antennas), dtype=complex)
        return np.vstack(self.f_bs_irs)

    def stacked_h_irs(self, k: int) -> np.ndarray:
        """Surface-to-user-k links stacked into (sum N_l,)."""
        if self.n_irs == 0:
            return np.zeros(0, dtype=complex)
        return np.concatenate([h[k] for h in self.h_irs_user])

    def stacked_g_irs(self) -> np.ndarray:
        if self.n_irs == 0:
            return np.zeros(0, dtype=complex)
        return np.concatenate(list(self.g_irs_eve))


# ---------------------------------------------------------------------------
# array responses and path loss


def ula_response(m_antennas: int, phi: float) -> np.ndarray:
    """Unit-norm linear-array response exp(j*pi*m*sin(phi))/sqrt(M)."""
    if m_antennas < 1:
        raise ValueError("m_antennas must be at least 1")
    m = np.arange(m_antennas)
    return np.exp(1j * math.pi * m * math.sin(phi)) / math.sqrt(m_antennas)


def upa_factors(n_elements: int) -> tuple:
    """Near-square (n_az, n_el) factorization with n_az * n_el = N.

    Perfect squares give a square layout; otherwise the largest divisor
    not exceeding sqrt(N) becomes the element-axis count.
    """
    if n_elements < 1:
        raise ValueError("n_elements must be at least 1")
    n_el = int(math.isqrt(n_elements))
    while n_elements % n_el != 0:
        n_el -= 1
    return n_elements // n_el, n_el


def upa_response(n_az: int, n_el: int, phi: float, psi: float) -> np.ndarray:
    """Unit-norm planar-array response as a Kronecker product.

    The azimuth factor steers with sin(phi)*sin(psi), the elevation factor
    with cos(phi); both factors are individually unit norm.
    """
    if n_az < 1 or n_el < 1:
        raise ValueError("array factors must be at least 1")
    a_az = np.exp(1j * math.pi * np.arange(n_az) * math.sin(phi) * math.sin(psi))
    a_el = np.exp(1j * math.pi * np.arange(n_el) * math.cos(phi))
    a = np.kron(a_az, a_el)
    return a / math.sqrt(n_az * n_el)


def path_loss_db(mu_db: float, exponent: float, d: float, shadow_db: float = 0.0):
    """Log-distance path loss mu + 10*exponent*log10(d) + shadow, in dB."""
    if d <= 0.0:
        raise ValueError("distance must be positive")
    return mu_db + 10.0 * exponent * math.log10(d) + shadow_db


# ---------------------------------------------------------------------------
# generation


def _bs_azimuth(origin, target):
    # angle from broadside (+y) toward +x
    d = target - origin
    return math.atan2(d[0], d[1])


def _upa_angles(origin, target):
    d = target - origin
    r = float(np.linalg.norm(d))
    if r <= 0.0:
        raise ValueError("coincident nodes in geometry")
    phi = math.acos(max(-1.0, min(1.0, d[2] / r)))
    psi = math.atan2(d[1], d[0]) % math.pi
    return phi, psi


def _link_gains(rng, model: PathLossModel, d: float, n_paths: int):
    """One shadowing draw, one path-loss value, n_paths complex gains."""
    shadow = rng.normal(0.0, model.shadow_std_db) if model.shadow_std_db > 0 else 0.0
    pl = path_loss_db(model.mu_db, model.exponent, d, shadow)
    var = 10.0 ** (-0.1 * pl)
    raw = rng.standard_normal(2 * n_paths)
    return math.sqrt(var / 2.0) * (raw[:n_paths] + 1j * raw[n_paths:])


def _multipath_ula(rng, model, origin, target, m_antennas, n_paths, gain):
    d = float(np.linalg.norm(target - origin))
    rho = _link_gains(rng, model, d, n_paths)
    phis = np.empty(n_paths)
    phis[0] = _bs_azimuth(origin, target)
    if n_paths > 1:
        phis[1:] = rng.uniform(0.0, TWO_PI, n_paths - 1)
    h = np.zeros(m_antennas, dtype=complex)
    for b in range(n_paths):
        h += rho[b] * ula_response(m_antennas, phis[b])
    return (math.sqrt(m_antennas) / n_paths) * gain * h


def _multipath_upa(rng, model, origin, target, n_az, n_el, n_paths):
    d = float(np.linalg.norm(target - origin))
    rho = _link_gains(rng, model, d, n_paths)
    angles = np.empty((n_paths, 2))
    angles[0] = _upa_angles(origin, target)
    if n_paths > 1:
        angles[1:, 0] = rng.uniform(0.0, math.pi, n_paths - 1)
        angles[1:, 1] = rng.uniform(0.0, math.pi, n_paths - 1)
    n = n_az * n_el
    h = np.zeros(n, dtype=complex)
    for b in range(n_paths):
        h += rho[b] * upa_response(n_az, n_el, angles[b, 0], angles[b, 1])
    return (math.sqrt(n) / n_paths) * h


def gen_channel_set(seed, params: ChannelParams, geometry: Geometry, m_antennas: int,
                    n_elements) -> ChannelSet:
    """Draw one seeded realization of every link.

    ``n_elements`` is an int (same size for every surface) or a sequence of
    per-surface sizes matching the geometry. The same seed always yields
    bit-identical channels.
    """
    rng = np.random.default_rng(seed)
    kk = geometry.n_users
    ll = geometry.n_irs
    if np.isscalar(n_elements):
        sizes = [int(n_elements)] * ll
    else:
        sizes = [int(n) for n in n_elements]
        if len(sizes) != ll:
            raise ValueError("n_elements length must match number of surfaces")
    bs = geometry.bs
    term = params.pl_terminal
    hop = params.pl_bs_irs
    bb = params.n_paths
    gain = params.bs_gain

    h_bs_user = np.zeros((kk, m_antennas), dtype=complex)
    for k in range(kk):
        h_bs_user[k] = _multipath_ula(
            rng, term, bs, geometry.users[k], m_antennas, bb, gain)
    g_bs_eve = _multipath_ula(rng, term, bs, geometry.eve, m_antennas, bb, gain)

    f_bs_irs = []
    for l in range(ll):
        pos = geometry.irs[l]
        d = float(np.linalg.norm(pos - bs))
        rho = _link_gains(rng, hop, d, 1)[0]
        n_az, n_el = upa_factors(sizes[l])
        a_in = upa_response(n_az, n_el, *_upa_angles(pos, bs))
        a_out = ula_response(m_antennas, _bs_azimuth(bs, pos))
        f = math.sqrt(m_antennas * sizes[l]) * rho * gain * np.outer(a_in, a_out.conj())
        f_bs_irs.append(f)

    h_irs_user = []
    for l in range(ll):
        n_az, n_el = upa_factors(sizes[l])
        rows = np.zeros((kk, sizes[l]), dtype=complex)
        for k in range(kk):
            rows[k] = _multipath_upa(
                rng, term, geometry.irs[l], geometry.users[k], n_az, n_el, bb)
        h_irs_user.append(rows)

    g_irs_eve = []
    for l in range(ll):
        n_az, n_el = upa_factors(sizes[l])
        g_irs_eve.append(_multipath_upa(
            rng, term, geometry.irs[l], geometry.eve, n_az, n_el, bb))

    return ChannelSet(f_bs_irs, h_bs_user, g_bs_eve, h_irs_user, g_irs_eve)


# ---------------------------------------------------------------------------
# flat text dump, for diffing realizations across implementations


def dump_channels(channels: ChannelSet, path):
    """Write a realization as a flat text record.

    Layout: a short header, then one "re im" pair per line, row major, in
    block order F[0..L-1], h_bs_user rows, g_bs_eve, h_irs_user[l][k]
    (l major), g_irs_eve[0..L-1].
    """
    def emit(fh, arr):
        for z in np.asarray(arr, dtype=complex).reshape(-1):
            fh.write(f"{float(z.real)!r} {float(z.imag)!r}\n")

    with open(path, "w") as fh:
        fh.write("# secbeam channel dump v1\n")
        fh.write(f"m_antennas {channels.m_antennas}\n")
        fh.write(f"n_users {channels.n_users}\n")
        sizes = " ".join(str(n) for n in channels.irs_sizes)
        fh.write(f"irs_sizes {sizes}\n".replace(" \n", "\n"))
        for f in channels.f_bs_irs:
            emit(fh, f)
        emit(fh, channels.h_bs_user)
        emit(fh, channels.g_bs_eve)
        for rows in channels.h_irs_user:
            emit(fh, rows)
        for g in channels.g_irs_eve:
            emit(fh, g)


def load_channel_dump(path) -> ChannelSet:
    """Inverse of :func:`dump_channels`."""
    with open(path) as fh:
        header = fh.readline()
        if "channel dump v1" not in header:
            raise ValueError("not a channel dump file")
        m = int(fh.readline().split()[1])
        kk = int(fh.readline().split()[1])
        size_tokens = fh.readline().split()[1:]
        sizes = [int(t) for t in size_tokens]
        vals = []
        for line in fh:
            re_s, im_s = line.split()
            vals.append(complex(float(re_s), float(im_s)))
    vals = np.asarray(vals, dtype=complex)
    pos = 0

    def take(shape):
        nonlocal pos
        n = int(np.prod(shape))
        out = vals[pos:pos + n].reshape(shape)
        pos += n
        return out

    f_bs_irs = [take((n, m)) for n in sizes]
    h_bs_user = take((kk, m))
    g_bs_eve = take((m,))
    h_irs_user = [take((kk, n)) for n in sizes]
    g_irs_eve = [take((n,)) for n in sizes]
    if pos != vals.size:
        raise ValueError("trailing values in channel dump")
    return ChannelSet(f_bs_irs, h_bs_user, g_bs_eve, h_irs_user, g_irs_eve)
