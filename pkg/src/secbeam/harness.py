"""Scenario files, seeded sweeps and CSV reporting.

A scenario is a flat INI file (key = value under sections) fixing the
system dimensions, channel constants, algorithm settings and a sweep over
exactly one axis. Each trial draws fresh channels from
``base_seed + trial`` and every method sees the same realization, so
per-seed differences between methods are paired.

The produced CSV is a pure function of the scenario file: records are
emitted in a fixed order and wall-clock times are kept out of the file
(they stay on the in-memory records).
"""

import configparser
import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .algorithms import (bcd_optimize, evaluate_mapped, map_phases,
                         solve_active, solve_passive)
from .baselines import (OracleBudget, brute_force_passive_oracle,
                        irs_free_optimize, mrt_beamformers,
                        random_phase_baseline)
from .channel import ChannelParams, Geometry, PathLossModel, gen_channel_set
from .config import AlgoConfig, SystemConfig
from .metrics import BeamformingState, min_secrecy_rate

SWEEP_AXES = ("p_bs_dbm", "m_antennas", "n_elements", "n_irs")
METHODS = ("proposed", "mrt", "irs_free", "random", "oracle")
WORKER_ENV = "SECBEAM_MAX_WORKERS"
CSV_COLUMNS = ("scenario", "axis", "value", "method", "seed",
               "relaxed_rate", "mapped_rate", "iterations", "status")


class ScenarioError(ValueError):
    """Raised for malformed scenario files."""


# ---------------------------------------------------------------------------
# default geometry


def default_user_positions(n_users: int) -> np.ndarray:
    """Users on a line at y = 40 m, spread symmetrically over [-5, 5] m."""
    if n_users == 1:
        xs = np.array([0.0])
    else:
        xs = np.linspace(-5.0, 5.0, n_users)
    out = np.zeros((n_users, 3))
    out[:, 0] = xs
    out[:, 1] = 40.0
    return out


def default_irs_positions(n_irs: int) -> np.ndarray:
    """Symmetric surface pairs at x = +-10 m, z = 10 m.

    Pairs sit at y = 20, 35, 50, ... m; placements with eight or more
    surfaces shift every x coordinate right by 2 m.
    """
    if n_irs % 2 != 0:
        raise ScenarioError("default geometry needs an even surface count")
    pos = []
    for j in range(n_irs // 2):
        y = 20.0 + 15.0 * j
        pos.append((-10.0, y, 10.0))
        pos.append((10.0, y, 10.0))
    pos = np.array(pos).reshape(-1, 3)
    if n_irs >= 8:
        pos[:, 0] += 2.0
    return pos


def default_geometry(n_users: int, n_irs: int) -> Geometry:
    return Geometry(
        bs=np.zeros(3),
        irs=default_irs_positions(n_irs) if n_irs else np.zeros((0, 3)),
        users=default_user_positions(n_users),
        eve=np.array([0.0, 30.0, 0.0]),
    )


# ---------------------------------------------------------------------------
# scenario model


@dataclass
class Scenario:
    name: str = "scenario"
    m_antennas: int = 4
    n_users: int = 2
    n_irs: int = 2
    n_elements: int = 16
    p_bs_dbm: float = 30.0
    noise_user_dbm: float = -95.0
    noise_eve_dbm: float = -95.0
    n_levels: int = 0  # 0: follow the per-value element count
    n_random_samples: int = 100
    oracle_max_combinations: int = 4096
    params: ChannelParams = field(default_factory=ChannelParams)
    geometry: Geometry = None  # None: derive the default per sweep value
    axis: str = "p_bs_dbm"
    values: tuple = (30.0,)
    methods: tuple = ("proposed",)
    n_trials: int = 50
    base_seed: int = 1
    algo: AlgoConfig = field(default_factory=AlgoConfig)

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ScenarioError(f"unknown sweep axis {self.axis!r}")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ScenarioError(f"unknown methods {bad}")
        if self.n_trials < 1:
            raise ScenarioError("n_trials must be at least 1")
        if not self.values:
            raise ScenarioError("sweep needs at least one value")
        if self.axis == "n_elements":
            for v in self.values:
                r = int(math.isqrt(int(v)))
                if r * r != int(v):
                    raise ScenarioError(
                        f"element sweep values must be perfect squares, got {v}")
        if self.axis == "n_irs" and self.geometry is not None:
            raise ScenarioError(
                "surface-count sweeps require the default geometry")

    def at_value(self, value):
        """Dimensions and settings with the sweep axis pinned to value."""
        m = self.m_antennas
        n = self.n_elements
        l = self.n_irs
        p = self.p_bs_dbm
        if self.axis == "p_bs_dbm":
            p = float(value)
        elif self.axis == "m_antennas":
            m = int(value)
        elif self.axis == "n_elements":
            n = int(value)
        elif self.axis == "n_irs":
            l = int(value)
        geometry = self.geometry
        if geometry is None:
            geometry = default_geometry(self.n_users, l)
        if geometry.n_irs != l:
            raise ScenarioError("geometry surface count mismatch")
        system = SystemConfig.from_dbm(p, self.noise_user_dbm,
                                       self.noise_eve_dbm)
        n_levels = self.n_levels if self.n_levels else n
        return m, n, l, geometry, system, n_levels


# ---------------------------------------------------------------------------
# scenario file parsing

_SCHEMA = {
    "scenario": {"name": str},
    "system": {
        "m_antennas": int, "n_users": int, "n_irs": int, "n_elements": int,
        "p_bs_dbm": float, "noise_user_dbm": float, "noise_eve_dbm": float,
        "n_levels": int, "n_random_samples": int,
        "oracle_max_combinations": int,
    },
    "channel": {
        "n_paths": int, "bs_gain": float,
        "mu_terminal_db": float, "exp_terminal": float,
        "shadow_terminal_db": float,
        "mu_bs_irs_db": float, "exp_bs_irs": float, "shadow_bs_irs_db": float,
    },
    "algo": {
        "max_inner_active": int, "max_inner_passive": int, "max_outer": int,
        "tol_inner_active": float, "tol_inner_passive": float,
        "tol_outer": float, "penalty": float, "backend": str,
        "min_phase_influence": float,
    },
    "geometry": {"bs": None, "users": None, "eve": None, "irs": None},
    "sweep": {"axis": str, "values": None},
    "run": {"methods": None, "n_trials": int, "base_seed": int},
}


def _parse_points(text):
    rows = [r.strip() for r in text.split(";") if r.strip()]
    return np.array([[float(t) for t in r.split()] for r in rows])


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file; unknown keys are fatal."""
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ScenarioError(f"cannot read scenario file {path}")
    kw = {}
    channel_kw = {}
    algo_kw = {}
    geometry_kw = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ScenarioError(f"unknown section [{section}]")
        for key, raw in cp.items(section):
            if key not in _SCHEMA[section]:
                raise ScenarioError(f"unknown key '{section}.{key}'")
            caster = _SCHEMA[section][key]
            try:
                if section == "channel":
                    channel_kw[key] = caster(raw)
                elif section == "algo":
                    algo_kw[key] = caster(raw)
                elif section == "geometry":
                    geometry_kw[key] = _parse_points(raw)
                elif key == "values":
                    kw["values"] = tuple(float(t) for t in raw.split())
                elif key == "methods":
                    kw["methods"] = tuple(raw.split())
                else:
                    kw[key] = caster(raw)
            except ScenarioError:
                raise
            except Exception as exc:
                raise ScenarioError(
                    f"bad value for '{section}.{key}': {raw!r} ({exc})")
    if channel_kw:
        term = PathLossModel(
            channel_kw.pop("mu_terminal_db", 61.4),
            channel_kw.pop("exp_terminal", 2.0),
            channel_kw.pop("shadow_terminal_db", 5.8))
        hop = PathLossModel(
            channel_kw.pop("mu_bs_irs_db", 72.0),
            channel_kw.pop("exp_bs_irs", 2.92),
            channel_kw.pop("shadow_bs_irs_db", 8.7))
        kw["params"] = ChannelParams(pl_terminal=term, pl_bs_irs=hop,
                                     **channel_kw)
    if algo_kw:
        kw["algo"] = AlgoConfig(**algo_kw)
    if geometry_kw:
        missing = {"bs", "users", "eve"} - set(geometry_kw)
        if missing:
            raise ScenarioError(f"geometry section missing {sorted(missing)}")
        kw["geometry"] = Geometry(
            bs=geometry_kw["bs"].reshape(3),
            irs=geometry_kw.get("irs", np.zeros((0, 3))),
            users=geometry_kw["users"],
            eve=geometry_kw["eve"].reshape(3))
    try:
        return Scenario(**kw)
    except TypeError as exc:
        raise ScenarioError(str(exc))


# ---------------------------------------------------------------------------
# sweep execution


@dataclass
class SweepRecord:
    scenario: str
    axis: str
    value: float
    method: str
    seed: int
    relaxed_rate: float
    mapped_rate: float
    iterations: int
    wall_time: float
    status: str


def _run_method(method, scenario, channels, system, n_levels, seed):
    import time as _time

    t0 = _time.perf_counter()
    cfg = scenario.algo
    nl = channels.total_elements
    if method == "proposed":
        res = bcd_optimize(channels, system, cfg, seed)
        if nl:
            alpha_hat, _ = map_phases(res.alpha, n_levels)
            mapped = evaluate_mapped(channels, res.w, alpha_hat, n_levels,
                                     system)
        else:
            mapped = res.min_rate
        out = (res.min_rate, mapped, res.n_outer, res.status)
    elif method == "mrt":
        w = mrt_beamformers(channels, system.p_bs)
        if nl:
            rng = np.random.default_rng(seed)
            alpha0 = np.exp(2j * math.pi * rng.uniform(0.0, 1.0, nl))
            alpha, eps, trace = solve_passive(channels, w, alpha0,
                                              np.zeros(nl), system, cfg)
            relaxed = min_secrecy_rate(
                channels, BeamformingState(w, alpha, eps),
                system.noise_user, system.noise_eve)
            alpha_hat, _ = map_phases(alpha, n_levels)
            mapped = evaluate_mapped(channels, w, alpha_hat, n_levels, system)
            iters = len(trace)
        else:
            relaxed = mapped = min_secrecy_rate(
                channels, BeamformingState(w, np.zeros(0), np.zeros(0)),
                system.noise_user, system.noise_eve)
            iters = 0
        out = (relaxed, mapped, iters, "ok")
    elif method == "irs_free":
        w, alpha, trace = irs_free_optimize(channels, system, cfg, seed)
        rate = min_secrecy_rate(
            channels, BeamformingState(w, alpha, np.zeros(nl)),
            system.noise_user, system.noise_eve)
        out = (rate, rate, len(trace), "ok")
    elif method == "random":
        w = mrt_beamformers(channels, system.p_bs)
        summary = random_phase_baseline(channels, w, n_levels,
                                        scenario.n_random_samples, seed,
                                        system)
        out = (summary.mean, summary.mean, scenario.n_random_samples, "ok")
    elif method == "oracle":
        w = mrt_beamformers(channels, system.p_bs)
        budget = OracleBudget(
            max_combinations=scenario.oracle_max_combinations)
        res = brute_force_passive_oracle(channels, w, n_levels, system,
                                         budget)
        out = (res.rate, res.rate, res.n_evaluated, "ok")
    else:  # pragma: no cover - filtered at parse time
        raise ScenarioError(f"unknown method {method!r}")
    return out, _time.perf_counter() - t0


def _trial_records(scenario, value, trial, seed_base):
    m, n, l, geometry, system, n_levels = scenario.at_value(value)
    seed = seed_base + trial
    records = []
    channels = None
    for method in scenario.methods:
        try:
            if channels is None:
                channels = gen_channel_set(seed, scenario.params, geometry,
                                           m, n)
            (relaxed, mapped, iters, status), dt = _run_method(
                method, scenario, channels, system, n_levels, seed)
        except Exception as exc:
            records.append(SweepRecord(
                scenario.name, scenario.axis, float(value), method, seed,
                0.0, 0.0, 0, 0.0, f"error:{type(exc).__name__}"))
            continue
        records.append(SweepRecord(
            scenario.name, scenario.axis, float(value), method, seed,
            float(relaxed), float(mapped), int(iters), float(dt),
            str(status)))
    return records


def run_sweep(scenario: Scenario, workers=None, seed_override=None):
    """Execute the sweep; the record list is deterministic for a given
    scenario (and seed override), whatever the worker count."""
    seed_base = scenario.base_seed if seed_override is None else seed_override
    jobs = [(value, trial) for value in scenario.values
            for trial in range(scenario.n_trials)]
    cap = int(os.environ.get(WORKER_ENV, "0") or 0)
    n_workers = workers or 1
    if cap > 0:
        n_workers = min(n_workers, cap)
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            chunks = list(pool.map(
                _trial_records,
                *zip(*((scenario, v, t, seed_base) for v, t in jobs))))
    else:
        chunks = [_trial_records(scenario, v, t, seed_base) for v, t in jobs]
    records = [r for chunk in chunks for r in chunk]
    value_order = {float(v): i for i, v in enumerate(scenario.values)}
    method_order = {m: i for i, m in enumerate(scenario.methods)}
    records.sort(key=lambda r: (value_order[r.value],
                                method_order[r.method], r.seed))
    return records


# ---------------------------------------------------------------------------
# aggregation and CSV


@dataclass
class AggregateRow:
    axis: str
    value: float
    method: str
    n: int
    n_failed: int
    relaxed_mean: float
    relaxed_stderr: float
    mapped_mean: float
    mapped_stderr: float


def _mean_stderr(vals):
    vals = np.asarray(vals, dtype=float)
    n = len(vals)
    if n == 0:
        return float("nan"), float("nan")
    if n == 1:
        return float(vals[0]), 0.0
    return float(np.mean(vals)), float(np.std(vals, ddof=1) / math.sqrt(n))


def aggregate(records):
    """Per (value, method) means with standard errors, failures excluded."""
    keys = []
    groups = {}
    for r in records:
        key = (r.value, r.method)
        if key not in groups:
            groups[key] = []
            keys.append(key)
        groups[key].append(r)
    out = []
    for value, method in keys:
        rows = groups[(value, method)]
        ok = [r for r in rows if not r.status.startswith("error")]
        rm, rs = _mean_stderr([r.relaxed_rate for r in ok])
        mm, ms = _mean_stderr([r.mapped_rate for r in ok])
        out.append(AggregateRow(rows[0].axis, value, method, len(ok),
                                len(rows) - len(ok), rm, rs, mm, ms))
    return out


def records_to_csv(records, path_or_fh, timings=False):
    """Write sweep records; wall time only on request since it breaks
    byte-for-byte reproducibility."""
    close = False
    if hasattr(path_or_fh, "write"):
        fh = path_or_fh
    else:
        fh = open(path_or_fh, "w", newline="")
        close = True
    try:
        writer = csv.writer(fh)
        cols = list(CSV_COLUMNS) + (["wall_time"] if timings else [])
        writer.writerow(cols)
        for r in records:
            row = [r.scenario, r.axis, repr(r.value), r.method, r.seed,
                   repr(r.relaxed_rate), repr(r.mapped_rate), r.iterations,
                   r.status]
            if timings:
                row.append(repr(r.wall_time))
            writer.writerow(row)
    finally:
        if close:
            fh.close()


def aggregate_to_csv(rows, path_or_fh):
    close = False
    if hasattr(path_or_fh, "write"):
        fh = path_or_fh
    else:
        fh = open(path_or_fh, "w", newline="")
        close = True
    try:
        writer = csv.writer(fh)
        writer.writerow(["axis", "value", "method", "n", "n_failed",
                         "relaxed_mean", "relaxed_stderr",
                         "mapped_mean", "mapped_stderr"])
        for r in rows:
            writer.writerow([r.axis, repr(r.value), r.method, r.n, r.n_failed,
                             repr(r.relaxed_mean), repr(r.relaxed_stderr),
                             repr(r.mapped_mean), repr(r.mapped_stderr)])
    finally:
        if close:
            fh.close()


# ---------------------------------------------------------------------------
# small strong-cascade setup for oracle demonstrations


def oracle_bench(n_users=1, n_irs=1):
    """Desk-scale setup whose surface path rivals the direct path.

    The stock propagation constants bury the reflected path tens of dB
    under the direct one, which would make phase choices numerically
    invisible; this setup shortens the surface hops and removes the hop
    attenuation offset so the oracle and mapping tests exercise real
    phase sensitivity.
    """
    params = ChannelParams(
        pl_terminal=PathLossModel(61.4, 2.0, 0.0),
        pl_bs_irs=PathLossModel(0.0, 2.0, 0.0))
    users = default_user_positions(n_users)
    users[:, 1] = 100.0
    irs = []
    for j in range(n_irs):
        side = 1.0 if j % 2 == 0 else -1.0
        irs.append((side * 1.0, 98.0 - 2.0 * (j // 2), 1.0))
    geometry = Geometry(
        bs=np.zeros(3), irs=np.array(irs).reshape(-1, 3), users=users,
        eve=np.array([0.0, 70.0, 0.0]))
    system = SystemConfig.from_dbm(30.0, -95.0, -95.0)
    return params, geometry, system


@dataclass
class OracleComparison:
    seed: int
    relaxed: float
    mapped: float
    oracle: float
    random_mean: float
    n_evaluated: int


def oracle_protocol(seed, n_users=1, m_antennas=2, n_irs=1, n_elements=2,
                    n_levels=4, n_random=100, passive_cap=800,
                    passive_tol=1e-9) -> OracleComparison:
    """Exhaustive-search comparison on one strong-cascade tiny instance.

    Beamformers come from a single transmit-block step; the phase block
    then runs under a deep iteration budget. The slack penalty shrinks
    each linearized step to a small fraction of a radian, so reaching
    good phases takes hundreds of the (cheap, desk-scale) subproblem
    solves; the stock budget is meant for joint alternation, not for
    polishing phases at fixed beamformers.
    """
    params, geometry, system = oracle_bench(n_users, n_irs)
    channels = gen_channel_set(seed, params, geometry, m_antennas,
                               n_elements)
    nl = channels.total_elements
    rng = np.random.default_rng(seed)
    w0 = rng.standard_normal((n_users, m_antennas)) \
        + 1j * rng.standard_normal((n_users, m_antennas))
    w0 *= math.sqrt(system.p_bs / float(np.sum(np.abs(w0) ** 2)))
    alpha0 = np.exp(2j * math.pi * rng.uniform(0.0, 1.0, nl))

    w, _ = solve_active(channels, alpha0, np.zeros(nl), w0, system,
                        AlgoConfig(max_inner_active=1))
    alpha, _, _ = solve_passive(
        channels, w, alpha0, np.zeros(nl), system,
        AlgoConfig(max_inner_passive=passive_cap,
                   tol_inner_passive=passive_tol))
    relaxed = min_secrecy_rate(channels,
                               BeamformingState(w, alpha, np.zeros(nl)),
                               system.noise_user, system.noise_eve)
    alpha_hat, _ = map_phases(alpha, n_levels)
    mapped = evaluate_mapped(channels, w, alpha_hat, n_levels, system)
    oracle = brute_force_passive_oracle(channels, w, n_levels, system)
    rand = random_phase_baseline(channels, w, n_levels, n_random, seed,
                                 system)
    return OracleComparison(seed, float(relaxed), float(mapped),
                            float(oracle.rate), float(rand.mean),
                            oracle.n_evaluated)
