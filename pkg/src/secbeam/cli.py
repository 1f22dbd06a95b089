"""Command line front end.

Subcommands:

* ``run``     execute a scenario file and write the sweep CSV
* ``trace``   one full optimization, iteration log to CSV
* ``oracle``  desk-scale comparison against the exhaustive phase search
* ``check``   seeded invariant battery, nonzero exit on failure
* ``counts``  subproblem variable/constraint counts for given sizes
"""

import argparse
import math
import sys

import numpy as np

from . import algorithms, baselines, harness, metrics, sca
from .channel import gen_channel_set
from .config import AlgoConfig, SystemConfig


def _add_dims(parser):
    parser.add_argument("--users", type=int, default=2)
    parser.add_argument("--antennas", type=int, default=4)
    parser.add_argument("--surfaces", type=int, default=2)
    parser.add_argument("--elements", type=int, default=4,
                        help="elements per surface")


def build_parser():
    p = argparse.ArgumentParser(
        prog="secbeam",
        description="secrecy beamforming with reflecting surfaces")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a scenario sweep")
    run.add_argument("scenario", help="scenario file (INI format)")
    run.add_argument("--out", required=True, help="records CSV path")
    run.add_argument("--aggregate", help="optional per-cell summary CSV")
    run.add_argument("--seed", type=int, default=None,
                     help="override the scenario base seed")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--timings", action="store_true",
                     help="include wall times (breaks reproducibility)")

    tr = sub.add_parser("trace", help="log one optimization run")
    _add_dims(tr)
    tr.add_argument("--power-dbm", type=float, default=30.0)
    tr.add_argument("--noise-dbm", type=float, default=-95.0)
    tr.add_argument("--seed", type=int, default=1)
    tr.add_argument("--out", required=True, help="trace CSV path")

    orc = sub.add_parser("oracle", help="compare against exhaustive search")
    orc.add_argument("--seeds", type=int, default=5)
    orc.add_argument("--levels", type=int, default=4)
    orc.add_argument("--elements", type=int, default=2)

    chk = sub.add_parser("check", help="run the invariant battery")
    chk.add_argument("--seed", type=int, default=0)

    cnt = sub.add_parser("counts", help="subproblem sizes for given dims")
    _add_dims(cnt)
    return p


# ---------------------------------------------------------------------------


def cmd_run(args):
    scenario = harness.load_scenario(args.scenario)
    records = harness.run_sweep(scenario, workers=args.workers,
                                seed_override=args.seed)
    harness.records_to_csv(records, args.out, timings=args.timings)
    n_err = sum(1 for r in records if r.status.startswith("error"))
    print(f"wrote {len(records)} records to {args.out}"
          + (f" ({n_err} failed)" if n_err else ""))
    if args.aggregate:
        harness.aggregate_to_csv(harness.aggregate(records), args.aggregate)
        print(f"wrote aggregates to {args.aggregate}")
    return 1 if n_err else 0


def cmd_trace(args):
    if args.surfaces % 2 != 0 and args.surfaces != 0:
        print("default geometry needs an even surface count", file=sys.stderr)
        return 2
    geometry = harness.default_geometry(args.users, args.surfaces)
    system = SystemConfig.from_dbm(args.power_dbm, args.noise_dbm,
                                   args.noise_dbm)
    channels = gen_channel_set(args.seed, harness.ChannelParams(), geometry,
                               args.antennas, args.elements)
    res = algorithms.bcd_optimize(channels, system, AlgoConfig(), args.seed)
    res.trace.to_csv(args.out)
    print(f"status={res.status} outer={res.n_outer} "
          f"min_rate={res.min_rate:.6f} sum_eps={float(np.sum(res.eps)):.3e}")
    print(f"wrote {len(res.trace)} trace rows to {args.out}")
    return 0


def cmd_oracle(args):
    print("seed  mapped    oracle    random-mean  gap")
    wins = 0
    for seed in range(1, args.seeds + 1):
        out = harness.oracle_protocol(seed, n_levels=args.levels,
                                      n_elements=args.elements)
        if out.mapped >= out.random_mean:
            wins += 1
        print(f"{seed:4d}  {out.mapped:8.5f}  {out.oracle:8.5f}  "
              f"{out.random_mean:11.5f}  {out.oracle - out.mapped:.3e}")
    print(f"mapped beat the random mean on {wins}/{args.seeds} seeds")
    return 0


# ---------------------------------------------------------------------------
# invariant battery


def _check_steering(rng):
    from .channel import ula_response, upa_response
    for _ in range(10):
        phi = rng.uniform(-math.pi / 2, math.pi / 2)
        psi = rng.uniform(0.0, math.pi)
        v = ula_response(8, phi)
        u = upa_response(4, 4, phi, psi)
        assert abs(np.linalg.norm(v) - 1.0) < 1e-12
        assert abs(np.linalg.norm(u) - 1.0) < 1e-12


def _check_rank_one(rng):
    del rng
    params, geometry, _ = harness.oracle_bench()
    channels = gen_channel_set(3, params, geometry, 4, 4)
    s = np.linalg.svd(channels.f_bs_irs[0], compute_uv=False)
    assert s[1] < 1e-12 * s[0]


def _check_aggregation(rng):
    params, geometry, _ = harness.oracle_bench()
    channels = gen_channel_set(4, params, geometry, 2, 4)
    nl = channels.total_elements
    alpha = np.exp(1j * rng.uniform(0, 2 * math.pi, nl))
    w = rng.standard_normal((1, 2)) + 1j * rng.standard_normal((1, 2))
    xi, rho = metrics.effective_rows(channels, alpha)
    agg = metrics.effective_channels(channels, alpha, w)
    direct = xi @ w.T
    via_primes = np.array([[agg.h_prime[k, i] @ alpha + agg.h_dprime[k, i]
                            for i in range(1)] for k in range(1)])
    assert np.max(np.abs(direct - via_primes)) < 1e-10
    del rho


def _check_common_phase(rng):
    params, geometry, system = harness.oracle_bench()
    channels = gen_channel_set(5, params, geometry, 2, 4)
    nl = channels.total_elements
    alpha = np.exp(1j * rng.uniform(0, 2 * math.pi, nl))
    w = rng.standard_normal((1, 2)) + 1j * rng.standard_normal((1, 2))
    w *= math.sqrt(system.p_bs / np.sum(np.abs(w) ** 2))
    state_a = metrics.BeamformingState(w, alpha, np.zeros(nl))
    r_a = metrics.min_secrecy_rate(channels, state_a, system.noise_user,
                                   system.noise_eve)
    # a global phase on w leaves every rate unchanged
    state_b = metrics.BeamformingState(w * np.exp(1j * 0.7), alpha,
                                       np.zeros(nl))
    r_b = metrics.min_secrecy_rate(channels, state_b, system.noise_user,
                                   system.noise_eve)
    assert abs(r_a - r_b) < 1e-10


def _check_half_gradient(rng):
    for _ in range(20):
        n = rng.integers(1, 9)
        a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        b = complex(rng.standard_normal() + 1j * rng.standard_normal())
        g_re, g_im = sca.half_gradient(a, x, b)
        h = 1e-6
        for j in range(n):
            e = np.zeros(n)
            e[j] = h

            def f(z):
                return abs(np.dot(a, z) + b) ** 2

            fd_re = (f(x + e) - f(x - e)) / (2 * h)
            fd_im = (f(x + 1j * e) - f(x - 1j * e)) / (2 * h)
            assert abs(2 * g_re[j] - fd_re) < 1e-4 * max(1.0, abs(fd_re))
            assert abs(2 * g_im[j] - fd_im) < 1e-4 * max(1.0, abs(fd_im))


def _check_taylor_feasible(rng):
    params, geometry, system = harness.oracle_bench()
    channels = gen_channel_set(6, params, geometry, 2, 4)
    nl = channels.total_elements
    alpha = np.exp(1j * rng.uniform(0, 2 * math.pi, nl))
    w = rng.standard_normal((1, 2)) + 1j * rng.standard_normal((1, 2))
    w *= math.sqrt(system.p_bs / np.sum(np.abs(w) ** 2))
    q_bar, r_bar = sca.init_active_aux(w, channels, alpha, system)
    h = sca.build_active_subproblem(
        channels, alpha, sca.ActiveLinearization(w, q_bar, r_bar), system)
    assert h.problem.max_violation(h.taylor_x) <= 1e-9
    n_bar, u_bar = sca.init_passive_aux(alpha, channels, w, system)
    hp = sca.build_passive_subproblem(
        channels, w, sca.PassiveLinearization(alpha, n_bar, u_bar), system,
        penalty=-100.0)
    assert hp.problem.max_violation(hp.taylor_x) <= 1e-9


def _check_monotone_step(rng):
    params, geometry, system = harness.oracle_bench()
    channels = gen_channel_set(7, params, geometry, 2, 4)
    nl = channels.total_elements
    alpha = np.exp(1j * rng.uniform(0, 2 * math.pi, nl))
    w0 = rng.standard_normal((1, 2)) + 1j * rng.standard_normal((1, 2))
    w0 *= math.sqrt(system.p_bs / np.sum(np.abs(w0) ** 2))
    cfg = AlgoConfig(max_inner_active=3)
    _, trace = algorithms.solve_active(channels, alpha, np.zeros(nl), w0,
                                       system, cfg)
    # solved rows only: the conservative start row may sit above step one
    objs = [r.objective for r in trace.rows_for("active")
            if r.inner_iter > 0]
    assert all(b >= a - 1e-9 for a, b in zip(objs, objs[1:]))


def _check_mapping(rng):
    nl = 6
    alpha = np.exp(1j * rng.uniform(0, 2 * math.pi, nl))
    hat, idx = algorithms.map_phases(alpha, 8)
    hat2, idx2 = algorithms.map_phases(hat, 8)
    assert np.array_equal(idx, idx2)
    assert np.max(np.abs(hat - hat2)) == 0.0


CHECKS = [
    ("steering vector norms", _check_steering),
    ("surface-hop rank one", _check_rank_one),
    ("aggregation consistency", _check_aggregation),
    ("common phase invariance", _check_common_phase),
    ("half gradient vs finite differences", _check_half_gradient),
    ("expansion point feasibility", _check_taylor_feasible),
    ("monotone transmit step", _check_monotone_step),
    ("phase mapping idempotence", _check_mapping),
]


def cmd_check(args):
    rng = np.random.default_rng(args.seed)
    failed = 0
    for name, fn in CHECKS:
        try:
            fn(rng)
        except Exception as exc:
            failed += 1
            print(f"FAIL {name}: {exc!r}")
        else:
            print(f"ok   {name}")
    if failed:
        print(f"{failed}/{len(CHECKS)} checks failed")
        return 1
    print(f"all {len(CHECKS)} checks passed")
    return 0


def cmd_counts(args):
    if args.surfaces < 1:
        print("counts needs at least one surface", file=sys.stderr)
        return 2
    active, passive = sca.stats_for_dims(args.users, args.antennas,
                                         args.elements, args.surfaces)
    print(f"transmit subproblem: {active[0]} variables, "
          f"{active[1]} constraints")
    print(f"phase subproblem: {passive[0]} variables, "
          f"{passive[1]} constraints")
    return 0


COMMANDS = {
    "run": cmd_run,
    "trace": cmd_trace,
    "oracle": cmd_oracle,
    "check": cmd_check,
    "counts": cmd_counts,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
