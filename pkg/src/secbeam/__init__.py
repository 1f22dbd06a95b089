"""Secrecy beamforming with distributed reflecting surfaces.

Channel synthesis, a conic modeling layer, the alternating convex
optimizer for the worst-user secrecy rate, discrete phase mapping and
the reference baselines, plus a scenario harness and CLI.
"""

from .algorithms import (BcdResult, Trace, TraceRow, bcd_optimize,
                         evaluate_mapped, map_phases, phase_influence,
                         phase_levels, solve_active, solve_passive)
from .baselines import (OracleBudget, OracleBudgetError, OracleResult,
                        RandomPhaseSummary, brute_force_passive_oracle,
                        irs_free_optimize, mrt_beamformers,
                        random_phase_baseline)
from .channel import (ChannelParams, ChannelSet, Geometry, PathLossModel,
                      dump_channels, gen_channel_set, load_channel_dump,
                      path_loss_db, ula_response, upa_factors, upa_response)
from .config import AlgoConfig, SystemConfig, dbm_to_watt, watt_to_dbm
from .conic import (ConfigError, ConicProblem, SolveResult, dump_problem,
                    solve)
from .harness import (Scenario, ScenarioError, SweepRecord, aggregate,
                      default_geometry, load_scenario, oracle_bench,
                      records_to_csv, run_sweep)
from .metrics import (BeamformingState, effective_channels, effective_rows,
                      min_secrecy_rate, modified_objective, secrecy_rate,
                      secrecy_rates, sinr_eve, sinr_user)
from .sca import (build_active_subproblem, build_passive_subproblem,
                  defining_active_aux, half_gradient, init_active_aux,
                  init_passive_aux, stats_for_dims)

__version__ = "0.1.0"

__all__ = [
    "AlgoConfig", "BcdResult", "BeamformingState", "ChannelParams",
    "ChannelSet", "ConfigError", "ConicProblem", "Geometry", "OracleBudget",
    "OracleBudgetError", "OracleResult", "PathLossModel",
    "RandomPhaseSummary", "Scenario", "ScenarioError", "SolveResult",
    "SweepRecord", "SystemConfig", "Trace", "TraceRow", "aggregate",
    "bcd_optimize", "brute_force_passive_oracle", "build_active_subproblem",
    "build_passive_subproblem", "dbm_to_watt", "default_geometry",
    "defining_active_aux",
    "dump_channels", "dump_problem", "effective_channels", "effective_rows",
    "evaluate_mapped", "gen_channel_set", "half_gradient",
    "init_active_aux", "init_passive_aux", "irs_free_optimize",
    "load_channel_dump", "load_scenario", "map_phases", "min_secrecy_rate",
    "phase_influence",
    "modified_objective", "mrt_beamformers", "oracle_bench", "path_loss_db",
    "phase_levels", "random_phase_baseline", "records_to_csv", "run_sweep",
    "secrecy_rate", "secrecy_rates", "sinr_eve", "sinr_user", "solve",
    "solve_active", "solve_passive", "stats_for_dims", "ula_response",
    "upa_factors", "upa_response", "watt_to_dbm",
]
