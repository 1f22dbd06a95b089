"""Command line entry points, exercised through main()."""

import numpy as np
import pytest

from secbeam.cli import main
from secbeam.harness import ScenarioError

SCENARIO = """
[scenario]
name = clitest

[system]
m_antennas = 2
n_users = 2
n_irs = 2
n_elements = 4
n_levels = 4

[sweep]
axis = p_bs_dbm
values = 30

[run]
methods = mrt random
n_trials = 2
base_seed = 1
"""


def _write_scenario(tmp_path):
    path = tmp_path / "scenario.ini"
    path.write_text(SCENARIO)
    return path


def test_run_writes_identical_csv_on_rerun(tmp_path, capsys):
    scen = _write_scenario(tmp_path)
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    assert main(["run", str(scen), "--out", str(out1)]) == 0
    assert main(["run", str(scen), "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    text = out1.read_text()
    assert text.startswith("scenario,axis,value,method,seed")
    assert "clitest" in text
    assert "wall_time" not in text
    assert "wrote" in capsys.readouterr().out


def test_run_aggregate_and_timings(tmp_path):
    scen = _write_scenario(tmp_path)
    out = tmp_path / "records.csv"
    agg = tmp_path / "agg.csv"
    code = main(["run", str(scen), "--out", str(out), "--aggregate",
                 str(agg), "--timings"])
    assert code == 0
    assert "wall_time" in out.read_text().splitlines()[0]
    assert agg.read_text().startswith("axis,value,method")


def test_run_seed_override_changes_output(tmp_path):
    scen = _write_scenario(tmp_path)
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    main(["run", str(scen), "--out", str(out1)])
    main(["run", str(scen), "--out", str(out2), "--seed", "99"])
    assert out1.read_bytes() != out2.read_bytes()


def test_run_missing_scenario_raises(tmp_path):
    with pytest.raises(ScenarioError):
        main(["run", str(tmp_path / "nope.ini"), "--out",
              str(tmp_path / "x.csv")])


def test_trace_writes_iteration_log(tmp_path, capsys):
    out = tmp_path / "trace.csv"
    code = main(["trace", "--users", "2", "--antennas", "2", "--surfaces",
                 "2", "--elements", "4", "--seed", "3", "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == ("outer_iter,inner_algo,inner_iter,objective,"
                        "min_rate,sum_eps,status")
    assert len(lines) > 2
    assert "status=" in capsys.readouterr().out


def test_trace_rejects_odd_surfaces(tmp_path, capsys):
    code = main(["trace", "--surfaces", "3", "--out",
                 str(tmp_path / "x.csv")])
    assert code == 2
    assert "even surface count" in capsys.readouterr().err


def test_counts_output(capsys):
    assert main(["counts", "--users", "2", "--antennas", "4", "--surfaces",
                 "2", "--elements", "4"]) == 0
    out = capsys.readouterr().out
    assert "transmit subproblem: 16 variables, 11 constraints" in out
    assert "phase subproblem: 24 variables, 33 constraints" in out


def test_counts_needs_surfaces(capsys):
    assert main(["counts", "--surfaces", "0"]) == 2
    assert "at least one surface" in capsys.readouterr().err


def test_check_battery_passes(capsys):
    assert main(["check"]) == 0
    out = capsys.readouterr().out
    assert "all 8 checks passed" in out
    assert "FAIL" not in out


def test_oracle_command(capsys):
    assert main(["oracle", "--seeds", "2"]) == 0
    out = capsys.readouterr().out
    assert "mapped beat the random mean on" in out
    assert len([l for l in out.splitlines() if l.strip() and
                l.split()[0].isdigit()]) == 2


def test_parser_requires_command():
    with pytest.raises(SystemExit):
        main([])
