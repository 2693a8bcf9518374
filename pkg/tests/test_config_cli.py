import csv

import pytest

from laa_dpp import cli, harness
from laa_dpp.config import ConfigError, load_config, parse_config
from laa_dpp.core import dbm_to_watts
from laa_dpp.solver import SolverError


def test_default_config_loads(defaults):
    assert defaults.network.K == 3
    assert defaults.network.total_power_cap == pytest.approx(dbm_to_watts(46))
    assert defaults.sim.V_list == (1.0, 2.0, 5.0, 10.0, 20.0, 40.0)


def test_dbm_suffix_converts():
    exp = parse_config({"network": {"unlicensed_power_cap_dbm": 20}})
    assert exp.network.unlicensed_power_cap == pytest.approx(0.1)


@pytest.mark.parametrize(
    "data",
    [
        {"netwrk": {}},
        {"network": {"K_sbs": 3}},
        {"network": {"slots_dbm": 3}},
        {"network": {"static_power": 9, "static_power_dbm": 40}},
        {"sim": {"slots": 0}},
        {"env": []},
    ],
)
def test_bad_config_rejected(data):
    with pytest.raises(ConfigError):
        parse_config(data)


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("network: [1, 2\n")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_validate_command(capsys):
    assert cli.main(["validate"]) == 0
    assert "valid" in capsys.readouterr().out


def test_missing_config_exits_one(tmp_path, capsys):
    assert cli.main(["run", "--config", str(tmp_path / "missing.yaml")]) == 1
    assert "configuration error" in capsys.readouterr().err


def test_invalid_network_exits_one(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("network:\n  unlicensed_power_cap: 100.0\n  total_power_cap: 1.0\n")
    assert cli.main(["run", "--config", str(path), "--slots", "2"]) == 1


def test_solver_failure_exits_two(monkeypatch, capsys):
    def boom(*args, **kwargs):
        raise SolverError("no interior point")

    monkeypatch.setattr(harness, "run_episode", boom)
    assert cli.main(["run", "--slots", "2"]) == 2
    assert "solver failure" in capsys.readouterr().err


def test_sweep_writes_one_row_per_V(tmp_path):
    assert cli.main(["sweep", "--V", "5,10,20,40", "--slots", "3", "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader((tmp_path / "tradeoff.csv").open()))
    assert [float(r["V"]) for r in rows] == [5, 10, 20, 40]
    assert (tmp_path / "summary.json").exists() and (tmp_path / "series.csv").exists()


def test_run_outputs_are_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert cli.main(["run", "--V", "5", "--slots", "4", "--per-user", "--out", str(tmp_path / name)]) == 0
    for f in ("series.csv", "summary.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_seed_override_changes_the_run(tmp_path):
    cli.main(["run", "--policy", "zero", "--slots", "20", "--out", str(tmp_path / "a")])
    cli.main(["run", "--policy", "zero", "--slots", "20", "--seed", "7", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "series.csv").read_bytes() != (tmp_path / "b" / "series.csv").read_bytes()


def test_csma_table_command(tmp_path, capsys):
    assert cli.main(["csma-table", "--n-max", "5", "--out", str(tmp_path)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "N,tau_w,tau_l,p_w,p_l,P_suc"
    assert len(lines) == 7  # header plus N = 0..5
    assert lines[-1].startswith("5,0.0740191432")
    assert (tmp_path / "csma_table.csv").read_text().strip().splitlines() == lines


def test_unknown_policy_exits_one():
    assert cli.main(["run", "--policy", "greedy", "--slots", "2"]) == 1
