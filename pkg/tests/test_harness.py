import csv
import json

import numpy as np
import pytest

from laa_dpp import harness
from laa_dpp.baselines import PolicyId
from laa_dpp.env import EnvParams, sample_slot


@pytest.fixture(scope="module")
def short_runs(defaults):
    cfg, env = defaults.network, defaults.env
    return {
        "p5": harness.run_episode(cfg, env, PolicyId.proposed(5), 120),
        "zero": harness.run_episode(cfg, env, PolicyId.zero_power(), 120),
    }


def test_zero_power_queue_accumulates_arrivals(defaults, short_runs):
    cfg, env = defaults.network, defaults.env
    m = short_runs["zero"]
    arrivals = np.array([sample_slot(env, cfg, t).arrivals for t in range(120)])
    assert np.array_equal(m.queue_history, np.cumsum(arrivals, axis=0))
    assert m.avg_power == cfg.K * cfg.static_power
    assert m.avg_queue == pytest.approx(env.mean_arrival_bits * 120 / 2, rel=0.15)
    assert m.stability.slope_tail >= 0.9 * env.mean_arrival_bits


def test_no_traffic_means_no_power(defaults):
    cfg = defaults.network
    env = EnvParams(arrival_rate=0.0)
    m = harness.run_episode(cfg, env, PolicyId.proposed(5), 30)
    assert m.avg_queue == 0.0 and m.avg_delay == 0.0
    assert m.avg_power == cfg.K * cfg.static_power


def test_metric_consistency(short_runs):
    m = short_runs["p5"]
    assert m.avg_power == np.mean(m.power_series)
    assert m.avg_rate == np.mean(m.rate_series)
    assert m.avg_queue == np.mean(m.queue_history)
    assert m.avg_delay * m.avg_arrival == pytest.approx(m.avg_queue, rel=1e-12)
    assert m.avg_delay >= 0
    assert np.allclose(m.queue_series, m.queue_history.sum(axis=1))
    assert m.solver_failure_count == 0


def test_run_is_reproducible(defaults, short_runs):
    again = harness.run_episode(defaults.network, defaults.env, PolicyId.proposed(5), 120)
    ref = short_runs["p5"]
    assert np.array_equal(again.power_series, ref.power_series)
    assert np.array_equal(again.queue_history, ref.queue_history)
    assert again.summary() == ref.summary()


def test_c0_estimate_needs_long_runs(defaults):
    cfg, env = defaults.network, defaults.env
    assert harness.run_episode(cfg, env, PolicyId.zero_power(), 999).C0_estimate is None
    m = harness.run_episode(cfg, env, PolicyId.zero_power(), 1000)
    a = m.arrival_history / cfg.queue_unit_bits
    assert m.C0_estimate == pytest.approx(0.5 * np.sum(np.mean(a**2, axis=0)))


def test_single_value_sweep_equals_run(defaults, short_runs):
    tab = harness.sweep_V(defaults.network, defaults.env, [5], 120)
    assert len(tab.rows) == 1
    row, ref = tab.rows[0], short_runs["p5"]
    assert (row.V, row.avg_power, row.avg_delay, row.avg_queue) == (5.0, ref.avg_power, ref.avg_delay, ref.avg_queue)


def test_sweep_input_checks(defaults):
    with pytest.raises(ValueError):
        harness.sweep_V(defaults.network, defaults.env, [], 10)
    with pytest.raises(ValueError):
        harness.sweep_V(defaults.network, defaults.env, [10, 5], 10)
    with pytest.raises(ValueError):
        harness.run_episode(defaults.network, defaults.env, PolicyId.zero_power(), 0)


def test_parallel_rows_match_sequential(defaults):
    cfg, env = defaults.network, defaults.env
    jobs = [(cfg, env, PolicyId.proposed(V), 8, None) for V in (2.0, 20.0)]
    seq = harness.run_many(jobs, workers=1)
    par = harness.run_many(jobs, workers=2)
    for a, b in zip(seq, par):
        assert np.array_equal(a.power_series, b.power_series)


def test_identical_policies_compare_equal(defaults, short_runs):
    m = short_runs["p5"]
    tab = harness.table_from_runs([m], defaults.env)
    rep = harness.compare(tab, m)
    assert rep.power_ratio == 1.0
    assert rep.dominance_window == [5.0]


def test_unstable_baseline_has_no_matched_point(defaults, short_runs):
    tab = harness.table_from_runs([short_runs["p5"]], defaults.env)
    rep = harness.compare(tab, short_runs["zero"])
    assert rep.matched_V is None and rep.power_ratio is None
    assert rep.message == "no matched-delay point"


def _fake_run(V, power, delay):
    m = harness.RunMetrics(
        policy="x", V=V, slots=1, avg_power=power, avg_rate=0.0, avg_queue=delay, avg_delay=delay,
        avg_arrival=1.0, power_series=np.array([power]), rate_series=np.zeros(1),
        queue_history=np.array([[delay]]), arrival_history=np.ones((1, 1)), served_history=np.zeros((1, 1)),
    )
    return m


def test_matched_point_interpolates_between_rows():
    rows = [harness.TradeoffRow(V, p, d, d, True) for V, p, d in [(1, 40.0, 2.0), (10, 30.0, 20.0)]]
    tab = harness.TradeoffTable(rows, [], 0, 1)
    rep = harness.compare(tab, _fake_run(None, 50.0, 11.0))
    assert rep.matched_V == pytest.approx(5.5)
    assert rep.matched_power == pytest.approx(35.0)
    assert rep.reduction_pct == pytest.approx(30.0)
    assert rep.dominance_window == [1]


def test_inverse_and_linear_fits():
    V = np.array([1, 2, 5, 10, 20, 40.0])
    fit = harness.fit_inverse(V, 30 + 4 / V)
    assert fit.c0 == pytest.approx(30) and fit.c1 == pytest.approx(4)
    assert fit.relative_residual <= 1e-12
    lin = harness.fit_linear(V, 3 + 2 * V)
    assert lin.slope == pytest.approx(2) and lin.r2 == pytest.approx(1.0)
    assert harness.fit_linear(V, [1, 5, 2, 6, 1, 4]).r2 < 0.5


def test_monotone_band():
    assert harness.monotone_within([10, 10.1, 9.0], band=0.02, increasing=False)
    assert not harness.monotone_within([10, 10.5, 9.0], band=0.02, increasing=False)
    assert harness.monotone_within([1, 2, 2, 3], band=0.0, increasing=True)


def test_outputs(tmp_path, defaults, short_runs):
    tab = harness.table_from_runs([short_runs["p5"]], defaults.env)
    tab.to_csv(tmp_path / "t.csv")
    rows = list(csv.DictReader((tmp_path / "t.csv").open()))
    assert len(rows) == 1 and float(rows[0]["V"]) == 5.0
    harness.write_series_csv([short_runs["p5"]], tmp_path / "s.csv", per_user=True)
    rows = list(csv.reader((tmp_path / "s.csv").open()))
    U = defaults.network.num_users
    assert rows[0] == ["t", "policy", "V", "PC_tot", "R_tot", "sum_Q"] + [f"Q_{u}" for u in range(U)]
    assert len(rows) == 121
    harness.write_json(tab.summary(), tmp_path / "s.json")
    assert json.loads((tmp_path / "s.json").read_text())["rows"][0]["V"] == 5.0
