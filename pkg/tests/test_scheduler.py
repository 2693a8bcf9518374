import numpy as np
import pytest

from laa_dpp import csma
from laa_dpp.core import Allocation, NetworkConfig, SlotState, check_allocation
from laa_dpp.env import EnvParams, sample_slot
from laa_dpp.radio import aggregate
from laa_dpp.scheduler import (
    ScaSettings,
    bound_constant_C0,
    build_dc_objective,
    decide_allocation,
    drift_plus_penalty,
    heuristic_start,
    lyapunov_value,
    random_start,
    run_sca,
    schedule_slot,
    sca_step,
)

TINY = NetworkConfig(num_sbs=1, licensed_subcarriers=1, unlicensed_subcarriers=1, users_per_sbs=(1,))


def _p_suc(cfg, state):
    return csma.success_probs(
        state.wifi_count, csma.BackoffLadder(cfg.wifi_backoff), csma.BackoffLadder(cfg.sbs_backoff)
    )


@pytest.mark.parametrize("Q, expected", [([0.0], 0.0), ([3.0, 4.0], 12.5), ([1, 1, 1, 1], 2.0)])
def test_lyapunov_value(Q, expected):
    assert lyapunov_value(Q) == expected


@pytest.mark.parametrize(
    "V, pc, Q, R, expected",
    [(0.0, 50.0, [10], [5], -50.0), (2.0, 30.0, [0.0], [7.0], 60.0), (10.0, 27.0, [4, 6], [2, 3], 244.0)],
)
def test_drift_plus_penalty(V, pc, Q, R, expected):
    assert drift_plus_penalty(V, pc, Q, R) == expected


def test_drift_plus_penalty_rejects_negative_V():
    with pytest.raises(ValueError):
        drift_plus_penalty(-1.0, 27.0, [1.0], [1.0])


def test_bound_constant_examples():
    assert bound_constant_C0(np.zeros(1000), np.zeros(1000)) == 0.0
    assert bound_constant_C0(np.full(1000, 2.0), np.full(1000, 4.0)) == 10.0
    a = np.random.default_rng(0).poisson(3.0, 20000).astype(float)
    assert bound_constant_C0(a, np.zeros_like(a)) == pytest.approx(6.0, rel=0.05)
    with pytest.raises(ValueError):
        bound_constant_C0(np.zeros(999), np.zeros(999))


def _model(cfg, t=0, Q=None, V=5.0, mu=None, seed=2017):
    st = sample_slot(EnvParams(seed=seed), cfg, t)
    Q = np.full(cfg.num_users, 20e6) if Q is None else np.asarray(Q, dtype=float)
    return build_dc_objective(st, Q, cfg, _p_suc(cfg, st), V=V, mu=mu)


def test_zero_point_objective_is_static_power():
    cfg = NetworkConfig()
    m = _model(cfg, V=3.0)
    assert m.objective(np.zeros(2 * m.n_p)) == pytest.approx(3.0 * cfg.K * cfg.static_power)


def test_split_matches_rate_model_on_binary_points(rng):
    cfg = NetworkConfig(users_per_sbs=(1, 1, 1))
    for t in range(20):
        m = _model(cfg, t, Q=rng.uniform(0, 50e6, cfg.num_users), V=rng.uniform(0, 10))
        z = random_start(m, rng)
        x = (z[m.n_p :] > 0.2).astype(float)
        p = np.where(x > 0, z[: m.n_p], 0.0)
        zb = np.concatenate([p, x])
        assert m.objective(zb) == pytest.approx(m.p2_value(m.to_allocation(zb)), rel=1e-10, abs=1e-9)


def test_single_user_identity():
    m = _model(TINY, Q=[30e6], V=2.0)
    z = np.array([1.5, 0.1, 1.0, 1.0])
    assert m.objective(z) == pytest.approx(m.p2_value(m.to_allocation(z)), rel=1e-12)


def test_log_ratio_identity(rng):
    for _ in range(100):
        S, I, s2 = rng.uniform(0, 10, 3)
        s2 += 1e-3
        assert np.log(S + I + s2) - np.log(I + s2) == pytest.approx(np.log1p(S / (I + s2)), abs=1e-10)


def test_penalty_term():
    m = _model(NetworkConfig(), mu=7.0)
    z = np.concatenate([np.zeros(m.n_p), np.full(m.n_p, 0.5)])
    assert m.penalty_residual(z) == pytest.approx(0.25 * m.n_p)
    assert m.objective(z) - m.objective(np.zeros_like(z)) == pytest.approx(7.0 * 0.25 * m.n_p)


def _random_feasible(m, rng):
    return random_start(m, rng)


def test_gradient_of_g_central_differences(rng):
    cfg = NetworkConfig(num_sbs=2, licensed_subcarriers=2, unlicensed_subcarriers=2, users_per_sbs=(1, 1))
    for t in range(100):
        m = _model(cfg, t, Q=rng.uniform(1e6, 50e6, 2))
        z = _random_feasible(m, rng)
        g = m.grad_g(z)
        h = 1e-6
        fd = np.array([(m.g(z + h * e) - m.g(z - h * e)) / (2 * h) for e in np.eye(len(z))])
        assert np.linalg.norm(fd - g) <= 1e-5 * max(1.0, np.linalg.norm(g))


def test_f_and_g_midpoint_convex(rng):
    cfg = NetworkConfig(users_per_sbs=(2, 1, 1))
    for t in range(30):
        m = _model(cfg, t, Q=rng.uniform(0, 50e6, cfg.num_users))
        a, b = _random_feasible(m, rng), _random_feasible(m, rng)
        mid = 0.5 * (a + b)
        for fn in (m.f, m.g):
            assert fn(mid) <= 0.5 * (fn(a) + fn(b)) + 1e-9 * max(1.0, abs(fn(mid)))


def test_surrogate_majorises_and_touches(rng):
    cfg = NetworkConfig(users_per_sbs=(1, 1, 1))
    m = _model(cfg, 4)
    a = _random_feasible(m, rng)
    assert m.surrogate(a, a) == pytest.approx(m.objective(a), rel=1e-12)
    for _ in range(20):
        b = _random_feasible(m, rng)
        assert m.surrogate(b, a) >= m.objective(b) - 1e-9 * abs(m.objective(b))


def test_sca_step_descends_and_stays_feasible(rng):
    cfg = NetworkConfig(users_per_sbs=(1, 1, 1))
    for t in range(10):
        m = _model(cfg, t)
        z = heuristic_start(m)
        for _ in range(5):
            z_new = sca_step(m, z)
            assert m.objective(z_new) <= m.objective(z) + 1e-8 * max(1.0, abs(m.objective(z)))
            p = z_new[: m.n_p]
            x = z_new[m.n_p :]
            assert np.all(p >= 0) and np.all(p <= x * m.big_m + 1e-9)
            assert np.all((x >= 0) & (x <= 1))
            z = z_new


def test_sca_fixed_point_returns_previous_point():
    m = _model(TINY, 1)
    z, _ = run_sca(m, heuristic_start(m), ScaSettings())
    z2 = sca_step(m, z)
    assert abs(m.objective(z2) - m.objective(z)) <= 1e-6 * max(1.0, abs(m.objective(z)))


def test_rate_maximisation_hits_the_power_cap():
    cfg = TINY.replace(unlicensed_subcarriers=0, interference_cap=1e6)
    st = sample_slot(EnvParams(), cfg, 0)
    dec = schedule_slot(st, [50e6], cfg, p_suc=_p_suc(cfg, st), V=0.0)
    assert dec.allocation.p_c[0, 0] == pytest.approx(cfg.total_power_cap, rel=1e-6)


def test_empty_queues_give_zero_allocation():
    cfg = NetworkConfig()
    st = sample_slot(EnvParams(), cfg, 0)
    alloc = decide_allocation(st, np.zeros(cfg.num_users), cfg, V=5.0)
    assert alloc.is_zero


def test_large_backlog_saturates_both_caps():
    cfg = TINY.replace(interference_cap=1e6)
    st = SlotState(0, np.ones((1, 1, 1)), np.ones((1, 1)), np.full((1, 1), 0.01), np.zeros(1), np.array([1]))
    alloc = decide_allocation(st, [1e12], cfg, V=0.1)
    p_u = alloc.p_u.sum()
    assert p_u == pytest.approx(cfg.unlicensed_power_cap, rel=0.01)
    assert alloc.p_c.sum() + p_u == pytest.approx(cfg.total_power_cap, rel=0.01)


def test_allocations_always_satisfy_constraints(defaults):
    cfg = defaults.network
    env = defaults.env
    rng = np.random.default_rng(8)
    for t in range(1000):
        st = sample_slot(env, cfg, t)
        Q = rng.uniform(0, 1, cfg.num_users) * rng.choice([1e6, 2e7, 2e8])
        dec = schedule_slot(st, Q, cfg, p_suc=_p_suc(cfg, st), V=float(rng.choice([1.0, 5.0, 40.0])))
        assert check_allocation(dec.allocation, st, cfg) == [], t
        assert not dec.flagged


def test_solver_failure_falls_back_to_zero(monkeypatch):
    from laa_dpp import scheduler
    from laa_dpp.solver import SolverError

    def boom(*a, **k):
        raise SolverError("forced")

    monkeypatch.setattr(scheduler, "solve", boom)
    cfg = NetworkConfig()
    st = sample_slot(EnvParams(), cfg, 0)
    dec = schedule_slot(st, np.full(cfg.num_users, 1e7), cfg)
    assert dec.flagged and dec.allocation.is_zero


def test_decision_is_deterministic():
    cfg = NetworkConfig(users_per_sbs=(1, 2, 1))
    st = sample_slot(EnvParams(), cfg, 11)
    Q = np.linspace(1e6, 4e7, cfg.num_users)
    a = decide_allocation(st, Q, cfg)
    b = decide_allocation(st, Q, cfg)
    assert np.array_equal(a.p_c, b.p_c) and np.array_equal(a.p_u, b.p_u)


def test_rounding_changes_p2_little(defaults):
    cfg = defaults.network
    rng = np.random.default_rng(5)
    for t in range(30):
        st = sample_slot(defaults.env, cfg, t)
        Q = rng.uniform(1e6, 5e7, cfg.num_users)
        dec = schedule_slot(st, Q, cfg, p_suc=_p_suc(cfg, st), V=5.0)
        # the returned binary allocation is never worse than 1% above the relaxed optimum
        assert dec.objective <= dec.relaxed_objective + 0.01 * abs(dec.relaxed_objective)


def test_zero_allocation_p2_value():
    cfg = NetworkConfig()
    st = sample_slot(EnvParams(), cfg, 0)
    m = build_dc_objective(st, np.ones(cfg.num_users), cfg, _p_suc(cfg, st), V=2.0)
    br = aggregate(Allocation.zeros(cfg), st, cfg, _p_suc(cfg, st))
    assert m.p2_value(Allocation.zeros(cfg)) == 2.0 * br.total_power


def test_fixed_assignment_problem_tracks_surrogate(rng):
    """On any active subset the power subproblem differs from the SCA surrogate by a constant."""
    cfg = NetworkConfig(users_per_sbs=(1, 2, 1))
    for t in range(10):
        m = _model(cfg, t, Q=rng.uniform(1e6, 5e7, cfg.num_users))
        active = rng.random(m.n_p) < 0.5
        active[0] = True
        x = active.astype(float)
        z_prev = np.concatenate([np.where(active, random_start(m, rng)[: m.n_p], 0.0), x])
        prob, idx = m.p_problem(z_prev[: m.n_p], active)
        offsets = []
        for _ in range(3):
            p = np.zeros(m.n_p)
            p[idx] = rng.uniform(0, 1, len(idx)) * prob.interior
            offsets.append(prob.objective.value(p[idx]) - m.surrogate(np.concatenate([p, x]), z_prev))
        assert np.ptp(offsets) <= 1e-8 * max(1.0, abs(offsets[0]))
