"""Slot-by-slot episodes, V sweeps and policy comparisons."""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import csma
from .baselines import PolicyId, PolicyKind, pcmps_solve, zero_power_decide
from .core import NetworkConfig
from .env import EnvParams, QueueTrace, StabilityReport, sample_slot, stability_metric, update_queue
from .radio import aggregate
from .scheduler import ScaSettings, bound_constant_C0, schedule_slot

log = logging.getLogger(__name__)

REFERENCE_REDUCTION_PCT = 72.1  # power saving at equal delay reported for the original system


@dataclass
class RunMetrics:
    """Finite-horizon averages of one episode plus the per-slot series behind them.

    ``avg_queue`` is the mean per-user backlog in bits after each slot's update;
    ``avg_delay`` is ``avg_queue / avg_arrival`` in slots (Little's law).
    """

    policy: str
    V: float | None
    slots: int
    avg_power: float
    avg_rate: float
    avg_queue: float
    avg_delay: float
    avg_arrival: float
    power_series: np.ndarray
    rate_series: np.ndarray
    queue_history: np.ndarray  # (T, U) bits after each slot
    arrival_history: np.ndarray  # (T, U) bits
    served_history: np.ndarray  # (T, U) bits the allocation could carry
    infeasible_slot_count: int = 0
    solver_failure_count: int = 0
    C0_estimate: float | None = None  # in queue units squared
    stability: StabilityReport | None = None

    @property
    def queue_series(self) -> np.ndarray:
        return self.queue_history.sum(axis=1)

    def summary(self) -> dict:
        out = {
            "policy": self.policy,
            "V": self.V,
            "slots": self.slots,
            "avg_power_W": self.avg_power,
            "avg_rate_bps": self.avg_rate,
            "avg_queue_bits": self.avg_queue,
            "avg_delay_slots": self.avg_delay,
            "avg_arrival_bits": self.avg_arrival,
            "infeasible_slots": self.infeasible_slot_count,
            "solver_failures": self.solver_failure_count,
            "C0_estimate": self.C0_estimate,
        }
        if self.stability is not None:
            out["tail_slope_bits_per_slot"] = self.stability.slope_tail
        return out


def run_episode(
    cfg: NetworkConfig,
    env: EnvParams,
    policy: PolicyId,
    T: int,
    settings: ScaSettings | None = None,
) -> RunMetrics:
    """Simulate ``T`` slots of ``policy`` from empty queues.

    Every slot: draw the state, solve the coexistence fixed point of each SBS,
    decide, evaluate rates and power, then update the queues.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    settings = settings or ScaSettings()
    U = cfg.num_users
    wifi = csma.BackoffLadder(cfg.wifi_backoff)
    sbs = csma.BackoffLadder(cfg.sbs_backoff)
    Q = np.zeros(U)
    trace = QueueTrace(U)
    power = np.empty(T)
    rate = np.empty(T)
    arrivals = np.empty((T, U))
    served = np.empty((T, U))
    infeasible = failures = 0
    for t in range(T):
        state = sample_slot(env, cfg, t)
        p_suc = csma.success_probs(state.wifi_count, wifi, sbs)
        if policy.kind is PolicyKind.PROPOSED:
            dec = schedule_slot(state, Q, cfg, settings, p_suc=p_suc, V=policy.V)
            alloc = dec.allocation
            failures += dec.flagged
        elif policy.kind is PolicyKind.PCMPS:
            dec = pcmps_solve(state, state.arrivals, cfg, settings, p_suc=p_suc)
            alloc = dec.allocation
            infeasible += dec.flagged
        else:
            alloc = zero_power_decide(state, cfg)
        br = aggregate(alloc, state, cfg, p_suc)
        bits = br.user_rates * cfg.slot_length
        Q = update_queue(Q, bits, state.arrivals)
        trace.append(Q)
        power[t] = br.total_power
        rate[t] = br.total_rate
        arrivals[t] = state.arrivals
        served[t] = bits
    hist = trace.history
    avg_queue = float(hist.mean())
    avg_arrival = float(arrivals.mean())
    c0 = None
    if T >= 1000:
        unit = cfg.queue_unit_bits
        c0 = bound_constant_C0(arrivals / unit, served / unit)
    stab = stability_metric(hist) if T >= 100 else None
    return RunMetrics(
        policy=policy.label,
        V=policy.V,
        slots=T,
        avg_power=float(power.mean()),
        avg_rate=float(rate.mean()),
        avg_queue=avg_queue,
        avg_delay=avg_queue / avg_arrival if avg_arrival > 0 else 0.0,
        avg_arrival=avg_arrival,
        power_series=power,
        rate_series=rate,
        queue_history=hist,
        arrival_history=arrivals,
        served_history=served,
        infeasible_slot_count=infeasible,
        solver_failure_count=failures,
        C0_estimate=c0,
        stability=stab,
    )


def _run_job(args):
    return run_episode(*args)


def run_many(jobs, workers: int = 1) -> list[RunMetrics]:
    """Run ``(cfg, env, policy, T, settings)`` jobs, in worker processes if ``workers > 1``."""
    jobs = list(jobs)
    if workers <= 1 or len(jobs) <= 1:
        return [_run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_job, jobs))


# ---- trend fits ---------------------------------------------------------------


@dataclass(frozen=True)
class InverseFit:
    """Least-squares ``y = c0 + c1 / V``."""

    c0: float
    c1: float
    max_residual: float
    value_range: float

    @property
    def relative_residual(self) -> float:
        return self.max_residual / self.value_range if self.value_range > 0 else 0.0


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r2: float


def fit_inverse(V, y) -> InverseFit:
    V = np.asarray(V, dtype=float)
    y = np.asarray(y, dtype=float)
    X = np.column_stack([np.ones_like(V), 1.0 / V])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    return InverseFit(float(coef[0]), float(coef[1]), float(np.max(np.abs(resid))), float(np.ptp(y)))


def fit_linear(x, y) -> LinearFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return LinearFit(float(slope), float(intercept), r2)


def monotone_within(values, band: float, increasing: bool) -> bool:
    """True if no later value moves against the direction by more than ``band`` (relative)."""
    v = np.asarray(values, dtype=float)
    for i in range(len(v)):
        for j in range(i + 1, len(v)):
            if increasing and v[j] < v[i] * (1 - band):
                return False
            if not increasing and v[j] > v[i] * (1 + band):
                return False
    return True


@dataclass
class TradeoffRow:
    V: float
    avg_power: float
    avg_delay: float
    avg_queue: float
    stable: bool


@dataclass
class TradeoffTable:
    rows: list[TradeoffRow]
    runs: list[RunMetrics] = field(default_factory=list)
    seed: int | None = None
    slots: int | None = None

    @property
    def V(self) -> np.ndarray:
        return np.array([r.V for r in self.rows])

    @property
    def power(self) -> np.ndarray:
        return np.array([r.avg_power for r in self.rows])

    @property
    def delay(self) -> np.ndarray:
        return np.array([r.avg_delay for r in self.rows])

    def power_fit(self) -> InverseFit:
        return fit_inverse(self.V, self.power)

    def delay_fit(self) -> LinearFit:
        return fit_linear(self.V, self.delay)

    def power_monotone(self, band: float = 0.02) -> bool:
        return monotone_within(self.power, band, increasing=False)

    def delay_monotone(self, band: float = 0.0) -> bool:
        return monotone_within(self.delay, band, increasing=True)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["V", "avg_power_W", "avg_delay_slots", "avg_queue_bits", "stable"])
            for r in self.rows:
                w.writerow([f"{r.V:g}", f"{r.avg_power:.10g}", f"{r.avg_delay:.10g}", f"{r.avg_queue:.10g}", int(r.stable)])

    def summary(self) -> dict:
        out = {"seed": self.seed, "slots": self.slots, "rows": [r.__dict__ for r in self.rows]}
        if len(self.rows) >= 2:
            pf, df = self.power_fit(), self.delay_fit()
            out["power_fit"] = {
                "c0": pf.c0,
                "c1": pf.c1,
                "max_residual": pf.max_residual,
                "relative_residual": pf.relative_residual,
            }
            out["delay_fit"] = {"slope": df.slope, "intercept": df.intercept, "r2": df.r2}
            out["power_monotone_2pct"] = self.power_monotone()
            out["delay_monotone"] = self.delay_monotone()
        return out


def eps_slope(env: EnvParams) -> float:
    """Tail-slope threshold used to call a run stable: 1% of the mean arrival per slot."""
    return 0.01 * env.mean_arrival_bits


def table_from_runs(runs: list[RunMetrics], env: EnvParams) -> TradeoffTable:
    eps = eps_slope(env)
    rows = [
        TradeoffRow(
            V=float(m.V),
            avg_power=m.avg_power,
            avg_delay=m.avg_delay,
            avg_queue=m.avg_queue,
            stable=bool(m.stability is not None and m.stability.is_stable(eps)),
        )
        for m in runs
    ]
    return TradeoffTable(rows, list(runs), env.seed, runs[0].slots if runs else None)


def sweep_V(
    cfg: NetworkConfig,
    env: EnvParams,
    V_list,
    T: int,
    settings: ScaSettings | None = None,
    workers: int = 1,
) -> TradeoffTable:
    """One episode of the proposed policy per ``V``, all on the same random stream."""
    V_list = [float(v) for v in V_list]
    if not V_list:
        raise ValueError("V_list must not be empty")
    if any(b < a for a, b in zip(V_list, V_list[1:])):
        raise ValueError("V_list must be ascending")
    jobs = [(cfg, env, PolicyId.proposed(V), T, settings) for V in V_list]
    return table_from_runs(run_many(jobs, workers), env)


# ---- policy comparison -------------------------------------------------------------


@dataclass
class ComparisonReport:
    baseline: RunMetrics
    table: TradeoffTable
    matched_V: float | None
    matched_power: float | None
    matched_delay: float | None
    dominance_window: list[float]
    message: str = ""

    @property
    def power_ratio(self) -> float | None:
        if self.matched_power is None:
            return None
        return self.matched_power / self.baseline.avg_power

    @property
    def reduction_pct(self) -> float | None:
        r = self.power_ratio
        return None if r is None else 100.0 * (1.0 - r)

    def summary(self) -> dict:
        return {
            "baseline": self.baseline.summary(),
            "matched_V": self.matched_V,
            "matched_power_W": self.matched_power,
            "matched_delay_slots": self.matched_delay,
            "power_ratio": self.power_ratio,
            "power_reduction_pct": self.reduction_pct,
            "reference_reduction_pct": REFERENCE_REDUCTION_PCT,
            "dominance_window": self.dominance_window,
            "message": self.message,
            "baseline_tail_slope": None if self.baseline.stability is None else self.baseline.stability.slope_tail,
            "sweep": self.table.summary(),
        }


def compare(table: TradeoffTable, baseline: RunMetrics, delay_tol: float = 0.05) -> ComparisonReport:
    """Match the baseline's delay on the sweep and collect the dominance window.

    A sweep row within ``delay_tol`` (relative) of the baseline delay is the
    matched point (closest one wins).  Otherwise, if two neighbouring rows
    bracket the baseline delay, power is interpolated linearly in delay between
    them.  With neither, the report says "no matched-delay point".
    """
    d0, p0 = baseline.avg_delay, baseline.avg_power
    window = [r.V for r in table.rows if r.avg_power <= p0 and r.avg_delay <= d0]
    rows = table.rows
    msg = ""
    mV = mP = mD = None
    close = [r for r in rows if abs(r.avg_delay - d0) <= delay_tol * max(d0, 1e-12)]
    if close:
        best = min(close, key=lambda r: abs(r.avg_delay - d0))
        mV, mP, mD = best.V, best.avg_power, best.avg_delay
    else:
        for a, b in zip(rows, rows[1:]):
            lo, hi = sorted((a.avg_delay, b.avg_delay))
            if lo <= d0 <= hi and hi > lo:
                s = (d0 - a.avg_delay) / (b.avg_delay - a.avg_delay)
                mV = a.V + s * (b.V - a.V)
                mP = a.avg_power + s * (b.avg_power - a.avg_power)
                mD = d0
                msg = "matched point interpolated between sweep rows"
                break
        else:
            msg = "no matched-delay point"
    return ComparisonReport(baseline, table, mV, mP, mD, window, msg)


def compare_policies(
    cfg: NetworkConfig,
    env: EnvParams,
    V_list,
    T: int,
    settings: ScaSettings | None = None,
    baseline: PolicyId | None = None,
    workers: int = 1,
    table: TradeoffTable | None = None,
) -> ComparisonReport:
    """Sweep the proposed policy (unless ``table`` is given) and compare it with ``baseline`` (PCMPS by default)."""
    baseline = baseline or PolicyId.pcmps()
    jobs = [(cfg, env, baseline, T, settings)]
    if table is None:
        jobs += [(cfg, env, PolicyId.proposed(V), T, settings) for V in V_list]
    runs = run_many(jobs, workers)
    if table is None:
        table = table_from_runs(runs[1:], env)
    return compare(table, runs[0])


# ---- outputs -------------------------------------------------------------------------


def write_series_csv(runs: list[RunMetrics], path, per_user: bool = False) -> None:
    """Per-slot series of several runs: ``t, V, PC_tot, R_tot, sum_Q`` (+ ``Q_u`` columns)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        U = runs[0].queue_history.shape[1] if runs else 0
        head = ["t", "policy", "V", "PC_tot", "R_tot", "sum_Q"]
        if per_user:
            head += [f"Q_{u}" for u in range(U)]
        w.writerow(head)
        for m in runs:
            v = "" if m.V is None else f"{m.V:g}"
            for t in range(m.slots):
                row = [t, m.policy, v, f"{m.power_series[t]:.10g}", f"{m.rate_series[t]:.10g}",
                       f"{m.queue_history[t].sum():.10g}"]
                if per_user:
                    row += [f"{q:.10g}" for q in m.queue_history[t]]
                w.writerow(row)


def write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o)}")
