"""Reference policies: per-slot power minimisation (PCMPS) and the all-off policy.

PCMPS ignores the queues: every slot it looks for the cheapest allocation whose
per-user rate covers that slot's arrivals.  The assignment comes from the
rate-maximising (``V = 0``) scheduler weighted by the arrivals; powers are then
minimised with the assignment fixed.  The licensed rate constraint is a
difference of concave logs, so each SCA step replaces the interference log by
its tangent, which under-estimates the rate and keeps every iterate feasible.
If the rate-maximising allocation cannot cover the arrivals the slot is
flagged and that allocation is used as is.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from . import csma
from .core import Allocation, NetworkConfig, SlotState
from .radio import aggregate
from .scheduler import LN2, DcObjective, ScaSettings, schedule_slot
from .solver import ConvexProblem, LogAffine, SolverError, solve

log = logging.getLogger(__name__)


class PolicyKind(enum.Enum):
    PROPOSED = "proposed"
    PCMPS = "pcmps"
    ZERO_POWER = "zero"


@dataclass(frozen=True)
class PolicyId:
    kind: PolicyKind
    V: float | None = None

    def __post_init__(self):
        if self.kind is PolicyKind.PROPOSED:
            if self.V is None or self.V < 0:
                raise ValueError("the proposed policy needs V >= 0")
        elif self.V is not None:
            raise ValueError(f"{self.kind.value} takes no V")

    @classmethod
    def proposed(cls, V: float) -> "PolicyId":
        return cls(PolicyKind.PROPOSED, float(V))

    @classmethod
    def pcmps(cls) -> "PolicyId":
        return cls(PolicyKind.PCMPS)

    @classmethod
    def zero_power(cls) -> "PolicyId":
        return cls(PolicyKind.ZERO_POWER)

    @classmethod
    def parse(cls, text: str, V: float | None = None) -> "PolicyId":
        """``"proposed"`` (needs ``V``), ``"proposed:5"``, ``"pcmps"`` or ``"zero"``."""
        name, _, arg = text.strip().lower().partition(":")
        if name == "proposed":
            if arg:
                V = float(arg)
            if V is None:
                raise ValueError("proposed policy needs a V value")
            return cls.proposed(V)
        if name == "pcmps":
            return cls.pcmps()
        if name in ("zero", "zeropower", "zero_power"):
            return cls.zero_power()
        raise ValueError(f"unknown policy {text!r}")

    @property
    def label(self) -> str:
        if self.kind is PolicyKind.PROPOSED:
            return f"proposed(V={self.V:g})"
        return self.kind.value


@dataclass
class BaselineDecision:
    allocation: Allocation
    flagged: bool = False
    note: str = ""


def zero_power_decide(state: SlotState, cfg: NetworkConfig) -> Allocation:
    return Allocation.zeros(cfg)


def _rate_floor(model: DcObjective, u: int, need: float, idx, p_ref, with_scale: bool = False) -> LogAffine:
    """Convex constraint ``need - (lower bound of user u's service) <= 0``.

    Service is measured in ``c * log2`` units, the constraint in natural logs.
    The interference log ``log(I + sigma2)`` is replaced by its tangent at
    ``p_ref``, which over-estimates it and so under-estimates the rate (the
    bound is tight at ``p_ref``).  With ``with_scale`` an extra last variable
    ``t`` multiplies ``need``.
    """
    n = len(idx)
    m = n + 1 if with_scale else n
    col = np.full(model.n_p, -1)
    col[idx] = np.arange(n)
    U = model.U
    p_c_ref = p_ref[: model.n_pc].reshape(model.L, U)
    lin = np.zeros(m)
    const = 0.0
    if with_scale:
        lin[-1] = need * LN2 / model.c
    else:
        const = need * LN2 / model.c
    F, d, w = [], [], []
    for l in range(model.L):
        if col[l * U + u] < 0:
            continue
        cols = col[l * U : (l + 1) * U]
        on = cols >= 0
        row = np.zeros(m)
        row[cols[on]] = model.Mfull[l, u, on]
        F.append(row)
        d.append(model.sigma2)
        w.append(1.0)
        i0 = float(model.M[l, u] @ p_c_ref[l]) + model.sigma2
        lin[cols[on]] += model.M[l, u, on] / i0
        const += np.log(i0) - 1.0 + model.sigma2 / i0
    for wi in range(model.W):
        j = col[model.n_pc + wi * U + u]
        if j < 0 or model.w_u[wi, u] <= 0:
            continue
        row = np.zeros(m)
        row[j] = model.g_u[wi, u] / model.sigma2
        F.append(row)
        d.append(1.0)
        w.append(model.w_u[wi, u])
    return LogAffine(lin, np.array(F).reshape(len(F), m), np.array(d), np.array(w), const)


def _rates_bits(alloc: Allocation, state: SlotState, cfg: NetworkConfig, p_suc) -> np.ndarray:
    return aggregate(alloc, state, cfg, p_suc).user_rates * cfg.slot_length


def pcmps_solve(
    state: SlotState,
    arrivals,
    cfg: NetworkConfig,
    settings: ScaSettings | None = None,
    p_suc=None,
    margin: float = 1e-6,
) -> BaselineDecision:
    """PCMPS decision with the infeasibility flag.

    ``arrivals`` are bits for this slot.  The assignment is taken from the
    arrival-weighted rate-maximising scheduler.  A first SCA phase maximises
    the common fraction ``t`` of the arrivals every user can be served; if it
    stays below 1 the slot is flagged and the rate-maximising allocation is
    returned.  Otherwise a second phase minimises power from that point.
    Rates are targeted with a relative ``margin`` so the returned allocation
    covers the arrivals exactly after negligible powers are zeroed.
    """
    settings = settings or ScaSettings()
    a_bits = np.asarray(arrivals, dtype=float)
    if not np.any(a_bits > 0):
        return BaselineDecision(Allocation.zeros(cfg), note="no arrivals")
    if p_suc is None:
        p_suc = csma.success_probs(
            state.wifi_count, csma.BackoffLadder(cfg.wifi_backoff), csma.BackoffLadder(cfg.sbs_backoff)
        )
    cand = schedule_slot(state, a_bits, cfg, settings, p_suc=p_suc, V=0.0)
    fallback = cand.allocation
    model = DcObjective(state, np.ones(cfg.num_users), cfg, p_suc, V=1.0, mu=1.0)
    need = a_bits * (1 + margin) / cfg.queue_unit_bits
    active = _assignment(model, model.from_allocation(fallback)[model.n_p :], need)
    user_of = np.concatenate([np.tile(np.arange(model.U), model.L), np.tile(np.arange(model.U), model.W)])
    served = np.bincount(user_of[active], minlength=model.U) > 0
    if cand.flagged or np.any((need > 0) & ~served):
        return BaselineDecision(fallback, flagged=True, note="arrivals exceed the achievable rate")
    try:
        p = _max_common_fraction(model, active, need, settings)
        if p is None:
            return BaselineDecision(fallback, flagged=True, note="arrivals exceed the achievable rate")
        p = _min_power(model, p, active, need, settings)
    except SolverError as exc:
        log.debug("slot %d: PCMPS power minimisation failed (%s)", state.t, exc)
        return BaselineDecision(fallback, flagged=True, note=f"power minimisation failed: {exc}")
    p = np.where(p <= 1e-9, 0.0, p)
    out = model.to_allocation(np.concatenate([p, (p > 0).astype(float)]))
    if np.any(_rates_bits(out, state, cfg, p_suc) < a_bits):
        return BaselineDecision(fallback, flagged=True, note="rate check failed after power minimisation")
    return BaselineDecision(out)


def _assignment(model: DcObjective, x, need):
    """Candidate assignment restricted to users with arrivals; empty groups go to the best such user.

    A group (one SBS on one subcarrier) is scored by ``need * gain``; powers can
    still drop to zero later, so a spare assignment never hurts feasibility.
    """
    U = model.U
    g_own = model.Mfull[:, np.arange(U), np.arange(U)]
    gain = np.concatenate([g_own.ravel(), (model.w_u * model.g_u).ravel()])
    user_of = np.concatenate([np.tile(np.arange(U), model.L), np.tile(np.arange(U), model.W)])
    wanted = need[user_of] > 0
    active = (x > 0) & wanted
    for grp in model.groups():
        if active[grp].any():
            continue
        score = np.where(wanted[grp], need[user_of[grp]] * gain[grp], -np.inf)
        j = int(np.argmax(score))
        if np.isfinite(score[j]) and score[j] > 0:
            active[grp[j]] = True
    return active


def _floor_problem(model: DcObjective, p_ref, active, need, with_scale=False) -> ConvexProblem:
    base, idx = model.p_problem(p_ref, active, objective=False)
    n = len(idx)
    user_of = np.where(idx < model.n_pc, idx % model.U, (idx - model.n_pc) % model.U)
    cons, names = [], []
    for u in range(model.U):
        if need[u] > 0 and np.any(user_of == u):
            cons.append(_rate_floor(model, u, need[u], idx, p_ref, with_scale))
            names.append(f"rate[{u}]")
    if not with_scale:
        return ConvexProblem(
            base.objective, base.A, base.b, base.row_names, lower=base.lower, lower_names=base.lower_names,
            constraints=cons, constraint_names=names,
        )
    obj = LogAffine(np.concatenate([np.zeros(n), [-1.0]]))
    A = np.hstack([base.A, np.zeros((base.A.shape[0], 1))])
    return ConvexProblem(
        obj, A, base.b, base.row_names, lower=np.zeros(n + 1), lower_names=base.lower_names + ["t"],
        constraints=cons, constraint_names=names,
    )


def _max_common_fraction(model: DcObjective, active, need, settings: ScaSettings):
    """Phase one: SCA on ``max t`` with every rate floor scaled by ``t``.

    Returns powers meeting every floor strictly, or ``None`` when the SCA
    settles below ``t = 1``.
    """
    idx = np.flatnonzero(active)
    prob0, _ = model.p_problem(np.zeros(model.n_p), active, objective=False)
    p = np.zeros(model.n_p)
    p[idx] = prob0.interior
    t = None
    for _ in range(settings.max_outer_iters):
        prob = _floor_problem(model, p, active, need, with_scale=True)
        if t is None:
            # largest t the start supports, halved to stay strictly inside
            zero_t = np.concatenate([p[idx], [0.0]])
            slack = np.array([-h.value(zero_t) for h in prob.constraints])
            per_unit = np.array([h.c[-1] for h in prob.constraints])
            t = 0.5 * float(np.min(slack / per_unit))
            if t <= 0:
                raise SolverError("interior start serves no rate")
        res = solve(prob, np.concatenate([p[idx], [t]]), tol=settings.solver_tol)
        p_new = np.zeros_like(p)
        p_new[idx] = res.z[:-1]
        t_new = float(res.z[-1])
        p = p_new
        if t_new > 1.0:
            return p
        # give up once an iteration closes less than 0.1% of the remaining gap
        if t_new - t <= 1e-3 * (1.0 - t_new):
            return None
        t = t_new
    return None


def _min_power(model: DcObjective, p, active, need, settings: ScaSettings):
    """Phase two: SCA on ``min xi . p`` subject to budgets and the rate floors."""
    idx = np.flatnonzero(active)
    prev = None
    for _ in range(settings.max_outer_iters):
        prob = _floor_problem(model, p, active, need)
        res = solve(prob, p[idx], tol=settings.solver_tol)
        p_new = np.zeros_like(p)
        p_new[idx] = res.z
        val = float(prob.objective.value(res.z))
        p = p_new
        if prev is not None and prev - val <= settings.objective_tol * max(1.0, abs(val)):
            break
        prev = val
    return p


def pcmps_decide(
    state: SlotState, arrivals, cfg: NetworkConfig, settings: ScaSettings | None = None, p_suc=None
) -> Allocation:
    return pcmps_solve(state, arrivals, cfg, settings, p_suc).allocation
