"""Per-slot drift-plus-penalty scheduler solved as a penalised D.C. program.

Each slot minimises ``V * PC_tot - sum_u Q_u R_u`` over subcarrier
assignments ``x`` and powers ``p``.  Binary ``x`` is relaxed to ``[0, 1]`` with
the penalty ``mu * sum(x - x**2)``, power is tied to assignment by
``0 <= p <= x * big_m`` and the objective is split as ``f - g`` with both parts
convex.  Successive convex approximation linearises ``g`` at the previous
iterate and solves the convex remainder with the barrier solver.

Queues and service enter the objective in ``cfg.queue_unit_bits`` units
(Mbit by default), so ``V`` is measured against ``W * Mbit**-2``.

The full relaxed decision vector is ``z = [p_c, p_u, x_c, x_u]`` (each raveled
row-major from its ``(L, U)`` or ``(W, U)`` array).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import csma
from .core import Allocation, NetworkConfig, SlotState
from .radio import aggregate
from .solver import ConvexProblem, LogAffine, SolverError, solve

log = logging.getLogger(__name__)

LN2 = np.log(2.0)


@dataclass(frozen=True)
class ScaSettings:
    max_outer_iters: int = 50
    objective_tol: float = 1e-6
    rounding_threshold: float = 0.5
    penalty: float | None = None  # None -> cfg.effective_penalty(V)
    restart_count: int = 3
    penalty_doublings: int = 4
    penalty_residual_tol: float = 1e-3
    solver_tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.objective_tol <= 0 or self.solver_tol <= 0:
            raise ValueError("tolerances must be positive")
        if not (0 < self.rounding_threshold < 1):
            raise ValueError("rounding_threshold must lie in (0, 1)")


def lyapunov_value(Q) -> float:
    Q = np.asarray(Q, dtype=float)
    return 0.5 * float(np.sum(Q**2))


def drift_plus_penalty(V: float, pc_tot: float, Q, R) -> float:
    """Decision-dependent part of the drift-plus-penalty bound."""
    if V < 0:
        raise ValueError("V must be non-negative")
    return V * pc_tot - float(np.dot(Q, R))


def bound_constant_C0(arrivals, services, min_samples: int = 1000) -> float:
    """Empirical ``0.5 * sum_u (E[A_u^2] + E[R_u^2])`` from ``(T, U)`` samples."""
    A = np.atleast_2d(np.asarray(arrivals, dtype=float).T).T
    R = np.atleast_2d(np.asarray(services, dtype=float).T).T
    if A.shape[0] < min_samples or R.shape[0] < min_samples:
        raise ValueError(f"need at least {min_samples} slots of samples")
    return 0.5 * float(np.sum(np.mean(A**2, axis=0) + np.mean(R**2, axis=0)))


class DcObjective:
    """Penalised relaxed slot problem with its convex split ``f - g``.

    ``q`` is the backlog in queue units, ``p_suc`` the airtime share of every SBS.
    """

    def __init__(self, state: SlotState, q, cfg: NetworkConfig, p_suc, V: float, mu: float):
        self.cfg = cfg
        self.state = state
        self.V = float(V)
        self.mu = float(mu)
        self.q = np.asarray(q, dtype=float)
        self.p_suc = np.asarray(p_suc, dtype=float)
        owner = cfg.owner
        L, W, U = cfg.L, cfg.W, cfg.num_users
        self.L, self.W, self.U = L, W, U
        self.n_pc, self.n_pu = L * U, W * U
        self.n_p = self.n_pc + self.n_pu
        self.c = cfg.bits_per_hz_slot
        self.sigma2 = cfg.noise_power
        # per-entry coupling constant of p <= x * big_m
        self.big_m = np.concatenate(
            [np.full(self.n_pc, cfg.effective_big_m), np.full(self.n_pu, cfg.effective_big_m_unlicensed)]
        )
        # Mfull[l, u, v]: gain of v's transmission at receiver u (own link on the diagonal,
        # zero for other users of the same SBS); M drops the diagonal.
        g = state.gains_licensed[:, owner, :].transpose(0, 2, 1)  # [l, u, v] = G[l, owner v, u]
        same = owner[:, None] == owner[None, :]
        eye = np.eye(U, dtype=bool)
        self.M = np.where(same, 0.0, g)
        self.Mfull = self.M + np.where(eye, g, 0.0)
        self.g_u = state.gains_unlicensed
        self.h_macro = state.gains_macro[:, owner]  # (L, U)
        self.w_u = self.p_suc[owner][None, :] * np.ones((W, 1))  # (W, U) airtime share
        self._groups = None
        self._structures = {}

    # ---- layout -------------------------------------------------------
    def split(self, z):
        n_pc, n_p = self.n_pc, self.n_p
        p_c = z[:n_pc].reshape(self.L, self.U)
        p_u = z[n_pc:n_p].reshape(self.W, self.U)
        x_c = z[n_p : n_p + n_pc].reshape(self.L, self.U)
        x_u = z[n_p + n_pc :].reshape(self.W, self.U)
        return p_c, p_u, x_c, x_u

    @staticmethod
    def join(p_c, p_u, x_c, x_u):
        return np.concatenate([np.ravel(p_c), np.ravel(p_u), np.ravel(x_c), np.ravel(x_u)])

    def to_allocation(self, z) -> Allocation:
        p_c, p_u, x_c, x_u = self.split(z)
        return Allocation(x_c.copy(), x_u.copy(), p_c.copy(), p_u.copy())

    def from_allocation(self, a: Allocation):
        return self.join(a.p_c, a.p_u, a.x_c, a.x_u)

    # ---- objective pieces ----------------------------------------------
    def _lic_logs(self, p_c):
        """``(log(S + I + sigma2), log(I + sigma2))`` per (l, u)."""
        full = np.einsum("luv,lv->lu", self.Mfull, p_c) + self.sigma2
        intf = np.einsum("luv,lv->lu", self.M, p_c) + self.sigma2
        return np.log(full), np.log(intf)

    def service(self, p_c, p_u):
        """Per-user service in queue units per slot (power-only form, ``x`` absorbed)."""
        lf, li = self._lic_logs(p_c)
        r_c = self.c * (lf - li) / LN2
        r_u = self.c * self.w_u * np.log1p(np.maximum(p_u, 0) * self.g_u / self.sigma2) / LN2
        return r_c.sum(axis=0) + r_u.sum(axis=0)

    def power(self, p_c, p_u) -> float:
        cfg = self.cfg
        return (
            cfg.K * cfg.static_power
            + cfg.amplifier_coeff_licensed * p_c.sum()
            + cfg.amplifier_coeff_unlicensed * p_u.sum()
        )

    def f(self, z) -> float:
        p_c, p_u, x_c, x_u = self.split(z)
        lf, _ = self._lic_logs(p_c)
        lic = self.c / LN2 * float(np.sum(self.q[None, :] * lf))
        r_u = self.c * self.w_u * np.log1p(p_u * self.g_u / self.sigma2) / LN2
        unl = float(np.sum(self.q[None, :] * r_u))
        return self.V * self.power(p_c, p_u) - lic - unl + self.mu * (x_c.sum() + x_u.sum())

    def g(self, z) -> float:
        p_c, _, x_c, x_u = self.split(z)
        _, li = self._lic_logs(p_c)
        lic = self.c / LN2 * float(np.sum(self.q[None, :] * li))
        return -lic + self.mu * (np.sum(x_c**2) + np.sum(x_u**2))

    def grad_g(self, z) -> np.ndarray:
        p_c, p_u, x_c, x_u = self.split(z)
        intf = np.einsum("luv,lv->lu", self.M, p_c) + self.sigma2
        wts = self.c / LN2 * self.q[None, :] / intf  # (L, U) over receivers u
        d_pc = -np.einsum("lu,luv->lv", wts, self.M)
        return self.join(d_pc, np.zeros_like(p_u), 2 * self.mu * x_c, 2 * self.mu * x_u)

    def objective(self, z) -> float:
        """Penalised relaxed objective ``f - g``."""
        return self.f(z) - self.g(z)

    def penalty_residual(self, z) -> float:
        _, _, x_c, x_u = self.split(z)
        return float(np.sum(x_c - x_c**2) + np.sum(x_u - x_u**2))

    def p2_value(self, alloc: Allocation) -> float:
        """Drift-plus-penalty objective of a (binary) allocation via the rate model."""
        br = aggregate(alloc, self.state, self.cfg, self.p_suc)
        served = br.user_rates * self.cfg.slot_length / self.cfg.queue_unit_bits
        return drift_plus_penalty(self.V, br.total_power, self.q, served)

    # ---- groups -------------------------------------------------------
    def groups(self):
        """Index lists (into the p-part of ``z``) of the users of one SBS on one subcarrier."""
        if self._groups is None:
            owner = self.cfg.owner
            out = []
            for k in range(self.cfg.K):
                users = np.flatnonzero(owner == k)
                for l in range(self.L):
                    out.append(l * self.U + users)
                for w in range(self.W):
                    out.append(self.n_pc + w * self.U + users)
            self._groups = out
        return self._groups

    # ---- convex subproblems over p ---------------------------------------
    def p_problem(self, p_prev, active, extra_cost=None, objective=True):
        """Convex problem over the active power entries.

        With ``objective`` the cost is the SCA surrogate of the power part
        (``g`` linearised at ``p_prev``) plus ``extra_cost``; otherwise just the
        amplifier-weighted power (used by the per-slot power minimisation baseline).
        Returns ``(ConvexProblem, idx)`` where ``idx`` maps problem variables to
        entries of the full power vector.
        """
        active = np.asarray(active, dtype=bool)
        st = self._structure(active)
        idx, is_lic = st["idx"], st["is_lic"]
        if objective:
            cost = self.V * st["xi"]
            p_c_prev = p_prev[: self.n_pc].reshape(self.L, self.U)
            intf = np.einsum("luv,lv->lu", self.M, p_c_prev) + self.sigma2
            wts = self.c / LN2 * self.q[None, :] / intf
            grad_int = np.einsum("lu,luv->lv", wts, self.M).ravel()  # = -dg/dp_c
            cost = cost + np.where(is_lic, grad_int[np.where(is_lic, idx, 0)], 0.0)
            if extra_cost is not None:
                cost = cost + extra_cost[idx]
            obj = LogAffine(cost, st["F"], st["d"], st["w"])
        else:
            obj = LogAffine(st["xi"])
        prob = ConvexProblem(
            obj, st["A"], st["b"], st["names"], lower=np.zeros(len(idx)), interior=st["interior"].copy(),
            lower_names=st["lower_names"],
        )
        return prob, idx

    def _structure(self, active):
        """Parts of ``p_problem`` that depend only on the active pattern (cached)."""
        key = active.tobytes()
        cached = self._structures.get(key)
        if cached is not None:
            return cached
        cfg = self.cfg
        idx = np.flatnonzero(active)
        n = len(idx)
        L, U = self.L, self.U
        is_lic = idx < self.n_pc
        xi = np.where(is_lic, cfg.amplifier_coeff_licensed, cfg.amplifier_coeff_unlicensed)
        user_of = np.where(is_lic, idx % U, (idx - self.n_pc) % U)
        unl_idx = idx[~is_lic]
        # licensed log terms log(S + I + sigma2), one per (l, u) with a positive queue.
        # A receiver that is not active itself still keeps its log(I + sigma2)
        # term, which cancels the linearised interference term of g.
        col_of = np.full(self.n_p, -1)
        col_of[idx] = np.arange(n)
        rows_lu = np.flatnonzero(np.tile(self.q > 0, L))
        F_lic = np.zeros((len(rows_lu), n))
        for r, i in enumerate(rows_lu):
            l, u = divmod(int(i), U)
            cols = col_of[l * U : (l + 1) * U]
            on = cols >= 0
            F_lic[r, cols[on]] = self.Mfull[l, u, on]
        used = F_lic.any(axis=1)
        rows_lu, F_lic = rows_lu[used], F_lic[used]
        w_lic = self.c / LN2 * self.q[rows_lu % U]
        # unlicensed log terms
        wi, uu = divmod(unl_idx - self.n_pc, U)
        keep = (self.q[uu] > 0) & (self.w_u[wi, uu] > 0)
        F_unl = np.zeros((int(keep.sum()), n))
        F_unl[np.arange(F_unl.shape[0]), col_of[unl_idx[keep]]] = self.g_u[wi[keep], uu[keep]] / self.sigma2
        w_unl = self.c / LN2 * self.q[uu[keep]] * self.w_u[wi[keep], uu[keep]]

        rows, b, names = [], [], []
        sbs_of = cfg.owner[user_of]
        for k in range(cfg.K):
            mine = sbs_of == k
            if np.any(mine):
                rows.append(mine.astype(float))
                b.append(cfg.total_power_cap)
                names.append(f"C2[{k}]")
            unl = mine & ~is_lic
            if np.any(unl):
                rows.append(unl.astype(float))
                b.append(cfg.unlicensed_power_cap)
                names.append(f"C3[{k}]")
        lic_sub = np.where(is_lic, idx // U, -1)
        for l in range(L):
            on_l = lic_sub == l
            if np.any(on_l):
                row = np.zeros(n)
                row[on_l] = self.h_macro[l, user_of[on_l]]
                rows.append(row)
                b.append(cfg.interference_cap)
                names.append(f"C4[{l}]")
        A = np.array(rows).reshape(len(rows), n)
        b = np.array(b)
        st = {
            "idx": idx,
            "is_lic": is_lic,
            "xi": xi,
            "F": np.vstack([F_lic, F_unl]),
            "d": np.concatenate([np.full(len(rows_lu), self.sigma2), np.ones(F_unl.shape[0])]),
            "w": np.concatenate([w_lic, w_unl]),
            "A": A,
            "b": b,
            "names": names,
            "interior": self._interior(A, b, n),
            "lower_names": [f"C6[{i}]" for i in idx],
        }
        for v in st.values():
            if isinstance(v, np.ndarray):
                v.flags.writeable = False
        self._structures[key] = st
        return st

    @staticmethod
    def _interior(A, b, n):
        ones = np.ones(n)
        load = A @ ones
        pos = load > 0
        delta = 0.5 * np.min(b[pos] / load[pos]) if np.any(pos) else 1.0
        return delta * ones

    # ---- x elimination ---------------------------------------------------
    def x_costs(self, x_prev):
        """Linear power cost and constant left after minimising the surrogate over ``x``.

        In the surrogate each ``x_i`` has coefficient ``a_i = mu (1 - 2 x_prev_i)``
        and is constrained by ``x_i >= p_i / big_m`` and ``sum_group x <= 1``.
        For fixed ``p`` the minimum is ``sum_i (a_i - m) p_i / big_m + m`` with
        ``m = min(0, min_group a)``.
        """
        a = self.mu * (1.0 - 2.0 * x_prev)
        cost = np.zeros(self.n_p)
        const = 0.0
        for grp in self.groups():
            m = min(0.0, float(a[grp].min()))
            cost[grp] = (a[grp] - m) / self.big_m[grp]
            const += m
        return cost, const

    def x_from_p(self, p, x_prev):
        """Minimising ``x`` for fixed ``p`` (ties go to the lowest user index)."""
        a = self.mu * (1.0 - 2.0 * x_prev)
        x = p / self.big_m
        for grp in self.groups():
            j = int(np.argmin(a[grp]))
            if a[grp][j] < 0:
                x[grp[j]] += max(0.0, 1.0 - x[grp].sum())
        return np.clip(x, 0.0, 1.0)

    def surrogate(self, z, z_prev) -> float:
        """Convex upper bound of ``objective`` built at ``z_prev`` (tight there)."""
        return self.f(z) - self.g(z_prev) - float(self.grad_g(z_prev) @ (z - z_prev))


@dataclass
class Decision:
    allocation: Allocation
    objective: float  # drift-plus-penalty value of the returned allocation
    relaxed_objective: float
    penalty_residual: float
    iterations: int
    restarts_used: int
    penalty: float
    trajectory: list[float] = field(default_factory=list)  # P3 values of the kept run
    trajectories: list[list[float]] = field(default_factory=list)
    flagged: bool = False
    note: str = ""


def sca_step(model: DcObjective, z_prev, tol: float = 1e-8):
    """One majorise-minimise step over the relaxed set.

    Returns ``z_prev`` unchanged if the solved surrogate is not below its value at
    ``z_prev`` (the surrogate equals the true objective there).
    """
    p_prev = z_prev[: model.n_p]
    x_prev = z_prev[model.n_p :]
    cost, const = model.x_costs(x_prev)
    active = np.ones(model.n_p, dtype=bool)
    prob, idx = model.p_problem(p_prev, active, extra_cost=cost)
    res = solve(prob, p_prev[idx], tol=tol)
    p = np.zeros(model.n_p)
    p[idx] = np.maximum(res.z, 0.0)
    x = model.x_from_p(p, x_prev)
    z_new = np.concatenate([p, x])
    if model.surrogate(z_new, z_prev) > model.surrogate(z_prev, z_prev):
        return z_prev
    return z_new


def run_sca(model: DcObjective, z0, settings: ScaSettings):
    """SCA loop from ``z0``; returns the final point and the objective trajectory."""
    z = np.asarray(z0, dtype=float)
    obj = model.objective(z)
    traj = [obj]
    for _ in range(settings.max_outer_iters):
        z_new = sca_step(model, z, settings.solver_tol)
        obj_new = model.objective(z_new)
        traj.append(obj_new)
        change = obj - obj_new
        z, obj = z_new, obj_new
        if change <= settings.objective_tol * max(1.0, abs(obj)):
            break
    return z, traj


def fixed_x_power(model: DcObjective, p_start, active, settings: ScaSettings):
    """Re-optimise powers with the assignment fixed (SCA over the licensed interference)."""
    p = np.where(active, p_start, 0.0)
    if not np.any(active):
        return p
    prev_val = None
    for _ in range(settings.max_outer_iters):
        prob, idx = model.p_problem(p, active)
        cur = prob.objective.value(p[idx])
        res = solve(prob, p[idx], tol=settings.solver_tol)
        if res.value > cur:
            break
        p_new = np.zeros_like(p)
        p_new[idx] = np.maximum(res.z, 0.0)
        val = model.objective(np.concatenate([p_new, active.astype(float)]))
        p = p_new
        if prev_val is not None and prev_val - val <= settings.objective_tol * max(1.0, abs(val)):
            break
        prev_val = val
    return p


# ---- starting points ------------------------------------------------------


def _scale_feasible(model: DcObjective, p):
    """Scale ``p`` down until budgets C2-C4 hold (keeps p <= x * big_m)."""
    cfg = model.cfg
    owner = cfg.owner
    L, U = model.L, model.U
    p_c = p[: model.n_pc].reshape(L, U).copy()
    p_u = p[model.n_pc :].reshape(model.W, U).copy()
    for k in range(cfg.K):
        mine = owner == k
        unl = p_u[:, mine].sum()
        if unl > cfg.unlicensed_power_cap:
            p_u[:, mine] *= cfg.unlicensed_power_cap / unl
        tot = p_c[:, mine].sum() + p_u[:, mine].sum()
        if tot > cfg.total_power_cap:
            s = cfg.total_power_cap / tot
            p_c[:, mine] *= s
            p_u[:, mine] *= s
    for l in range(L):
        intf = float(p_c[l] @ model.h_macro[l])
        if intf > cfg.interference_cap:
            p_c[l] *= cfg.interference_cap / intf
    return np.concatenate([p_c.ravel(), p_u.ravel()])


def heuristic_start(model: DcObjective):
    """Best backlog-weighted gain user per subcarrier, caps split evenly."""
    cfg = model.cfg
    owner = cfg.owner
    L, W, U = model.L, model.W, model.U
    g_own = model.Mfull[:, np.arange(U), np.arange(U)]  # (L, U)
    score = np.concatenate([(model.q[None, :] * g_own).ravel(), (model.q[None, :] * model.w_u * model.g_u).ravel()])
    x = np.zeros(model.n_p)
    for grp in model.groups():
        j = int(np.argmax(score[grp]))
        if score[grp][j] > 0:
            x[grp[j]] = 1.0
    x_c = x[: model.n_pc].reshape(L, U)
    x_u = x[model.n_pc :].reshape(W, U)
    p_c = np.zeros((L, U))
    p_u = np.zeros((W, U))
    for k in range(cfg.K):
        mine = owner == k
        n_l = x_c[:, mine].sum()
        n_u = x_u[:, mine].sum()
        if n_u:
            p_u[:, mine] = x_u[:, mine] * cfg.unlicensed_power_cap / n_u
        if n_l:
            budget = cfg.total_power_cap - (cfg.unlicensed_power_cap if n_u else 0.0)
            p_c[:, mine] = x_c[:, mine] * budget / n_l
    p = _scale_feasible(model, np.concatenate([p_c.ravel(), p_u.ravel()]))
    return np.concatenate([p, x])


def random_start(model: DcObjective, rng: np.random.Generator):
    """Random fractional assignment (slack left in every group) with random feasible powers."""
    x = np.zeros(model.n_p)
    for grp in model.groups():
        share = rng.dirichlet(np.ones(len(grp) + 1))
        x[grp] = share[:-1]
    p = rng.uniform(0.0, 1.0, model.n_p) * x * model.big_m
    p = _scale_feasible(model, p)
    return np.concatenate([p, x])


# ---- rounding ----------------------------------------------------------------


def round_assignment(model: DcObjective, x, threshold: float):
    """Binary assignment: per group keep the largest relaxed entry above ``threshold``."""
    xb = np.zeros_like(x)
    for grp in model.groups():
        vals = x[grp]
        j = int(np.argmax(vals))  # first maximum -> lowest user index on ties
        if vals[j] >= threshold:
            xb[grp[j]] = 1.0
    return xb


def _clean(model: DcObjective, p, xb, floor=1e-9):
    off = p <= floor
    p = np.where(off, 0.0, p)
    xb = np.where(off, 0.0, xb)
    return p, xb


def schedule_slot(
    state: SlotState,
    Q,
    cfg: NetworkConfig,
    settings: ScaSettings | None = None,
    p_suc=None,
    V: float | None = None,
) -> Decision:
    """Solve one slot and return the binary allocation with diagnostics.

    ``Q`` is the backlog in bits.  ``p_suc`` defaults to the CSMA fixed point
    for the slot's Wi-Fi populations.
    """
    settings = settings or ScaSettings()
    V = cfg.control_param if V is None else V
    if p_suc is None:
        p_suc = csma.success_probs(
            state.wifi_count, csma.BackoffLadder(cfg.wifi_backoff), csma.BackoffLadder(cfg.sbs_backoff)
        )
    q = np.asarray(Q, dtype=float) / cfg.queue_unit_bits
    mu = settings.penalty if settings.penalty is not None else cfg.effective_penalty(V)
    model = DcObjective(state, q, cfg, p_suc, V, mu)
    zero = Allocation.zeros(cfg)
    zero_val = model.p2_value(zero)
    if not np.any(q > 0):
        return Decision(zero, zero_val, zero_val, 0.0, 0, 0, mu, note="empty queues")
    try:
        rng = np.random.default_rng(np.random.SeedSequence([settings.seed, int(state.t)]))
        starts = [heuristic_start(model)] + [random_start(model, rng) for _ in range(settings.restart_count)]
        runs = [run_sca(model, z0, settings) for z0 in starts]
        best = int(np.argmin([model.objective(z) for z, _ in runs]))
        z, traj = runs[best]
        trajectories = [t for _, t in runs]
        iterations = sum(len(t) - 1 for t in trajectories)
        doublings = 0
        while model.penalty_residual(z) > settings.penalty_residual_tol and doublings < settings.penalty_doublings:
            mu *= 2.0
            doublings += 1
            model = DcObjective(state, q, cfg, p_suc, V, mu)
            z, extra = run_sca(model, z, settings)
            traj = extra
            trajectories.append(extra)
            iterations += len(extra) - 1
        relaxed = model.objective(z)
        residual = model.penalty_residual(z)
        xb = round_assignment(model, z[model.n_p :], settings.rounding_threshold)
        active = xb > 0
        p = fixed_x_power(model, z[: model.n_p], active, settings)
        p, xb = _clean(model, p, xb)
        alloc = model.to_allocation(np.concatenate([p, xb]))
        val = model.p2_value(alloc)
        note = ""
        if val > zero_val:
            alloc, val, note = zero, zero_val, "zero allocation better than repaired solution"
        return Decision(alloc, val, relaxed, residual, iterations, settings.restart_count, mu, traj, trajectories, note=note)
    except (SolverError, np.linalg.LinAlgError, FloatingPointError) as exc:
        log.warning("slot %d: solver failure (%s); using zero allocation", state.t, exc)
        return Decision(zero, zero_val, zero_val, 0.0, 0, 0, mu, flagged=True, note=f"solver failure: {exc}")


def decide_allocation(
    state: SlotState, Q, cfg: NetworkConfig, settings: ScaSettings | None = None, p_suc=None, V=None
) -> Allocation:
    return schedule_slot(state, Q, cfg, settings, p_suc, V).allocation


def build_dc_objective(state: SlotState, Q, cfg: NetworkConfig, p_suc, V=None, mu=None) -> DcObjective:
    """``DcObjective`` for backlog ``Q`` in bits."""
    V = cfg.control_param if V is None else V
    mu = cfg.effective_penalty(V) if mu is None else mu
    return DcObjective(state, np.asarray(Q, dtype=float) / cfg.queue_unit_bits, cfg, p_suc, V, mu)
