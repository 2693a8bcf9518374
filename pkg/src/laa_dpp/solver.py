"""Log-barrier interior-point solver for smooth convex problems.

Problems have the form::

    minimize    f(z)
    subject to  A z <= b
                z >= lower       (optional, handled as diagonal barriers)
                h_j(z) <= 0      (smooth convex, optional)

``f`` and ``h_j`` are objects exposing ``value``, ``gradient`` and ``hessian``.
Every subproblem in this package is built from ``LogAffine`` pieces (a linear
term minus weighted logarithms of affine functions).  When the objective is
``LogAffine`` and so are all nonlinear constraints, a compiled kernel runs the
same iteration as the reference Python loop.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

try:
    from numba import njit
except ImportError:  # pragma: no cover
    njit = None


class SolverError(RuntimeError):
    pass


class LogAffine:
    """``c @ z + const - sum_t w_t * log(F_t @ z + d_t)``; convex for ``w >= 0``."""

    def __init__(self, c, F=None, d=None, w=None, const: float = 0.0):
        self.c = np.ascontiguousarray(c, dtype=float)
        n = self.c.size
        self.F = np.zeros((0, n)) if F is None else np.ascontiguousarray(F, dtype=float).reshape(-1, n)
        self.d = np.zeros(0) if d is None else np.ascontiguousarray(d, dtype=float)
        self.w = np.zeros(0) if w is None else np.ascontiguousarray(w, dtype=float)
        self.const = float(const)
        if np.any(self.w < 0):
            raise ValueError("log weights must be non-negative for convexity")

    def _args(self, z):
        return self.F @ z + self.d

    def value(self, z) -> float:
        r = self._args(z)
        if np.any(r <= 0):
            return math.inf
        return float(self.c @ z + self.const - self.w @ np.log(r))

    def gradient(self, z):
        r = self._args(z)
        return self.c - self.F.T @ (self.w / r)

    def hessian(self, z):
        r = self._args(z)
        return (self.F.T * (self.w / r**2)) @ self.F

    def shifted(self, offset: float) -> "LogAffine":
        return LogAffine(self.c, self.F, self.d, self.w, self.const + offset)


@dataclass
class ConvexProblem:
    objective: object
    A: np.ndarray
    b: np.ndarray
    row_names: list[str] | None = None
    lower: np.ndarray | None = None
    constraints: list = field(default_factory=list)
    constraint_names: list[str] | None = None
    interior: np.ndarray | None = None  # strictly feasible point, if known
    lower_names: list[str] | None = None

    def __post_init__(self):
        self.b = np.ascontiguousarray(self.b, dtype=float).reshape(-1)
        self.A = np.ascontiguousarray(self.A, dtype=float)
        if self.A.ndim == 1:
            self.A = self.A.reshape(len(self.b), -1)
        if self.row_names is None:
            self.row_names = [f"row{i}" for i in range(len(self.b))]
        if self.lower is not None:
            self.lower = np.ascontiguousarray(self.lower, dtype=float)
            if self.lower_names is None:
                self.lower_names = [f"lower[{i}]" for i in range(len(self.lower))]
        if self.constraint_names is None:
            self.constraint_names = [f"nl{j}" for j in range(len(self.constraints))]

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def names(self) -> list[str]:
        low = [] if self.lower is None else list(self.lower_names)
        return list(self.row_names) + low + list(self.constraint_names)

    def slacks(self, z) -> np.ndarray:
        parts = [self.b - self.A @ z]
        if self.lower is not None:
            parts.append(z - self.lower)
        if self.constraints:
            parts.append(np.array([-h.value(z) for h in self.constraints]))
        return np.concatenate(parts)

    def constraint_gradients(self, z) -> np.ndarray:
        """Gradient of every constraint written as ``c_i(z) <= 0``, one row each."""
        parts = [self.A]
        if self.lower is not None:
            parts.append(-np.eye(self.n))
        parts.extend(h.gradient(z)[None, :] for h in self.constraints)
        return np.vstack(parts)

    def strictly_feasible(self, z) -> bool:
        return bool(np.all(self.slacks(z) > 0))


@dataclass
class SolveResult:
    z: np.ndarray
    value: float
    converged: bool
    iterations: int
    stationarity: float
    barrier: float
    stage_values: list[float]
    history: list[tuple[int, int, float, float]]


# ---- reference loop ---------------------------------------------------------


def _barrier_parts(problem: ConvexProblem, z, mu):
    """Value, gradient and Hessian of ``mu * (-sum log slack)``."""
    s = problem.b - problem.A @ z
    if np.any(s <= 0):
        return math.inf, None, None
    val = -np.log(s).sum()
    inv = 1.0 / s
    grad = problem.A.T @ inv
    hess = (problem.A.T * inv**2) @ problem.A
    if problem.lower is not None:
        sl = z - problem.lower
        if np.any(sl <= 0):
            return math.inf, None, None
        val -= np.log(sl).sum()
        grad = grad - 1.0 / sl
        hess = hess + np.diag(1.0 / sl**2)
    for h in problem.constraints:
        hv = h.value(z)
        if not hv < 0:
            return math.inf, None, None
        hg = h.gradient(z)
        val -= math.log(-hv)
        grad = grad + hg / (-hv)
        hess = hess + np.outer(hg, hg) / hv**2 + h.hessian(z) / (-hv)
    return mu * val, mu * grad, mu * hess


def _phi(problem, z, mu):
    s = problem.b - problem.A @ z
    if np.any(s <= 0):
        return math.inf
    val = -np.log(s).sum()
    if problem.lower is not None:
        sl = z - problem.lower
        if np.any(sl <= 0):
            return math.inf
        val -= np.log(sl).sum()
    for h in problem.constraints:
        hv = h.value(z)
        if not hv < 0:
            return math.inf
        val -= math.log(-hv)
    return problem.objective.value(z) + mu * val


def _max_step(problem, z, dz):
    """Largest step (at most 1) keeping linear rows and bounds strictly feasible."""
    t = 1.0
    s = problem.b - problem.A @ z
    ad = problem.A @ dz
    pos = ad > 0
    if np.any(pos):
        t = min(t, 0.99 * float(np.min(s[pos] / ad[pos])))
    if problem.lower is not None:
        neg = dz < 0
        if np.any(neg):
            t = min(t, 0.99 * float(np.min((z - problem.lower)[neg] / -dz[neg])))
    return t


def _newton_direction(H, grad):
    """Jacobi-scaled Newton step, or a scaled gradient step if ``H`` is unusable."""
    diag = np.sqrt(np.maximum(np.diag(H), 1e-300))
    Hs = H / diag[:, None] / diag[None, :]
    try:
        Lc = np.linalg.cholesky(Hs)
    except np.linalg.LinAlgError:
        return -grad / diag**2
    cd = np.diag(Lc)
    if (cd.max() / cd.min()) ** 2 >= 1e12:
        return -grad / diag**2
    y = np.linalg.solve(Lc, grad / diag)
    return -np.linalg.solve(Lc.T, y) / diag


def _solve_python(problem, z, max_iter, mu, mu_end, factor, max_newton):
    obj = problem.objective
    total = 0
    history = []
    stage_values = []
    stage = 0
    converged = False
    factor_used = 1.0
    while True:
        final = mu <= mu_end * (1 + 1e-12)
        for it in range(max_newton):
            fval = obj.value(z)
            if not math.isfinite(fval):
                raise SolverError("objective became non-finite")
            bval, bgrad, bhess = _barrier_parts(problem, z, mu)
            phi = fval + bval
            grad = obj.gradient(z) + bgrad
            H = obj.hessian(z) + bhess
            if not (np.all(np.isfinite(grad)) and np.all(np.isfinite(H))):
                raise SolverError("non-finite gradient or Hessian")
            history.append((stage, it, fval, phi))
            total += 1
            if it == 0 and stage > 0:
                # tangent predictor: barrier curvature of the previous stage
                H = H + (factor_used - 1.0) * bhess
            dz = _newton_direction(H, grad)
            dec = -float(grad @ dz)
            if dec <= (1e-14 if final else 1e-8) * max(1.0, abs(phi)):
                break
            t = _max_step(problem, z, dz)
            accepted = False
            while t > 1e-14:
                cand = z + t * dz
                if _phi(problem, cand, mu) <= phi - 1e-4 * t * dec:
                    accepted = True
                    break
                t *= 0.5
            if not accepted:
                break
            z = cand
            if total >= max_iter:
                break
        stage_values.append(obj.value(z))
        if total >= max_iter:
            break
        if final:
            converged = True
            break
        new_mu = max(mu / factor, mu_end)
        factor_used = mu / new_mu
        mu = new_mu
        stage += 1
    return z, converged, total, mu, stage_values, history


# ---- compiled kernel ----------------------------------------------------------
# Same iteration as _solve_python, restricted to LogAffine objective and
# constraints.  Constraint j uses rows Coff[j]:Coff[j+1] of the stacked CF, Cd, Cw.

if njit is not None:

    @njit(cache=True)
    def _con_value(Cc, Ck, CF, Cd, Cw, Coff, j, z):  # pragma: no cover
        h = Cc[j] @ z + Ck[j]
        for t in range(Coff[j], Coff[j + 1]):
            r = CF[t] @ z + Cd[t]
            if r <= 0.0:
                return np.inf
            h -= Cw[t] * np.log(r)
        return h

    @njit(cache=True)
    def _phi_fast(c, F, d, w, A, b, has_lower, lower, Cc, Ck, CF, Cd, Cw, Coff, z, mu):  # pragma: no cover
        val = c @ z
        r = F @ z + d
        for t in range(r.size):
            if r[t] <= 0.0:
                return np.inf
            val -= w[t] * np.log(r[t])
        s = b - A @ z
        bar = 0.0
        for j in range(s.size):
            if s[j] <= 0.0:
                return np.inf
            bar -= np.log(s[j])
        if has_lower:
            for i in range(z.size):
                sl = z[i] - lower[i]
                if sl <= 0.0:
                    return np.inf
                bar -= np.log(sl)
        for j in range(Ck.size):
            h = _con_value(Cc, Ck, CF, Cd, Cw, Coff, j, z)
            if not h < 0.0:
                return np.inf
            bar -= np.log(-h)
        return val + mu * bar

    @njit(cache=True)
    def _kernel(c, F, d, w, A, b, has_lower, lower, Cc, Ck, CF, Cd, Cw, Coff, z0, mu, mu_end, factor, max_newton, max_iter):  # pragma: no cover
        n = z0.size
        z = z0.copy()
        total = 0
        converged = False
        stage_vals = np.empty(256)
        n_stage = 0
        Lc = np.zeros((n, n))
        y = np.empty(n)
        x = np.empty(n)
        factor_used = 1.0
        while True:
            final = mu <= mu_end * (1 + 1e-12)
            for it in range(max_newton):
                # first step of a later stage uses the previous stage's barrier curvature
                mu_h = mu * factor_used if it == 0 else mu
                r = F @ z + d
                s = b - A @ z
                grad = c - F.T @ (w / r) + mu * (A.T @ (1.0 / s))
                H = (F.T * (w / r**2)) @ F + mu_h * ((A.T * (1.0 / s**2)) @ A)
                if has_lower:
                    for i in range(n):
                        sl = z[i] - lower[i]
                        grad[i] -= mu / sl
                        H[i, i] += mu_h / (sl * sl)
                for j in range(Ck.size):
                    h = _con_value(Cc, Ck, CF, Cd, Cw, Coff, j, z)
                    Fj = CF[Coff[j] : Coff[j + 1]]
                    rj = Fj @ z + Cd[Coff[j] : Coff[j + 1]]
                    wj = Cw[Coff[j] : Coff[j + 1]]
                    gh = Cc[j] - Fj.T @ (wj / rj)
                    grad += mu * gh / (-h)
                    H += mu_h * (np.outer(gh, gh) / (h * h) + ((Fj.T * (wj / rj**2)) @ Fj) / (-h))
                phi = _phi_fast(c, F, d, w, A, b, has_lower, lower, Cc, Ck, CF, Cd, Cw, Coff, z, mu)
                total += 1
                diag = np.sqrt(np.maximum(np.diag(H).copy(), 1e-300))
                ok = True
                for j in range(n):
                    acc = H[j, j] / (diag[j] * diag[j])
                    for k in range(j):
                        acc -= Lc[j, k] * Lc[j, k]
                    if acc <= 0.0:
                        ok = False
                        break
                    Lc[j, j] = np.sqrt(acc)
                    for i in range(j + 1, n):
                        acc = H[i, j] / (diag[i] * diag[j])
                        for k in range(j):
                            acc -= Lc[i, k] * Lc[j, k]
                        Lc[i, j] = acc / Lc[j, j]
                if ok:
                    dmax = 0.0
                    dmin = np.inf
                    for j in range(n):
                        dmax = max(dmax, Lc[j, j])
                        dmin = min(dmin, Lc[j, j])
                    ok = (dmax / dmin) ** 2 < 1e12
                if ok:
                    for i in range(n):
                        acc = grad[i] / diag[i]
                        for k in range(i):
                            acc -= Lc[i, k] * y[k]
                        y[i] = acc / Lc[i, i]
                    for i in range(n - 1, -1, -1):
                        acc = y[i]
                        for k in range(i + 1, n):
                            acc -= Lc[k, i] * x[k]
                        x[i] = acc / Lc[i, i]
                    dz = -x / diag
                else:
                    dz = -grad / diag**2
                dec = -(grad @ dz)
                if dec <= (1e-14 if final else 1e-8) * max(1.0, abs(phi)):
                    break
                t = 1.0
                ad = A @ dz
                for j in range(ad.size):
                    if ad[j] > 0:
                        t = min(t, 0.99 * s[j] / ad[j])
                if has_lower:
                    for i in range(n):
                        if dz[i] < 0:
                            t = min(t, 0.99 * (z[i] - lower[i]) / -dz[i])
                accepted = False
                cand = z
                while t > 1e-14:
                    cand = z + t * dz
                    if _phi_fast(c, F, d, w, A, b, has_lower, lower, Cc, Ck, CF, Cd, Cw, Coff, cand, mu) <= phi - 1e-4 * t * dec:
                        accepted = True
                        break
                    t *= 0.5
                if not accepted:
                    break
                z = cand
                if total >= max_iter:
                    break
            if n_stage < stage_vals.size:
                stage_vals[n_stage] = c @ z - w @ np.log(F @ z + d)
                n_stage += 1
            if total >= max_iter:
                break
            if final:
                converged = True
                break
            new_mu = max(mu / factor, mu_end)
            factor_used = mu / new_mu
            mu = new_mu
        return z, converged, total, mu, stage_vals[:n_stage]


def _interior_start(problem: ConvexProblem, start):
    """``start`` pulled towards ``problem.interior`` until every slack is at least 1% of the interior one.

    Starting the first barrier stage almost on the boundary costs one Newton
    step per doubling of the smallest slack.
    """
    z = np.asarray(start, dtype=float).copy()
    if problem.interior is None:
        if problem.strictly_feasible(z):
            return z
        raise SolverError("start is not strictly feasible and no interior point was supplied")
    zi = problem.interior
    s_int = problem.slacks(zi)
    if np.any(s_int <= 0):
        raise SolverError("supplied interior point is not strictly feasible")
    for theta in (0.0, 0.01, 0.1, 0.5, 1.0):
        cand = (1 - theta) * z + theta * zi
        s = problem.slacks(cand)
        if np.all(s > 0) and (theta > 0 or np.all(s >= 0.01 * s_int)):
            return cand
    raise SolverError("could not find a strictly feasible start")  # pragma: no cover


def solve(
    problem: ConvexProblem,
    start,
    tol: float = 1e-8,
    max_iter: int = 500,
    barrier_start: float = 1.0,
    barrier_end: float = 1e-8,
    barrier_factor: float = 10.0,
    max_newton_per_stage: int = 60,
    trace_path=None,
    compiled: bool | None = None,
) -> SolveResult:
    """Minimise ``problem`` starting from ``start``.

    The barrier weight goes from ``barrier_start`` down to ``barrier_end`` by
    ``barrier_factor``; each stage is a damped Newton centering with Armijo
    backtracking (c=1e-4, shrink 0.5).  When the Jacobi-scaled Hessian is not
    positive definite or its condition estimate exceeds 1e12 a scaled gradient
    step is used instead.  A start on the boundary is pulled slightly towards
    ``problem.interior``.

    ``compiled`` selects the compiled kernel (default: whenever it applies).
    ``converged`` is False on iteration exhaustion or when the KKT residual at
    the returned point exceeds ``tol * (1 + |f|)``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    obj = problem.objective
    z = _interior_start(problem, start)
    if not math.isfinite(obj.value(z)):
        raise SolverError("objective is not finite at the start point")
    fast_ok = (
        isinstance(obj, LogAffine)
        and all(isinstance(h, LogAffine) for h in problem.constraints)
        and trace_path is None
        and njit is not None
    )
    if compiled is None:
        compiled = fast_ok
    if compiled and not fast_ok:
        raise ValueError("compiled path needs LogAffine objective and constraints and no trace")
    if compiled:
        n = problem.n
        has_lower = problem.lower is not None
        lower = problem.lower if has_lower else np.zeros(n)
        cons = problem.constraints
        Cc = np.array([h.c for h in cons]).reshape(len(cons), n)
        Ck = np.array([h.const for h in cons], dtype=float)
        CF = np.vstack([h.F for h in cons] + [np.zeros((0, n))])
        Cd = np.concatenate([h.d for h in cons] + [np.zeros(0)])
        Cw = np.concatenate([h.w for h in cons] + [np.zeros(0)])
        Coff = np.concatenate([[0], np.cumsum([len(h.d) for h in cons], dtype=np.int64)]).astype(np.int64)
        z, converged, total, mu, stages = _kernel(
            obj.c, obj.F, obj.d, obj.w, problem.A, problem.b, has_lower, lower,
            Cc, Ck, CF, Cd, Cw, Coff, z,
            float(barrier_start), float(barrier_end), float(barrier_factor),
            int(max_newton_per_stage), int(max_iter),
        )
        if not np.all(np.isfinite(z)):
            raise SolverError("non-finite iterate")
        stage_values = [float(v) + obj.const for v in stages]
        history = []
    else:
        z, converged, total, mu, stage_values, history = _solve_python(
            problem, z, max_iter, barrier_start, barrier_end, barrier_factor, max_newton_per_stage
        )
    fval = obj.value(z)
    stationarity = kkt_residual(problem, z, mu)
    if converged and stationarity > tol * (1 + abs(fval)):
        converged = False
    if trace_path is not None:
        with open(trace_path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["stage", "iteration", "objective", "barrier_objective"])
            wr.writerows(history)
    return SolveResult(z, fval, converged, total, stationarity, mu, stage_values, history)


def kkt_residual(problem: ConvexProblem, z, mu: float) -> float:
    """Stationarity of ``z`` using the barrier multipliers ``mu / slack``.

    Constraints with a tiny slack get their multiplier re-fitted by NNLS, which
    removes the error of an imperfectly centred last Newton step.
    """
    s = problem.slacks(z)
    G = problem.constraint_gradients(z)
    g = problem.objective.gradient(z)
    scale = np.ones_like(s)
    scale[: len(problem.b)] += np.abs(problem.b)
    tight = s <= 1e-6 * scale
    resid = g + G[~tight].T @ (mu / s[~tight])
    if not np.any(tight):
        return float(np.linalg.norm(resid))
    m = len(problem.b)
    if problem.lower is not None and not np.any(tight[:m]) and not np.any(tight[m + problem.n :]):
        # only bounds z_i >= lower_i are tight: the best multiplier absorbs any positive residual
        bound = tight[m : m + problem.n]
        resid = resid.copy()
        resid[bound] = np.minimum(resid[bound], 0.0)
        return float(np.linalg.norm(resid))
    _, r = nnls(G[tight].T, -resid)
    return float(r)


@dataclass
class SolutionReport:
    objective: float
    slacks: dict[str, float]
    violations: dict[str, float]
    projected_gradient: float
    multipliers: dict[str, float]

    @property
    def feasible(self) -> bool:
        return not self.violations

    @property
    def max_violation(self) -> float:
        return max(self.violations.values(), default=0.0)


def validate_solution(problem: ConvexProblem, z, atol: float = 1e-9, active_tol: float = 1e-6) -> SolutionReport:
    """Slack of every constraint, violations above ``atol`` and a KKT residual.

    The KKT residual is ``min_{lam >= 0} |grad f + sum lam_i grad c_i|`` over
    the constraints whose slack is below ``active_tol`` (dense NNLS fit).
    """
    z = np.asarray(z, dtype=float)
    names = problem.names
    s = problem.slacks(z)
    slacks = dict(zip(names, s.tolist()))
    violations = {n: -v for n, v in slacks.items() if v < -atol}
    G = problem.constraint_gradients(z)
    g = problem.objective.gradient(z)
    active = np.flatnonzero(s <= active_tol)
    multipliers = {}
    if active.size:
        lam, resid = nnls(G[active].T, -g)
        multipliers = {names[i]: float(v) for i, v in zip(active, lam)}
    else:
        resid = float(np.linalg.norm(g))
    return SolutionReport(problem.objective.value(z), slacks, violations, float(resid), multipliers)
