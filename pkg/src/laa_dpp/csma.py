"""Bianchi-style attempt/collision fixed point for one SBS and its Wi-Fi neighbours."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class BackoffLadder:
    mean_backoffs: tuple[float, ...]

    def __post_init__(self):
        b = tuple(float(v) for v in self.mean_backoffs)
        if not b:
            raise ValueError("ladder needs at least one stage")
        if any(v <= 0 for v in b):
            raise ValueError("mean backoffs must be positive")
        object.__setattr__(self, "mean_backoffs", b)

    @property
    def max_retx(self) -> int:
        return len(self.mean_backoffs)

    @classmethod
    def binary_exponential(cls, cw_min: int = 16, stages: int = 5) -> "BackoffLadder":
        return cls(tuple(2**j * cw_min / 2 for j in range(stages)))


@dataclass(frozen=True)
class CoexistencePoint:
    tau_w: float
    tau_l: float
    p_w: float
    p_l: float
    residual: float
    iterations: int


class FixedPointError(RuntimeError):
    def __init__(self, message: str, last: CoexistencePoint):
        super().__init__(message)
        self.last = last
        self.residual = last.residual


def attempt_prob(p: float, ladder: BackoffLadder) -> float:
    """Per-slot attempt probability given the collision probability ``p``."""
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"collision probability {p} outside [0, 1]")
    num = 0.0
    den = 0.0
    pj = 1.0
    for b in ladder.mean_backoffs:
        num += pj
        den += pj * b
        pj *= p
    return num / den


def collision_probs(tau_w: float, tau_l: float, n: int) -> tuple[float, float]:
    """Collision probabilities ``(p_w, p_l)`` with ``n`` Wi-Fi nodes.

    For ``n == 0`` there is no Wi-Fi node to collide, ``p_l`` is 0 and ``p_w``
    is returned as NaN (undefined).
    """
    for name, tau in (("tau_w", tau_w), ("tau_l", tau_l)):
        if not (0.0 <= tau <= 1.0):
            raise ValueError(f"{name}={tau} outside [0, 1]")
    if n < 0:
        raise ValueError("negative node count")
    p_l = 1.0 - (1.0 - tau_w) ** n
    if n == 0:
        return math.nan, p_l
    p_w = 1.0 - (1.0 - tau_w) ** (n - 1) * (1.0 - tau_l)
    return p_w, p_l


def _defect(p_w, p_l, n, wifi, sbs):
    tau_w = attempt_prob(p_w, wifi)
    tau_l = attempt_prob(p_l, sbs)
    new_w, new_l = collision_probs(tau_w, tau_l, n)
    return tau_w, tau_l, new_w, new_l


def solve_fixed_point(
    n: int,
    wifi_ladder: BackoffLadder,
    sbs_ladder: BackoffLadder,
    tol: float = 1e-10,
    max_iter: int = 500,
    damping: float = 0.5,
    init: tuple[float, float] = (0.0, 0.0),
) -> CoexistencePoint:
    """Damped Picard iteration on ``(p_w, p_l)``.

    The attempt probabilities are always recomputed from the current collision
    pair, so the reported residual is the collision-side defect
    ``max |p - collision_probs(attempt_prob(p))|``.
    """
    if tol <= 0 or max_iter < 1:
        raise ValueError("need tol > 0 and max_iter >= 1")
    if n == 0:
        return CoexistencePoint(0.0, attempt_prob(0.0, sbs_ladder), 0.0, 0.0, 0.0, 0)
    p_w, p_l = init
    residual = math.inf
    tau_w = tau_l = math.nan
    for it in range(1, max_iter + 1):
        tau_w, tau_l, new_w, new_l = _defect(p_w, p_l, n, wifi_ladder, sbs_ladder)
        residual = max(abs(new_w - p_w), abs(new_l - p_l))
        if residual <= tol:
            return CoexistencePoint(tau_w, tau_l, p_w, p_l, residual, it)
        p_w = min(max((1 - damping) * p_w + damping * new_w, 0.0), 1.0)
        p_l = min(max((1 - damping) * p_l + damping * new_l, 0.0), 1.0)
    last = CoexistencePoint(tau_w, tau_l, p_w, p_l, residual, max_iter)
    raise FixedPointError(f"no convergence after {max_iter} iterations (residual {residual:.3g})", last)


def fixed_point_defect(point: CoexistencePoint, n: int, wifi: BackoffLadder, sbs: BackoffLadder) -> float:
    """Max violation of the four coupled equations at ``point``."""
    errs = [
        abs(point.tau_w - attempt_prob(point.p_w, wifi)) if n > 0 else abs(point.tau_w),
        abs(point.tau_l - attempt_prob(point.p_l, sbs)),
    ]
    p_w, p_l = collision_probs(point.tau_w, point.tau_l, n)
    errs.append(abs(p_l - point.p_l))
    if n > 0:
        errs.append(abs(p_w - point.p_w))
    return max(errs)


def success_prob(point: CoexistencePoint, n: int) -> float:
    """Probability that the SBS wins a backoff slot alone (its airtime share)."""
    return point.tau_l * (1.0 - point.tau_w) ** n


@lru_cache(maxsize=4096)
def _cached_point(n, wifi, sbs, tol, max_iter):
    return solve_fixed_point(n, BackoffLadder(wifi), BackoffLadder(sbs), tol, max_iter)


def success_probs(
    wifi_counts, wifi_ladder: BackoffLadder, sbs_ladder: BackoffLadder, tol: float = 1e-10
) -> np.ndarray:
    """Success probability of every SBS for the given Wi-Fi populations (memoised on N)."""
    out = np.empty(len(wifi_counts))
    for k, n in enumerate(wifi_counts):
        pt = _cached_point(int(n), wifi_ladder.mean_backoffs, sbs_ladder.mean_backoffs, tol, 500)
        out[k] = success_prob(pt, int(n))
    return out


def coexistence_table(n_max: int, wifi_ladder: BackoffLadder, sbs_ladder: BackoffLadder, tol: float = 1e-10):
    """Rows ``(N, tau_w, tau_l, p_w, p_l, P_suc)`` for ``N = 0..n_max``."""
    rows = []
    for n in range(n_max + 1):
        pt = solve_fixed_point(n, wifi_ladder, sbs_ladder, tol=tol)
        rows.append((n, pt.tau_w, pt.tau_l, pt.p_w, pt.p_l, success_prob(pt, n)))
    return rows


def multiplicity_probe(
    n: int, wifi_ladder: BackoffLadder, sbs_ladder: BackoffLadder, tol: float = 1e-10, starts=(0.0, 0.5, 0.99)
) -> float:
    """Largest spread of the solved probabilities over several initial guesses.

    A spread above ``10 * tol`` indicates more than one fixed point.
    """
    pts = [solve_fixed_point(n, wifi_ladder, sbs_ladder, tol=tol, init=(s, s)) for s in starts]
    arr = np.array([[p.tau_w, p.tau_l, p.p_w, p.p_l] for p in pts])
    return float(np.max(arr.max(axis=0) - arr.min(axis=0)))
