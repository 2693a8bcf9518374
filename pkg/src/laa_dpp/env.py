"""Random per-slot environment and queue dynamics."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .core import NetworkConfig, SlotState


@dataclass(frozen=True)
class EnvParams:
    """Random environment.

    ``arrival_rate`` is the mean number of packets per slot per user; each packet
    carries ``packet_size_bits`` bits, so the mean arrival in bits per slot is
    ``arrival_rate * packet_size_bits``.  Setting ``wifi_min == wifi_max`` gives a
    fixed Wi-Fi population.
    """

    arrival_rate: float = 1.25
    packet_size_bits: float = 1e6
    own_gain_mean: float = 1.0
    cross_gain_mean: float = 0.1
    macro_gain_mean: float = 0.05
    unlicensed_gain_mean: float = 1.0
    wifi_min: int = 1
    wifi_max: int = 10
    seed: int = 2017

    def __post_init__(self):
        if self.arrival_rate < 0:
            raise ValueError("arrival_rate must be >= 0")
        if min(self.own_gain_mean, self.cross_gain_mean, self.macro_gain_mean, self.unlicensed_gain_mean) <= 0:
            raise ValueError("mean gains must be positive")
        if not (0 <= self.wifi_min <= self.wifi_max):
            raise ValueError("need 0 <= wifi_min <= wifi_max")

    @property
    def mean_arrival_bits(self) -> float:
        return self.arrival_rate * self.packet_size_bits

    @classmethod
    def fixed_wifi(cls, n: int, **kw) -> "EnvParams":
        return cls(wifi_min=n, wifi_max=n, **kw)


def slot_rng(seed: int, t: int) -> np.random.Generator:
    """Generator for slot ``t``; independent of the order slots are drawn in."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(t)]))


def sample_slot(env: EnvParams, cfg: NetworkConfig, t: int) -> SlotState:
    rng = slot_rng(env.seed, t)
    K, L, W, U = cfg.K, cfg.L, cfg.W, cfg.num_users
    owner = cfg.owner
    own = np.arange(K)[:, None] == owner[None, :]  # (K, U)
    mean_c = np.where(own, env.own_gain_mean, env.cross_gain_mean)
    # Rayleigh amplitude -> exponential power gain
    g_c = rng.exponential(1.0, size=(L, K, U)) * mean_c[None]
    g_u = rng.exponential(env.unlicensed_gain_mean, size=(W, U))
    g_m = rng.exponential(env.macro_gain_mean, size=(L, K))
    arrivals = rng.poisson(env.arrival_rate, size=U) * env.packet_size_bits
    wifi = rng.integers(env.wifi_min, env.wifi_max + 1, size=K)
    return SlotState(t, g_c, g_u, g_m, arrivals.astype(float), wifi)


def update_queue(q, served_bits, arrived_bits):
    """One slot of backlog evolution: serve, clamp at zero, then add arrivals."""
    return np.maximum(np.asarray(q, dtype=float) - served_bits, 0.0) + arrived_bits


class QueueTrace:
    """History of per-user backlogs, one row per simulated slot."""

    def __init__(self, num_users: int):
        self._rows: list[np.ndarray] = []
        self.num_users = num_users

    def append(self, q) -> None:
        q = np.asarray(q, dtype=float)
        if q.shape != (self.num_users,):
            raise ValueError("queue vector has wrong length")
        if np.any(q < 0):
            raise ValueError("negative backlog")
        self._rows.append(q.copy())

    def __len__(self) -> int:
        return len(self._rows)

    @property
    def history(self) -> np.ndarray:
        if not self._rows:
            return np.zeros((0, self.num_users))
        return np.vstack(self._rows)

    def running_average(self) -> np.ndarray:
        """Finite-horizon time average of every user's backlog after each slot."""
        h = self.history
        return np.cumsum(h, axis=0) / np.arange(1, len(h) + 1)[:, None]

    def to_csv(self, path, arrivals=None, served=None) -> None:
        h = self.history
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "user", "Q", "A", "R"])
            for t in range(h.shape[0]):
                for u in range(h.shape[1]):
                    a = "" if arrivals is None else f"{arrivals[t, u]:.17g}"
                    r = "" if served is None else f"{served[t, u]:.17g}"
                    w.writerow([t, u, f"{h[t, u]:.17g}", a, r])


@dataclass(frozen=True)
class StabilityReport:
    time_avg_backlog: float
    slope_tail: float

    def is_stable(self, eps_slope: float) -> bool:
        return self.slope_tail <= eps_slope


def stability_metric(trace, tail_fraction: float = 0.2) -> StabilityReport:
    """Time-average backlog and least-squares slope over the final slots.

    ``trace`` is a ``QueueTrace``, a ``(T, U)`` history or a ``(T,)`` series; for
    multi-user input the per-user mean backlog is used.
    """
    h = trace.history if isinstance(trace, QueueTrace) else np.asarray(trace, dtype=float)
    series = h.mean(axis=1) if h.ndim == 2 else h
    if len(series) < 100:
        raise ValueError("stability check needs at least 100 slots")
    n_tail = max(2, int(round(tail_fraction * len(series))))
    tail = series[-n_tail:]
    slope = np.polyfit(np.arange(n_tail, dtype=float), tail, 1)[0]
    return StabilityReport(float(series.mean()), float(slope))
