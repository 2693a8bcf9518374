"""Domain types, unit helpers and configuration for the LAA/Wi-Fi coexistence model.

Powers are kept in watts everywhere inside the package; dBm only appears at the
configuration boundary (keys ending in ``_dbm``).

Users are indexed globally ``u = 0..U-1``; ``NetworkConfig.owner[u]`` is the SBS
serving user ``u``.  Per-slot arrays use the layout

* licensed gains ``(L, K, U)``: gain from SBS ``j`` to user ``u`` on subcarrier ``l``
* unlicensed gains ``(W, U)``: own-SBS gain on unlicensed subcarrier ``w``
* macro gains ``(L, K)``: gain from SBS ``k`` to the macrocell user on ``l``
* allocations ``x_c, p_c`` of shape ``(L, U)`` and ``x_u, p_u`` of shape ``(W, U)``
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from functools import cached_property

import numpy as np


def dbm_to_watts(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watts_to_dbm(p_w: float) -> float:
    if p_w <= 0:
        raise ValueError("power must be positive to express in dBm")
    return 10.0 * math.log10(p_w) + 30.0


def binary_exponential_ladder(cw_min: int = 16, stages: int = 5) -> tuple[float, ...]:
    """Mean backoff per stage, ``2**j * cw_min / 2`` (802.11 DCF style)."""
    return tuple(float(2**j * cw_min / 2) for j in range(stages))


@dataclass(frozen=True)
class NetworkConfig:
    """Static network parameters.

    ``dc_penalty`` and ``big_m`` may be left as ``None``; the scheduler then
    uses ``10 * max(V, 1) * P_total * xi_c`` and ``P_total`` respectively
    (the coupling constant is further capped at ``P_u`` on unlicensed subcarriers).
    """

    num_sbs: int = 3
    licensed_subcarriers: int = 2
    unlicensed_subcarriers: int = 4
    users_per_sbs: tuple[int, ...] = (2, 2, 2)
    subcarrier_bandwidth: float = 20e6  # Hz
    noise_power: float = 1e-2  # W
    total_power_cap: float = 10.0**1.6  # 46 dBm
    unlicensed_power_cap: float = 10.0**-0.7  # 23 dBm
    interference_cap: float = 1.0  # W
    amplifier_coeff_licensed: float = 1.0 / 0.35
    amplifier_coeff_unlicensed: float = 1.0 / 0.35
    static_power: float = 9.0  # W
    idle_power: float = 1.0  # W, stored and reported only
    slot_length: float = 0.01  # s
    wifi_backoff: tuple[float, ...] = field(default_factory=binary_exponential_ladder)
    sbs_backoff: tuple[float, ...] = field(default_factory=binary_exponential_ladder)
    wifi_max_retx: int = 5
    sbs_max_retx: int = 5
    control_param: float = 5.0
    dc_penalty: float | None = None
    big_m: float | None = None
    queue_unit_bits: float = 1e6

    def __post_init__(self):
        users = self.users_per_sbs
        if isinstance(users, int):
            users = (users,) * self.num_sbs
        object.__setattr__(self, "users_per_sbs", tuple(int(s) for s in users))
        object.__setattr__(self, "wifi_backoff", tuple(float(b) for b in self.wifi_backoff))
        object.__setattr__(self, "sbs_backoff", tuple(float(b) for b in self.sbs_backoff))

    @property
    def K(self) -> int:
        return self.num_sbs

    @property
    def L(self) -> int:
        return self.licensed_subcarriers

    @property
    def W(self) -> int:
        return self.unlicensed_subcarriers

    @property
    def num_users(self) -> int:
        return sum(self.users_per_sbs)

    @cached_property
    def owner(self) -> np.ndarray:
        """SBS index of every user, shape ``(U,)``."""
        return np.repeat(np.arange(self.num_sbs), self.users_per_sbs)

    @property
    def effective_big_m(self) -> float:
        return self.total_power_cap if self.big_m is None else self.big_m

    @property
    def effective_big_m_unlicensed(self) -> float:
        """Coupling constant on unlicensed subcarriers; ``P_u`` already bounds those powers."""
        return min(self.effective_big_m, self.unlicensed_power_cap)

    def effective_penalty(self, V: float | None = None) -> float:
        if self.dc_penalty is not None:
            return self.dc_penalty
        V = self.control_param if V is None else V
        return 10.0 * max(V, 1.0) * self.total_power_cap * self.amplifier_coeff_licensed

    @property
    def bits_per_hz_slot(self) -> float:
        """Queue units served per slot by 1 bit/s/Hz on one subcarrier."""
        return self.subcarrier_bandwidth * self.slot_length / self.queue_unit_bits

    def replace(self, **changes) -> "NetworkConfig":
        kwargs = {f.name: getattr(self, f.name) for f in fields(self)}
        kwargs.update(changes)
        return NetworkConfig(**kwargs)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.valid:
            return "valid"
        return "invalid:\n" + "\n".join(f"  - {v}" for v in self.violations)


def validate_config(cfg: NetworkConfig) -> ValidationReport:
    """Collect every violated invariant of ``cfg``."""
    v = []
    for name in ("num_sbs", "licensed_subcarriers"):
        if getattr(cfg, name) < 1:
            v.append(f"{name} must be >= 1")
    if cfg.unlicensed_subcarriers < 0:
        v.append("unlicensed_subcarriers must be >= 0")
    if len(cfg.users_per_sbs) != cfg.num_sbs:
        v.append("users_per_sbs length differs from num_sbs")
    if any(s < 1 for s in cfg.users_per_sbs):
        v.append("every SBS needs at least one user")
    positive = (
        "subcarrier_bandwidth",
        "noise_power",
        "total_power_cap",
        "unlicensed_power_cap",
        "interference_cap",
        "static_power",
        "slot_length",
        "queue_unit_bits",
    )
    for name in positive:
        val = getattr(cfg, name)
        if not (np.isfinite(val) and val > 0):
            v.append(f"{name} must be strictly positive")
    if cfg.idle_power < 0:
        v.append("idle_power must be non-negative")
    if cfg.unlicensed_power_cap > cfg.total_power_cap:
        v.append("P_u > P_total")
    if cfg.amplifier_coeff_licensed < 1:
        v.append("amplifier_coeff_licensed below 1")
    if cfg.amplifier_coeff_unlicensed < 1:
        v.append("amplifier_coeff_unlicensed below 1")
    if cfg.wifi_max_retx < 1 or cfg.sbs_max_retx < 1:
        v.append("max retransmissions must be >= 1")
    if len(cfg.wifi_backoff) != cfg.wifi_max_retx:
        v.append("wifi_backoff length differs from wifi_max_retx")
    if len(cfg.sbs_backoff) != cfg.sbs_max_retx:
        v.append("sbs_backoff length differs from sbs_max_retx")
    if any(b <= 0 for b in cfg.wifi_backoff + cfg.sbs_backoff):
        v.append("mean backoffs must be positive")
    if cfg.control_param < 0:
        v.append("control_param V must be >= 0")
    if cfg.dc_penalty is not None and cfg.dc_penalty <= 0:
        v.append("dc_penalty must be > 0")
    if cfg.effective_big_m < cfg.total_power_cap:
        v.append("big_m below power cap")
    return ValidationReport(v)


@dataclass(frozen=True)
class SlotState:
    t: int
    gains_licensed: np.ndarray  # (L, K, U)
    gains_unlicensed: np.ndarray  # (W, U)
    gains_macro: np.ndarray  # (L, K)
    arrivals: np.ndarray  # (U,) bits
    wifi_count: np.ndarray  # (K,)

    def own_licensed_gain(self, owner: np.ndarray) -> np.ndarray:
        """Gain from each user's own SBS, shape ``(L, U)``."""
        return self.gains_licensed[:, owner, np.arange(len(owner))]


@dataclass(frozen=True)
class Allocation:
    x_c: np.ndarray  # (L, U)
    x_u: np.ndarray  # (W, U)
    p_c: np.ndarray  # (L, U) W
    p_u: np.ndarray  # (W, U) W

    @classmethod
    def zeros(cls, cfg: NetworkConfig) -> "Allocation":
        U = cfg.num_users
        return cls(
            np.zeros((cfg.L, U)), np.zeros((cfg.W, U)), np.zeros((cfg.L, U)), np.zeros((cfg.W, U))
        )

    @property
    def is_zero(self) -> bool:
        return not (np.any(self.p_c) or np.any(self.p_u))


def check_allocation(
    alloc: Allocation, state: SlotState, cfg: NetworkConfig, atol: float = 1e-9
) -> list[str]:
    """Return violated constraints C2-C7 (empty list when feasible)."""
    v = []
    owner = cfg.owner
    lam = cfg.effective_big_m
    for name in ("x_c", "x_u"):
        x = getattr(alloc, name)
        if not np.all((x == 0) | (x == 1)):
            v.append(f"C7: {name} not binary")
    for name in ("p_c", "p_u"):
        if np.any(getattr(alloc, name) < 0):
            v.append(f"C6: negative {name}")
    lam_u = cfg.effective_big_m_unlicensed
    if np.any(alloc.p_c > alloc.x_c * lam + atol) or np.any(alloc.p_u > alloc.x_u * lam_u + atol):
        v.append("power on unassigned subcarrier")
    used_c = alloc.x_c * alloc.p_c
    used_u = alloc.x_u * alloc.p_u
    for k in range(cfg.K):
        mine = owner == k
        tot = used_c[:, mine].sum() + used_u[:, mine].sum()
        if tot > cfg.total_power_cap * (1 + atol) + atol:
            v.append(f"C2: SBS {k} total power {tot:.6g} > {cfg.total_power_cap:.6g}")
        unl = used_u[:, mine].sum()
        if unl > cfg.unlicensed_power_cap * (1 + atol) + atol:
            v.append(f"C3: SBS {k} unlicensed power {unl:.6g} > {cfg.unlicensed_power_cap:.6g}")
        if np.any(alloc.x_c[:, mine].sum(axis=1) > 1) or np.any(alloc.x_u[:, mine].sum(axis=1) > 1):
            v.append(f"C5: SBS {k} subcarrier shared by several users")
    interference = (used_c * state.gains_macro[:, owner]).sum(axis=1)
    for l, val in enumerate(interference):
        if val > cfg.interference_cap * (1 + atol) + atol:
            v.append(f"C4: subcarrier {l} cross-tier interference {val:.6g} > {cfg.interference_cap:.6g}")
    return v
