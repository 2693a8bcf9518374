"""Shannon rates, cross-tier interference and SBS power consumption."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Allocation, NetworkConfig, SlotState

SNR_FLOOR = 1e-15
LN2 = np.log(2.0)


def _log2_1p(snr):
    snr = np.where(snr < SNR_FLOOR, 0.0, snr)
    return np.log1p(snr) / LN2


def licensed_interference(alloc: Allocation, state: SlotState, cfg: NetworkConfig) -> np.ndarray:
    """Interference seen by every user on every licensed subcarrier, shape ``(L, U)``.

    Only transmissions of other SBSs count; users of the same SBS never share a
    subcarrier in a feasible allocation.
    """
    owner = cfg.owner
    tx = alloc.x_c * alloc.p_c  # (L, V) power of transmitting user v
    # gain from v's SBS to receiving user u: gains_licensed[l, owner[v], u]
    g = state.gains_licensed[:, owner, :]  # (L, V, U)
    other = owner[:, None] != owner[None, :]
    return np.einsum("lv,lvu->lu", tx, g * other)


def licensed_rates(alloc: Allocation, state: SlotState, cfg: NetworkConfig) -> np.ndarray:
    """Per-(subcarrier, user) licensed rate in bit/s, shape ``(L, U)``."""
    signal = alloc.x_c * alloc.p_c * state.own_licensed_gain(cfg.owner)
    sinr = signal / (licensed_interference(alloc, state, cfg) + cfg.noise_power)
    return cfg.subcarrier_bandwidth * _log2_1p(sinr)


def licensed_rate(alloc: Allocation, state: SlotState, cfg: NetworkConfig, l: int, u: int) -> float:
    return float(licensed_rates(alloc, state, cfg)[l, u])


def unlicensed_rates(alloc: Allocation, state: SlotState, cfg: NetworkConfig, p_suc) -> np.ndarray:
    """Per-(subcarrier, user) unlicensed rate in bit/s, scaled by the SBS airtime share."""
    p_suc = np.asarray(p_suc, dtype=float)
    snr = alloc.x_u * alloc.p_u * state.gains_unlicensed / cfg.noise_power
    return p_suc[cfg.owner][None, :] * cfg.subcarrier_bandwidth * _log2_1p(snr)


def unlicensed_rate(alloc, state, cfg, p_suc, w: int, u: int) -> float:
    return float(unlicensed_rates(alloc, state, cfg, p_suc)[w, u])


def cross_tier_interference(alloc: Allocation, state: SlotState, cfg: NetworkConfig, l: int) -> float:
    """Interference the SBSs cause to the macrocell user on licensed subcarrier ``l``."""
    tx = alloc.x_c[l] * alloc.p_c[l]
    return float(np.dot(tx, state.gains_macro[l, cfg.owner]))


@dataclass(frozen=True)
class RatePowerBreakdown:
    user_rates: np.ndarray  # (U,) bit/s
    licensed: np.ndarray  # (L, U) bit/s
    unlicensed: np.ndarray  # (W, U) bit/s
    pc_licensed: np.ndarray  # (K,) W
    pc_unlicensed: np.ndarray  # (K,) W
    total_rate: float
    total_power: float
    idle_power: float = 0.0  # reported, not part of total_power


def power_consumption(alloc: Allocation, cfg: NetworkConfig):
    """``(PC_c, PC_u, PC_tot)`` with per-SBS arrays for the first two."""
    owner = cfg.owner
    pc_c = cfg.amplifier_coeff_licensed * np.bincount(
        owner, weights=(alloc.x_c * alloc.p_c).sum(axis=0), minlength=cfg.K
    )
    pc_u = cfg.amplifier_coeff_unlicensed * np.bincount(
        owner, weights=(alloc.x_u * alloc.p_u).sum(axis=0), minlength=cfg.K
    )
    total = cfg.K * cfg.static_power + pc_c.sum() + pc_u.sum()
    return pc_c, pc_u, float(total)


def aggregate(alloc: Allocation, state: SlotState, cfg: NetworkConfig, success_probs) -> RatePowerBreakdown:
    r_c = licensed_rates(alloc, state, cfg)
    r_u = unlicensed_rates(alloc, state, cfg, success_probs)
    user = r_c.sum(axis=0) + r_u.sum(axis=0)
    pc_c, pc_u, total = power_consumption(alloc, cfg)
    return RatePowerBreakdown(
        user_rates=user,
        licensed=r_c,
        unlicensed=r_u,
        pc_licensed=pc_c,
        pc_unlicensed=pc_u,
        total_rate=float(user.sum()),
        total_power=total,
        idle_power=cfg.idle_power,
    )
