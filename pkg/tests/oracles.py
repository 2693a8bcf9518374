"""Independent reference computations used by the tests.

These deliberately avoid the package's own code paths.
"""

from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import brentq


def attempt_prob_ref(p, backoffs):
    b = np.asarray(backoffs, dtype=float)
    powers = p ** np.arange(len(b))
    return powers.sum() / (powers * b).sum()


def coexistence_ref(n, wifi, sbs, xtol=1e-15):
    """Fixed point by root-finding on ``tau_w`` alone.

    Given ``tau_w``: ``p_l`` follows, then ``tau_l``, then ``p_w``; the root of
    ``tau_w - attempt(p_w)`` closes the loop.
    """
    if n == 0:
        return 0.0, attempt_prob_ref(0.0, sbs), 0.0, 0.0

    def chain(tw):
        p_l = 1 - (1 - tw) ** n
        tl = attempt_prob_ref(p_l, sbs)
        p_w = 1 - (1 - tw) ** (n - 1) * (1 - tl)
        return tl, p_w, p_l

    def gap(tw):
        return tw - attempt_prob_ref(chain(tw)[1], wifi)

    tw = brentq(gap, 0.0, 1.0, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=500)
    tl, p_w, p_l = chain(tw)
    return tw, tl, p_w, p_l


def p2_grid_optimum(state, q_units, cfg, p_suc, V, levels=64):
    """Brute force over one licensed and one unlicensed band of a single-user instance.

    Returns the smallest ``V * PC_tot - q * served`` over ``levels`` powers per band
    (0 .. cap, evenly spaced) and the four binary assignment patterns.
    """
    assert cfg.K == 1 and cfg.L == 1 and cfg.W == 1 and cfg.num_users == 1
    g_c = float(state.gains_licensed[0, 0, 0])
    g_u = float(state.gains_unlicensed[0, 0])
    h_m = float(state.gains_macro[0, 0])
    c_cap = min(cfg.total_power_cap, cfg.interference_cap / h_m)
    u_cap = cfg.unlicensed_power_cap
    pc_grid = np.linspace(0.0, c_cap, levels)
    pu_grid = np.linspace(0.0, u_cap, levels)
    scale = cfg.subcarrier_bandwidth * cfg.slot_length / cfg.queue_unit_bits
    best = np.inf
    for xc, xu in itertools.product((0, 1), repeat=2):
        pcs = pc_grid if xc else np.zeros(1)
        pus = pu_grid if xu else np.zeros(1)
        PC, PU = np.meshgrid(pcs, pus, indexing="ij")
        ok = PC + PU <= cfg.total_power_cap * (1 + 1e-12)
        rate = np.log2(1 + PC * g_c / cfg.noise_power) + p_suc[0] * np.log2(1 + PU * g_u / cfg.noise_power)
        power = cfg.K * cfg.static_power + cfg.amplifier_coeff_licensed * PC + cfg.amplifier_coeff_unlicensed * PU
        val = np.where(ok, V * power - q_units * scale * rate, np.inf)
        best = min(best, float(val.min()))
    return best
