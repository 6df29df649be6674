"""Compiled per-trial simulation loops for the Monte Carlo harness.

Each kernel runs ``trials`` independent streams in parallel (one prange
iteration per trial, no shared mutable state), feeding the integers
``elem_base+1 .. elem_base+lam`` (each repeated ``dup`` times) through a fresh
sketch and accumulating the martingale estimator.  Free areas are maintained
incrementally: the per-column contribution deltas are O(1) per state change,
so the no-change fast path is a hash, a level computation, and one compare.

Trial t uses the derived seed ``derive_seed(master_seed, t)`` and a
counter-based hash, so results are bit-identical for a fixed configuration
regardless of thread count or scheduling.

The state-transition logic mirrors the pure-Python sketch classes
operation-for-operation (same hash bits, same integer comparisons); the two
paths are cross-checked in the test suite.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

from ._hashing import (
    cf14_quantize,
    column_from_hash,
    dart_level,
    derive_seed,
    element_hash,
    unit_from_hash,
)

U64 = np.uint64


@njit("float64(int64, float64, float64, float64, int64)", cache=True)
def _cell_area(lvl, shift, q, inv_m, max_level):
    # Level 0 absorbs the offset strip; the clamp level absorbs the tail.
    if lvl <= 0:
        return (1.0 - q ** -(1.0 + shift)) * inv_m
    if lvl >= max_level:
        return q ** -(lvl + shift) * inv_m
    return q ** -(lvl + shift) * (1.0 - 1.0 / q) * inv_m


@njit(cache=True, parallel=True)
def mll_trials(master_seed, trials, lam, dup, elem_base, m, q, shifts, max_level, quantize):
    """Martingale LogLog: registers of max levels, incremental free area."""
    est_out = np.zeros(trials)
    var_out = np.zeros(trials)
    fin_out = np.zeros(trials)
    inv_ln_q = 1.0 / math.log(q)
    inv_m = 1.0 / m
    for t in prange(trials):
        seed = derive_seed(U64(master_seed), U64(t))
        regs = np.full(m, -1, np.int64)
        contrib = np.full(m, inv_m)
        free = 1.0
        est = 0.0
        vac = 0.0
        for e in range(1, lam + 1):
            for _rep in range(dup):
                hsh = element_hash(seed, U64(elem_base + e))
                col = column_from_hash(hsh, m)
                lvl = dart_level(unit_from_hash(hsh), inv_ln_q, shifts[col], max_level)
                if lvl > regs[col]:
                    p = free
                    est += 1.0 / p
                    vac += (1.0 - p) / (p * p)
                    if quantize:
                        est = cf14_quantize(est)
                    if lvl < max_level:
                        newc = q ** -(lvl + 1.0 + shifts[col]) * inv_m
                    else:
                        newc = 0.0
                    free += newc - contrib[col]
                    contrib[col] = newc
                    regs[col] = lvl
        est_out[t] = est
        var_out[t] = vac
        fin_out[t] = free
    return est_out, var_out, fin_out


@njit(cache=True, parallel=True)
def mpcsa_trials(master_seed, trials, lam, dup, elem_base, m, q, shifts, max_level, quantize):
    """Martingale PCSA: per-cell occupancy bitmap."""
    est_out = np.zeros(trials)
    var_out = np.zeros(trials)
    fin_out = np.zeros(trials)
    inv_ln_q = 1.0 / math.log(q)
    inv_m = 1.0 / m
    depth = max_level + 1
    for t in prange(trials):
        seed = derive_seed(U64(master_seed), U64(t))
        hit = np.zeros((m, depth), np.uint8)
        free = 1.0
        est = 0.0
        vac = 0.0
        for e in range(1, lam + 1):
            for _rep in range(dup):
                hsh = element_hash(seed, U64(elem_base + e))
                col = column_from_hash(hsh, m)
                lvl = dart_level(unit_from_hash(hsh), inv_ln_q, shifts[col], max_level)
                if hit[col, lvl] == 0:
                    p = free
                    est += 1.0 / p
                    vac += (1.0 - p) / (p * p)
                    if quantize:
                        est = cf14_quantize(est)
                    free -= _cell_area(lvl, shifts[col], q, inv_m, max_level)
                    hit[col, lvl] = 1
        est_out[t] = est
        var_out[t] = vac
        fin_out[t] = free
    return est_out, var_out, fin_out


@njit(cache=True, parallel=True)
def mmincount_trials(master_seed, trials, lam, dup, elem_base, m, k, quantize):
    """Martingale MinCount: k smallest distinct hash reals per bucket."""
    est_out = np.zeros(trials)
    var_out = np.zeros(trials)
    fin_out = np.zeros(trials)
    inv_m = 1.0 / m
    for t in prange(trials):
        seed = derive_seed(U64(master_seed), U64(t))
        vals = np.full((m, k), 2.0)  # sentinel above any hash real
        cnt = np.zeros(m, np.int64)
        free = 1.0
        est = 0.0
        vac = 0.0
        for e in range(1, lam + 1):
            for _rep in range(dup):
                hsh = element_hash(seed, U64(elem_base + e))
                col = column_from_hash(hsh, m)
                u = unit_from_hash(hsh)
                n = cnt[col]
                if n == k and u >= vals[col, k - 1]:
                    continue
                # duplicate of a stored real: no change
                dup_hit = False
                for i in range(n):
                    if vals[col, i] == u:
                        dup_hit = True
                        break
                if dup_hit:
                    continue
                p = free
                est += 1.0 / p
                vac += (1.0 - p) / (p * p)
                if quantize:
                    est = cf14_quantize(est)
                old_thr = vals[col, k - 1] if n == k else 1.0
                # sorted insert; the largest value falls off at capacity
                i = n if n < k else k - 1
                while i > 0 and vals[col, i - 1] > u:
                    vals[col, i] = vals[col, i - 1]
                    i -= 1
                vals[col, i] = u
                if n < k:
                    cnt[col] = n + 1
                new_thr = vals[col, k - 1] if cnt[col] == k else 1.0
                free += (new_thr - old_thr) * inv_m
        est_out[t] = est
        var_out[t] = vac
        fin_out[t] = free
    return est_out, var_out, fin_out


@njit(cache=True)
def _tension_at(g2, j, m, a2):
    if j > 0 and g2[j] - g2[j - 1] == -a2:
        return True
    if j < m - 1 and g2[j + 1] - g2[j] == a2:
        return True
    return False


@njit(cache=True)
def _occ_from(g2c, bits, tension, iota2, h, ht2):
    if ht2 < iota2:
        return False
    if ht2 > g2c:
        return False
    d = (g2c - ht2) >> 1
    if tension:
        slot = d
    elif d == 0:
        return True
    else:
        slot = d - 1
    if slot < h:
        return (bits >> slot) & 1 != 0
    return True


@njit(cache=True)
def _curtain_col_free(g2c, bits, tension, iota2, shift, q, inv_m, max_level, h):
    if g2c < iota2:
        return inv_m
    lvl = (g2c - iota2) >> 1
    total = 0.0
    if lvl < max_level:
        total += q ** -(lvl + 1.0 + shift) * inv_m
    base2 = g2c if tension else g2c - 2
    for s in range(h):
        ht2 = base2 - 2 * s
        if ht2 < iota2:
            break
        if (bits >> s) & 1 == 0:
            total += _cell_area((ht2 - iota2) >> 1, shift, q, inv_m, max_level)
    return total


@njit(cache=True, parallel=True)
def mcurtain_trials(
    master_seed, trials, lam, dup, elem_base, m, q, a, h, shifts, iota2, max_level, quantize
):
    """Martingale Curtain: cone raises plus window bookkeeping.

    ``shifts[j] = r_j + iota_j`` feeds areas and levels; ``iota2[j]`` is the
    doubled sawtooth step defining each column's height lattice.
    """
    est_out = np.zeros(trials)
    var_out = np.zeros(trials)
    fin_out = np.zeros(trials)
    inv_ln_q = 1.0 / math.log(q)
    inv_m = 1.0 / m
    a2 = 2 * a - 1
    for t in prange(trials):
        seed = derive_seed(U64(master_seed), U64(t))
        g2 = np.empty(m, np.int64)
        for j in range(m):
            g2[j] = iota2[j] - 2
        bits = np.zeros(m, np.uint32)
        tens = np.zeros(m, np.uint8)
        for j in range(m):
            tens[j] = 1 if _tension_at(g2, j, m, a2) else 0
        contrib = np.full(m, inv_m)
        old_g2 = np.empty(m, np.int64)
        old_bits = np.empty(m, np.uint32)
        old_tens = np.empty(m, np.uint8)
        free = 1.0
        est = 0.0
        vac = 0.0
        for e in range(1, lam + 1):
            for _rep in range(dup):
                hsh = element_hash(seed, U64(elem_base + e))
                col = column_from_hash(hsh, m)
                lvl = dart_level(unit_from_hash(hsh), inv_ln_q, shifts[col], max_level)
                t2 = 2 * lvl + iota2[col]
                changed = False
                p = free
                if t2 > g2[col]:
                    # cone raise: new curtain is max(old, dart cone)
                    lo = col
                    while lo > 0 and t2 - (col - lo + 1) * a2 > g2[lo - 1]:
                        lo -= 1
                    hi = col
                    while hi < m - 1 and t2 - (hi + 1 - col) * a2 > g2[hi + 1]:
                        hi += 1
                    rb_lo = lo - 1 if lo > 0 else 0
                    rb_hi = hi + 1 if hi < m - 1 else m - 1
                    for j in range(rb_lo, rb_hi + 1):
                        old_g2[j] = g2[j]
                        old_bits[j] = bits[j]
                        old_tens[j] = tens[j]
                        free -= contrib[j]
                    for j in range(lo, hi + 1):
                        cone = t2 - abs(j - col) * a2
                        if cone > g2[j]:
                            g2[j] = cone
                    for j in range(rb_lo, rb_hi + 1):
                        tj = 1 if _tension_at(g2, j, m, a2) else 0
                        tens[j] = tj
                        if g2[j] != old_g2[j] or tj != old_tens[j]:
                            base2 = g2[j] if tj else g2[j] - 2
                            nb = 0
                            for s in range(h):
                                ht2 = base2 - 2 * s
                                if ht2 < iota2[j]:
                                    break
                                occ = _occ_from(
                                    old_g2[j], old_bits[j], old_tens[j] != 0,
                                    iota2[j], h, ht2,
                                )
                                if j == col and ht2 == t2:
                                    occ = True
                                if occ:
                                    nb |= 1 << s
                            bits[j] = nb
                        c = _curtain_col_free(
                            g2[j], bits[j], tens[j] != 0, iota2[j], shifts[j],
                            q, inv_m, max_level, h,
                        )
                        contrib[j] = c
                        free += c
                    changed = True
                else:
                    d = (g2[col] - t2) >> 1
                    if tens[col] != 0:
                        slot = d
                    elif d == 0:
                        slot = -1
                    else:
                        slot = d - 1
                    if 0 <= slot < h and (bits[col] >> slot) & 1 == 0:
                        bits[col] |= 1 << slot
                        area = _cell_area(lvl, shifts[col], q, inv_m, max_level)
                        contrib[col] -= area
                        free -= area
                        changed = True
                if changed:
                    est += 1.0 / p
                    vac += (1.0 - p) / (p * p)
                    if quantize:
                        est = cf14_quantize(est)
        est_out[t] = est
        var_out[t] = vac
        fin_out[t] = free
    return est_out, var_out, fin_out


@njit(cache=True, parallel=True)
def hll_trials(master_seed, trials, lam, dup, elem_base, m, alpha, max_level):
    """Plain HyperLogLog at q = 2: registers plus the harmonic-mean estimate."""
    est_out = np.zeros(trials)
    var_out = np.full(trials, np.nan)
    fin_out = np.zeros(trials)
    inv_ln_q = 1.0 / math.log(2.0)
    inv_m = 1.0 / m
    for t in prange(trials):
        seed = derive_seed(U64(master_seed), U64(t))
        regs = np.full(m, -1, np.int64)
        for e in range(1, lam + 1):
            for _rep in range(dup):
                hsh = element_hash(seed, U64(elem_base + e))
                col = column_from_hash(hsh, m)
                lvl = dart_level(unit_from_hash(hsh), inv_ln_q, 0.0, max_level)
                if lvl > regs[col]:
                    regs[col] = lvl
        denom = 0.0
        free = 0.0
        for j in range(m):
            rank = regs[j] + 1  # classic rank convention; 0 when untouched
            denom += 2.0**-rank
            if regs[j] < 0:
                free += inv_m
            elif regs[j] < max_level:
                free += 2.0 ** -(regs[j] + 1.0) * inv_m
        est_out[t] = alpha * m * m / denom
        fin_out[t] = free
    return est_out, var_out, fin_out
