"""Shared keyed-hash and dart-geometry scalar primitives.

The pure-Python sketch classes and the compiled Monte Carlo kernels both call
the jitted routines below, so both paths see bit-identical hash values, column
picks, dart levels, and quantized floats.  All functions are pure.

Hash construction: a splitmix64-style stream keyed by a 64-bit seed.  Element
``e`` under seed ``s`` hashes to ``fin(s + e*GOLDEN)`` where ``fin`` is the
standard three-round avalanche finalizer.  The unit real uses the top 53 bits
mapped to (0, 1]; the column index comes from a second finalizer pass salted
so it is decorrelated from the unit real.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
COLUMN_SALT = 0xD1B54A32D192ED03
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB

# (h53 + 1) * 2**-53 maps the top 53 hash bits onto (0, 1].
U53_SCALE = 2.0**-53


@njit("uint64(uint64)", cache=True)
def mix64(z):
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(_MUL1)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(_MUL2)
    return z ^ (z >> np.uint64(31))


@njit("uint64(uint64, uint64)", cache=True)
def element_hash(seed, element):
    return mix64(seed + element * np.uint64(GOLDEN))


@njit("uint64(uint64, uint64)", cache=True)
def derive_seed(master_seed, index):
    return mix64(master_seed + (index + np.uint64(1)) * np.uint64(GOLDEN))


@njit("float64(uint64)", cache=True)
def unit_from_hash(h):
    return float((h >> np.uint64(11)) + np.uint64(1)) * U53_SCALE


@njit("int64(uint64, int64)", cache=True)
def column_from_hash(h, m):
    return int(mix64(h ^ np.uint64(COLUMN_SALT)) % np.uint64(m))


@njit("int64(float64, float64, float64, int64)", cache=True)
def dart_level(u, inv_ln_q, shift, max_level):
    # floor(-log_q(u) - shift), clamped into [0, max_level].  int() truncation
    # equals floor for the non-negative branch; the negative branch is clamped
    # to 0 anyway.
    x = -math.log(u) * inv_ln_q - shift
    lvl = int(x)
    if lvl < 0:
        return 0
    if lvl > max_level:
        return max_level
    return lvl


@njit("float64(float64)", cache=True)
def cf14_quantize(x):
    # Round-trip through the 14-bit float (6-bit exponent, 8-bit mantissa).
    # Mirrors martingale.cf14_encode/cf14_decode; keep the two in sync.
    if x <= 0.0:
        return 0.0
    if x < 1.0:
        return 1.0 if x >= 0.5 else 0.0
    m, e = math.frexp(x)
    exp = e - 1  # x = f * 2**exp with f in [1, 2)
    if exp > 63:
        return (1.0 + 254.0 / 256.0) * 2.0**63
    f = x / 2.0**exp
    mant = int((f - 1.0) * 256.0 + 0.5)
    if mant == 256:
        exp += 1
        mant = 0
        if exp > 63:
            return (1.0 + 254.0 / 256.0) * 2.0**63
    if exp == 63 and mant > 254:
        mant = 254
    return (1.0 + mant / 256.0) * 2.0**exp


@njit(cache=True)
def bulk_darts(seed, n_elements, m, inv_ln_q, shifts, iotas, max_level):
    """Columns and levels for elements 1..n under one seed (test helper)."""
    cols = np.empty(n_elements, np.int64)
    lvls = np.empty(n_elements, np.int64)
    for i in range(n_elements):
        h = element_hash(np.uint64(seed), np.uint64(i + 1))
        c = column_from_hash(h, m)
        u = unit_from_hash(h)
        cols[i] = c
        lvls[i] = dart_level(u, inv_ln_q, shifts[c] + iotas[c], max_level)
    return cols, lvls
