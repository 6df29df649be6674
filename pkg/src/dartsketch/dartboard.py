"""Dartboard geometry: cell partitions, smoothing offsets, and hash-to-dart.

The board is the unit square split into ``m`` columns.  Column ``i`` is cut
into cells indexed by an integer *level*; the cell at level ``t`` covers the
vertical interval ``[q**-(t+1+s), q**-(t+s))`` where ``s = r_i + iota_i`` is
the column's total offset (smoothing offset plus the half-level sawtooth step
for odd columns).  Level 0 additionally absorbs the strip ``[q**-s, 1)`` left
over by the offset, and the clamp level ``max_level`` absorbs the entire tail
below it, so each column's cells tile its full ``1/m`` of the board exactly.

A hashed element becomes a dart: a uniform column plus a level drawn with
``Pr(level = t) = area(cell t) * m``.  Everything is a pure function of
(element, seed), so results are reproducible across runs and threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Tuple

from ._hashing import (
    MASK64,
    column_from_hash,
    dart_level,
    derive_seed,
    element_hash,
    unit_from_hash,
)

__all__ = [
    "PartitionParams",
    "DartPlacement",
    "OffsetVector",
    "zero_offsets",
    "make_uniform_offsets",
    "make_curtain_offsets",
    "default_offsets",
    "hash_to_dart",
    "cell_area",
    "column_mass",
    "trial_seed",
]

OffsetVector = Tuple[float, ...]


@dataclass(frozen=True)
class PartitionParams:
    """Cell-partition parameters: base q > 1, m columns, optional sawtooth.

    ``max_level`` caps dart levels; deeper hits clamp onto the cap cell, which
    keeps states finite while conserving probability mass.
    """

    q: float
    m: int
    sawtooth: bool = False
    max_level: int = 64

    def __post_init__(self):
        if not self.q > 1.0:
            raise ValueError(f"base q must exceed 1, got {self.q}")
        if self.m < 1:
            raise ValueError(f"column count m must be >= 1, got {self.m}")
        if self.max_level < 1:
            raise ValueError(f"max_level must be >= 1, got {self.max_level}")

    def iota(self, column: int) -> float:
        """Sawtooth half-step of a column: 1/2 for odd columns when enabled."""
        return 0.5 if (self.sawtooth and column % 2 == 1) else 0.0


@dataclass(frozen=True)
class DartPlacement:
    """Landing spot of a hashed element: column index and clamped level."""

    column: int
    level: int


def zero_offsets(m: int) -> OffsetVector:
    return (0.0,) * m


def make_uniform_offsets(m: int) -> OffsetVector:
    """Uniform smoothing vector (0, 1/m, 2/m, ..., (m-1)/m)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return tuple(i / m for i in range(m))


def make_curtain_offsets(m: int) -> OffsetVector:
    """Smoothing component for the sawtooth partition: entry i is floor(i/2)/m.

    Combined with the built-in sawtooth half-steps this yields the interleaved
    vector (0, 1/2, 1/m, 1/2 + 1/m, 2/m, ..., 1/2 - 1/m, 1 - 1/m), which keeps
    neighboring columns' offsets close.  Requires even m so the interleaving
    closes up.
    """
    if m < 2 or m % 2 != 0:
        raise ValueError(f"curtain offsets need even m >= 2, got {m}")
    return tuple((i // 2) / m for i in range(m))


def default_offsets(q: float, m: int, scheme: str = "uniform") -> OffsetVector:
    """Default smoothing: off for q < 3, on otherwise (overridable upstream)."""
    if q < 3.0:
        return zero_offsets(m)
    if scheme == "curtain":
        return make_curtain_offsets(m)
    return make_uniform_offsets(m)


def validate_offsets(offsets: Sequence[float], m: int) -> OffsetVector:
    r = tuple(float(x) for x in offsets)
    if len(r) != m:
        raise ValueError(f"offset vector has length {len(r)}, expected {m}")
    for x in r:
        if not 0.0 <= x < 1.0:
            raise ValueError(f"offsets must lie in [0, 1), got {x}")
    return r


def trial_seed(master_seed: int, index: int) -> int:
    """Per-trial seed derived from a master seed; a splittable mix."""
    return int(derive_seed(master_seed & MASK64, index & MASK64))


def hash_to_dart(
    element: int,
    params: PartitionParams,
    offsets: Sequence[float],
    seed: int,
) -> DartPlacement:
    """Deterministic dart for a 64-bit element id under a 64-bit seed.

    The column is uniform on [0, m); conditioned on column i, the level is
    floor(-log_q(u) - r_i - iota_i) clamped into [0, max_level], with u a
    uniform real in (0, 1] built from 53 hash bits.
    """
    h = element_hash(seed & MASK64, element & MASK64)
    col = int(column_from_hash(h, params.m))
    u = unit_from_hash(h)
    shift = offsets[col] + params.iota(col)
    lvl = int(dart_level(u, 1.0 / math.log(params.q), shift, params.max_level))
    return DartPlacement(column=col, level=lvl)


def cell_area(
    level: int,
    column: int,
    params: PartitionParams,
    offsets: Sequence[float],
) -> float:
    """Probability mass of one cell; equals Pr(dart lands there).

    Interior levels have mass ``q**-(level+s) * (1 - 1/q) / m``.  Level 0 also
    absorbs the offset strip above it, and the clamp level ``max_level``
    absorbs the entire tail below, so per-column masses sum to exactly 1/m.
    """
    if not 0 <= level <= params.max_level:
        raise ValueError(f"level {level} outside [0, {params.max_level}]")
    if not 0 <= column < params.m:
        raise ValueError(f"column {column} outside [0, {params.m})")
    q = params.q
    s = offsets[column] + params.iota(column)
    if level == 0:
        return (1.0 - q ** -(1.0 + s)) / params.m
    if level == params.max_level:
        return q ** -(level + s) / params.m
    return q ** -(level + s) * (1.0 - 1.0 / q) / params.m


def column_mass(params: PartitionParams) -> float:
    """Mass of one full column (all levels plus the offset strip)."""
    return 1.0 / params.m
