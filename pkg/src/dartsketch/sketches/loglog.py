"""Base-q LogLog registers plus the standard HyperLogLog estimator for q = 2."""

from __future__ import annotations

from typing import Optional, Sequence

from ..dartboard import DartPlacement, PartitionParams, default_offsets
from .base import SCHEME_LOGLOG, DartboardSketch, frame, parse_header, unframe

EMPTY = -1  # sentinel register value for "no dart seen in this column"


class LogLogSketch(DartboardSketch):
    """Each column keeps the maximum dart level seen (-1 while untouched).

    A column's free area is the mass strictly above its register,
    ``q**-(register + 1 + r + iota) / m``; an untouched column is entirely
    free (1/m, including the offset strip), which keeps ``free_area`` equal
    to the exact state-change probability at every state.
    """

    scheme_id = SCHEME_LOGLOG

    def __init__(
        self,
        q: float,
        m: int,
        *,
        max_level: int = 64,
        sawtooth: bool = False,
        offsets: Optional[Sequence[float]] = None,
        seed: int = 0,
    ):
        params = PartitionParams(q=q, m=m, sawtooth=sawtooth, max_level=max_level)
        if offsets is None:
            offsets = default_offsets(q, m)
        super().__init__(params, offsets, seed)
        self.registers = [EMPTY] * m

    def update(self, dart: DartPlacement) -> bool:
        self._check_dart(dart)
        if dart.level > self.registers[dart.column]:
            self.registers[dart.column] = dart.level
            return True
        return False

    def free_area(self) -> float:
        q = self.params.q
        m = self.params.m
        total = 0.0
        for j, reg in enumerate(self.registers):
            if reg == EMPTY:
                total += 1.0 / m
            elif reg < self.params.max_level:
                total += q ** -(reg + 1.0 + self.offsets[j] + self.params.iota(j)) / m
        return total

    def merge(self, other: "LogLogSketch") -> "LogLogSketch":
        self._check_mergeable(other)
        out = self.copy()
        out.registers = [max(a, b) for a, b in zip(self.registers, other.registers)]
        return out

    def copy(self) -> "LogLogSketch":
        out = LogLogSketch(
            self.params.q,
            self.params.m,
            max_level=self.params.max_level,
            sawtooth=self.params.sawtooth,
            offsets=self.offsets,
            seed=self.seed,
        )
        out.registers = list(self.registers)
        return out

    def __eq__(self, other) -> bool:
        return (
            type(other) is LogLogSketch
            and self.params == other.params
            and self.offsets == other.offsets
            and self.seed == other.seed
            and self.registers == other.registers
        )

    # -- serialization: one byte per register, stored as level + 1 -----------

    def to_bytes(self) -> bytes:
        if self.params.max_level > 254:
            raise ValueError("register byte encoding caps max_level at 254")
        body = bytes(reg + 1 for reg in self.registers)
        return frame(self._header(0) + body)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "LogLogSketch":
        scheme, sawtooth, q, m, max_level, _extra, seed, offsets, body = parse_header(
            unframe(blob)
        )
        if scheme != SCHEME_LOGLOG:
            raise ValueError("not a LogLog blob")
        out = cls(
            q, m, max_level=max_level, sawtooth=sawtooth, offsets=offsets, seed=seed
        )
        out.registers = [b - 1 for b in body[:m]]
        return out


def hll_estimate(state: LogLogSketch, alpha: float) -> float:
    """HyperLogLog estimate ``alpha * m**2 / sum_j 2**-M_j`` (base 2 only).

    ``M_j`` is the classic rank convention: one more than the stored max
    level, 0 for an untouched column.
    """
    if state.params.q != 2.0:
        raise ValueError("the HyperLogLog estimator requires base q = 2")
    if state.params.sawtooth or any(r != 0.0 for r in state.offsets):
        raise ValueError("the HyperLogLog estimator assumes an unsmoothed partition")
    m = state.params.m
    denom = 0.0
    for reg in state.registers:
        rank = reg + 1 if reg >= 0 else 0
        denom += 2.0**-rank
    return alpha * m * m / denom
