"""Base-q PCSA: an m x (max_level + 1) bitmap recording exactly the dart-hit cells."""

from __future__ import annotations

import struct
from typing import Optional, Sequence

from ..dartboard import DartPlacement, PartitionParams, cell_area, default_offsets
from .base import SCHEME_PCSA, DartboardSketch, frame, parse_header, unframe


class PcsaSketch(DartboardSketch):
    """Each column keeps one bit per level; a bit is set iff a dart hit that cell.

    ``free_area`` sums the areas of unset cells, which is exactly the
    probability that the next distinct insertion changes the state.
    """

    scheme_id = SCHEME_PCSA

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
        # One int bitmask per column over levels 0..max_level.
        self.columns = [0] * m

    def update(self, dart: DartPlacement) -> bool:
        self._check_dart(dart)
        bit = 1 << dart.level
        if self.columns[dart.column] & bit:
            return False
        self.columns[dart.column] |= bit
        return True

    def free_area(self) -> float:
        total = 0.0
        for j, word in enumerate(self.columns):
            for lvl in range(self.params.max_level + 1):
                if not (word >> lvl) & 1:
                    total += cell_area(lvl, j, self.params, self.offsets)
        return total

    def merge(self, other: "PcsaSketch") -> "PcsaSketch":
        self._check_mergeable(other)
        out = self.copy()
        out.columns = [a | b for a, b in zip(self.columns, other.columns)]
        return out

    def copy(self) -> "PcsaSketch":
        out = PcsaSketch(
            self.params.q,
            self.params.m,
            max_level=self.params.max_level,
            sawtooth=self.params.sawtooth,
            offsets=self.offsets,
            seed=self.seed,
        )
        out.columns = list(self.columns)
        return out

    def __eq__(self, other) -> bool:
        return (
            type(other) is PcsaSketch
            and self.params == other.params
            and self.offsets == other.offsets
            and self.seed == other.seed
            and self.columns == other.columns
        )

    # -- serialization: column-major bitmap, (max_level+1) bits per column ---

    def to_bytes(self) -> bytes:
        depth = self.params.max_level + 1
        col_bytes = (depth + 7) // 8
        body = b"".join(word.to_bytes(col_bytes, "little") for word in self.columns)
        return frame(self._header(0) + struct.pack("<H", col_bytes) + body)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "PcsaSketch":
        scheme, sawtooth, q, m, max_level, _extra, seed, offsets, body = parse_header(
            unframe(blob)
        )
        if scheme != SCHEME_PCSA:
            raise ValueError("not a PCSA blob")
        (col_bytes,) = struct.unpack_from("<H", body, 0)
        out = cls(
            q, m, max_level=max_level, sawtooth=sawtooth, offsets=offsets, seed=seed
        )
        pos = 2
        for j in range(m):
            out.columns[j] = int.from_bytes(body[pos : pos + col_bytes], "little")
            pos += col_bytes
        return out
