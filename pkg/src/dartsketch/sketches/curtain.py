"""The Curtain sketch: a bit-packed dominating envelope over column maxima.

The per-column max dart heights ``g`` are not stored.  Instead the sketch
keeps the *curtain* ``ghat``: the pointwise-minimal vector that dominates
``g`` while every consecutive difference stays in the offset set
``O_a = {-(a-1/2), ..., -1/2, +1/2, ..., a-1/2}``, plus an h x m window
bit-array ``b`` describing the cells just below the curtain.

Cell semantics (heights on the sawtooth lattice; integer levels for even
columns, half-integer for odd):

* every cell strictly above the curtain is free;
* a column is *in tension* when its curtain height is pinned by a neighbor
  (equivalently, its left offset is min(O_a) or its right offset is max(O_a));
  then the window covers the curtain cell and the h-1 cells below it, and a
  window cell is occupied iff its bit is set;
* a column not in tension has a dart in its curtain cell (occupied), and the
  window covers the h cells strictly below it;
* everything below the window is occupied.

Window bits always record exact dart presence, so the incremental update can
rebuild shifted windows from the previous occupancy alone; the naive
reconstruction from the full dart multiset is kept in the test suite as an
oracle.

Internally heights are stored doubled (``height2 = 2 * height``) so the whole
state is integer arithmetic.  The empty sketch clamps the curtain one level
*below* each column's bottom cell, making the whole board free: the first
dart always changes the state and ``free_area`` starts at exactly 1.
"""

from __future__ import annotations

from typing import List, Optional, Sequence

from ..dartboard import (
    DartPlacement,
    PartitionParams,
    cell_area,
    default_offsets,
)
from ..packed import PackedVector, packed_prefix_sum
from .base import SCHEME_CURTAIN, DartboardSketch, frame, parse_header, unframe


def _gbits(max_level: int) -> int:
    return max(1, (max_level - 1).bit_length())


class CurtainSketch(DartboardSketch):
    scheme_id = SCHEME_CURTAIN

    def __init__(
        self,
        q: float,
        m: int,
        a: int = 2,
        h: int = 1,
        *,
        max_level: int = 64,
        offsets: Optional[Sequence[float]] = None,
        seed: int = 0,
    ):
        if a < 1 or a & (a - 1):
            raise ValueError(f"offset bound a must be a power of two, got {a}")
        if not 0 <= h <= 32:
            raise ValueError(f"window depth h must be in [0, 32], got {h}")
        params = PartitionParams(q=q, m=m, sawtooth=True, max_level=max_level)
        if offsets is None:
            offsets = default_offsets(q, m, scheme="curtain")
        super().__init__(params, offsets, seed)
        self.a = a
        self.h = h
        self._a2 = 2 * a - 1  # max |offset| in doubled-height units
        self._iota2 = [1 if j % 2 else 0 for j in range(m)]
        self._floor2 = [i2 - 2 for i2 in self._iota2]
        self.heights2: List[int] = list(self._floor2)
        self.window_bits: List[int] = [0] * m

    # -- curtain structure ----------------------------------------------------

    def in_tension(self, column: int) -> bool:
        g2 = self.heights2
        a2 = self._a2
        if column > 0 and g2[column] - g2[column - 1] == -a2:
            return True
        if column < self.params.m - 1 and g2[column + 1] - g2[column] == a2:
            return True
        return False

    def _window_base2(self, column: int, tension: bool) -> int:
        # Doubled height of window slot 0; slot s sits at base - 2*s.
        return self.heights2[column] - (0 if tension else 2)

    @staticmethod
    def _occupied_from(g2c: int, bits: int, tension: bool, iota2: int, h: int, ht2: int) -> bool:
        """Dart-presence reading of one cell from a (curtain, bits) snapshot.

        Valid for cells at or above the window bottom (lower cells fall under
        the blanket occupied rule and are never queried here).
        """
        if ht2 < iota2:
            return False  # below the board: no such cell
        if ht2 > g2c:
            return False  # above the curtain: provably dart-free
        d = (g2c - ht2) >> 1
        if tension:
            slot = d
        elif d == 0:
            return True  # curtain cell of a non-tension column holds a dart
        else:
            slot = d - 1
        if slot < h:
            return bool((bits >> slot) & 1)
        return True  # below the window: blanket occupied

    def occupied(self, column: int, level: int) -> bool:
        """Occupancy of a cell under the decoding rules (test/debug aid)."""
        ht2 = 2 * level + self._iota2[column]
        g2c = self.heights2[column]
        if ht2 > g2c:
            return False
        d = (g2c - ht2) >> 1
        tension = self.in_tension(column)
        if tension:
            slot = d
        elif d == 0:
            return True
        else:
            slot = d - 1
        if slot < self.h:
            return bool((self.window_bits[column] >> slot) & 1)
        return True

    # -- updates ----------------------------------------------------------------

    def update(self, dart: DartPlacement) -> bool:
        self._check_dart(dart)
        col = dart.column
        t2 = 2 * dart.level + self._iota2[col]
        g2 = self.heights2
        if t2 > g2[col]:
            self._raise_curtain(col, t2)
            return True
        d = (g2[col] - t2) >> 1
        if self.in_tension(col):
            slot = d
        elif d == 0:
            return False  # occupied curtain cell
        else:
            slot = d - 1
        if slot >= self.h:
            return False  # blanket-occupied region below the window
        if (self.window_bits[col] >> slot) & 1:
            return False
        self.window_bits[col] |= 1 << slot
        return True

    def _raise_curtain(self, col: int, t2: int) -> None:
        """Pointwise-max the curtain with the dart's cone and rebuild windows.

        Adding one dart adds one cone ``t2 - |j - col| * (a - 1/2)``, so the
        new minimal dominating curtain is the old one maxed with that cone.
        Raised columns and their immediate neighbors may change tension;
        their windows are re-read from the old occupancy at the new heights.
        """
        m = self.params.m
        a2 = self._a2
        g2 = self.heights2
        lo = col
        while lo > 0 and t2 - (col - lo + 1) * a2 > g2[lo - 1]:
            lo -= 1
        hi = col
        while hi < m - 1 and t2 - (hi + 1 - col) * a2 > g2[hi + 1]:
            hi += 1
        rb_lo = max(0, lo - 1)
        rb_hi = min(m - 1, hi + 1)

        old_g2 = g2[rb_lo : rb_hi + 1]
        old_bits = self.window_bits[rb_lo : rb_hi + 1]
        old_tens = [self.in_tension(j) for j in range(rb_lo, rb_hi + 1)]

        for j in range(lo, hi + 1):
            cone = t2 - abs(j - col) * a2
            if cone > g2[j]:
                g2[j] = cone

        for j in range(rb_lo, rb_hi + 1):
            k = j - rb_lo
            tension = self.in_tension(j)
            if g2[j] == old_g2[k] and tension == old_tens[k]:
                continue  # window did not move
            base2 = self._window_base2(j, tension)
            bits = 0
            for s in range(self.h):
                ht2 = base2 - 2 * s
                if ht2 < self._iota2[j]:
                    break
                occ = self._occupied_from(
                    old_g2[k], old_bits[k], old_tens[k], self._iota2[j], self.h, ht2
                )
                if j == col and ht2 == t2:
                    occ = True
                if occ:
                    bits |= 1 << s
            self.window_bits[j] = bits

    # -- free area ---------------------------------------------------------------

    def _column_free(self, j: int) -> float:
        g2c = self.heights2[j]
        iota2 = self._iota2[j]
        if g2c < iota2:
            return 1.0 / self.params.m  # curtain below the board: column all free
        lvl = (g2c - iota2) >> 1
        q = self.params.q
        total = 0.0
        if lvl < self.params.max_level:
            # everything strictly above the curtain, clamp cell included
            total += q ** -(lvl + 1.0 + self.offsets[j] + 0.5 * iota2) / self.params.m
        tension = self.in_tension(j)
        base2 = self._window_base2(j, tension)
        for s in range(self.h):
            ht2 = base2 - 2 * s
            if ht2 < iota2:
                break
            if not (self.window_bits[j] >> s) & 1:
                total += cell_area((ht2 - iota2) >> 1, j, self.params, self.offsets)
        return total

    def free_area(self) -> float:
        return sum(self._column_free(j) for j in range(self.params.m))

    # -- merging -------------------------------------------------------------------

    def merge(self, other: "CurtainSketch") -> "CurtainSketch":
        self._check_mergeable(other)
        if (self.a, self.h) != (other.a, other.h):
            raise ValueError("merge requires identical (a, h)")
        m = self.params.m
        out = self.copy()
        out.heights2 = [max(x, y) for x, y in zip(self.heights2, other.heights2)]
        tens_a = [self.in_tension(j) for j in range(m)]
        tens_b = [other.in_tension(j) for j in range(m)]
        for j in range(m):
            tension = out.in_tension(j)
            base2 = out._window_base2(j, tension)
            bits = 0
            for s in range(self.h):
                ht2 = base2 - 2 * s
                if ht2 < self._iota2[j]:
                    break
                occ = self._occupied_from(
                    self.heights2[j], self.window_bits[j], tens_a[j], self._iota2[j], self.h, ht2
                ) or self._occupied_from(
                    other.heights2[j], other.window_bits[j], tens_b[j], self._iota2[j], self.h, ht2
                )
                if occ:
                    bits |= 1 << s
            out.window_bits[j] = bits
        return out

    def copy(self) -> "CurtainSketch":
        out = CurtainSketch(
            self.params.q,
            self.params.m,
            self.a,
            self.h,
            max_level=self.params.max_level,
            offsets=self.offsets,
            seed=self.seed,
        )
        out.heights2 = list(self.heights2)
        out.window_bits = list(self.window_bits)
        return out

    def __eq__(self, other) -> bool:
        return (
            type(other) is CurtainSketch
            and self.params == other.params
            and (self.a, self.h) == (other.a, other.h)
            and self.offsets == other.offsets
            and self.seed == other.seed
            and self.heights2 == other.heights2
            and self.window_bits == other.window_bits
        )

    # -- packed encoding -------------------------------------------------------------

    @property
    def offset_bits(self) -> int:
        return (2 * self.a - 1).bit_length()  # log2(2a), a is a power of two

    @property
    def dartboard_bits(self) -> int:
        """Exact bit count of the packed dartboard part."""
        m = self.params.m
        return _gbits(self.params.max_level) + (m - 1) * self.offset_bits + self.h * m

    def offset_codes(self) -> List[int]:
        """Unsigned codes for consecutive curtain offsets: code -> (code - a + 1/2)."""
        a2 = self._a2
        codes = []
        for i in range(1, self.params.m):
            o2 = self.heights2[i] - self.heights2[i - 1]
            codes.append((o2 + a2) >> 1)
        return codes

    def packed_offsets(self) -> PackedVector:
        # The word-parallel prefix sum needs the field width to divide the
        # word size; widths like 3 (a = 4) get byte-aligned narrower words.
        width = self.offset_bits
        word_bits = 64 if 64 % width == 0 else max((64 // (8 * width)), 1) * 8 * width
        return PackedVector.pack(self.offset_codes(), width, word_bits=word_bits)

    def decode_height2(self, i: int, packed: Optional[PackedVector] = None) -> int:
        """Curtain height (doubled) at column i via the packed prefix sum.

        The stored codes are unsigned; the signed offset sum is recovered by
        subtracting the per-entry bias (a - 1/2) times the column index.
        """
        if not 0 <= i < self.params.m:
            raise IndexError(f"column {i} outside [0, {self.params.m})")
        if i == 0:
            return self.heights2[0]
        vec = packed if packed is not None else self.packed_offsets()
        return self.heights2[0] + 2 * packed_prefix_sum(vec, i - 1) - i * self._a2

    def decode_height(self, i: int, packed: Optional[PackedVector] = None) -> float:
        return self.decode_height2(i, packed) / 2.0

    def _pack_dartboard(self) -> bytes:
        gb = _gbits(self.params.max_level)
        g0_code = (self.heights2[0] >> 1) + 1  # floor sits at height -1
        if not 0 <= g0_code < (1 << gb):
            raise ValueError(
                f"column-0 curtain height {self.heights2[0] / 2} does not fit "
                f"{gb}-bit base field"
            )
        acc = g0_code
        pos = gb
        for code in self.offset_codes():
            acc |= code << pos
            pos += self.offset_bits
        for j in range(self.params.m):
            acc |= (self.window_bits[j] & ((1 << self.h) - 1)) << pos
            pos += self.h
        assert pos == self.dartboard_bits
        return acc.to_bytes((pos + 7) // 8, "little")

    def to_bytes(self) -> bytes:
        extra = (self.a << 8) | self.h
        return frame(self._header(extra) + self._pack_dartboard())

    @classmethod
    def from_bytes(cls, blob: bytes) -> "CurtainSketch":
        scheme, _saw, q, m, max_level, extra, seed, offsets, body = parse_header(
            unframe(blob)
        )
        if scheme != SCHEME_CURTAIN:
            raise ValueError("not a Curtain blob")
        a, h = extra >> 8, extra & 0xFF
        out = cls(q, m, a, h, max_level=max_level, offsets=offsets, seed=seed)
        acc = int.from_bytes(body, "little")
        gb = _gbits(max_level)
        g0_code = acc & ((1 << gb) - 1)
        pos = gb
        out.heights2[0] = (g0_code - 1) << 1
        ob = out.offset_bits
        a2 = out._a2
        for i in range(1, m):
            code = (acc >> pos) & ((1 << ob) - 1)
            pos += ob
            out.heights2[i] = out.heights2[i - 1] + (2 * code - a2)
        hmask = (1 << h) - 1
        for j in range(m):
            out.window_bits[j] = (acc >> pos) & hmask
            pos += h
        return out
