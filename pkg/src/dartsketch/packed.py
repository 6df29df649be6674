"""Fixed-width integers packed into machine words, with a SWAR prefix sum.

``PackedVector`` stores ``length`` unsigned ``width``-bit integers contiguously
in little-endian order inside ``word_bits``-wide words (64 by default).
``packed_prefix_sum`` evaluates prefix sums by repeatedly halving the number
of summands inside each word (mask the even-position fields, add the shifted
odd-position fields, double the field width) and then folding the words, so
the work is O(width*length/word_bits + log word_bits) word operations rather
than one loop iteration per element.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

__all__ = ["PackedVector", "packed_prefix_sum"]


def _field_mask(field_bits: int, word_bits: int) -> int:
    """Mask selecting fields 0, 2, 4, ... of width field_bits within a word."""
    mask = 0
    pos = 0
    while pos < word_bits:
        mask |= ((1 << field_bits) - 1) << pos
        pos += 2 * field_bits
    return mask


@dataclass
class PackedVector:
    """``length`` unsigned ``width``-bit values packed into ``word_bits`` words."""

    words: List[int]
    width: int
    length: int
    word_bits: int = 64

    @classmethod
    def pack(cls, values: Sequence[int], width: int, word_bits: int = 64) -> "PackedVector":
        if width < 1 or width > word_bits:
            raise ValueError(f"width {width} outside [1, {word_bits}]")
        limit = 1 << width
        n_words = (width * len(values) + word_bits - 1) // word_bits if values else 0
        words = [0] * n_words
        for i, v in enumerate(values):
            if not 0 <= v < limit:
                raise ValueError(f"value {v} does not fit in {width} bits")
            bit = i * width
            w, off = divmod(bit, word_bits)
            words[w] |= v << off
            spill = off + width - word_bits
            if spill > 0:
                words[w + 1] |= v >> (width - spill)
            words[w] &= (1 << word_bits) - 1
        return cls(words=words, width=width, length=len(values), word_bits=word_bits)

    def value(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise IndexError(f"index {i} outside [0, {self.length})")
        bit = i * self.width
        w, off = divmod(bit, self.word_bits)
        v = self.words[w] >> off
        spill = off + self.width - self.word_bits
        if spill > 0:
            v |= self.words[w + 1] << (self.width - spill)
        return v & ((1 << self.width) - 1)

    def values(self) -> List[int]:
        return [self.value(i) for i in range(self.length)]

    def to_bytes(self) -> bytes:
        nbytes = (self.width * self.length + 7) // 8
        out = bytearray()
        for w in self.words:
            out += int(w).to_bytes(self.word_bits // 8, "little")
        return bytes(out[:nbytes])

    @classmethod
    def from_bytes(cls, data: bytes, width: int, length: int, word_bits: int = 64) -> "PackedVector":
        word_bytes = word_bits // 8
        n_words = (width * length + word_bits - 1) // word_bits
        padded = data + b"\x00" * (n_words * word_bytes - len(data))
        words = [
            int.from_bytes(padded[i * word_bytes : (i + 1) * word_bytes], "little")
            for i in range(n_words)
        ]
        return cls(words=words, width=width, length=length, word_bits=word_bits)


def packed_prefix_sum(vec: PackedVector, i: int) -> int:
    """Sum of entries 0..i inclusive via the mask-and-add halving scheme.

    Bit-identical to ``sum(vec.values()[: i + 1])``.
    """
    if not 0 <= i < vec.length:
        raise IndexError(f"index {i} outside [0, {vec.length})")
    w_bits = vec.word_bits
    if w_bits % vec.width != 0:
        raise ValueError(
            f"width {vec.width} must divide word size {w_bits} for the word-parallel scan"
        )
    word_mask = (1 << w_bits) - 1

    # Copy the words covering entries 0..i and zero out everything above.
    end_bit = (i + 1) * vec.width
    n_words = (end_bit + w_bits - 1) // w_bits
    words = list(vec.words[:n_words])
    tail = end_bit - (n_words - 1) * w_bits
    if tail < w_bits:
        words[-1] &= (1 << tail) - 1

    # Halve the summand count per word until fields fill the word.
    field = vec.width
    while field < w_bits:
        mask = _field_mask(field, w_bits)
        for k in range(len(words)):
            w = words[k]
            words[k] = ((w & mask) + ((w >> field) & mask)) & word_mask
        field *= 2

    # Fold words pairwise until one accumulator remains.
    while len(words) > 1:
        nxt = []
        for k in range(0, len(words) - 1, 2):
            nxt.append(words[k] + words[k + 1])
        if len(words) % 2 == 1:
            nxt.append(words[-1])
        words = nxt
    return words[0] if words else 0
