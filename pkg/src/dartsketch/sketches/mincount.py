"""(k, m)-MinCount: the k smallest distinct hash reals per bucket."""

from __future__ import annotations

import struct
from bisect import bisect_left, insort
from typing import List

from .._hashing import MASK64, column_from_hash, element_hash, unit_from_hash
from .base import _HEADER, MAGIC, OFFSETS_ZERO, SCHEME_MINCOUNT, frame, parse_header, unframe


class MinCountSketch:
    """m buckets, each keeping its k smallest distinct hash values in (0, 1].

    A bucket's state-change probability is its k-th smallest value (or 1 while
    it holds fewer than k), so ``free_area`` is the mean of those per-bucket
    thresholds.
    """

    scheme_id = SCHEME_MINCOUNT

    def __init__(self, m: int, k: int, *, seed: int = 0):
        if m < 1:
            raise ValueError(f"bucket count m must be >= 1, got {m}")
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        self.m = m
        self.k = k
        self.seed = seed & MASK64
        self.buckets: List[List[float]] = [[] for _ in range(m)]

    # -- stream interface ---------------------------------------------------

    def add(self, element: int) -> bool:
        h = element_hash(self.seed, element & MASK64)
        bucket = int(column_from_hash(h, self.m))
        return self.update(bucket, unit_from_hash(h))

    def update(self, bucket: int, hashreal: float) -> bool:
        if not 0 <= bucket < self.m:
            raise ValueError(f"bucket {bucket} outside [0, {self.m})")
        if not 0.0 < hashreal <= 1.0:
            raise ValueError(f"hash value {hashreal} outside (0, 1]")
        vals = self.buckets[bucket]
        pos = bisect_left(vals, hashreal)
        if pos < len(vals) and vals[pos] == hashreal:
            return False  # exact duplicate real: no change
        if len(vals) < self.k:
            insort(vals, hashreal)
            return True
        if hashreal < vals[-1]:
            insort(vals, hashreal)
            vals.pop()
            return True
        return False

    def free_area(self) -> float:
        total = 0.0
        for vals in self.buckets:
            total += vals[-1] if len(vals) == self.k else 1.0
        return total / self.m

    def merge(self, other: "MinCountSketch") -> "MinCountSketch":
        if type(other) is not MinCountSketch:
            raise ValueError("cannot merge different sketch types")
        if (self.m, self.k, self.seed) != (other.m, other.k, other.seed):
            raise ValueError("merge requires identical m, k, and hash seed")
        out = MinCountSketch(self.m, self.k, seed=self.seed)
        for j in range(self.m):
            out.buckets[j] = sorted(set(self.buckets[j]) | set(other.buckets[j]))[: self.k]
        return out

    def copy(self) -> "MinCountSketch":
        out = MinCountSketch(self.m, self.k, seed=self.seed)
        out.buckets = [list(vals) for vals in self.buckets]
        return out

    def __eq__(self, other) -> bool:
        return (
            type(other) is MinCountSketch
            and (self.m, self.k, self.seed) == (other.m, other.k, other.seed)
            and self.buckets == other.buckets
        )

    # -- serialization: per bucket, u8 count then that many f64 values -------

    def to_bytes(self) -> bytes:
        if self.k > 255:
            raise ValueError("bucket count byte encoding caps k at 255")
        head = _HEADER.pack(
            MAGIC, self.scheme_id, 0, OFFSETS_ZERO, 0, 0.0, self.m, 0, self.k, self.seed
        )
        parts = [head]
        for vals in self.buckets:
            parts.append(struct.pack(f"<B{len(vals)}d", len(vals), *vals))
        return frame(b"".join(parts))

    @classmethod
    def from_bytes(cls, blob: bytes) -> "MinCountSketch":
        scheme, _saw, _q, m, _max_level, k, seed, _offsets, body = parse_header(
            unframe(blob)
        )
        if scheme != SCHEME_MINCOUNT:
            raise ValueError("not a MinCount blob")
        out = cls(m, k, seed=seed)
        pos = 0
        for j in range(m):
            n = body[pos]
            pos += 1
            out.buckets[j] = list(struct.unpack_from(f"<{n}d", body, pos))
            pos += 8 * n
        return out
