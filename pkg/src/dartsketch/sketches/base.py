"""Common sketch plumbing: hashing entry point and binary serialization.

Wire format (all integers little-endian):

    u32  payload length (bytes that follow)
    4s   magic b"DBS1"
    u8   scheme id (1=PCSA, 2=LogLog, 3=MinCount, 4=Curtain)
    u8   flags (bit 0: sawtooth)
    u8   offset mode (0=zero, 1=uniform, 2=curtain, 3=explicit)
    u8   reserved
    f64  q          (MinCount writes 0.0)
    u32  m
    u16  max_level  (MinCount writes 0)
    u16  scheme extra (Curtain: a<<8 | h; MinCount: k; else 0)
    u64  hash seed
    [m * f64 offsets, only when offset mode == 3]
    ...  scheme-specific state payload

Layouts are fixed, so equal sketches serialize to identical bytes across runs
and processes.
"""

from __future__ import annotations

import math
import struct
from typing import Sequence, Tuple

from ..dartboard import (
    PartitionParams,
    hash_to_dart,
    make_curtain_offsets,
    make_uniform_offsets,
    validate_offsets,
    zero_offsets,
)
from .._hashing import MASK64

MAGIC = b"DBS1"
_HEADER = struct.Struct("<4sBBBBdIHHQ")

SCHEME_PCSA = 1
SCHEME_LOGLOG = 2
SCHEME_MINCOUNT = 3
SCHEME_CURTAIN = 4

OFFSETS_ZERO = 0
OFFSETS_UNIFORM = 1
OFFSETS_CURTAIN = 2
OFFSETS_EXPLICIT = 3


def offset_mode(offsets: Sequence[float], m: int) -> int:
    t = tuple(offsets)
    if t == zero_offsets(m):
        return OFFSETS_ZERO
    if t == make_uniform_offsets(m):
        return OFFSETS_UNIFORM
    if m >= 2 and m % 2 == 0 and t == make_curtain_offsets(m):
        return OFFSETS_CURTAIN
    return OFFSETS_EXPLICIT


def offsets_for_mode(mode: int, m: int) -> Tuple[float, ...]:
    if mode == OFFSETS_ZERO:
        return zero_offsets(m)
    if mode == OFFSETS_UNIFORM:
        return make_uniform_offsets(m)
    if mode == OFFSETS_CURTAIN:
        return make_curtain_offsets(m)
    raise ValueError("explicit offsets are stored inline")


class DartboardSketch:
    """Shared behavior for the dartboard sketches (PCSA, LogLog, Curtain)."""

    scheme_id: int = 0

    def __init__(self, params: PartitionParams, offsets, seed: int):
        self.params = params
        self.offsets = validate_offsets(offsets, params.m)
        self.seed = seed & MASK64
        self._inv_ln_q = 1.0 / math.log(params.q)

    # -- stream interface ---------------------------------------------------

    def add(self, element: int) -> bool:
        """Hash one element and apply it; True iff the state changed."""
        return self.update(hash_to_dart(element, self.params, self.offsets, self.seed))

    def update(self, dart) -> bool:
        raise NotImplementedError

    def free_area(self) -> float:
        raise NotImplementedError

    # -- serialization ------------------------------------------------------

    def _header(self, extra: int) -> bytes:
        mode = offset_mode(self.offsets, self.params.m)
        head = _HEADER.pack(
            MAGIC,
            self.scheme_id,
            1 if self.params.sawtooth else 0,
            mode,
            0,
            self.params.q,
            self.params.m,
            self.params.max_level,
            extra,
            self.seed,
        )
        if mode == OFFSETS_EXPLICIT:
            head += struct.pack(f"<{self.params.m}d", *self.offsets)
        return head

    def _check_dart(self, dart) -> None:
        if not 0 <= dart.column < self.params.m:
            raise ValueError(f"dart column {dart.column} outside [0, {self.params.m})")
        if not 0 <= dart.level <= self.params.max_level:
            raise ValueError(
                f"dart level {dart.level} outside [0, {self.params.max_level}]"
            )

    def _check_mergeable(self, other) -> None:
        if type(self) is not type(other):
            raise ValueError("cannot merge different sketch types")
        if (
            self.params != other.params
            or self.offsets != other.offsets
            or self.seed != other.seed
        ):
            raise ValueError("merge requires identical params, offsets, and hash seed")


def frame(payload: bytes) -> bytes:
    return struct.pack("<I", len(payload)) + payload


def unframe(blob: bytes) -> bytes:
    if len(blob) < 4:
        raise ValueError("truncated sketch blob")
    (n,) = struct.unpack_from("<I", blob, 0)
    if len(blob) < 4 + n:
        raise ValueError("truncated sketch blob")
    return blob[4 : 4 + n]


def parse_header(payload: bytes):
    """Returns (scheme_id, sawtooth, q, m, max_level, extra, seed, offsets, body)."""
    if len(payload) < _HEADER.size:
        raise ValueError("sketch payload shorter than header")
    magic, scheme, flags, mode, _res, q, m, max_level, extra, seed = _HEADER.unpack_from(
        payload, 0
    )
    if magic != MAGIC:
        raise ValueError(f"bad sketch magic {magic!r}")
    pos = _HEADER.size
    if mode == OFFSETS_EXPLICIT:
        offsets = struct.unpack_from(f"<{m}d", payload, pos)
        pos += 8 * m
    else:
        offsets = offsets_for_mode(mode, m)
    return scheme, bool(flags & 1), q, m, max_level, extra, seed, offsets, payload[pos:]


def deserialize_sketch(blob: bytes):
    """Reconstruct any dartboard-family sketch from its framed blob."""
    from .pcsa import PcsaSketch
    from .loglog import LogLogSketch
    from .mincount import MinCountSketch
    from .curtain import CurtainSketch

    payload = unframe(blob)
    scheme = payload[4]
    table = {
        SCHEME_PCSA: PcsaSketch,
        SCHEME_LOGLOG: LogLogSketch,
        SCHEME_MINCOUNT: MinCountSketch,
        SCHEME_CURTAIN: CurtainSketch,
    }
    if scheme not in table:
        raise ValueError(f"unknown scheme id {scheme}")
    return table[scheme].from_bytes(blob)
