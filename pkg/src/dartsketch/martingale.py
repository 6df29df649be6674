"""Martingale (HIP) transform and the 14-bit compact float for bit budgets.

Wrapping any duplicate-insensitive sketch: before each insertion read
``P = inner.free_area()`` (the exact probability that a new distinct element
changes the state), apply the element, and on a state change accumulate

    estimate += 1 / P          (unbiased running cardinality estimate)
    varacc   += (1 - P) / P^2  (unbiased running estimate of Var(estimate))

Both accumulators are non-decreasing and untouched by duplicates.

``CompactFloat14`` is the 14-bit register format (6-bit exponent, 8-bit
mantissa) used when an experiment charges the estimator against a bit budget:
code 0 is exact zero, code c > 0 encodes ``(1 + mantissa/256) * 2**exponent``
with ``c - 1 = exponent << 8 | mantissa``.  Encoding rounds to nearest and
saturates at the top code, so round-trip relative error is at most 2**-9 for
x >= 1 and the mapping is monotone.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

from ._hashing import cf14_quantize

__all__ = [
    "MartingaleSketch",
    "CompactFloat14",
    "cf14_encode",
    "cf14_decode",
    "cf14_roundtrip",
]

_CF14_MAX_CODE = (1 << 14) - 1


@dataclass(frozen=True)
class CompactFloat14:
    exponent: int  # 6 bits
    mantissa: int  # 8 bits


def cf14_encode(x: float) -> int:
    """Nearest 14-bit code for a non-negative real; saturates on overflow."""
    if x < 0.0:
        raise ValueError(f"compact float encodes non-negative values, got {x}")
    if x == 0.0:
        return 0
    if x < 1.0:
        return 1 if x >= 0.5 else 0  # nearest of {0, 1}: sub-1 values are not representable
    _, e = math.frexp(x)
    exp = e - 1  # x = f * 2**exp with f in [1, 2)
    if exp > 63:
        return _CF14_MAX_CODE
    f = x / 2.0**exp
    mant = int((f - 1.0) * 256.0 + 0.5)
    if mant == 256:
        exp += 1
        mant = 0
        if exp > 63:
            return _CF14_MAX_CODE
    if exp == 63 and mant > 254:
        mant = 254  # the very top code is the saturation value
    return 1 + (exp << 8) + mant


def cf14_decode(code: int) -> float:
    if not 0 <= code <= _CF14_MAX_CODE:
        raise ValueError(f"code {code} outside 14 bits")
    if code == 0:
        return 0.0
    v = code - 1
    return (1.0 + (v & 0xFF) / 256.0) * 2.0 ** (v >> 8)


def cf14_roundtrip(x: float) -> float:
    return cf14_decode(cf14_encode(x))


def cf14_fields(code: int) -> CompactFloat14:
    if code == 0:
        return CompactFloat14(exponent=0, mantissa=0)
    v = code - 1
    return CompactFloat14(exponent=v >> 8, mantissa=v & 0xFF)


class MartingaleSketch:
    """Any sketch with ``add``/``update`` and ``free_area`` plus the running
    estimator and retrospective variance accumulator.

    ``quantize_estimate=True`` stores the estimate through the 14-bit compact
    float after every change, mimicking a 14-bit register; the default keeps
    full double precision.
    """

    def __init__(self, inner, *, quantize_estimate: bool = False):
        self.inner = inner
        self.estimate = 0.0
        self.varacc = 0.0
        self.distinct_changes = 0
        self.quantize_estimate = quantize_estimate

    def insert(self, element: int) -> bool:
        p = self.inner.free_area()
        changed = self.inner.add(element)
        if changed:
            self._account(p)
        return changed

    def observe(self, *update_args) -> bool:
        """Apply a pre-hashed update (dart, or bucket/value) with accounting."""
        p = self.inner.free_area()
        changed = self.inner.update(*update_args)
        if changed:
            self._account(p)
        return changed

    def _account(self, p: float) -> None:
        self.estimate += 1.0 / p
        self.varacc += (1.0 - p) / (p * p)
        self.distinct_changes += 1
        if self.quantize_estimate:
            self.estimate = float(cf14_quantize(self.estimate))

    def variance_estimate(self) -> float:
        return self.varacc

    def free_area(self) -> float:
        return self.inner.free_area()

    def to_bytes(self) -> bytes:
        tail = struct.pack(
            "<BQdd",
            1 if self.quantize_estimate else 0,
            self.distinct_changes,
            self.estimate,
            self.varacc,
        )
        return self.inner.to_bytes() + tail

    @classmethod
    def from_bytes(cls, blob: bytes, inner_cls) -> "MartingaleSketch":
        tail_size = struct.calcsize("<BQdd")
        inner = inner_cls.from_bytes(blob[:-tail_size])
        quant, changes, est, var = struct.unpack("<BQdd", blob[-tail_size:])
        out = cls(inner, quantize_estimate=bool(quant))
        out.distinct_changes = changes
        out.estimate = est
        out.varacc = var
        return out

    def __eq__(self, other) -> bool:
        return (
            type(other) is MartingaleSketch
            and self.inner == other.inner
            and self.estimate == other.estimate
            and self.varacc == other.varacc
            and self.distinct_changes == other.distinct_changes
        )
