"""Dartboard-model cardinality sketches with martingale estimators.

Sketches: base-q PCSA, base-q LogLog (HyperLogLog estimator at q = 2),
(k, m)-MinCount, and the bit-packed Curtain.  Any of them can be wrapped by
``MartingaleSketch`` for an unbiased running estimate with a retrospective
variance.  ``analysis`` computes the schemes' theoretical constants and
``harness`` reproduces the variance experiments.
"""

from .dartboard import (
    DartPlacement,
    PartitionParams,
    cell_area,
    hash_to_dart,
    make_curtain_offsets,
    make_uniform_offsets,
    trial_seed,
    zero_offsets,
)
from .packed import PackedVector, packed_prefix_sum
from .sketches import (
    CurtainSketch,
    LogLogSketch,
    MinCountSketch,
    PcsaSketch,
    deserialize_sketch,
    hll_estimate,
)
from .martingale import MartingaleSketch, cf14_decode, cf14_encode, cf14_roundtrip
from . import analysis, harness

__version__ = "0.1.0"

__all__ = [
    "PartitionParams",
    "DartPlacement",
    "hash_to_dart",
    "cell_area",
    "zero_offsets",
    "make_uniform_offsets",
    "make_curtain_offsets",
    "trial_seed",
    "PackedVector",
    "packed_prefix_sum",
    "PcsaSketch",
    "LogLogSketch",
    "hll_estimate",
    "MinCountSketch",
    "CurtainSketch",
    "deserialize_sketch",
    "MartingaleSketch",
    "cf14_encode",
    "cf14_decode",
    "cf14_roundtrip",
    "analysis",
    "harness",
]
