from .pcsa import PcsaSketch
from .loglog import LogLogSketch, hll_estimate
from .mincount import MinCountSketch
from .curtain import CurtainSketch
from .base import deserialize_sketch

__all__ = [
    "PcsaSketch",
    "LogLogSketch",
    "hll_estimate",
    "MinCountSketch",
    "CurtainSketch",
    "deserialize_sketch",
]
