"""Monte Carlo experiment engine: trial execution, aggregation, merge checks.

Streams are the integers ``1..lam`` (hashing supplies all randomness); an
optional duplicate factor repeats each element to exercise duplicate
insensitivity.  Trial ``t`` of a run derives its hash seed from the master
seed with a splittable mix, so trials are independent of scheduling and a
fixed configuration reproduces bit-identical statistics at any thread count.

Two engines execute trials: the compiled kernels (default, used for anything
large) and a pure-Python reference path built on the sketch classes; the two
are cross-checked in the tests.  Aggregation uses numpy's pairwise-summation
mean/variance over the per-trial estimate array, joined in trial order.
"""

from __future__ import annotations

import json
import math
import os
import random
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import _kernels, analysis
from ._hashing import MASK64
from .dartboard import (
    make_curtain_offsets,
    make_uniform_offsets,
    trial_seed,
    zero_offsets,
)
from .martingale import MartingaleSketch
from .sketches import CurtainSketch, LogLogSketch, MinCountSketch, PcsaSketch, hll_estimate

__all__ = [
    "ExperimentConfig",
    "TrialStats",
    "run_trials",
    "empirical_kappa",
    "merge_check",
    "MergeCheckReport",
    "distribution_export",
    "make_inner_sketch",
    "TABLE3_CONFIGS",
    "run_table3",
    "resolve_threads",
]

SCHEMES = ("mpcsa", "mloglog", "mcurtain", "mmincount", "hll")

# Plain-sketch spellings accepted anywhere a scheme is named; the inner state
# evolution is identical, the estimator wrapper just never gets read.
SCHEME_ALIASES = {
    "pcsa": "mpcsa",
    "loglog": "mloglog",
    "curtain": "mcurtain",
    "mincount": "mmincount",
}


def normalize_scheme(name: str) -> str:
    return SCHEME_ALIASES.get(name, name)


# The six bit-budget configurations of the variance study: at 128 bits the
# martingale schemes spend 14 bits on the compact-float estimate register; at
# 1200 bits the budget bookkeeping ignores the estimator register (m=400
# Curtain already fills 1200 bits with offsets alone), a looseness we keep
# rather than resolve.  Budgets with room for the register quantize it.
TABLE3_CONFIGS: Tuple[Dict[str, object], ...] = (
    {"label": "hll@128", "scheme": "hll", "m": 21, "budget_bits": 128},
    {"label": "mloglog@128", "scheme": "mloglog", "m": 19, "budget_bits": 128},
    {"label": "mcurtain@128", "scheme": "mcurtain", "m": 37, "budget_bits": 128},
    {"label": "hll@1200", "scheme": "hll", "m": 200, "budget_bits": 1200},
    {"label": "mloglog@1200", "scheme": "mloglog", "m": 200, "budget_bits": 1200},
    {"label": "mcurtain@1200", "scheme": "mcurtain", "m": 400, "budget_bits": 1200},
)


def resolve_threads() -> int:
    """Apply the DARTSKETCH_THREADS override, returning the active count."""
    import numba

    want = os.environ.get("DARTSKETCH_THREADS")
    if want:
        numba.set_num_threads(max(1, min(int(want), numba.config.NUMBA_NUM_THREADS)))
    return numba.get_num_threads()


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: str
    m: int
    lam: int
    trials: int
    master_seed: int = 0
    q: float = 2.0
    a: int = 2
    h: int = 1
    k: int = 1
    max_level: int = 64
    smoothing: Optional[bool] = None  # None: on iff q >= 3
    budget_bits: Optional[int] = None  # bit budget; may activate the 14-bit register
    quantize_estimate: Optional[bool] = None  # None: auto from the budget arithmetic
    histogram_bins: int = 50
    histogram_range: Tuple[float, float] = (0.0, 2.0)
    duplicates: int = 1
    elem_base: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scheme", normalize_scheme(self.scheme))
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; options: {SCHEMES}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.duplicates < 1:
            raise ValueError("duplicates must be >= 1")
        if self.scheme == "hll" and self.q != 2.0:
            raise ValueError("hll requires q = 2")

    def offsets(self) -> Tuple[float, ...]:
        q = self.q
        want = self.smoothing if self.smoothing is not None else (q >= 3.0)
        if not want or self.scheme in ("hll", "mmincount"):
            return zero_offsets(self.m)
        if self.scheme == "mcurtain":
            return make_curtain_offsets(self.m)
        return make_uniform_offsets(self.m)

    def _budget_bits_per_column(self) -> float:
        # Budget bookkeeping convention: loglog counters at log2 log2 U = 6
        # bits (U = 2**64), curtain at log2(2a) + h per column (base register
        # ignored), PCSA/MinCount at log2 U = 64 per cell/value.
        if self.scheme in ("mloglog", "hll"):
            return 6.0
        if self.scheme == "mcurtain":
            return math.log2(2 * self.a) + self.h
        if self.scheme == "mpcsa":
            return 64.0
        return 64.0 * self.k

    @property
    def quantized(self) -> bool:
        """Whether the estimate lives in the 14-bit compact-float register.

        Auto rule: quantize exactly when the bit budget leaves room for the
        14-bit register next to the sketch state (the 128-bit configurations);
        at 1200 bits the state alone fills the budget and the register is
        outside the accounting, so full precision is kept.
        """
        if self.scheme == "hll":
            return False
        if self.quantize_estimate is not None:
            return self.quantize_estimate
        if self.budget_bits is None:
            return False
        return self.budget_bits >= self._budget_bits_per_column() * self.m + 14


@dataclass
class TrialStats:
    """Aggregate over trials of the estimate ratio lambda_hat / lambda."""

    scheme: str
    m: int
    lam: int
    trials: int
    master_seed: int
    mean_ratio: Optional[float]
    relvar: Optional[float]
    stderr: Optional[float]
    v_mean: Optional[float]
    hist_edges: List[float]
    hist_counts: List[int]
    wall_time_s: float

    def to_record(self) -> Dict[str, object]:
        return {
            "scheme": self.scheme,
            "m": self.m,
            "lambda": self.lam,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "mean_ratio": self.mean_ratio,
            "relvar": self.relvar,
            "stderr": self.stderr,
            "v_mean": self.v_mean,
            "wall_time_s": self.wall_time_s,
        }

    def histogram_rows(self) -> List[Tuple[float, float, int]]:
        return [
            (self.hist_edges[i], self.hist_edges[i + 1], self.hist_counts[i])
            for i in range(len(self.hist_counts))
        ]


def make_inner_sketch(cfg: ExperimentConfig, seed: int):
    """Fresh inner sketch for one trial of this configuration."""
    q = cfg.q
    offsets = cfg.offsets()
    if cfg.scheme == "mpcsa":
        return PcsaSketch(q, cfg.m, max_level=cfg.max_level, offsets=offsets, seed=seed)
    if cfg.scheme in ("mloglog", "hll"):
        return LogLogSketch(q, cfg.m, max_level=cfg.max_level, offsets=offsets, seed=seed)
    if cfg.scheme == "mcurtain":
        return CurtainSketch(
            q, cfg.m, cfg.a, cfg.h, max_level=cfg.max_level, offsets=offsets, seed=seed
        )
    if cfg.scheme == "mmincount":
        return MinCountSketch(cfg.m, cfg.k, seed=seed)
    raise ValueError(f"unknown scheme {cfg.scheme!r}")


def _kernel_arrays(cfg: ExperimentConfig) -> Tuple[np.ndarray, np.ndarray]:
    offsets = cfg.offsets()
    sawtooth = cfg.scheme == "mcurtain"
    iota2 = np.array([1 if (sawtooth and j % 2) else 0 for j in range(cfg.m)], np.int64)
    shifts = np.array([offsets[j] + 0.5 * iota2[j] for j in range(cfg.m)], np.float64)
    return shifts, iota2


def _run_kernel_engine(cfg: ExperimentConfig):
    resolve_threads()
    seed = np.uint64(cfg.master_seed & MASK64)
    shifts, iota2 = _kernel_arrays(cfg)
    q = cfg.q
    if cfg.scheme == "mloglog":
        return _kernels.mll_trials(
            seed, cfg.trials, cfg.lam, cfg.duplicates, cfg.elem_base,
            cfg.m, q, shifts, cfg.max_level, cfg.quantized,
        )
    if cfg.scheme == "mpcsa":
        return _kernels.mpcsa_trials(
            seed, cfg.trials, cfg.lam, cfg.duplicates, cfg.elem_base,
            cfg.m, q, shifts, cfg.max_level, cfg.quantized,
        )
    if cfg.scheme == "mcurtain":
        if not 0 <= cfg.h <= 16:
            raise ValueError("compiled curtain path supports h in [0, 16]")
        return _kernels.mcurtain_trials(
            seed, cfg.trials, cfg.lam, cfg.duplicates, cfg.elem_base,
            cfg.m, q, cfg.a, cfg.h, shifts, iota2, cfg.max_level, cfg.quantized,
        )
    if cfg.scheme == "mmincount":
        return _kernels.mmincount_trials(
            seed, cfg.trials, cfg.lam, cfg.duplicates, cfg.elem_base,
            cfg.m, cfg.k, cfg.quantized,
        )
    if cfg.scheme == "hll":
        return _kernels.hll_trials(
            seed, cfg.trials, cfg.lam, cfg.duplicates, cfg.elem_base,
            cfg.m, analysis.alpha_m(cfg.m), cfg.max_level,
        )
    raise ValueError(f"unknown scheme {cfg.scheme!r}")


def _run_reference_engine(cfg: ExperimentConfig):
    estimates = np.zeros(cfg.trials)
    vaccs = np.full(cfg.trials, np.nan)
    finals = np.zeros(cfg.trials)
    for t in range(cfg.trials):
        seed = trial_seed(cfg.master_seed, t)
        inner = make_inner_sketch(cfg, seed)
        if cfg.scheme == "hll":
            for e in range(1, cfg.lam + 1):
                for _ in range(cfg.duplicates):
                    inner.add(cfg.elem_base + e)
            estimates[t] = hll_estimate(inner, analysis.alpha_m(cfg.m))
            finals[t] = inner.free_area()
            continue
        sk = MartingaleSketch(inner, quantize_estimate=cfg.quantized)
        for e in range(1, cfg.lam + 1):
            for _ in range(cfg.duplicates):
                sk.insert(cfg.elem_base + e)
        estimates[t] = sk.estimate
        vaccs[t] = sk.varacc
        finals[t] = inner.free_area()
    return estimates, vaccs, finals


def run_trials(cfg: ExperimentConfig, engine: str = "kernel") -> TrialStats:
    """Execute all trials and aggregate; bit-reproducible per (cfg, engine)."""
    start = time.perf_counter()
    if engine == "kernel":
        estimates, vaccs, _finals = _run_kernel_engine(cfg)
    elif engine == "reference":
        estimates, vaccs, _finals = _run_reference_engine(cfg)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    wall = time.perf_counter() - start

    lo, hi = cfg.histogram_range
    if cfg.lam > 0:
        ratios = estimates / cfg.lam
        mean_ratio = float(np.mean(ratios))
        relvar = float(np.var(ratios, ddof=1)) if cfg.trials > 1 else 0.0
        stderr = math.sqrt(relvar)
        v_mean = (
            float(np.mean(vaccs)) / cfg.lam**2 if not np.all(np.isnan(vaccs)) else None
        )
    else:
        ratios = np.zeros(cfg.trials)
        mean_ratio = None
        relvar = None
        stderr = None
        v_mean = None
    counts, edges = np.histogram(np.clip(ratios, lo, hi), bins=cfg.histogram_bins, range=(lo, hi))
    return TrialStats(
        scheme=cfg.scheme,
        m=cfg.m,
        lam=cfg.lam,
        trials=cfg.trials,
        master_seed=cfg.master_seed,
        mean_ratio=mean_ratio,
        relvar=relvar,
        stderr=stderr,
        v_mean=v_mean,
        hist_edges=[float(x) for x in edges],
        hist_counts=[int(c) for c in counts],
        wall_time_s=wall,
    )


def empirical_kappa(
    scheme: str,
    m: int,
    lam_per_column: float,
    trials: int,
    master_seed: int = 0,
    q: float = 2.0,
    a: int = 2,
    h: int = 1,
    k: int = 1,
    smoothing: Optional[bool] = None,
) -> float:
    """lambda * mean(final free area) after lambda*m distinct insertions.

    For a scale-invariant scheme this converges to kappa_lambda and, for
    large lambda, to the scheme's kappa.
    """
    total = int(round(lam_per_column * m))
    cfg = ExperimentConfig(
        scheme=scheme, m=m, lam=total, trials=trials, master_seed=master_seed,
        q=q, a=a, h=h, k=k, smoothing=smoothing,
    )
    _est, _vac, finals = _run_kernel_engine(cfg)
    return lam_per_column * float(np.mean(finals))


@dataclass
class MergeCheckReport:
    scheme: str
    shards: int
    trials: int
    passed: bool
    failures: List[Dict[str, object]] = field(default_factory=list)

    def to_record(self) -> Dict[str, object]:
        return {
            "scheme": self.scheme,
            "shards": self.shards,
            "trials": self.trials,
            "passed": self.passed,
            "failures": self.failures[:3],
        }


def merge_check(
    scheme: str,
    shards: int = 4,
    lam: int = 200,
    trials: int = 100,
    master_seed: int = 0,
    m: int = 8,
    q: float = 2.0,
    a: int = 2,
    h: int = 1,
    k: int = 2,
    max_level: int = 16,
    smoothing: Optional[bool] = None,
) -> MergeCheckReport:
    """Shard each stream (round-robin and seeded-random), merge, and compare
    bit-exactly against single-stream sketching under the same seed."""
    cfg = ExperimentConfig(
        scheme=scheme, m=m, lam=lam, trials=trials, master_seed=master_seed,
        q=q, a=a, h=h, k=k, max_level=max_level, smoothing=smoothing,
    )
    report = MergeCheckReport(scheme=scheme, shards=shards, trials=trials, passed=True)
    for t in range(trials):
        seed = trial_seed(master_seed, t)
        whole = make_inner_sketch(cfg, seed)
        parts = [make_inner_sketch(cfg, seed) for _ in range(shards)]
        rng = random.Random(seed ^ 0x5EED)
        randomized = t % 2 == 1
        for e in range(1, lam + 1):
            whole.add(e)
            idx = rng.randrange(shards) if randomized else e % shards
            parts[idx].add(e)
        merged = parts[0]
        for p in parts[1:]:
            merged = merged.merge(p)
        if merged.to_bytes() != whole.to_bytes():
            report.passed = False
            report.failures.append(
                {
                    "trial": t,
                    "seed": seed,
                    "split": "random" if randomized else "round-robin",
                    "merged": merged.to_bytes().hex(),
                    "expected": whole.to_bytes().hex(),
                }
            )
    return report


def distribution_export(cfg: ExperimentConfig, engine: str = "kernel") -> Dict[str, object]:
    """Histogram record of lambda_hat / lambda plus the summary statistics."""
    stats = run_trials(cfg, engine=engine)
    return {
        "summary": stats.to_record(),
        "histogram": [
            {"bin_left": left, "bin_right": right, "count": count}
            for left, right, count in stats.histogram_rows()
        ],
    }


def run_table3(
    trials: int = 10_000, lam: int = 100_000, master_seed: int = 7
) -> List[Dict[str, object]]:
    """Run the six bit-budget configurations; experiment next to prediction."""
    rows = []
    for spec_row in TABLE3_CONFIGS:
        scheme = str(spec_row["scheme"])
        m = int(spec_row["m"])  # type: ignore[arg-type]
        cfg = ExperimentConfig(
            scheme=scheme,
            m=m,
            lam=lam,
            trials=trials,
            master_seed=master_seed,
            q=2.91 if scheme == "mcurtain" else 2.0,
            budget_bits=int(spec_row["budget_bits"]),  # type: ignore[arg-type]
        )
        stats = run_trials(cfg)
        pred = analysis.predict(scheme, m, q=cfg.q, a=cfg.a, h=cfg.h)
        rows.append(
            {
                "label": spec_row["label"],
                "scheme": scheme,
                "m": m,
                "budget_bits": spec_row["budget_bits"],
                "trials": trials,
                "lambda": lam,
                "relvar": stats.relvar,
                "stderr": stats.stderr,
                "mean_ratio": stats.mean_ratio,
                "predicted_relvar": pred.relvar,
                "predicted_stderr": pred.stderr,
            }
        )
    return rows


def stats_to_json(stats: TrialStats) -> str:
    return json.dumps(stats.to_record(), allow_nan=True)
