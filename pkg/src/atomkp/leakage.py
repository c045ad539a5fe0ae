"""Switching-activity power model over an execution log.

Each cycle's sample is built from the bus transition into that cycle:

  sample[t] = alpha * HD(bus_value[t], bus_value[t-1])
            + beta  * HD_addr(bus_source[t], bus_source[t-1])
            + gamma * [bus_source changed]
            + block_baseline[phase[t]]
            + Gaussian(0, noise_sigma)

Cycle 0 is measured against an all-zeros prior state.  The address term
is pluggable: LINEAR_HD counts toggled address bits uniformly, while
WEIGHTED_BITS gives every address line its own weight (drawn once from
the seed) to model implementation-dependent multiplexer gate counts.

The default calibration puts the whole marker into the source-change
term (alpha = beta = 0): a squaring's second operand fetch is the only
cycle whose driver does not change, so its switching energy is exactly
zero while every regular multiplication pays gamma.  The data and
address Hamming-distance terms stay available for experiments; note
that with alpha > 0 the value-dependent component of regular
multiplications remains visible even under the countermeasures, which
is exactly the residual data-bit effect the countermeasures do not
claim to remove.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .datapath import Countermeasure, ExecutionLog, Phase
from .errors import ConfigError, InputError, TraceFormatError


class MuxModel(Enum):
    LINEAR_HD = "linear_hd"
    WEIGHTED_BITS = "weighted_bits"


DEFAULT_BLOCK_BASELINE: Mapping[Phase, float] = MappingProxyType(
    {
        Phase.FETCH1: 2.0,
        Phase.DUMMY_RELOAD: 2.0,
        Phase.FETCH2: 2.0,
        Phase.COMPUTE: 6.0,
        Phase.WRITEBACK: 2.0,
    }
)


@dataclass(frozen=True)
class LeakageParams:
    alpha: float = 0.0  # per data bit toggled on the bus
    beta: float = 0.0  # per address bit toggled at the multiplexer
    gamma: float = 4.0  # flat cost whenever the driving source changes
    block_baseline: Mapping[Phase, float] = DEFAULT_BLOCK_BASELINE
    noise_sigma: float = 0.0
    noise_seed: int = 0
    mux_model: MuxModel = MuxModel.LINEAR_HD

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.gamma < 0:
            raise ConfigError("leakage weights must be non-negative")
        if self.noise_sigma < 0:
            raise ConfigError("noise sigma must be non-negative")
        missing = [ph for ph in Phase if ph not in self.block_baseline]
        if missing:
            raise ConfigError(f"block_baseline lacks phases: {missing}")


@dataclass(frozen=True)
class PowerTrace:
    """Per-cycle power samples plus public metadata only (never the scalar)."""

    samples: np.ndarray
    clock_period_ns: float
    mode: str

    @property
    def n_cycles(self) -> int:
        return len(self.samples)


_POPCOUNT8 = np.array([bin(i).count("1") for i in range(256)], dtype=np.float64)


def _address_switch_weights(log: ExecutionLog, params: LeakageParams) -> np.ndarray:
    """Per-cycle weighted count of toggled address bits (beta term, unweighted by beta)."""
    src = log.sources.astype(np.int64)
    prev = np.concatenate(([0], src[:-1]))
    toggled = src ^ prev
    if params.mux_model == MuxModel.LINEAR_HD:
        return _POPCOUNT8[toggled & 0xFF]
    width = log.source_map.address_width
    rng = np.random.default_rng(np.random.SeedSequence(entropy=params.noise_seed, spawn_key=(1,)))
    weights = rng.uniform(0.5, 1.5, size=width)
    out = np.zeros(len(src), dtype=np.float64)
    for bit in range(width):
        out += weights[bit] * ((toggled >> bit) & 1)
    return out


def _data_hd(values: list[int]) -> np.ndarray:
    out = np.empty(len(values), dtype=np.float64)
    prev = 0
    for i, v in enumerate(values):
        out[i] = (v ^ prev).bit_count()
        prev = v
    return out


def switching_trace(log: ExecutionLog, params: LeakageParams) -> np.ndarray:
    """The deterministic switching component, without baselines or noise."""
    if log.n_cycles == 0:
        raise InputError("execution log is empty")
    src = log.sources
    prev = np.concatenate(([0], src[:-1]))
    changed = (src != prev).astype(np.float64)
    out = params.gamma * changed
    if params.beta != 0.0:
        out += params.beta * _address_switch_weights(log, params)
    if params.alpha != 0.0:
        out += params.alpha * _data_hd(log.values)
    return out


def emit_trace(log: ExecutionLog, params: LeakageParams) -> PowerTrace:
    """Convert an execution log into a power trace."""
    samples = switching_trace(log, params)
    baseline = np.array([params.block_baseline[ph] for ph in Phase], dtype=np.float64)
    samples = samples + baseline[log.phases]
    if params.noise_sigma > 0.0:
        rng = np.random.default_rng(np.random.SeedSequence(entropy=params.noise_seed, spawn_key=(0,)))
        samples = samples + rng.normal(0.0, params.noise_sigma, size=len(samples))
    return PowerTrace(
        samples=samples,
        clock_period_ns=log.config.clock_period_ns,
        mode=log.config.countermeasure.value,
    )


@dataclass(frozen=True)
class FeatureGap:
    """Second-fetch statistics grouped by whether the operand values matched."""

    sqr_count: int
    sqr_mean: float
    sqr_min: float
    sqr_max: float
    mul_count: int
    mul_mean: float
    mul_min: float
    mul_max: float

    @property
    def gap(self) -> float:
        return self.mul_mean - self.sqr_mean


def feature_gap(log: ExecutionLog, params: LeakageParams) -> FeatureGap:
    """Quantify the squaring/multiplication difference at the second fetch.

    Uses ground-truth annotations, so this is an evaluation utility, not
    part of the attacker's toolbox.
    """
    trace = emit_trace(log, params)
    sqr, mul = [], []
    for ann in log.annotations:
        if ann.kind.name != "MUL" or ann.fetch2_cycle is None:
            continue
        sample = float(trace.samples[ann.fetch2_cycle])
        (sqr if ann.was_squaring_by_value else mul).append(sample)
    if not sqr and not mul:
        raise InputError("log contains no multiplication operations")

    def stats(xs):
        if not xs:
            return 0, math.nan, math.nan, math.nan
        return len(xs), float(np.mean(xs)), float(min(xs)), float(max(xs))

    sc, sme, smi, sma = stats(sqr)
    mc, mme, mmi, mma = stats(mul)
    return FeatureGap(sc, sme, smi, sma, mc, mme, mmi, mma)


_TRACE_HEADER = re.compile(r"^# cycles=(\d+) period_ns=([0-9.eE+-]+) mode=(\S+)$")


def write_trace(trace: PowerTrace, path):
    """Trace file: one header line, then `<cycle>,<time_ns>,<power>` per cycle."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# cycles={trace.n_cycles} period_ns={trace.clock_period_ns:g} mode={trace.mode}\n")
        period = trace.clock_period_ns
        for i, power in enumerate(trace.samples):
            fh.write(f"{i},{i * period:.3f},{power:.6f}\n")


def read_trace(path) -> PowerTrace:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        m = _TRACE_HEADER.match(header)
        if not m:
            raise TraceFormatError(f"bad trace header: {header!r}")
        n_cycles = int(m.group(1))
        period = float(m.group(2))
        mode = m.group(3)
        if mode not in {cm.value for cm in Countermeasure}:
            raise TraceFormatError(f"unknown countermeasure mode {mode!r}")
        samples = np.empty(n_cycles, dtype=np.float64)
        count = 0
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise TraceFormatError(f"bad trace line: {line!r}")
            idx = int(parts[0])
            if idx != count or idx >= n_cycles:
                raise TraceFormatError(f"trace cycles out of order at line {line!r}")
            samples[idx] = float(parts[2])
            count += 1
        if count != n_cycles:
            raise TraceFormatError(f"trace declares {n_cycles} cycles but contains {count}")
    return PowerTrace(samples=samples, clock_period_ns=period, mode=mode)
