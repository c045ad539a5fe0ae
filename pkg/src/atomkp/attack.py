"""Single-trace horizontal attack on the squaring marker.

The adversary sees one power trace and public knowledge only: the atom
schedules (hence the squaring signature), the timing model and the
countermeasure mode.  Atomicity makes every atom the same length, so
segmentation needs no alignment search: the second-fetch sample of each
of the two MUL slots per atom is extracted deterministically, clustered
by exact one-dimensional 2-means, and the label stream is parsed back
into scalar bits by inverting the 4-atoms-per-'0' / 10-atoms-per-'1'
encoding.

This module never touches execution logs or their per-op ground truth;
accuracy scoring against a known scalar lives in evaluate_report, which
the caller feeds separately.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import InputError, LabelParseError, SegmentationError
from .leakage import PowerTrace
from .scheduler import SquaringSignature

_CM1 = "cm1"


class Label(Enum):
    SQR = "S"
    MUL = "M"
    ABSTAIN = "?"


class MulFeature(NamedTuple):
    op_ordinal: int
    value: float


@dataclass(frozen=True)
class TimingModel:
    """Public per-op cycle counts derived from the datapath configuration."""

    cycles_per_mul_op: int
    cycles_per_add_op: int
    cycles_per_neg_op: int
    fetch2_offset: int

    @classmethod
    def from_parts(cls, mul_latency: int, addsub_latency: int, mode: str) -> "TimingModel":
        fetches = 3 if mode == _CM1 else 2
        return cls(
            cycles_per_mul_op=fetches + mul_latency + 1,
            cycles_per_add_op=2 + addsub_latency + 1,
            cycles_per_neg_op=1 + addsub_latency + 1,
            fetch2_offset=fetches - 1,
        )

    @classmethod
    def from_config(cls, cfg) -> "TimingModel":
        """Accepts any object shaped like DatapathConfig."""
        return cls.from_parts(cfg.mul_latency, cfg.addsub_latency, cfg.countermeasure.value)

    @property
    def atom_cycles(self) -> int:
        return (
            2 * self.cycles_per_mul_op
            + 2 * self.cycles_per_neg_op
            + 3 * self.cycles_per_add_op
        )

    @property
    def mul_slot_offsets(self) -> tuple[int, int]:
        """Cycle offsets of the two MUL second fetches within one atom (MNAMNAA)."""
        first = self.fetch2_offset
        second = (
            self.cycles_per_mul_op
            + self.cycles_per_neg_op
            + self.cycles_per_add_op
            + self.fetch2_offset
        )
        return first, second


@dataclass(frozen=True)
class PublicParams:
    timing: TimingModel
    signature: SquaringSignature
    threshold: float = 2.0


@dataclass(frozen=True)
class AttackReport:
    labels: tuple[Label, ...]
    separation_score: float
    abstained: bool
    recovered_bits: Optional[str]
    error: Optional[str] = None
    bit_accuracy: Optional[float] = None
    full_recovery: Optional[bool] = None

    @property
    def recovered_scalar(self) -> Optional[int]:
        return int(self.recovered_bits, 2) if self.recovered_bits else None


def segment_trace(trace: PowerTrace, tm: TimingModel) -> list[MulFeature]:
    """Extract the second-fetch sample of every multiplication, in order."""
    n = trace.n_cycles
    atom = tm.atom_cycles
    if n == 0 or n % atom != 0:
        raise SegmentationError(expected=atom, actual=n)
    n_atoms = n // atom
    off1, off2 = tm.mul_slot_offsets
    starts = np.arange(n_atoms) * atom
    cycles = np.empty(2 * n_atoms, dtype=np.int64)
    cycles[0::2] = starts + off1
    cycles[1::2] = starts + off2
    samples = trace.samples[cycles]
    return [MulFeature(i, float(v)) for i, v in enumerate(samples)]


def classify(
    features: Sequence[float] | Sequence[MulFeature], threshold: float = 2.0
) -> tuple[list[Label], float]:
    """Exact 1-D 2-means with a separation gate.

    Optimal two-cluster splits of sorted 1-D data are contiguous, so the
    best split is found by scanning all thresholds; no iterative seeding
    and therefore no convergence nondeterminism.  The separation score is
    the distance between cluster centers over the pooled within-cluster
    standard deviation; below the threshold every label is ABSTAIN.
    """
    values = np.asarray(
        [f.value if isinstance(f, MulFeature) else float(f) for f in features], dtype=np.float64
    )
    n = len(values)
    if n < 2:
        raise InputError("classification needs at least two features")
    if np.min(values) == np.max(values):
        return [Label.ABSTAIN] * n, 0.0

    order = np.argsort(values, kind="stable")
    s = values[order]
    csum = np.cumsum(s)
    csum2 = np.cumsum(s * s)
    total, total2 = csum[-1], csum2[-1]

    lens = np.arange(1, n, dtype=np.float64)  # left cluster sizes 1..n-1
    left_ss = csum2[:-1] - csum[:-1] ** 2 / lens
    right_n = n - lens
    right_sum = total - csum[:-1]
    right_ss = (total2 - csum2[:-1]) - right_sum**2 / right_n
    cost = np.maximum(left_ss, 0.0) + np.maximum(right_ss, 0.0)
    split = int(np.argmin(cost)) + 1

    c_low = float(csum[split - 1] / split)
    c_high = float(right_sum[split - 1] / (n - split))
    pooled = float(np.sqrt(cost[split - 1] / n))
    score = (c_high - c_low) / (pooled + 1e-12)

    if score < threshold:
        return [Label.ABSTAIN] * n, score
    labels = [Label.MUL] * n
    for idx in order[:split]:
        labels[idx] = Label.SQR
    return labels, score


def parse_atoms(labels: Sequence[Label], sig: SquaringSignature) -> str:
    """Greedy inversion of the atom encoding back into scalar bits.

    Expects the doubling signature at every position; a following match
    of the addition signature makes the bit '1', otherwise '0'.  The
    implicit leading '1' of the scalar is prepended.  Any mismatch is an
    error carrying the failure offset, never a silent partial result.
    """
    if any(l == Label.ABSTAIN for l in labels):
        raise InputError("labels contain abstentions; nothing to parse")
    stream = tuple(l == Label.SQR for l in labels)
    dbl = sig.doubling
    add = sig.addition
    bits = ["1"]
    pos = 0
    while pos < len(stream):
        if stream[pos : pos + len(dbl)] != dbl:
            raise LabelParseError(pos)
        pos += len(dbl)
        if stream[pos : pos + len(add)] == add:
            bits.append("1")
            pos += len(add)
        else:
            bits.append("0")
    return "".join(bits)


def recover_scalar(trace: PowerTrace, public: PublicParams) -> AttackReport:
    """Full pipeline: segment, classify, parse.  Errors land in the report."""
    try:
        features = segment_trace(trace, public.timing)
    except SegmentationError as exc:
        return AttackReport(
            labels=(), separation_score=0.0, abstained=False, recovered_bits=None, error=str(exc)
        )
    labels, score = classify(features, public.threshold)
    if labels and labels[0] == Label.ABSTAIN:
        return AttackReport(
            labels=tuple(labels), separation_score=score, abstained=True, recovered_bits=None
        )
    try:
        bits = parse_atoms(labels, public.signature)
    except LabelParseError as exc:
        return AttackReport(
            labels=tuple(labels),
            separation_score=score,
            abstained=False,
            recovered_bits=None,
            error=str(exc),
        )
    return AttackReport(
        labels=tuple(labels), separation_score=score, abstained=False, recovered_bits=bits
    )


def evaluate_report(report: AttackReport, true_scalar: int) -> AttackReport:
    """Score a report against the ground-truth scalar (evaluation harness only).

    Abstentions and parse failures score a bit accuracy of 0.0 so that
    aggregated accuracy penalises non-answers rather than hiding them.
    """
    truth = bin(true_scalar)[2:]
    if not report.recovered_bits:
        return replace(report, bit_accuracy=0.0, full_recovery=False)
    got = report.recovered_bits
    matches = sum(1 for a, b in zip(got, truth) if a == b)
    accuracy = matches / max(len(got), len(truth))
    return replace(report, bit_accuracy=accuracy, full_recovery=got == truth)
