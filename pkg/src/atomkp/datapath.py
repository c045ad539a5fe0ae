"""Cycle-accurate execution of an atomic program on the modeled datapath.

The architecture is a register file, three functional blocks (multiplier,
adder, subtractor) and one shared bus behind a multiplexer.  Exactly one
register or block output drives the bus in each clock cycle; any block
may latch from it.  The per-cycle bus state produced here is the only
input the leakage model sees.

Cycle schedule per micro-op:

  MUL   FETCH1, [DUMMY_RELOAD], FETCH2, mul_latency x COMPUTE, WRITEBACK
  ADD   FETCH1, FETCH2, addsub_latency x COMPUTE, WRITEBACK
  NEG   FETCH1, addsub_latency x COMPUTE, WRITEBACK

Negation executes on the subtractor as 0 - x, so it has a single operand
fetch.  During COMPUTE cycles the bus simply holds its previous state;
it is never tri-stated to a neutral value.  The DUMMY_RELOAD cycle only
exists under the bus-reloading countermeasure and drives a randomly
chosen idle source without any block latching it.

Countermeasures:

  CM1 (bus reloading)   one extra cycle between the operand fetches of
                        every multiplication, driving a random source.
  CM2 (dummy register)  the first multiplicand is shadow-stored in an
                        extra register during FETCH1 of every MUL, and a
                        squaring fetches its second operand from there,
                        so the multiplexer address always changes.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Optional

import numpy as np

from .errors import BusContentionError, ConfigError, ProgramError
from .scheduler import (
    AtomicProgram,
    DUMMY_REGISTER,
    FieldOpKind,
    MicroOp,
)


class Countermeasure(Enum):
    NONE = "none"
    CM1_BUS_RELOAD = "cm1"
    CM2_DUMMY_REGISTER = "cm2"


class Phase(IntEnum):
    FETCH1 = 0
    DUMMY_RELOAD = 1
    FETCH2 = 2
    COMPUTE = 3
    WRITEBACK = 4


@dataclass(frozen=True)
class DatapathConfig:
    mul_latency: int = 4
    addsub_latency: int = 1
    countermeasure: Countermeasure = Countermeasure.NONE
    rng_seed: int = 0
    clock_period_ns: float = 30.0

    def __post_init__(self):
        if self.mul_latency < 1 or self.addsub_latency < 1:
            raise ConfigError("block latencies must be at least one cycle")
        if self.clock_period_ns <= 0:
            raise ConfigError("clock period must be positive")


@dataclass(frozen=True)
class SourceMap:
    """Address assignment: registers first, then blocks, consecutive integers."""

    num_registers: int

    @property
    def mul_block(self) -> int:
        return self.num_registers

    @property
    def add_block(self) -> int:
        return self.num_registers + 1

    @property
    def sub_block(self) -> int:
        return self.num_registers + 2

    @property
    def num_sources(self) -> int:
        return self.num_registers + 3

    @property
    def address_width(self) -> int:
        return max(1, (self.num_sources - 1).bit_length())


@dataclass(frozen=True)
class SourceAddress:
    address: int
    width: int


@dataclass(frozen=True)
class CycleRecord:
    cycle: int
    bus_source: SourceAddress
    bus_value: int
    phase: Phase
    op_index: int
    is_mul_op: bool


@dataclass(frozen=True)
class OpAnnotation:
    """Ground truth per micro-op; evaluation-only, never reaches the attacker."""

    kind: FieldOpKind
    was_squaring_by_address: bool
    was_squaring_by_value: bool
    fetch1_cycle: int
    fetch2_cycle: Optional[int]


@dataclass
class ExecutionLog:
    """Column-oriented per-cycle bus state plus per-op ground truth."""

    sources: np.ndarray  # int16, bus driver address per cycle
    values: list[int]  # bus value per cycle (full field-element width)
    phases: np.ndarray  # int8 Phase codes
    op_index: np.ndarray  # int32
    is_mul: np.ndarray  # bool
    final_registers: dict[int, int]
    annotations: list[OpAnnotation]
    source_map: SourceMap
    config: DatapathConfig
    num_atoms: int

    @property
    def n_cycles(self) -> int:
        return len(self.sources)

    def record(self, cycle: int) -> CycleRecord:
        return CycleRecord(
            cycle=cycle,
            bus_source=SourceAddress(int(self.sources[cycle]), self.source_map.address_width),
            bus_value=self.values[cycle],
            phase=Phase(int(self.phases[cycle])),
            op_index=int(self.op_index[cycle]),
            is_mul_op=bool(self.is_mul[cycle]),
        )

    def verify(self):
        """Bus-exclusivity and continuity invariants; raises on violation."""
        n = self.n_cycles
        if not (len(self.values) == len(self.phases) == len(self.op_index) == n):
            raise BusContentionError("cycle columns are not aligned")
        if np.any(self.sources < 0) or np.any(self.sources >= self.source_map.num_sources):
            raise BusContentionError("a cycle has no single valid bus driver")
        if n and int(self.op_index[-1]) + 1 != len(self.annotations):
            raise BusContentionError("annotations do not align with the executed micro-ops")


def op_cycle_count(kind: FieldOpKind, cfg: DatapathConfig) -> int:
    if kind == FieldOpKind.MUL:
        fetches = 3 if cfg.countermeasure == Countermeasure.CM1_BUS_RELOAD else 2
        return fetches + cfg.mul_latency + 1
    if kind == FieldOpKind.ADD:
        return 2 + cfg.addsub_latency + 1
    return 1 + cfg.addsub_latency + 1


def apply_cm2_rewrite(prog: AtomicProgram) -> AtomicProgram:
    """Dummy-register transformation of a baseline program.

    Extends the register file by one register, redirects the second
    operand of every squaring to it, and marks the program so that every
    MUL's first fetch also latches the bus into that register.  The
    functional result is unchanged.
    """
    if prog.dummy_latch_register is not None:
        raise ProgramError("program already carries the dummy-register rewrite")
    from .scheduler import Atom  # local import to avoid cycle at module load

    dummy = prog.num_registers
    new_atoms = []
    for atom in prog.atoms:
        ops = []
        for op in atom.ops:
            if op.kind == FieldOpKind.MUL and op.src1 == op.src2:
                op = MicroOp(op.kind, op.src1, dummy, op.dest)
            ops.append(op)
        new_atoms.append(Atom(tuple(ops)))
    return AtomicProgram(
        atoms=tuple(new_atoms),
        register_init=dict(prog.register_init),
        output_registers=prog.output_registers,
        num_registers=prog.num_registers + 1,
        curve=prog.curve,
        dummy_latch_register=dummy,
        atom_origins=prog.atom_origins,
        ground_truth=prog.ground_truth,
    )


def choose_cm1_dummy_source(
    rng: random.Random, current: int, forbidden: set[int], defined: list[int]
) -> int:
    """Uniform pick of an idle source to drive the bus between two fetches.

    The choice must never repeat the first fetch's source (that would
    reproduce the zero-switching squaring signature) and never anticipate
    the second fetch's source (that would stamp the signature onto a
    regular multiplication), so both operand sources are forbidden.
    Sources whose output is still undefined are not eligible either.
    """
    eligible = [s for s in defined if s != current and s not in forbidden]
    if not eligible:
        raise ConfigError("no eligible dummy source for bus reloading")
    return eligible[rng.randrange(len(eligible))]


def run_program(prog: AtomicProgram, cfg: DatapathConfig) -> ExecutionLog:
    """Execute an atomic program cycle by cycle and log the bus state."""
    if cfg.countermeasure == Countermeasure.CM2_DUMMY_REGISTER:
        prog = apply_cm2_rewrite(prog)
    cm1 = cfg.countermeasure == Countermeasure.CM1_BUS_RELOAD

    ops = prog.ops
    total = sum(op_cycle_count(op.kind, cfg) for op in ops)
    sources = np.empty(total, dtype=np.int16)
    phases = np.empty(total, dtype=np.int8)
    op_col = np.empty(total, dtype=np.int32)
    mul_col = np.zeros(total, dtype=bool)
    values: list[int] = [0] * total

    smap = SourceMap(prog.num_registers)
    modulus = prog.curve.field.modulus
    regs: dict[int, int] = {r: fe.value for r, fe in prog.register_init.items()}
    block_out: dict[int, Optional[int]] = {smap.mul_block: None, smap.add_block: None, smap.sub_block: None}
    rng = random.Random(cfg.rng_seed)
    latch = prog.dummy_latch_register
    annotations: list[OpAnnotation] = []

    t = 0

    def drive(source: int, value: int, phase: Phase, op_i: int, is_mul: bool):
        nonlocal t
        sources[t] = source
        values[t] = value
        phases[t] = phase
        op_col[t] = op_i
        mul_col[t] = is_mul
        t += 1

    def read(reg: int, op_i: int) -> int:
        try:
            return regs[reg]
        except KeyError:
            raise ProgramError(f"op {op_i} reads register {reg} before any write") from None

    for op_i, op in enumerate(ops):
        is_mul = op.kind == FieldOpKind.MUL
        if is_mul:
            v1 = read(op.src1, op_i)
            f1 = t
            drive(op.src1, v1, Phase.FETCH1, op_i, True)
            if latch is not None:
                regs[latch] = v1
            if cm1:
                defined = sorted(regs) + [b for b, v in block_out.items() if v is not None]
                d = choose_cm1_dummy_source(rng, op.src1, {op.src2}, defined)
                dv = regs[d] if d < prog.num_registers else block_out[d]
                drive(d, dv, Phase.DUMMY_RELOAD, op_i, True)
            v2 = read(op.src2, op_i)
            f2 = t
            drive(op.src2, v2, Phase.FETCH2, op_i, True)
            result = v1 * v2 % modulus
            for _ in range(cfg.mul_latency):
                drive(op.src2, v2, Phase.COMPUTE, op_i, True)
            drive(smap.mul_block, result, Phase.WRITEBACK, op_i, True)
            block_out[smap.mul_block] = result
            regs[op.dest] = result
            annotations.append(
                OpAnnotation(op.kind, op.src1 == op.src2, v1 == v2, f1, f2)
            )
        elif op.kind == FieldOpKind.ADD:
            v1 = read(op.src1, op_i)
            f1 = t
            drive(op.src1, v1, Phase.FETCH1, op_i, False)
            v2 = read(op.src2, op_i)
            f2 = t
            drive(op.src2, v2, Phase.FETCH2, op_i, False)
            result = (v1 + v2) % modulus
            for _ in range(cfg.addsub_latency):
                drive(op.src2, v2, Phase.COMPUTE, op_i, False)
            drive(smap.add_block, result, Phase.WRITEBACK, op_i, False)
            block_out[smap.add_block] = result
            regs[op.dest] = result
            annotations.append(OpAnnotation(op.kind, False, v1 == v2, f1, f2))
        else:  # NEG on the subtractor: 0 - x, one operand fetch
            v1 = read(op.src1, op_i)
            f1 = t
            drive(op.src1, v1, Phase.FETCH1, op_i, False)
            result = -v1 % modulus
            for _ in range(cfg.addsub_latency):
                drive(op.src1, v1, Phase.COMPUTE, op_i, False)
            drive(smap.sub_block, result, Phase.WRITEBACK, op_i, False)
            block_out[smap.sub_block] = result
            regs[op.dest] = result
            annotations.append(OpAnnotation(op.kind, False, False, f1, None))

    if t != total:
        raise BusContentionError(f"emitted {t} cycles, expected {total}")

    log = ExecutionLog(
        sources=sources,
        values=values,
        phases=phases,
        op_index=op_col,
        is_mul=mul_col,
        final_registers=regs,
        annotations=annotations,
        source_map=smap,
        config=cfg,
        num_atoms=len(prog.atoms),
    )
    log.verify()
    return log
