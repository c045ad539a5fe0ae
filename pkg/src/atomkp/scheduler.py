"""Compilation of a scalar into the register-transfer schedule of atoms.

Every atom is the fixed seven-operation sequence MNAMNAA (multiply,
negate, add, multiply, negate, add, add).  Point doubling takes 4 atoms
and mixed Jacobian-plus-affine addition takes 6, so a '0' bit of the
scalar costs 4 atoms and a '1' bit costs 10.  Slots that the point
formulas do not need are filled with effect-free operations on scratch
registers; an atom never contains a gap.

The concrete schedules below are derived from the standard a = -3
Jacobian formulas:

  doubling   X' = A^2 - 8B,  Y' = A(4B - X') - 8G^2,  Z' = 2YZ
             with D = Z^2, G = Y^2, A = 3(X - D)(X + D), B = X*G
             (4 squarings + 4 multiplications = 8 MUL slots = 4 atoms;
             the 2G intermediate is squared instead of G so the twelve
             ADD slots suffice)

  mixed add  U2 = x2*Z^2, S2 = y2*Z^3, H = U2 - X, r = S2 - Y
             X' = r^2 - H^3 - 2*X*H^2
             Y' = r*(X*H^2 - X') - Y*H^3
             Z' = Z*H
             (3 squarings + 8 multiplications, padded with one dummy
             multiplication to fill 12 MUL slots = 6 atoms)

Correctness of both schedules is enforced against the affine oracle at
library-construction time, never assumed.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple, Optional

from .curves import (
    AffinePoint,
    CurveParams,
    JacobianPoint,
    is_on_curve,
    lift_to_jacobian,
    point_add,
    scalar_mul_naive,
    to_affine,
)
from .errors import CurveError, FixtureError, ProgramError, ScalarError
from .field import FieldElement


class FieldOpKind(IntEnum):
    MUL = 0
    NEG = 1
    ADD = 2


class MicroOp(NamedTuple):
    kind: FieldOpKind
    src1: int
    src2: int  # by convention equal to src1 for NEG, which has one operand
    dest: int

    @property
    def is_squaring(self) -> bool:
        return self.kind == FieldOpKind.MUL and self.src1 == self.src2


ATOM_SHAPE = (
    FieldOpKind.MUL,
    FieldOpKind.NEG,
    FieldOpKind.ADD,
    FieldOpKind.MUL,
    FieldOpKind.NEG,
    FieldOpKind.ADD,
    FieldOpKind.ADD,
)

MULS_PER_ATOM = 2
DOUBLING_ATOMS = 4
ADDITION_ATOMS = 6


@dataclass(frozen=True)
class Atom:
    """Exactly seven micro-ops in MNAMNAA order; no other shape exists."""

    ops: tuple[MicroOp, ...]

    def __post_init__(self):
        kinds = tuple(op.kind for op in self.ops)
        if kinds != ATOM_SHAPE:
            raise FixtureError(f"atom kind sequence {kinds} is not MNAMNAA")


# Register-file layout.  The accumulator occupies registers 0..2, the
# input point 3..4, temporaries 5..11, and two scratch registers host
# the slot fillers.  The register index doubles as the bus address.
REG_X, REG_Y, REG_Z = 0, 1, 2
REG_PX, REG_PY = 3, 4
T0, T1, T2, T3, T4, T5, T6 = 5, 6, 7, 8, 9, 10, 11
REG_SCR, REG_SINK = 12, 13
NUM_REGISTERS = 14
DUMMY_REGISTER = NUM_REGISTERS  # appended only by the dummy-register countermeasure

_M, _N, _A = FieldOpKind.MUL, FieldOpKind.NEG, FieldOpKind.ADD


def _fill_neg() -> MicroOp:
    return MicroOp(_N, REG_SCR, REG_SCR, REG_SINK)


def _fill_add() -> MicroOp:
    return MicroOp(_A, REG_SCR, REG_SCR, REG_SINK)


def _doubling_atoms() -> tuple[Atom, ...]:
    # In-place Jacobian doubling: reads (X, Y, Z), leaves 2P in (X, Y, Z).
    rows = [
        # atom 1: D = Z^2 in T0, G = Y^2 in T3, X - D in T2, X + D in T0, 2G in T4
        (_M, REG_Z, REG_Z, T0),
        (_N, T0, T0, T1),
        (_A, REG_X, T1, T2),
        (_M, REG_Y, REG_Y, T3),
        _fill_neg(),
        (_A, REG_X, T0, T0),
        (_A, T3, T3, T4),
        # atom 2: A = 3(X-D)(X+D) in T2, 2B = X*2G in T5, then 4B
        (_M, T2, T0, T1),
        _fill_neg(),
        (_A, T1, T1, T2),
        (_M, REG_X, T4, T5),
        _fill_neg(),
        (_A, T2, T1, T2),
        (_A, T5, T5, T5),
        # atom 3: X' = A^2 - 8B, Z' = 2YZ
        (_M, T2, T2, T0),
        _fill_neg(),
        (_A, T5, T5, T1),
        (_M, REG_Y, REG_Z, T3),
        (_N, T1, T1, T1),
        (_A, T0, T1, REG_X),
        (_A, T3, T3, REG_Z),
        # atom 4: Y' = A(4B - X') - 8G^2, using (2G)^2 = 4G^2
        (_M, T4, T4, T0),
        (_N, REG_X, REG_X, T1),
        (_A, T5, T1, T5),
        (_M, T2, T5, T2),
        (_N, T0, T0, T0),
        (_A, T0, T0, T0),
        (_A, T2, T0, REG_Y),
    ]
    ops = [MicroOp(*row) if not isinstance(row, MicroOp) else row for row in rows]
    return tuple(Atom(tuple(ops[i : i + 7])) for i in range(0, len(ops), 7))


def _addition_atoms() -> tuple[Atom, ...]:
    # Mixed addition: reads (X, Y, Z) and the affine point (PX, PY),
    # leaves the Jacobian sum in (X, Y, Z).
    rows = [
        # atom 1: Z^2 in T0, U2 = x2*Z^2 in T1
        (_M, REG_Z, REG_Z, T0),
        _fill_neg(),
        _fill_add(),
        (_M, REG_PX, T0, T1),
        _fill_neg(),
        _fill_add(),
        _fill_add(),
        # atom 2: Z^3, S2 = y2*Z^3 in T0; H = U2 - X in T1; r = S2 - Y in T0
        (_M, REG_Z, T0, T0),
        (_N, REG_X, REG_X, T2),
        (_A, T1, T2, T1),
        (_M, REG_PY, T0, T0),
        (_N, REG_Y, REG_Y, T2),
        (_A, T0, T2, T0),
        _fill_add(),
        # atom 3: HH = H^2 in T2, V = X*HH in T3, 2V in T4
        (_M, T1, T1, T2),
        _fill_neg(),
        _fill_add(),
        (_M, REG_X, T2, T3),
        _fill_neg(),
        (_A, T3, T3, T4),
        _fill_add(),
        # atom 4: HHH = H*HH in T2, rr = r^2 in T5, rr - HHH in T5
        (_M, T1, T2, T2),
        _fill_neg(),
        _fill_add(),
        (_M, T0, T0, T5),
        (_N, T2, T2, T6),
        (_A, T5, T6, T5),
        _fill_add(),
        # atom 5: Z' = Z*H; X' = rr - HHH - 2V; V - X' in T3
        (_M, REG_Z, T1, REG_Z),
        (_N, T4, T4, T6),
        (_A, T5, T6, REG_X),
        (_M, REG_Y, T2, T4),
        (_N, REG_X, REG_X, T6),
        (_A, T3, T6, T3),
        _fill_add(),
        # atom 6: Y' = r*(V - X') - Y*HHH; one dummy multiplication pads slot 12
        (_M, T0, T3, T0),
        (_N, T4, T4, T6),
        (_A, T0, T6, REG_Y),
        (_M, REG_SCR, REG_SINK, REG_SINK),
        _fill_neg(),
        _fill_add(),
        _fill_add(),
    ]
    ops = [MicroOp(*row) if not isinstance(row, MicroOp) else row for row in rows]
    return tuple(Atom(tuple(ops[i : i + 7])) for i in range(0, len(ops), 7))


@dataclass(frozen=True)
class SquaringSignature:
    """Which MUL slots of each pattern are squarings (src1 == src2)."""

    doubling: tuple[bool, ...]
    addition: tuple[bool, ...]


@dataclass(frozen=True)
class PatternLibrary:
    curve: CurveParams
    doubling: tuple[Atom, ...]
    addition: tuple[Atom, ...]
    num_registers: int = NUM_REGISTERS


@dataclass(frozen=True)
class AtomicProgram:
    atoms: tuple[Atom, ...]
    register_init: dict[int, FieldElement]
    output_registers: tuple[int, int, int]
    num_registers: int
    curve: CurveParams
    # Register that shadows the first multiplicand of every MUL; set only
    # by the dummy-register countermeasure rewrite.
    dummy_latch_register: Optional[int] = None
    # (bit_index, bit_value, 'D' or 'A') per atom; evaluation-only metadata.
    atom_origins: tuple[tuple[int, int, str], ...] = ()
    ground_truth: Optional[int] = None

    @property
    def ops(self) -> list[MicroOp]:
        return [op for atom in self.atoms for op in atom.ops]


def squaring_signature(lib: PatternLibrary) -> SquaringSignature:
    def slots(atoms):
        return tuple(op.is_squaring for atom in atoms for op in atom.ops if op.kind == _M)

    return SquaringSignature(doubling=slots(lib.doubling), addition=slots(lib.addition))


def evaluate_program(prog: AtomicProgram) -> JacobianPoint:
    """Run every micro-op in order as plain field math, no cycle model.

    Raises ProgramError if any register is read before it was written or
    initialised, which is how schedule bugs surface in tests.
    """
    modulus = prog.curve.field.modulus
    regs: dict[int, int] = {r: fe.value for r, fe in prog.register_init.items()}
    latch = prog.dummy_latch_register

    def read(reg: int, op_index: int) -> int:
        try:
            return regs[reg]
        except KeyError:
            raise ProgramError(f"op {op_index} reads register {reg} before any write") from None

    for i, op in enumerate(prog.ops):
        if op.kind == _M:
            if latch is not None:
                regs[latch] = read(op.src1, i)
            result = read(op.src1, i) * read(op.src2, i) % modulus
        elif op.kind == _N:
            result = -read(op.src1, i) % modulus
        else:
            result = (read(op.src1, i) + read(op.src2, i)) % modulus
        regs[op.dest] = result

    fp = prog.curve.field
    ox, oy, oz = prog.output_registers
    return JacobianPoint(
        fp.element(read(ox, -1)), fp.element(read(oy, -1)), fp.element(read(oz, -1))
    )


def _base_register_init(curve: CurveParams, point: AffinePoint) -> dict[int, FieldElement]:
    fp = curve.field
    return {
        REG_X: point.x,
        REG_Y: point.y,
        REG_Z: fp.element(1),
        REG_PX: point.x,
        REG_PY: point.y,
        REG_SCR: fp.element(1),
        REG_SINK: fp.element(0),
    }


def _pattern_program(
    curve: CurveParams,
    atoms: tuple[Atom, ...],
    acc: JacobianPoint,
    point: AffinePoint,
) -> AtomicProgram:
    """A one-pattern program with the accumulator preloaded; validation helper."""
    init = {
        REG_X: acc.X,
        REG_Y: acc.Y,
        REG_Z: acc.Z,
        REG_PX: point.x,
        REG_PY: point.y,
        REG_SCR: curve.field.element(1),
        REG_SINK: curve.field.element(0),
    }
    return AtomicProgram(
        atoms=atoms,
        register_init=init,
        output_registers=(REG_X, REG_Y, REG_Z),
        num_registers=NUM_REGISTERS,
        curve=curve,
    )


def _validation_points(curve: CurveParams) -> list[AffinePoint]:
    points = [curve.base_point]
    for k in (2, 3, 5):
        q = scalar_mul_naive(k, curve.base_point, curve)
        if not q.at_infinity:
            points.append(q)
    return points


def _validate_library(lib: PatternLibrary):
    curve = lib.curve
    # Mathematical correctness on sample points, including non-trivial Z.
    for point in _validation_points(curve):
        for z in (1, 2):
            acc = lift_to_jacobian(point, curve, z)
            got = to_affine(evaluate_program(_pattern_program(curve, lib.doubling, acc, point)), curve)
            want = point_add(point, point, curve)
            if got != want:
                raise FixtureError(f"doubling schedule wrong for {point} with z={z}")
        for other in _validation_points(curve):
            want = point_add(point, other, curve)
            if want.at_infinity or point == other:
                continue  # exceptional cases never occur for in-range scalars
            acc = lift_to_jacobian(point, curve, 2)
            got = to_affine(evaluate_program(_pattern_program(curve, lib.addition, acc, other)), curve)
            if got != want:
                raise FixtureError(f"addition schedule wrong for {point} + {other}")

    sig = squaring_signature(lib)
    if len(sig.doubling) != MULS_PER_ATOM * DOUBLING_ATOMS:
        raise FixtureError("doubling signature has the wrong number of MUL slots")
    if len(sig.addition) != MULS_PER_ATOM * ADDITION_ATOMS:
        raise FixtureError("addition signature has the wrong number of MUL slots")
    if not any(sig.doubling):
        raise FixtureError("doubling schedule contains no squaring")
    # The attack's greedy parse needs the addition signature to diverge
    # from the doubling signature within the first 8 slots.
    if sig.addition[: len(sig.doubling)] == sig.doubling:
        raise FixtureError("addition signature is not distinguishable from doubling")


def build_pattern_library(curve: CurveParams) -> PatternLibrary:
    """Construct and validate the doubling/addition schedules for a curve."""
    if curve.a.value != curve.field.modulus - 3:
        raise CurveError("atomic patterns require a = -3")
    lib = PatternLibrary(curve=curve, doubling=_doubling_atoms(), addition=_addition_atoms())
    if len(lib.doubling) != DOUBLING_ATOMS or len(lib.addition) != ADDITION_ATOMS:
        raise FixtureError("pattern atom counts are wrong")
    _validate_library(lib)
    return lib


def compile_scalar(k: int, point: AffinePoint, lib: PatternLibrary) -> AtomicProgram:
    """Compile k*P into the atom sequence the datapath executes.

    The accumulator starts at P (consuming the most significant bit);
    each remaining bit appends the doubling atoms, and '1' bits append
    the mixed-addition atoms as well.
    """
    if k < 2:
        raise ScalarError(f"scalar {k} not supported; the hardware algorithm needs k >= 2")
    if point.at_infinity:
        raise CurveError("input point must not be the point at infinity")
    if not is_on_curve(point, lib.curve):
        raise CurveError("input point is not on the curve")

    atoms: list[Atom] = []
    origins: list[tuple[int, int, str]] = []
    bits = bin(k)[2:]
    for idx, bit in enumerate(bits[1:], start=1):
        atoms.extend(lib.doubling)
        origins.extend((idx, int(bit), "D") for _ in lib.doubling)
        if bit == "1":
            atoms.extend(lib.addition)
            origins.extend((idx, 1, "A") for _ in lib.addition)

    return AtomicProgram(
        atoms=tuple(atoms),
        register_init=_base_register_init(lib.curve, point),
        output_registers=(REG_X, REG_Y, REG_Z),
        num_registers=lib.num_registers,
        curve=lib.curve,
        atom_origins=tuple(origins),
        ground_truth=k,
    )


def expected_atom_count(k: int) -> int:
    """4 atoms per '0' bit and 10 per '1' bit below the most significant bit."""
    bits = bin(k)[3:]
    ones = bits.count("1")
    zeros = len(bits) - ones
    return DOUBLING_ATOMS * zeros + (DOUBLING_ATOMS + ADDITION_ATOMS) * ones


def serialize_program(prog: AtomicProgram) -> str:
    """Line-oriented text form: header, hex register init, one op per line."""
    lines = [
        f"registers {prog.num_registers}",
        f"outputs {prog.output_registers[0]} {prog.output_registers[1]} {prog.output_registers[2]}",
        f"modulus {prog.curve.field.modulus:#x}",
    ]
    if prog.dummy_latch_register is not None:
        lines.append(f"dummy_latch {prog.dummy_latch_register}")
    for reg in sorted(prog.register_init):
        lines.append(f"init {reg} {prog.register_init[reg].value:#x}")
    for op in prog.ops:
        lines.append(f"{op.kind.name} {op.src1} {op.src2} {op.dest}")
    return "\n".join(lines) + "\n"


def parse_program(text: str, curve: CurveParams) -> AtomicProgram:
    num_registers = None
    outputs = None
    dummy_latch = None
    init: dict[int, FieldElement] = {}
    ops: list[MicroOp] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        head = parts[0]
        if head == "registers":
            num_registers = int(parts[1])
        elif head == "outputs":
            outputs = tuple(int(p) for p in parts[1:4])
        elif head == "modulus":
            if int(parts[1], 16) != curve.field.modulus:
                raise ProgramError("program modulus does not match the curve")
        elif head == "dummy_latch":
            dummy_latch = int(parts[1])
        elif head == "init":
            init[int(parts[1])] = curve.field.element(int(parts[2], 16))
        elif head in FieldOpKind.__members__:
            ops.append(MicroOp(FieldOpKind[head], int(parts[1]), int(parts[2]), int(parts[3])))
        else:
            raise ProgramError(f"unrecognised program line: {line!r}")
    if num_registers is None or outputs is None:
        raise ProgramError("program header is incomplete")
    if len(ops) % len(ATOM_SHAPE) != 0:
        raise ProgramError("op count is not a whole number of atoms")
    for op in ops:
        if not all(0 <= r < num_registers for r in (op.src1, op.src2, op.dest)):
            raise ProgramError(f"register index out of range in {op}")
    atoms = tuple(Atom(tuple(ops[i : i + 7])) for i in range(0, len(ops), 7))
    return AtomicProgram(
        atoms=atoms,
        register_init=init,
        output_registers=outputs,
        num_registers=num_registers,
        curve=curve,
        dummy_latch_register=dummy_latch,
    )
