#!/usr/bin/env python3
"""Atoms, patterns and program compilation.

Walks through the register-transfer layer: what an atom looks like, how
point doubling and mixed addition map onto the fixed MNAMNAA shape, and
how a scalar compiles into a program whose length betrays nothing beyond
the bit statistics the attack will later exploit.
"""

import atomkp as ak

curve = ak.toy_curve()
print(f"toy curve: p={curve.field.modulus}, b={curve.b.value}, "
      f"base=({curve.base_point.x.value},{curve.base_point.y.value}), order={curve.order}")

lib = ak.build_pattern_library(curve)
print(f"\ndoubling pattern: {len(lib.doubling)} atoms, "
      f"mixed addition: {len(lib.addition)} atoms")

print("\nfirst doubling atom (kind src1 src2 dest):")
for op in lib.doubling[0].ops:
    print(f"  {op.kind.name:3s} {op.src1:2d} {op.src2:2d} -> {op.dest:2d}")

sig = ak.squaring_signature(lib)
print("\nsquaring signature (1 = the MUL slot squares):")
print("  doubling:", "".join(str(int(b)) for b in sig.doubling))
print("  addition:", "".join(str(int(b)) for b in sig.addition))

print("\natom counts follow 4 per '0' bit and 10 per '1' bit:")
for k in (0b10, 0b11, 0b101, 0b11111111):
    prog = ak.compile_scalar(k, curve.base_point, lib)
    print(f"  k={bin(k):>12s}: {len(prog.atoms):3d} atoms "
          f"(expected {ak.expected_atom_count(k)})")

k = curve.order - 2
prog = ak.compile_scalar(k, curve.base_point, lib)
result = ak.to_affine(ak.evaluate_program(prog), curve)
oracle = ak.scalar_mul_naive(k, curve.base_point, curve)
print(f"\nfunctional check for k={k}: program result "
      f"{'matches' if result == oracle else 'DIFFERS FROM'} the group-law oracle")

print("\nserialized program header:")
for line in ak.serialize_program(prog).splitlines()[:6]:
    print(" ", line)
print("  ...")
