#!/usr/bin/env python3
"""Comparing the two countermeasures on cost and effectiveness.

Bus reloading (cm1) drives a randomly chosen idle source between the two
operand fetches of every multiplication: the marker drowns, at the price
of one clock cycle per multiplication.  The dummy register (cm2) shadows
the first multiplicand so a squaring fetches it from a different
address: no time cost, one extra register.  Both push the attack into
abstention.
"""

import random

import atomkp as ak
from atomkp.scheduler import FieldOpKind

curve = ak.p256()
lib = ak.build_pattern_library(curve)
sig = ak.squaring_signature(lib)
rng = random.Random(42)

TRIALS = 10
rows = {mode: {"cycles": [], "outcome": []} for mode in ak.Countermeasure}

for trial in range(TRIALS):
    k = rng.randrange(1 << 255, curve.order)
    prog = ak.compile_scalar(k, curve.base_point, lib)
    for mode in ak.Countermeasure:
        cfg = ak.DatapathConfig(countermeasure=mode, rng_seed=trial)
        log = ak.run_program(prog, cfg)
        trace = ak.emit_trace(log, ak.LeakageParams())
        report = ak.recover_scalar(
            trace, ak.PublicParams(timing=ak.TimingModel.from_config(cfg), signature=sig)
        )
        rows[mode]["cycles"].append(log.n_cycles)
        if report.abstained:
            rows[mode]["outcome"].append("abstain")
        elif report.recovered_scalar == k:
            rows[mode]["outcome"].append("RECOVERED")
        else:
            rows[mode]["outcome"].append("wrong")

n_mul = sum(1 for op in prog.ops if op.kind == FieldOpKind.MUL)
base = rows[ak.Countermeasure.NONE]["cycles"][-1]

print(f"{TRIALS} random 256-bit scalars, noiseless traces\n")
print(f"{'mode':6s} {'attack outcomes':30s} {'cycles (last trial)':>20s}")
for mode in ak.Countermeasure:
    outcomes = rows[mode]["outcome"]
    summary = ", ".join(f"{outcomes.count(o)}x {o}" for o in dict.fromkeys(outcomes))
    print(f"{mode.value:6s} {summary:30s} {rows[mode]['cycles'][-1]:>20d}")

print(f"\ncost accounting for the last trial ({n_mul} multiplications):")
print(f"  cm1 = baseline + one cycle per multiplication: "
      f"{base} + {n_mul} = {base + n_mul} "
      f"({'confirmed' if rows[ak.Countermeasure.CM1_BUS_RELOAD]['cycles'][-1] == base + n_mul else 'MISMATCH'})")
print(f"  cm2 = baseline exactly: "
      f"{'confirmed' if rows[ak.Countermeasure.CM2_DUMMY_REGISTER]['cycles'][-1] == base else 'MISMATCH'}")
rewritten = ak.apply_cm2_rewrite(prog)
print(f"  cm2 register file: {prog.num_registers} -> {rewritten.num_registers} (one dummy register)")
