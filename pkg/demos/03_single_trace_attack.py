#!/usr/bin/env python3
"""Recovering a 256-bit scalar from one noiseless trace.

End-to-end run of the horizontal attack: deterministic segmentation into
per-multiplication features, 1-D clustering, and the greedy parse of the
label stream back into key bits.  Everything the attacker uses is
public: the schedules, the timing model and the countermeasure mode.
"""

import secrets

import atomkp as ak

curve = ak.p256()
lib = ak.build_pattern_library(curve)

k = secrets.randbelow(curve.order - (1 << 255)) + (1 << 255)
print(f"victim scalar (256 bits, kept by the victim): 0x{k:064x}")

prog = ak.compile_scalar(k, curve.base_point, lib)
cfg = ak.DatapathConfig()
log = ak.run_program(prog, cfg)
trace = ak.emit_trace(log, ak.LeakageParams())
print(f"captured ONE power trace: {trace.n_cycles} cycles "
      f"({trace.n_cycles * trace.clock_period_ns / 1000:.1f} us at "
      f"{trace.clock_period_ns:g} ns/cycle)")

timing = ak.TimingModel.from_config(cfg)
features = ak.segment_trace(trace, timing)
print(f"\nsegmentation: {len(log.sources) // timing.atom_cycles} atoms x 2 MUL slots "
      f"= {len(features)} features")

labels, score = ak.classify(features)
n_sqr = sum(1 for l in labels if l.name == "SQR")
print(f"clustering: separation score {score:.3g}, "
      f"{n_sqr} squarings / {len(labels) - n_sqr} multiplications")

public = ak.PublicParams(timing=timing, signature=ak.squaring_signature(lib))
report = ak.recover_scalar(trace, public)
print(f"\nparsed bits: {len(report.recovered_bits)}")
print(f"recovered scalar: 0x{report.recovered_scalar:064x}")
print(f"\nexact match with the victim's scalar: {report.recovered_scalar == k}")
