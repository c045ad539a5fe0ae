#!/usr/bin/env python3
"""What the dummy register does NOT hide.

The dummy-register countermeasure fixes the address side of the marker:
a squaring's second fetch now selects a different register, so the
multiplexer switches.  But the value on the bus still does not change,
and that is observable the moment the model weights data-bit toggles.
With a nonzero data weight the second fetch of a regular multiplication
flips about half of the 256 bus lines while a squaring flips none, and
the feature groups separate again (this particular parse then trips
over the filler multiplication, whose tiny scratch operands sit next to
the squarings, but the distinguishability the countermeasure was meant
to remove is plainly back).

Equal-operand additions show the same residual effect, visible in the
trace but outside this attack's feature set.  Closing the value side of
the channel needs a different mechanism than address redirection.
"""

import random

import atomkp as ak

curve = ak.p256()
lib = ak.build_pattern_library(curve)
rng = random.Random(5)
k = rng.randrange(1 << 255, curve.order)
prog = ak.compile_scalar(k, curve.base_point, lib)
cfg = ak.DatapathConfig(countermeasure=ak.Countermeasure.CM2_DUMMY_REGISTER)
log = ak.run_program(prog, cfg)
public = ak.PublicParams(
    timing=ak.TimingModel.from_config(cfg), signature=ak.squaring_signature(lib)
)

print("dummy-register mode, one trace, two calibrations of the same leakage model\n")
for alpha, label in ((0.0, "address-only model (alpha=0)"), (0.05, "with data-bit weight (alpha=0.05)")):
    params = ak.LeakageParams(alpha=alpha)
    gap = ak.feature_gap(log, params)
    trace = ak.emit_trace(log, params)
    report = ak.recover_scalar(trace, public)
    outcome = (
        "abstained"
        if report.abstained
        else ("RECOVERED THE KEY" if report.recovered_scalar == k else "wrong bits")
    )
    print(f"{label}:")
    print(f"  second-fetch samples: squarings {gap.sqr_min:.2f}..{gap.sqr_max:.2f}, "
          f"multiplications {gap.mul_min:.2f}..{gap.mul_max:.2f}")
    print(f"  attack outcome: {outcome} (separation {report.separation_score:.2f})\n")

print("the address countermeasure stands or falls with how little the bus")
print("data lines contribute to the observable power of this multiplexer")
