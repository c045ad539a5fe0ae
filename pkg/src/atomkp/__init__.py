"""Cycle-accurate atomic-pattern kP datapath simulation and analysis.

The package splits into a mathematical oracle (field, curves), the
register-transfer layer (scheduler, datapath), the power model (leakage)
and the adversary (attack), tied together by the cli experiment driver.
"""

from .attack import (
    AttackReport,
    Label,
    MulFeature,
    PublicParams,
    TimingModel,
    classify,
    evaluate_report,
    parse_atoms,
    recover_scalar,
    segment_trace,
)
from .curves import (
    AffinePoint,
    CurveParams,
    JacobianPoint,
    find_toy_curve,
    is_on_curve,
    lift_to_jacobian,
    p256,
    point_add,
    scalar_mul_naive,
    to_affine,
    toy_curve,
)
from .datapath import (
    Countermeasure,
    CycleRecord,
    DatapathConfig,
    ExecutionLog,
    Phase,
    SourceAddress,
    apply_cm2_rewrite,
    choose_cm1_dummy_source,
    run_program,
)
from .field import FieldElement, FieldParams, fe_add, fe_inv, fe_mul, fe_neg, fe_sub
from .leakage import (
    FeatureGap,
    LeakageParams,
    MuxModel,
    PowerTrace,
    emit_trace,
    feature_gap,
    read_trace,
    switching_trace,
    write_trace,
)
from .scheduler import (
    Atom,
    AtomicProgram,
    FieldOpKind,
    MicroOp,
    PatternLibrary,
    SquaringSignature,
    build_pattern_library,
    compile_scalar,
    evaluate_program,
    expected_atom_count,
    parse_program,
    serialize_program,
    squaring_signature,
)

__version__ = "0.1.0"
