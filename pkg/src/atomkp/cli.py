"""End-to-end experiment driver and file I/O.

Subcommands:

  validate   compile -> simulate -> convert back, compared against the
             affine oracle for every configured scalar and all three
             countermeasure modes; exit 0 only if everything matches.
  simulate   write a trace file and a separate ground-truth annotation
             file for one kP execution.
  attack     run the single-trace attack on a trace file; exit codes
             0 recovered / 1 unreadable input / 2 abstained / 3 wrong.
  evaluate   sweep countermeasure modes and noise levels, write summary
             tables, per-mode recovery curves and a three-trace overlay
             of the first multiplication window.

Config files are flat `section.key=value` text; see ExperimentConfig.
Ground truth never travels inside trace files: the annotation file is a
separate artifact that the attack command does not read unless it is
passed explicitly.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, fields as dc_fields, replace
from functools import lru_cache
from pathlib import Path
from typing import Optional

import numpy as np

from .attack import (
    AttackReport,
    PublicParams,
    TimingModel,
    evaluate_report,
    recover_scalar,
)
from .curves import (
    CurveParams,
    JacobianPoint,
    load_curve_file,
    p256,
    scalar_mul_naive,
    to_affine,
    toy_curve,
)
from .datapath import Countermeasure, DatapathConfig, run_program
from .errors import ConfigError, ScalarError, SimulationError, TraceFormatError
from .leakage import LeakageParams, MuxModel, emit_trace, read_trace, write_trace
from .scheduler import (
    AtomicProgram,
    PatternLibrary,
    build_pattern_library,
    compile_scalar,
    squaring_signature,
)

MODES = (Countermeasure.NONE, Countermeasure.CM1_BUS_RELOAD, Countermeasure.CM2_DUMMY_REGISTER)

# Independent seed streams derived from the master seed.
_STREAM_SCALAR = 0
_STREAM_DATAPATH = 1
_STREAM_NOISE = 2


@dataclass(frozen=True)
class ExperimentConfig:
    curve: str = "toy"  # p256 | toy | file:<path>
    scalar: str = "random"  # random | exhaustive | hex:<hex digits>
    mode: str = "none"  # none | cm1 | cm2
    trials: int = 1
    seed: int = 0
    mul_latency: int = 4
    addsub_latency: int = 1
    clock_period_ns: float = 30.0
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 4.0
    noise_sigma: float = 0.0
    mux_model: str = "linear_hd"
    threshold: float = 2.0
    sigmas: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.mode not in {cm.value for cm in Countermeasure}:
            raise ConfigError(f"unknown countermeasure mode {self.mode!r}")


_CONFIG_KEYS = {
    "curve": ("curve", str),
    "scalar": ("scalar", str),
    "mode": ("mode", str),
    "trials": ("trials", int),
    "seed": ("seed", int),
    "datapath.mul_latency": ("mul_latency", int),
    "datapath.addsub_latency": ("addsub_latency", int),
    "datapath.clock_period_ns": ("clock_period_ns", float),
    "leakage.alpha": ("alpha", float),
    "leakage.beta": ("beta", float),
    "leakage.gamma": ("gamma", float),
    "leakage.noise_sigma": ("noise_sigma", float),
    "leakage.mux_model": ("mux_model", str),
    "attack.threshold": ("threshold", float),
    "evaluate.sigmas": ("sigmas", None),
}

_FIELD_TO_KEY = {field: key for key, (field, _) in _CONFIG_KEYS.items()}


def parse_config(text: str) -> ExperimentConfig:
    values = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"malformed config line: {line!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        field, caster = _CONFIG_KEYS[key]
        if field == "sigmas":
            values[field] = tuple(float(s) for s in val.split(",") if s)
        else:
            values[field] = caster(val)
    return ExperimentConfig(**values)


def render_config(cfg: ExperimentConfig) -> str:
    lines = []
    for field in dc_fields(ExperimentConfig):
        value = getattr(cfg, field.name)
        key = _FIELD_TO_KEY[field.name]
        if field.name == "sigmas":
            rendered = ",".join(repr(s) for s in value)
        elif isinstance(value, float):
            rendered = repr(value)
        else:
            rendered = str(value)
        lines.append(f"{key}={rendered}")
    return "\n".join(lines) + "\n"


def load_config(path: Optional[str]) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    return parse_config(Path(path).read_text(encoding="utf-8"))


def _derive_int(master: int, *key: int) -> int:
    ss = np.random.SeedSequence(entropy=master, spawn_key=key)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _random_scalar(master: int, trial: int, order: int) -> int:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=master, spawn_key=(_STREAM_SCALAR, trial)))
    nbits = order.bit_length()
    nwords = (nbits + 31) // 32
    while True:
        k = 0
        for word in rng.integers(0, 1 << 32, size=nwords, dtype=np.uint64):
            k = (k << 32) | int(word)
        k &= (1 << nbits) - 1
        if 2 <= k < order:
            return k


def resolve_curve(cfg: ExperimentConfig) -> CurveParams:
    if cfg.curve == "p256":
        return p256()
    if cfg.curve == "toy":
        return toy_curve()
    if cfg.curve.startswith("file:"):
        return load_curve_file(cfg.curve[5:])
    raise ConfigError(f"unknown curve selector {cfg.curve!r}")


def resolve_scalars(cfg: ExperimentConfig, curve: CurveParams) -> list[int]:
    if cfg.scalar.startswith("hex:"):
        k = int(cfg.scalar[4:], 16)
        if k < 2:
            raise ScalarError(f"configured scalar {k} is below the supported minimum of 2")
        return [k]
    if cfg.scalar == "exhaustive":
        if curve.order > 1 << 16:
            raise ConfigError("exhaustive scalars are only supported on toy curves")
        return list(range(2, curve.order))
    if cfg.scalar == "random":
        return [_random_scalar(cfg.seed, t, curve.order) for t in range(cfg.trials)]
    raise ConfigError(f"unknown scalar selector {cfg.scalar!r}")


def datapath_config(cfg: ExperimentConfig, mode: Countermeasure, trial: int = 0) -> DatapathConfig:
    return DatapathConfig(
        mul_latency=cfg.mul_latency,
        addsub_latency=cfg.addsub_latency,
        countermeasure=mode,
        rng_seed=_derive_int(cfg.seed, _STREAM_DATAPATH, trial),
        clock_period_ns=cfg.clock_period_ns,
    )


def leakage_params(cfg: ExperimentConfig, sigma: Optional[float] = None, trial: int = 0) -> LeakageParams:
    return LeakageParams(
        alpha=cfg.alpha,
        beta=cfg.beta,
        gamma=cfg.gamma,
        noise_sigma=cfg.noise_sigma if sigma is None else sigma,
        noise_seed=_derive_int(cfg.seed, _STREAM_NOISE, trial),
        mux_model=MuxModel(cfg.mux_model),
    )


@lru_cache(maxsize=8)
def _library(curve: CurveParams) -> PatternLibrary:
    return build_pattern_library(curve)


def public_params(cfg: ExperimentConfig, mode: str, lib: PatternLibrary) -> PublicParams:
    timing = TimingModel.from_parts(cfg.mul_latency, cfg.addsub_latency, mode)
    return PublicParams(timing=timing, signature=squaring_signature(lib), threshold=cfg.threshold)


# ----------------------------------------------------------------------
# annotation and report files


def write_annotations(path, prog: AtomicProgram, log, mode: str):
    """Ground-truth sidecar for a trace: scalar, per-atom bits, per-MUL flags."""
    tm = TimingModel.from_parts(log.config.mul_latency, log.config.addsub_latency, mode)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# annotations cycles={log.n_cycles} atoms={log.num_atoms} mode={mode}\n")
        fh.write(f"scalar=0x{prog.ground_truth:x}\n")
        fh.write(
            f"timing mul={tm.cycles_per_mul_op} add={tm.cycles_per_add_op} "
            f"neg={tm.cycles_per_neg_op} atom={tm.atom_cycles}\n"
        )
        for idx, (bit_index, bit_value, pattern) in enumerate(prog.atom_origins):
            fh.write(f"atom {idx} {pattern} bit={bit_index} value={bit_value}\n")
        ordinal = 0
        for ann in log.annotations:
            if ann.kind.name != "MUL":
                continue
            fh.write(
                f"mul {ordinal} fetch2={ann.fetch2_cycle} "
                f"sqr_addr={int(ann.was_squaring_by_address)} "
                f"sqr_value={int(ann.was_squaring_by_value)}\n"
            )
            ordinal += 1


def read_annotation_scalar(path) -> int:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("scalar="):
                return int(line.partition("=")[2], 16)
    raise TraceFormatError(f"annotation file {path} carries no scalar")


def render_report(report: AttackReport, mode: str) -> str:
    lines = [
        "# attack report",
        f"mode={mode}",
        f"features={len(report.labels)}",
        f"separation_score={report.separation_score:.6f}",
        f"abstained={int(report.abstained)}",
    ]
    if report.recovered_bits:
        lines.append(f"recovered=0x{report.recovered_scalar:x}")
    else:
        reason = "abstained" if report.abstained else (report.error or "unknown")
        lines.append(f"recovered=FAILED reason={reason}")
    if report.bit_accuracy is not None:
        lines.append(f"bit_accuracy={report.bit_accuracy:.6f}")
        lines.append(f"full_recovery={int(bool(report.full_recovery))}")
    for i, label in enumerate(report.labels):
        lines.append(f"label {i} {label.name}")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# subcommands


def cmd_validate(cfg: ExperimentConfig, corrupt_library: Optional[PatternLibrary] = None) -> int:
    """Oracle cross-check of the whole pipeline; the corrupt_library hook
    exists so tests can prove a broken schedule is caught."""
    curve = resolve_curve(cfg)
    lib = corrupt_library if corrupt_library is not None else _library(curve)
    scalars = resolve_scalars(cfg, curve)
    fp = curve.field
    for k in scalars:
        expected = scalar_mul_naive(k, curve.base_point, curve)
        for mode in MODES:
            prog = compile_scalar(k, curve.base_point, lib)
            log = run_program(prog, datapath_config(cfg, mode))
            ox, oy, oz = prog.output_registers
            jac = JacobianPoint(
                fp.element(log.final_registers[ox]),
                fp.element(log.final_registers[oy]),
                fp.element(log.final_registers[oz]),
            )
            got = to_affine(jac, curve)
            if got != expected:
                print(f"validate k={k:#x} mode={mode.value}: MISMATCH")
                return 1
            print(f"validate k={k:#x} mode={mode.value}: ok")
    print(f"validate: {len(scalars)} scalar(s) x {len(MODES)} modes all match the oracle")
    return 0


def cmd_simulate(cfg: ExperimentConfig, out_dir) -> int:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    curve = resolve_curve(cfg)
    lib = _library(curve)
    k = resolve_scalars(cfg, curve)[0]
    mode = Countermeasure(cfg.mode)
    prog = compile_scalar(k, curve.base_point, lib)
    log = run_program(prog, datapath_config(cfg, mode))
    trace = emit_trace(log, leakage_params(cfg))
    write_trace(trace, out / "trace.txt")
    write_annotations(out / "annotations.txt", prog, log, mode.value)
    print(f"simulate: wrote {out / 'trace.txt'} ({trace.n_cycles} cycles) and annotations")
    return 0


def cmd_attack(trace_path, cfg: ExperimentConfig, annotations_path=None, out_dir=None) -> int:
    try:
        trace = read_trace(trace_path)
    except (OSError, TraceFormatError, ValueError) as exc:
        print(f"attack: cannot read trace: {exc}", file=sys.stderr)
        return 1
    curve = resolve_curve(cfg)
    lib = _library(curve)
    report = recover_scalar(trace, public_params(cfg, trace.mode, lib))
    if annotations_path is not None:
        report = evaluate_report(report, read_annotation_scalar(annotations_path))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(render_report(report, trace.mode), encoding="utf-8")
    if report.abstained:
        print(f"attack: abstained (separation {report.separation_score:.3f})")
        return 2
    if report.recovered_bits is None:
        print(f"attack: failed: {report.error}")
        return 3
    if report.full_recovery is False:
        print("attack: recovered a scalar but it does not match the ground truth")
        return 3
    print(f"attack: recovered k = 0x{report.recovered_scalar:x}")
    return 0


def _first_mul_window(trace, tm: TimingModel) -> list[float]:
    return [float(s) for s in trace.samples[: tm.cycles_per_mul_op]]


def cmd_evaluate(cfg: ExperimentConfig, out_dir) -> int:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    curve = resolve_curve(cfg)
    lib = _library(curve)
    scalars = resolve_scalars(cfg, curve)
    sigmas = cfg.sigmas

    cells: dict[tuple[str, float], dict] = {
        (mode.value, sigma): {"acc": [], "full": 0, "sep": [], "cycles": []}
        for mode in MODES
        for sigma in sigmas
    }

    overlay: dict[str, list[float]] = {}
    for trial, k in enumerate(scalars):
        prog = compile_scalar(k, curve.base_point, lib)
        n_mul_ops = sum(1 for op in prog.ops if op.kind.name == "MUL")
        logs = {}
        for mode in MODES:
            logs[mode.value] = run_program(prog, datapath_config(cfg, mode, trial))
        base_cycles = logs["none"].n_cycles
        if logs["cm1"].n_cycles != base_cycles + n_mul_ops:
            raise SimulationError("bus-reloading cost law violated")
        if logs["cm2"].n_cycles != base_cycles:
            raise SimulationError("dummy-register cost law violated")

        for mode in MODES:
            public = public_params(cfg, mode.value, lib)
            for sigma_i, sigma in enumerate(sigmas):
                params = LeakageParams(
                    alpha=cfg.alpha,
                    beta=cfg.beta,
                    gamma=cfg.gamma,
                    noise_sigma=sigma,
                    noise_seed=_derive_int(cfg.seed, _STREAM_NOISE, trial, MODES.index(mode), sigma_i),
                    mux_model=MuxModel(cfg.mux_model),
                )
                trace = emit_trace(logs[mode.value], params)
                report = evaluate_report(recover_scalar(trace, public), k)
                cell = cells[(mode.value, sigma)]
                cell["acc"].append(report.bit_accuracy)
                cell["full"] += int(bool(report.full_recovery))
                cell["sep"].append(report.separation_score)
                cell["cycles"].append(logs[mode.value].n_cycles)
                if trial == 0 and sigma_i == 0 and mode.value not in overlay:
                    tm = TimingModel.from_parts(cfg.mul_latency, cfg.addsub_latency, mode.value)
                    overlay[mode.value] = _first_mul_window(trace, tm)

    summary_path = out / "summary.txt"
    with open(summary_path, "w", encoding="utf-8") as fh:
        fh.write(f"# evaluation trials={len(scalars)} curve={cfg.curve}\n")
        fh.write("# mode sigma full_recovery_rate mean_bit_accuracy mean_separation cycles_min cycles_max\n")
        for (mode, sigma), cell in cells.items():
            n = len(cell["acc"])
            fh.write(
                f"cell mode={mode} sigma={sigma:g} trials={n} "
                f"full_recovery_rate={cell['full'] / n:.4f} "
                f"mean_bit_accuracy={float(np.mean(cell['acc'])):.4f} "
                f"mean_separation={float(np.mean(cell['sep'])):.4f} "
                f"cycles_min={min(cell['cycles'])} cycles_max={max(cell['cycles'])}\n"
            )

    for mode in MODES:
        lines = [
            f"{sigma:g} {cells[(mode.value, sigma)]['full'] / len(cells[(mode.value, sigma)]['acc']):.4f}"
            for sigma in sigmas
        ]
        (out / f"recovery_{mode.value}.dat").write_text("\n".join(lines) + "\n", encoding="utf-8")

    with open(out / "overlay_first_mul.dat", "w", encoding="utf-8") as fh:
        fh.write("# power samples of the first multiplication window, one block per mode\n")
        for mode in MODES:
            fh.write(f"# mode={mode.value}\n")
            for i, power in enumerate(overlay[mode.value]):
                fh.write(f"{i} {power:.6f}\n")
            fh.write("\n")

    print(f"evaluate: wrote {summary_path}, recovery curves and overlay data")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="atomkp",
        description="Atomic-pattern kP datapath simulator, squaring-marker attack and countermeasure evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("validate", "simulate", "attack", "evaluate"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="experiment config file (key=value)")
        p.add_argument("--seed", type=int, help="override the master seed")
        if name in ("simulate", "evaluate"):
            p.add_argument("--out", required=True, help="output directory")
        if name == "attack":
            p.add_argument("--trace", required=True, help="trace file to analyse")
            p.add_argument("--annotations", help="optional ground-truth file for scoring")
            p.add_argument("--out", help="output directory for the report")

    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.command == "validate":
            return cmd_validate(cfg)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.out)
        if args.command == "attack":
            return cmd_attack(args.trace, cfg, args.annotations, args.out)
        return cmd_evaluate(cfg, args.out)
    except SimulationError as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
