"""
Command-line front end: Monte Carlo sweeps, trapping-set experiments,
code inspection and decoder timing.

    bp4 simulate --code toric --L 4,6 --decoder ewainit --p 0.02:0.16:0.02 --out r.csv
    bp4 trap --decoder adagrad --schedule parallel --trace t.csv
    bp4 codeinfo --code planar --L 3
    bp4 bench --code planar --L 3,7,11 --p 0.2

Exit codes: 0 done, 2 bad arguments or input file, 3 code failed validation.
"""
import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from codes import (CodeFormatError, CodeSpec, CodeValidationError, build_planar, build_toric, build_xzzx,
                   estimate_distance, load_code, save_code, validate)
from decoder_config import SCHEDULES, VARIANTS, ConfigError, DecoderConfig, DEFAULT_ITER_MAX
from evaluation import ROW_COLUMNS, RunStats, sweep
from noise import DEPOLARIZING_BIAS, NoiseModel
from trapping import (DEFAULT_ERROR_QUBITS, DEFAULT_T_VALUES, TRAP_ITER_MAX, TRAP_P, TRAP_PERIOD_MAX,
                      build_ts40, detect_oscillation, export_trace, format_table, trapping_suite, trace_decode,
                      ts40_instance)

logger = logging.getLogger(__name__)

TOOL_VERSION = "0.1.0"
DEFAULT_TRIALS = 10_000
DEFAULT_SEED = 1
P_RANGE_TOLERANCE = 1e-12
BENCH_DECODERS = "ewainit,aewa,ambp"
# bench runs these serially unless --schedule says otherwise
SERIAL_BY_DEFAULT = ("mbp", "ambp")


@dataclass
class RunManifest:
    """What is needed to rerun a command and get the same rows."""
    tool_version: str
    command: str
    config: Dict[str, object]
    master_seed: int
    started: Optional[str] = None
    finished: Optional[str] = None
    rows: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def parse_p_values(text: str) -> List[float]:
    """'0.05', '0.02,0.04' or an inclusive range 'start:stop:step'."""
    if ":" not in text:
        values = parse_float_list(text)
        if not values:
            raise ConfigError(f"malformed p value {text!r}")
        return values
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"malformed p-range {text!r}: expected start:stop:step")
    try:
        start, stop, step = (float(x) for x in parts)
    except ValueError:
        raise ConfigError(f"malformed p-range {text!r}")
    if step <= 0 or stop < start:
        raise ConfigError(f"malformed p-range {text!r}: need step > 0 and start <= stop")
    values = []
    k = 0
    while start + k * step <= stop + P_RANGE_TOLERANCE:
        values.append(round(start + k * step, 12))
        k += 1
    return values


def parse_int_list(text: Optional[str]) -> List[int]:
    if not text:
        return []
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}")


def parse_float_list(text: Optional[str]) -> List[float]:
    if not text:
        return []
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}")


def worker_count(text: str) -> int:
    """argparse type for --workers; also applied to the BP4_WORKERS default."""
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"worker count must be at least 1, got {value}")
    return value


def resolve_codes(name: str, sizes: Sequence[int]) -> List[CodeSpec]:
    """Codes named on the command line: toric, planar, xzzx, ts40 or file:<path>."""
    if name.startswith("file:"):
        return [load_code(name[len("file:"):])]
    if name == "ts40":
        return [build_ts40()]
    builders = {"toric": build_toric, "planar": build_planar, "xzzx": build_xzzx}
    if name not in builders:
        raise ConfigError(f"unknown code {name!r}; use toric, planar, xzzx, ts40 or file:<path>")
    if not sizes:
        raise ConfigError(f"--L is required for {name} codes")
    return [builders[name](L) for L in sizes]


def _bias(args) -> tuple:
    if args.eta_z is not None:
        rest = (1.0 - args.eta_z) / 2
        return (rest, rest, args.eta_z)
    if args.bias:
        values = parse_float_list(args.bias)
        if len(values) != 3:
            raise ConfigError(f"--bias needs three weights, got {args.bias!r}")
        return tuple(values)
    return DEPOLARIZING_BIAS


def _decoder_config(args, variant: str) -> DecoderConfig:
    schedule = args.schedule or ("serial" if variant in SERIAL_BY_DEFAULT else "parallel")
    return DecoderConfig.for_variant(
        variant,
        schedule=schedule,
        alpha=args.alpha,
        gamma=args.gamma,
        ots_T=args.T,
        ots_C=args.C,
        iter_max=args.iter_max,
        alpha_list=tuple(parse_float_list(args.alphas)) or None,
    )


def _require_valid(codes: Sequence[CodeSpec]) -> None:
    for code in codes:
        report = validate(code)
        if not report.valid:
            raise CodeValidationError(f"{code.name}: {report.violation}")


def _write_results(path: Optional[str], stats: Sequence[RunStats], manifest: RunManifest, timing: bool) -> None:
    rows = [s.to_row(timing) for s in stats]
    if path is None:
        writer = csv.DictWriter(sys.stdout, fieldnames=ROW_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return
    out = Path(path)
    if out.suffix == ".json":
        with open(out, "w", encoding="utf-8") as handle:
            json.dump({"results": rows, "manifest": manifest.to_dict()}, handle, indent=2)
    else:
        with open(out, "w", newline="", encoding="utf-8") as handle:
            writer = csv.DictWriter(handle, fieldnames=ROW_COLUMNS, lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
        with open(out.with_name(out.name + ".manifest.json"), "w", encoding="utf-8") as handle:
            json.dump(manifest.to_dict(), handle, indent=2)
    print(f"Wrote {len(rows)} rows to {out}")


def _run_sweep(args, command: str, variants: Sequence[str]) -> int:
    codes = resolve_codes(args.code, parse_int_list(args.L))
    _require_valid(codes)
    p_values = parse_p_values(args.p)
    bias = _bias(args)
    for p in p_values:
        NoiseModel(p, bias)
    configs = [_decoder_config(args, v) for v in variants]
    timing = not args.no_timing

    manifest = RunManifest(TOOL_VERSION, command, {k: v for k, v in vars(args).items() if k != "func"},
                           args.seed, started=_now() if timing else None)
    manifest.config["decoders"] = [c.to_dict() for c in configs]
    stats = sweep(codes, p_values, configs, args.trials, args.seed, args.workers, bias, progress=args.progress)
    if timing:
        manifest.finished = _now()
    manifest.rows = [f"{s.code.name}/{s.config.variant}/p={s.model.p_total:g}" for s in stats]

    # stdout carries the CSV itself when --out is omitted
    summary = sys.stdout if args.out else sys.stderr
    for s in stats:
        print(s, file=summary)
    _write_results(args.out, stats, manifest, timing)
    return 0


def cmd_simulate(args) -> int:
    return _run_sweep(args, "simulate", [args.decoder])


def cmd_bench(args) -> int:
    """Mean wall time and iterations per decode for several decoders on the same seeds."""
    variants = [v.strip() for v in args.decoders.split(",") if v.strip()]
    for v in variants:
        if v not in VARIANTS:
            raise ConfigError(f"unknown decoder {v!r}")
    args.decoder = ",".join(variants)
    args.no_timing = False
    return _run_sweep(args, "bench", variants)


def cmd_trap(args) -> int:
    instance = ts40_instance(parse_int_list(args.error_qubits) or DEFAULT_ERROR_QUBITS, args.pauli, args.p)
    print(f"Trapping set: error {instance.error}, syndrome {''.join(map(str, instance.syndrome))}")

    if args.decoder is None:
        rows = trapping_suite(iter_max=args.iter_max, T_values=parse_int_list(args.T_values) or DEFAULT_T_VALUES,
                              instance=instance)
        print(format_table(rows))
        return 0

    config = DecoderConfig.for_variant(args.decoder, schedule=args.schedule or "parallel", alpha=args.alpha,
                                       gamma=args.gamma, ots_T=args.T, ots_C=args.C, iter_max=args.iter_max)
    outcome, trace = trace_decode(instance.code, instance.syndrome, instance.priors, config)
    print(f"{config}: converged={outcome.converged} iterations={outcome.total_iterations}")
    if config.uses_ots:
        print(f"OTS firings: {outcome.ots_firings}")
    if not outcome.converged and len(trace) >= 2 * TRAP_PERIOD_MAX:
        print(f"oscillation period: {detect_oscillation(trace)}")
    for record in trace.records:
        print(f"  t={record.iteration:<3} {record.estimate}  Q_X={' '.join(f'{q:+.3f}' for q in record.posterior[:, 0])}")
    if args.trace:
        export_trace(trace, args.trace)
        print(f"Wrote trace to {args.trace}")
    return 0


def cmd_codeinfo(args) -> int:
    codes = resolve_codes(args.code, parse_int_list(args.L))
    status = 0
    for code in codes:
        report = validate(code)
        distance = code.distance
        if args.distance and report.valid:
            distance = estimate_distance(code, args.max_weight)
        d = "?" if distance is None else str(distance)
        verdict = "valid" if report.valid else f"INVALID: {report.violation}"
        print(f"{code.name}: [[{code.n_qubits}, {code.n_logical}, {d}]] {verdict}")
        print(f"  N={report.n_qubits} M={report.n_checks} rank={report.rank} K={report.n_logical} "
              f"css={code.is_css}")
        print(f"  row weights: {report.row_weights}")
        print(f"  column weights: {report.col_weights}")
        if not report.valid:
            status = 3
        elif args.save:
            save_code(code, args.save)
            print(f"  saved to {args.save}")
    return status


def _add_code_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--code", required=True, help="toric, planar, xzzx, ts40 or file:<path>")
    parser.add_argument("--L", help="Lattice size(s), comma separated")


def _add_decoder_args(parser: argparse.ArgumentParser, iter_max: int) -> None:
    parser.add_argument("--schedule", choices=SCHEDULES, default="parallel")
    parser.add_argument("--alpha", type=float, default=None, help="Step size / EWA weight (variant default)")
    parser.add_argument("--gamma", type=float, default=0.0, help="Momentum smoothing")
    parser.add_argument("--T", type=int, default=None, help="OTS period")
    parser.add_argument("--C", type=float, default=None, help="OTS prior magnitude")
    parser.add_argument("--iter-max", type=int, default=iter_max)


def _add_sweep_args(parser: argparse.ArgumentParser) -> None:
    _add_code_args(parser)
    _add_decoder_args(parser, DEFAULT_ITER_MAX)
    parser.add_argument("--alphas", help="Sweep list for ambp/aewa, descending, comma separated")
    parser.add_argument("--p", required=True, help="p value, list, or start:stop:step")
    parser.add_argument("--eta-z", type=float, default=None, help="Z bias; X and Y share the rest")
    parser.add_argument("--bias", help="eta_x,eta_y,eta_z")
    parser.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--workers", type=worker_count, default=os.environ.get("BP4_WORKERS", "1"),
                        help="Worker processes (default $BP4_WORKERS or 1)")
    parser.add_argument("--out", help="CSV path, or .json for JSON; stdout when omitted")
    parser.add_argument("--progress", action="store_true", help="Show progress bars")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bp4", description="GF(4) belief-propagation decoders for surface codes")
    parser.add_argument("--log-level", default="WARNING", help="Logging level for stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="Monte Carlo logical error rates")
    _add_sweep_args(simulate)
    simulate.add_argument("--decoder", choices=VARIANTS, default="plain")
    simulate.add_argument("--no-timing", action="store_true", help="Blank timing columns for byte-identical output")
    simulate.set_defaults(func=cmd_simulate)

    trap = sub.add_parser("trap", help="Decode the (4,0) trapping set")
    trap.add_argument("--decoder", choices=VARIANTS, default=None, help="Single decoder; full table when omitted")
    _add_decoder_args(trap, TRAP_ITER_MAX)
    trap.add_argument("--error-qubits", help="Qubits carrying the injected error (default 1,2)")
    trap.add_argument("--pauli", default="X", choices=("X", "Y", "Z"))
    trap.add_argument("--p", type=float, default=TRAP_P, help="Total depolarizing probability for the priors")
    trap.add_argument("--T-values", help="OTS periods for the table (default 3,5,9)")
    trap.add_argument("--trace", help="Write the per-iteration trace CSV here")
    trap.set_defaults(func=cmd_trap)

    info = sub.add_parser("codeinfo", help="Parameters and validation of a code")
    _add_code_args(info)
    info.add_argument("--distance", action="store_true", help="Brute-force the distance (small codes only)")
    info.add_argument("--max-weight", type=int, default=4)
    info.add_argument("--save", help="Write the code in QCODE4 format")
    info.set_defaults(func=cmd_codeinfo)

    bench = sub.add_parser("bench", help="Decoder timing on shared seeds")
    _add_sweep_args(bench)
    bench.add_argument("--decoders", default=BENCH_DECODERS)
    bench.set_defaults(func=cmd_bench, schedule=None, trials=200)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CodeValidationError as exc:
        print(f"Error: code failed validation: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, CodeFormatError, FileNotFoundError, ValueError) as exc:
        logger.debug("[CLI] %s failed", args.command, exc_info=True)
        print(f"Error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
