"""Command-line front end: ``lattree {bench,memcurve,difftest,replay}``."""
from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from .bench import (
    STRUCTURES,
    BenchConfig,
    Workload,
    WorkloadKind,
    build_structure,
    emit_csv,
    format_table,
    memory_curve,
    run_bench,
)
from .errors import InvalidConfig, IoFailure, LatError
from .oracle import Distribution, dump_script, gen_script, load_script, run_lockstep

_SUFFIXES = {"k": 10 ** 3, "m": 10 ** 6}


def parse_size(text: str) -> int:
    text = text.strip().lower()
    scale = _SUFFIXES.get(text[-1:], 1)
    digits = text[:-1] if scale != 1 else text
    try:
        value = int(digits) * scale
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid size {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"size must be positive, got {text!r}")
    return value


def _sizes(text: str) -> List[int]:
    return [parse_size(part) for part in text.split(",") if part]


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated integer list, got {text!r}") from None


def _names(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lattree", description="Linked Array Tree benchmarks and differential tests.")
    sub = parser.add_subparsers(dest="command", required=True)

    def shape_flags(p, key_bits):
        p.add_argument("--structures", type=_names, default=None)
        p.add_argument("--radix", type=int, default=256)
        p.add_argument("--radices", type=_int_list, default=None, help="per-level radices for lat_asymmetric")
        p.add_argument("--key-bits", type=int, default=key_bits)
        p.add_argument("--seed", type=int, default=0)

    bench = sub.add_parser("bench", help="time workloads, write CSV")
    shape_flags(bench, 64)
    bench.add_argument("--workloads", type=_names, default=["intensive_insert", "intensive_search"])
    bench.add_argument("--n", type=_sizes, default=[100_000], help="sizes, e.g. 100k,1m")
    bench.add_argument("--out", default=None)

    curve = sub.add_parser("memcurve", help="memory after each insertion batch")
    shape_flags(curve, 16)
    curve.add_argument("--workloads", type=_names, default=["intensive", "sparse"], help="intensive and/or sparse")
    curve.add_argument("--steps", type=int, default=16)
    curve.add_argument("--out", default=None)

    diff = sub.add_parser("difftest", help="random script against the reference map")
    shape_flags(diff, 32)
    diff.add_argument("--ops", type=parse_size, default=100_000)
    diff.add_argument("--workloads", type=_names, default=["uniform_random"], help="key distributions")
    diff.add_argument("--script", default=None, help="also save the generated script(s) here")

    replay = sub.add_parser("replay", help="run a saved script against structures")
    shape_flags(replay, 64)
    replay.add_argument("--script", required=True)
    return parser


def _check_choices(parser, flag, values, allowed):
    bad = [v for v in values if v not in allowed]
    if bad:
        parser.error(f"{flag}: invalid choice(s) {', '.join(bad)} (choose from {', '.join(allowed)})")


def _config(args, key_bits=None) -> BenchConfig:
    return BenchConfig(args.radix, key_bits or args.key_bits, tuple(args.radices) if args.radices else None)


def _write(records, out) -> None:
    if out:
        emit_csv(records, out)
    else:
        print()
        emit_csv(records, sys.stdout)


def _cmd_bench(parser, args) -> int:
    structures = args.structures or ["lat_linked"]
    _check_choices(parser, "--structures", structures, list(STRUCTURES))
    _check_choices(parser, "--workloads", args.workloads, [k.value for k in WorkloadKind])
    config = _config(args)
    records = []
    for structure in structures:
        for kind in args.workloads:
            for n in args.n:
                workload = Workload(WorkloadKind(kind), n, args.seed, args.key_bits)
                records.append(run_bench(structure, workload, config))
    print(format_table(records))
    _write(records, args.out)
    return 0


def _cmd_memcurve(parser, args) -> int:
    structures = args.structures or ["lat_linked"]
    _check_choices(parser, "--structures", structures, list(STRUCTURES))
    _check_choices(parser, "--workloads", args.workloads, ["intensive", "sparse"])
    config = _config(args)
    records = []
    for structure in structures:
        for pattern in args.workloads:
            records.extend(memory_curve(structure, args.key_bits, pattern, args.steps, args.seed, config))
    print(format_table(records))
    _write(records, args.out)
    return 0


def _differential(structures, script, config) -> int:
    built = {name: build_structure(name, config) for name in structures}
    status = 0
    for name, verdict in run_lockstep(script, built).items():
        if verdict.passed:
            print(f"PASS  {name}  {len(script)} ops")
        else:
            d = verdict.first_divergence
            print(f"FAIL  {name}  op {d.index}: expected {_short(d.expected)}, got {_short(d.actual)}")
            status = 1
    return status


def _short(value, limit=80) -> str:
    text = repr(value)
    return text if len(text) <= limit else text[:limit] + "..."


def _cmd_difftest(parser, args) -> int:
    structures = args.structures or ["lat_linked", "lat_unlinked", "lat_asymmetric"]
    _check_choices(parser, "--structures", structures, list(STRUCTURES))
    _check_choices(parser, "--workloads", args.workloads, [d.value for d in Distribution])
    if not 1 <= args.key_bits <= 64:
        parser.error("--key-bits must be in 1..64")
    config = _config(args)
    status = 0
    for distribution in args.workloads:
        script = gen_script(args.seed, args.ops, args.key_bits, distribution)
        if args.script:
            path = args.script if len(args.workloads) == 1 else f"{args.script}.{distribution}"
            try:
                dump_script(script, path)
            except OSError as exc:
                raise IoFailure(f"cannot write {path}: {exc}") from exc
        print(f"# {distribution}, seed {args.seed}, {args.key_bits}-bit keys")
        status |= _differential(structures, script, config)
    return status


def _cmd_replay(parser, args) -> int:
    structures = args.structures or ["lat_linked", "lat_unlinked", "lat_asymmetric"]
    _check_choices(parser, "--structures", structures, list(STRUCTURES))
    try:
        script = load_script(args.script)
    except OSError as exc:
        raise IoFailure(f"cannot read {args.script}: {exc}") from exc
    return _differential(structures, script, _config(args, script.key_bits))


_COMMANDS = {"bench": _cmd_bench, "memcurve": _cmd_memcurve, "difftest": _cmd_difftest, "replay": _cmd_replay}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](parser, args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except (IoFailure, OSError) as exc:
        print(f"lattree: {exc}", file=sys.stderr)
        return 1
    except (InvalidConfig, ValueError, LatError) as exc:
        print(f"lattree: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
