"""Command-line entry point: ``basel run|check|print|builtins|gen-trace``."""
from __future__ import annotations

import argparse
import configparser
import datetime
import sys
from pathlib import Path

from . import builtins
from .dsl import format_program, parse, validate
from .errors import BaselError, SpecError
from .experiment import AXES, ExperimentSpec, aggregate_text, failed, rows_csv, run_experiment
from .library import bundled, is_template, expand_template, load_program, read_source
from .oracle import OracleBounds
from .traffic import MMPPParams, gen_mmpp, save_trace

EXIT_OK, EXIT_FAILED, EXIT_SPEC = 0, 1, 2


def parse_number(s: str):
    s = s.strip()
    try:
        return int(s)
    except ValueError:
        return float(s)


def parse_values(s: str) -> list:
    """``1,2,4`` or ``0..19`` (inclusive) or a mix of both."""
    out = []
    for part in s.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(parse_number(part))
    return out


def parse_kv(s: str) -> dict:
    out = {}
    for part in s.split(","):
        if not part.strip():
            continue
        if "=" not in part:
            raise argparse.ArgumentTypeError(f"expected name=value, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = parse_number(v)
    return out


def _axis_name(name: str) -> str:
    aliases = {"lam": "lambda", "c": "C", "speedup": "C", "b": "B", "seeds": "seed"}
    return aliases.get(name, name)


def build_experiment(args) -> tuple:
    """Merge config file and flags (flags win). Returns (ExperimentSpec, out, workers, timestamp)."""
    cfg = configparser.ConfigParser()
    cfg.optionxform = str
    if args.config:
        with open(args.config, encoding="utf-8") as f:
            cfg.read_file(f)
    exp = cfg["experiment"] if cfg.has_section("experiment") else {}
    traffic = dict(cfg["traffic"]) if cfg.has_section("traffic") else {}
    sweep = dict(cfg["sweep"]) if cfg.has_section("sweep") else {}
    consts = {k: parse_number(v) for k, v in (cfg["const"].items() if cfg.has_section("const") else [])}

    arch = args.arch or exp.get("arch")
    if not arch:
        raise ValueError("no architecture given (--arch or [experiment] arch)")
    axes = {_axis_name(k): parse_values(v) for k, v in sweep.items()}

    for item in args.const or []:
        name, sep, val = item.partition("=")
        if not sep or not name:
            raise ValueError(f"--const expects name=value, got {item!r}")
        vals = parse_values(val)
        if len(vals) == 1:
            consts[name] = vals[0]
            axes.pop(name, None)
        elif name in ("B", "k"):
            axes[name] = vals
        else:
            raise ValueError(f"only B and k may be swept, got {name}")
    for item in args.sweep or []:
        name, _, val = item.partition("=")
        axes[_axis_name(name.strip())] = parse_values(val)

    mmpp = {}
    if "file" not in traffic:
        mmpp = {_axis_name(k): parse_number(v) for k, v in traffic.items()}
    trace_file = traffic.get("file")
    if args.mmpp:
        mmpp.update({_axis_name(k): v for k, v in parse_kv(args.mmpp).items()})
        trace_file = None
    if args.trace:
        trace_file, mmpp = args.trace, {}
    if "k" not in mmpp and "k" in consts and not trace_file:
        mmpp["k"] = consts["k"]
    if trace_file and args.mmpp:
        raise ValueError("give either --trace or --mmpp, not both")

    if args.speedup:
        axes["C"] = parse_values(args.speedup)
    if args.seeds:
        axes["seed"] = parse_values(args.seeds)
    elif args.seed is not None:
        axes["seed"] = [args.seed]

    slots = args.slots if args.slots is not None else int(exp.get("slots", 1000))
    oracle = args.oracle or exp.get("oracle", "false").lower() in ("1", "true", "yes", "on")
    max_packets = args.oracle_max_packets or int(exp.get("oracle_max_packets", OracleBounds().max_packets))
    e = ExperimentSpec(
        arch=arch,
        policy=args.policy or exp.get("policy", ""),
        trace_file=trace_file,
        mmpp=mmpp,
        axes=axes,
        constants=consts,
        slots=slots,
        oracle=oracle,
        bounds=OracleBounds(max_packets=max_packets),
        baseline=args.baseline or exp.get("baseline"),
        drain=args.drain or exp.get("drain", "false").lower() in ("1", "true", "yes", "on"),
    )
    out = args.out or exp.get("out")
    workers = args.workers or int(exp.get("workers", 1))
    no_ts = args.no_timestamp or exp.get("timestamp", "true").lower() in ("0", "false", "no", "off")
    return e, out, workers, not no_ts


def _precheck(e: ExperimentSpec):
    """Fail fast (exit 2) on a program that cannot parse or validate."""
    from .experiment import _constants

    load_program(e.arch, _constants(e, e.points()[0]))
    if e.baseline:
        load_program(e.baseline, _constants(e, e.points()[0]))


def cmd_run(args) -> int:
    try:
        e, out, workers, stamp = build_experiment(args)
        e.validate()
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    try:
        _precheck(e)
    except SpecError as exc:
        for d in exc.diagnostics:
            print(f"{e.arch}:{d}", file=sys.stderr)
        return EXIT_SPEC
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    n = len(e.points())
    print(f"{n} run{'s' if n != 1 else ''}", file=sys.stderr)
    rows = run_experiment(e, workers=workers)
    ts = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds") if stamp else None
    text = rows_csv(rows, ts)
    if out:
        Path(out).write_text(text, encoding="utf-8")
        base = out[:-4] if out.endswith(".csv") else out
        for axis in AXES:
            if len(e.axes.get(axis, [])) > 1:
                Path(f"{base}.{axis}.dat").write_text(aggregate_text(rows, axis), encoding="utf-8")
    else:
        sys.stdout.write(text)
    bad = failed(rows)
    if bad:
        print(f"{bad} of {n} runs failed", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def _consts_from(items) -> dict:
    out = {}
    for item in items or []:
        name, _, val = item.partition("=")
        out[name] = parse_number(val)
    return out


def cmd_check(args) -> int:
    try:
        text = read_source(args.program)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    consts = _consts_from(args.const)
    try:
        if is_template(text):
            text = expand_template(text, consts)
        spec = parse(text)
    except SpecError as exc:
        diags = exc.diagnostics
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    else:
        merged = None
        if args.const:
            merged = dict(spec.constants)
            merged.update(consts)
        diags = validate(spec, merged)
    for d in diags:
        print(f"{args.program}:{d}")
    if diags:
        return EXIT_SPEC
    print(f"{args.program}: ok")
    return EXIT_OK


def cmd_print(args) -> int:
    try:
        text = read_source(args.program)
        consts = _consts_from(args.const)
        if is_template(text):
            text = expand_template(text, consts)
        sys.stdout.write(format_program(parse(text)))
    except SpecError as exc:
        for d in exc.diagnostics:
            print(f"{args.program}:{d}", file=sys.stderr)
        return EXIT_SPEC
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    return EXIT_OK


def cmd_builtins(args) -> int:
    for name, kind, text in builtins.catalog():
        print(f"{kind:<10} {text}")
    if args.programs:
        print()
        for name in bundled():
            print(f"program    {name}")
    return EXIT_OK


def cmd_gen_trace(args) -> int:
    try:
        kv = {_axis_name(k): v for k, v in parse_kv(args.mmpp).items()}
        params = MMPPParams(
            lam=float(kv["lambda"]), k=int(kv["k"]),
            p_on_off=float(kv.get("pon", 0.1)), p_off_on=float(kv.get("poff", 0.1)),
            queue_count=int(kv.get("queues", 1)),
            assignment="byProcessing" if args.by_processing else "uniformRandom",
        )
        trace = gen_mmpp(params, args.seed, args.slots)
    except KeyError as exc:
        print(f"error: --mmpp needs {exc.args[0]}", file=sys.stderr)
        return EXIT_SPEC
    except (ValueError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    save_trace(trace, args.out if args.out else sys.stdout)
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="basel", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate a program over a parameter sweep")
    r.add_argument("--arch", help="program file or bundled program name")
    r.add_argument("--config", help="INI file with [experiment] [traffic] [sweep] [const] sections")
    r.add_argument("--policy", help="label for the policy column")
    r.add_argument("--const", action="append", metavar="NAME=V[,V]", help="bind a constant; B and k accept lists")
    r.add_argument("--sweep", action="append", metavar="AXIS=VALUES", help=f"sweep one of {', '.join(AXES)}")
    r.add_argument("--trace", help="trace CSV file")
    r.add_argument("--mmpp", metavar="lambda=..,k=..,pon=..,poff=..", help="generate ON-OFF MMPP traffic")
    r.add_argument("--slots", type=int)
    r.add_argument("--speedup", metavar="C[,C]", help="processing cycles per port per slot")
    r.add_argument("--seed", type=int)
    r.add_argument("--seeds", metavar="S1..S2")
    r.add_argument("--oracle", action="store_true", help="compute the offline optimum (small instances only)")
    r.add_argument("--oracle-max-packets", type=int)
    r.add_argument("--baseline", help="program whose speedup-1 value stands in for OPT")
    r.add_argument("--drain", action="store_true", help="extend the horizon until every packet could finish")
    r.add_argument("--out", help="CSV path; per-axis .dat aggregates are written beside it")
    r.add_argument("--no-timestamp", action="store_true")
    r.add_argument("--workers", type=int)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("check", help="parse and validate a program")
    c.add_argument("program")
    c.add_argument("--const", action="append", metavar="NAME=V")
    c.set_defaults(func=cmd_check)

    p = sub.add_parser("print", help="pretty-print a program in canonical form")
    p.add_argument("program")
    p.add_argument("--const", action="append", metavar="NAME=V")
    p.set_defaults(func=cmd_print)

    b = sub.add_parser("builtins", help="list builtin comparators, predicates and actions")
    b.add_argument("--programs", action="store_true", help="also list bundled programs")
    b.set_defaults(func=cmd_builtins)

    g = sub.add_parser("gen-trace", help="write an MMPP trace as CSV")
    g.add_argument("--mmpp", required=True, metavar="lambda=..,k=..[,pon=..,poff=..,queues=..]")
    g.add_argument("--slots", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--by-processing", action="store_true", help="send processing-i packets to queue i")
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen_trace)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except BaselError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
