"""Parameter sweeps: one simulation (plus optional oracle) per point and seed."""
from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

from .arch import Architecture
from .errors import BaselError, OracleRefusal
from .library import load_program
from .oracle import OracleBounds, Shape, brute_force_opt, competitive_ratio, _drain_slots
from .sim import CSV_HEADER, SimConfig, run
from .traffic import MMPPParams, gen_mmpp, load_trace

AXES = ("lambda", "k", "B", "C", "seed")
RESULT_HEADER = CSV_HEADER + ["lambda", "k", "B", "optValue", "algValue", "ratio", "status", "error"]


@dataclass
class ExperimentSpec:
    arch: str
    policy: str = ""
    trace_file: Optional[str] = None
    mmpp: dict = field(default_factory=dict)  # lambda, k, pon, poff
    axes: dict = field(default_factory=dict)  # axis name -> list of values
    constants: dict = field(default_factory=dict)
    slots: int = 1000
    oracle: bool = False
    bounds: OracleBounds = OracleBounds()
    baseline: Optional[str] = None
    drain: bool = False

    def validate(self):
        if self.trace_file and self.mmpp:
            raise ValueError("give either a trace file or MMPP parameters, not both")
        unknown = set(self.axes) - set(AXES)
        if unknown:
            raise ValueError(f"unknown sweep axis {sorted(unknown)[0]!r}")
        if self.trace_file and ({"lambda", "seed"} & {a for a, v in self.axes.items() if len(v) > 1}):
            raise ValueError("lambda and seed sweeps need MMPP traffic, not a trace file")
        if self.slots < 0:
            raise ValueError("slots must be >= 0")

    def base_point(self) -> dict:
        p = {
            "lambda": self.mmpp.get("lambda"),
            "k": self.mmpp.get("k", self.constants.get("k")),
            "B": self.constants.get("B"),
            "C": 1,
            "seed": 0,
        }
        return p

    def points(self) -> list:
        """Cross product of the sweep axes, in fixed axis order then value order."""
        base = self.base_point()
        lists = [list(self.axes.get(a, [base[a]])) for a in AXES]
        return [dict(zip(AXES, combo)) for combo in itertools.product(*lists)]


def _constants(e: ExperimentSpec, pt: dict) -> dict:
    c = dict(e.constants)
    for a in ("B", "k"):
        if pt[a] is not None:
            c[a] = pt[a]
    return c


def _trace(e: ExperimentSpec, pt: dict, queue_count: int):
    if e.trace_file:
        return load_trace(e.trace_file)
    if pt["lambda"] is None or pt["k"] is None:
        raise ValueError("MMPP traffic needs lambda and k")
    k = int(pt["k"])
    by_proc = queue_count > 1 and queue_count >= k
    params = MMPPParams(
        lam=float(pt["lambda"]), k=k,
        p_on_off=float(e.mmpp.get("pon", 0.1)), p_off_on=float(e.mmpp.get("poff", 0.1)),
        queue_count=queue_count, assignment="byProcessing" if by_proc else "uniformRandom",
    )
    return gen_mmpp(params, int(pt["seed"]), e.slots)


def _fmt_ratio(r):
    return "inf" if math.isinf(r) else f"{r:.6f}"


def run_point(e: ExperimentSpec, pt: dict) -> list:
    """One CSV row; faults become a failed row rather than an exception."""
    consts = _constants(e, pt)
    label = e.policy or e.arch
    extra = [pt["lambda"] if pt["lambda"] is not None else "", pt["k"] if pt["k"] is not None else "",
             pt["B"] if pt["B"] is not None else ""]
    try:
        spec = load_program(e.arch, consts)
        arch = Architecture.build(spec, consts)
        trace = _trace(e, pt, len(arch.queues))
        slots = e.slots
        if e.oracle or e.drain:
            slots = max(slots, _drain_slots(trace))
        cfg = SimConfig(slots=slots, speedup=int(pt["C"]), constants=consts, seed=int(pt["seed"]), policy=label)
        m = run(spec, trace, cfg)
        opt = alg = ratio = ""
        if e.oracle:
            rep = competitive_ratio(brute_force_opt(Shape.from_arch(arch), trace, slots, e.bounds),
                                    m.transmitted_value)
            opt, alg, ratio = rep.opt_value, rep.alg_value, _fmt_ratio(rep.ratio)
        elif e.baseline:
            bspec = load_program(e.baseline, consts)
            bm = run(bspec, trace, replace(cfg, speedup=1))
            rep = competitive_ratio(bm.transmitted_value, m.transmitted_value)
            opt, alg, ratio = rep.opt_value, rep.alg_value, _fmt_ratio(rep.ratio)
        return m.row() + extra + [opt, alg, ratio, "ok", ""]
    except OracleRefusal as exc:
        status, msg = "refused", str(exc)
    except (BaselError, ValueError, OSError) as exc:
        status, msg = "failed", f"{type(exc).__name__}: {exc}"
    row = [pt["seed"], e.slots, pt["C"], label] + [""] * (len(CSV_HEADER) - 4)
    return row + extra + ["", "", "", status, msg]


def _run_one(args):
    return run_point(*args)


def run_experiment(e: ExperimentSpec, workers: int = 1) -> list:
    """Rows in parameter order, whatever the completion order."""
    e.validate()
    pts = e.points()
    if workers > 1 and len(pts) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_run_one, [(e, p) for p in pts]))
    return [run_point(e, p) for p in pts]


def rows_csv(rows, timestamp: Optional[str] = None) -> str:
    buf = io.StringIO()
    if timestamp:
        buf.write(f"# generated {timestamp}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_HEADER)
    w.writerows(rows)
    return buf.getvalue()


def aggregate(rows, axis: str) -> list:
    """Per axis value: (value, mean_ratio, max_ratio, mean_transmitted, n), ascending."""
    col = {"lambda": "lambda", "k": "k", "B": "B", "C": "C", "seed": "seed"}[axis]
    idx = RESULT_HEADER.index(col)
    ri = RESULT_HEADER.index("ratio")
    ti = RESULT_HEADER.index("transmitted")
    si = RESULT_HEADER.index("status")
    groups = {}
    for r in rows:
        if r[si] != "ok":
            continue
        groups.setdefault(r[idx], []).append(r)
    out = []
    for v in sorted(groups, key=float):
        g = groups[v]
        ratios = [float(r[ri]) for r in g if r[ri] != ""]
        mean_r = sum(ratios) / len(ratios) if ratios else math.nan
        max_r = max(ratios) if ratios else math.nan
        out.append((v, mean_r, max_r, sum(int(r[ti]) for r in g) / len(g), len(g)))
    return out


def aggregate_text(rows, axis: str) -> str:
    lines = [f"# {axis} mean_ratio max_ratio mean_transmitted n"]
    for v, mean_r, max_r, mt, n in aggregate(rows, axis):
        lines.append(f"{v} {_fmt_ratio(mean_r) if not math.isnan(mean_r) else 'nan'} "
                     f"{_fmt_ratio(max_r) if not math.isnan(max_r) else 'nan'} {mt:.6f} {n}")
    return "\n".join(lines) + "\n"


def failed(rows) -> int:
    si = RESULT_HEADER.index("status")
    return sum(1 for r in rows if r[si] != "ok")
