"""Trace generation (ON-OFF MMPP) and trace file I/O."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .arch import INF, Packet
from .errors import TraceFormatError

COLUMNS = ["arrival", "size", "value", "processing", "slack", "queue"]
MAX_LAMBDA = 500.0  # exp(-lambda) must stay representable for inversion


@dataclass(frozen=True)
class MMPPParams:
    lam: float
    k: int
    p_on_off: float = 0.1
    p_off_on: float = 0.1
    queue_count: int = 1
    assignment: str = "uniformRandom"  # or "byProcessing"
    size: int = 1
    value: int = 1
    slack: int = INF

    def validate(self):
        if not (0 < self.lam <= MAX_LAMBDA):
            raise ValueError(f"lambda must be in (0, {MAX_LAMBDA}], got {self.lam}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        for name in ("p_on_off", "p_off_on"):
            v = getattr(self, name)
            if not (0 <= v <= 1):
                raise ValueError(f"{name} must be a probability, got {v}")
        if self.assignment not in ("uniformRandom", "byProcessing"):
            raise ValueError(f"unknown queue assignment {self.assignment!r}")
        if self.assignment == "byProcessing" and self.queue_count < self.k:
            raise ValueError("byProcessing needs at least k queues")
        if self.queue_count < 1 or self.size < 1 or self.slack < 0:
            raise ValueError("queue_count and size must be >= 1, slack >= 0")


@dataclass
class Trace:
    packets: list
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.packets)

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented
        return (self.metadata == other.metadata
                and [p.key() for p in self.packets] == [p.key() for p in other.packets])


def make_trace(rows, metadata=None) -> Trace:
    """Build a trace from dicts or tuples ``(arrival, processing[, queue])``; seq by position."""
    packets = []
    for i, r in enumerate(rows):
        if isinstance(r, dict):
            packets.append(Packet(seq=i, **r))
        else:
            arrival, processing, *rest = r
            packets.append(Packet(seq=i, arrival=arrival, processing=processing, queue=rest[0] if rest else 1))
    packets.sort(key=lambda p: (p.arrival, p.seq))
    packets = [Packet(i, p.arrival, p.size, p.value, p.processing, p.slack, p.queue) for i, p in enumerate(packets)]
    return Trace(packets, dict(metadata or {}))


def _poisson(u: float, lam: float) -> int:
    p = math.exp(-lam)
    cdf = p
    x = 0
    while u > cdf:
        x += 1
        p *= lam / x
        cdf += p
        if p == 0.0 and cdf < u:  # numerical tail; cdf has converged
            break
    return x


def gen_mmpp(params: MMPPParams, seed: int, slots: int) -> Trace:
    """ON-OFF MMPP arrivals with processing uniform on 1..k.

    The chain starts in ON. Independent PCG64 streams, split from the seed,
    drive state transitions, arrival counts, processing draws and queue
    draws, so adding one kind of draw never shifts the others.
    """
    params.validate()
    if slots < 0:
        raise ValueError("slots must be >= 0")
    s_state, s_count, s_proc, s_queue = (np.random.Generator(np.random.PCG64(s))
                                         for s in np.random.SeedSequence(seed).spawn(4))
    packets = []
    on = True
    for t in range(slots):
        if on:
            n = _poisson(s_count.random(), params.lam)
            for _ in range(n):
                proc = 1 + min(int(s_proc.random() * params.k), params.k - 1)
                if params.assignment == "byProcessing":
                    queue = proc
                else:
                    queue = 1 + min(int(s_queue.random() * params.queue_count), params.queue_count - 1)
                packets.append(Packet(len(packets), t, params.size, params.value, proc, params.slack, queue))
        u = s_state.random()
        on = (u >= params.p_on_off) if on else (u < params.p_off_on)
    meta = {
        "generator": "mmpp", "seed": seed, "slots": slots, "lambda": params.lam, "k": params.k,
        "pon": params.p_on_off, "poff": params.p_off_on, "queues": params.queue_count,
        "assignment": params.assignment,
    }
    return Trace(packets, meta)


def _fmt_slack(v):
    return "inf" if v == INF else str(v)


def dumps(trace: Trace) -> str:
    buf = io.StringIO()
    if trace.metadata:
        buf.write("# meta " + json.dumps(trace.metadata, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for p in trace.packets:
        w.writerow([p.arrival, p.size, p.value, p.processing, _fmt_slack(p.slack), p.queue])
    return buf.getvalue()


def save_trace(trace: Trace, dest):
    text = dumps(trace)
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w", encoding="utf-8", newline="") as f:
            f.write(text)


def _int(s, col, lineno, minimum=None):
    try:
        v = int(s)
    except ValueError:
        raise TraceFormatError(f"{col} must be an integer, got {s!r}", lineno) from None
    if minimum is not None and v < minimum:
        raise TraceFormatError(f"{col} must be >= {minimum}, got {v}", lineno)
    return v


def loads(text: str) -> Trace:
    meta = {}
    header = None
    packets = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if line.startswith("# meta "):
                try:
                    meta = json.loads(line[len("# meta "):])
                except json.JSONDecodeError as e:
                    raise TraceFormatError(f"bad metadata: {e}", lineno) from None
            continue
        fields = next(csv.reader([line]))
        if header is None:
            header = [f.strip() for f in fields]
            missing = {"arrival", "processing"} - set(header)
            unknown = set(header) - set(COLUMNS)
            if missing or unknown:
                raise TraceFormatError(f"bad header (missing {sorted(missing)}, unknown {sorted(unknown)})", lineno)
            continue
        if len(fields) > len(header):
            raise TraceFormatError(f"expected {len(header)} fields, got {len(fields)}", lineno)
        row = dict(zip(header, (f.strip() for f in fields)))
        if "arrival" not in row or "processing" not in row:
            raise TraceFormatError("missing arrival or processing", lineno)
        slack = row.get("slack", "")
        p = Packet(
            seq=len(packets),
            arrival=_int(row["arrival"], "arrival", lineno, 0),
            size=_int(row["size"], "size", lineno, 1) if row.get("size") else 1,
            value=_int(row["value"], "value", lineno) if row.get("value") else 1,
            processing=_int(row["processing"], "processing", lineno, 1),
            slack=INF if slack in ("", "inf") else _int(slack, "slack", lineno, 0),
            queue=_int(row["queue"], "queue", lineno, 1) if row.get("queue") else 1,
        )
        if packets and p.arrival < packets[-1].arrival:
            raise TraceFormatError("arrivals must be non-decreasing", lineno)
        packets.append(p)
    return Trace(packets, meta)


def load_trace(source) -> Trace:
    if hasattr(source, "read"):
        return loads(source.read())
    with open(source, encoding="utf-8") as f:
        return loads(f.read())
