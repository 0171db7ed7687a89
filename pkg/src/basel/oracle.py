"""Offline-optimal throughput by exhaustive search, and competitive ratios.

OPT sees the whole trace. Each slot it may keep any subset of the stored
packets plus the new arrivals that fits every queue and shared buffer, then
every port spends one cycle on any packet of any non-empty member queue.
Holding a packet never hurts (it can be pushed out later), so only maximal
keep-sets are enumerated. Unit size and value are required: the state is
the slot index plus, per queue, the sorted tuple of remaining processing.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

from .arch import INF, Architecture
from .errors import OracleRefusal


@dataclass(frozen=True)
class OracleBounds:
    max_packets: int = 12
    max_k: int = 8
    max_b: int = 8
    max_slots: int = 200
    node_budget: int = 2_000_000


@dataclass(frozen=True)
class Shape:
    """Capacities and wiring of an architecture, in queue-index terms."""

    caps: tuple  # per queue, in packets
    ports: tuple  # tuples of queue indexes
    buffers: tuple = ()  # (capacity, tuple of queue indexes)

    @classmethod
    def from_arch(cls, arch: Architecture) -> "Shape":
        idx = {q.name: i for i, q in enumerate(arch.queues)}
        return cls(
            tuple(q.size for q in arch.queues),
            tuple(tuple(idx[q.name] for q in p.queues) for p in arch.ports),
            tuple((b.size, tuple(idx[q.name] for q in b.queues)) for b in arch.buffers),
        )

    @classmethod
    def single_queue(cls, b: int) -> "Shape":
        return cls((b,), ((0,),))

    @classmethod
    def multi_queue(cls, k: int, b: int) -> "Shape":
        """k queues of capacity b on one port (processing i goes to queue i)."""
        return cls((b,) * k, (tuple(range(k)),))


def _distinct_subsets(items: tuple, m: int):
    return sorted(set(itertools.combinations(items, m)))


def _drain_slots(trace) -> int:
    ps = trace.packets if hasattr(trace, "packets") else trace
    if not ps:
        return 0
    return ps[-1].arrival + sum(p.processing for p in ps) + 1


class _Search:
    def __init__(self, shape: Shape, arrivals: dict, slots: int, budget: int, memo: bool):
        self.shape = shape
        self.arrivals = arrivals
        self.slots = slots
        self.budget = budget
        self.memo = {} if memo else None
        self.nodes = 0
        self.buffer_of = {}
        for j, (_, members) in enumerate(shape.buffers):
            for i in members:
                self.buffer_of[i] = j

    def keep_options(self, state, t):
        new = self.arrivals.get(t)
        if not new:
            return [state]
        pools = [tuple(sorted(state[i] + new.get(i, ()))) for i in range(len(state))]
        if all(len(pool) <= cap for pool, cap in zip(pools, self.shape.caps)) and all(
            sum(len(pools[i]) for i in members) <= cap for cap, members in self.shape.buffers
        ):
            return [tuple(pools)]
        per_queue = []
        for i, pool in enumerate(pools):
            m = min(len(pool), self.shape.caps[i])
            # queues in a shared buffer may keep fewer than their own cap
            lo = m if i not in self.buffer_of else 0
            per_queue.append([(c, s) for c in range(lo, m + 1) for s in _distinct_subsets(pool, c)])
        out = []
        for combo in itertools.product(*per_queue):
            counts = [c for c, _ in combo]
            ok = True
            for cap, members in self.shape.buffers:
                used = sum(counts[i] for i in members)
                if used > cap:
                    ok = False
                    break
                # maximal: a buffer below capacity must not leave packets it could hold
                if used < cap and any(counts[i] < min(len(pools[i]), self.shape.caps[i]) for i in members):
                    ok = False
                    break
            if ok:
                out.append(tuple(s for _, s in combo))
        return out

    def serve_options(self, state):
        """Every way for each port to spend one cycle; yields (completions, state)."""
        per_port = []
        for members in self.shape.ports:
            choices = []
            for i in members:
                for v in sorted(set(state[i])):
                    choices.append((i, v))
            per_port.append(choices or [None])
        for pick in itertools.product(*per_port):
            qs = list(state)
            done = 0
            for c in pick:
                if c is None:
                    continue
                i, v = c
                rest = list(qs[i])
                rest.remove(v)
                if v > 1:
                    rest.append(v - 1)
                else:
                    done += 1
                qs[i] = tuple(sorted(rest))
            yield done, tuple(qs)

    def value(self, t, state):
        if t >= self.slots:
            return 0
        key = (t, state)
        if self.memo is not None and key in self.memo:
            return self.memo[key]
        self.nodes += 1
        if self.nodes > self.budget:
            raise OracleRefusal(f"node budget {self.budget} exceeded")
        best = 0
        for kept in self.keep_options(state, t):
            for done, nxt in self.serve_options(kept):
                v = done + self.value(t + 1, nxt)
                if v > best:
                    best = v
        if self.memo is not None:
            self.memo[key] = best
        return best


def check_bounds(shape: Shape, trace, slots: int, bounds: OracleBounds):
    ps = trace.packets if hasattr(trace, "packets") else trace
    if len(ps) > bounds.max_packets:
        raise OracleRefusal(f"{len(ps)} packets exceed the bound of {bounds.max_packets}")
    if slots > bounds.max_slots:
        raise OracleRefusal(f"{slots} slots exceed the bound of {bounds.max_slots}")
    if any(c > bounds.max_b for c in shape.caps):
        raise OracleRefusal(f"queue capacity exceeds the bound of {bounds.max_b}")
    for p in ps:
        if p.size != 1 or p.value != 1:
            raise OracleRefusal("oracle supports unit size and value only")
        if p.slack != INF:
            raise OracleRefusal("oracle does not support finite slack")
        if p.processing > bounds.max_k:
            raise OracleRefusal(f"processing {p.processing} exceeds the bound of {bounds.max_k}")
        if not 1 <= p.queue <= len(shape.caps):
            raise OracleRefusal(f"packet {p.seq} targets unknown queue {p.queue}")


def brute_force_opt(shape, trace, slots: Optional[int] = None,
                    bounds: OracleBounds = OracleBounds(), memo: bool = True) -> int:
    """Maximum transmitted value over all offline decisions at speedup 1.

    ``shape`` is a Shape or an Architecture. ``slots`` defaults to a horizon
    long enough to drain every packet. Raises OracleRefusal when the
    instance is out of bounds or the node budget runs out.
    """
    if isinstance(shape, Architecture):
        shape = Shape.from_arch(shape)
    if slots is None:
        slots = _drain_slots(trace)
    check_bounds(shape, trace, slots, bounds)
    ps = trace.packets if hasattr(trace, "packets") else trace
    arrivals = {}
    for p in ps:
        slot = arrivals.setdefault(p.arrival, {})
        slot[p.queue - 1] = slot.get(p.queue - 1, ()) + (p.processing,)
    search = _Search(shape, arrivals, slots, bounds.node_budget, memo)
    start = tuple(() for _ in shape.caps)
    return search.value(0, start)


REFERENCE_PROGRAM = """\
q1 = Queue(B)
out = Port(q1)
q1.procPrio = srpt
q1.admPrio = rsrpt
"""


def reference_optimal_policy(trace, b: int, slots: Optional[int] = None) -> int:
    """Transmitted count of rsrpt push-out with srpt processing at speedup 1."""
    from .dsl import parse
    from .sim import SimConfig, run

    if slots is None:
        slots = _drain_slots(trace)
    m = run(parse(REFERENCE_PROGRAM), trace, SimConfig(slots=slots, constants={"B": b}))
    return m.transmitted_value


@dataclass(frozen=True)
class RatioReport:
    opt_value: int
    alg_value: int
    ratio: float


def competitive_ratio(opt, alg) -> RatioReport:
    if alg == 0:
        ratio = 1.0 if opt == 0 else math.inf
    else:
        ratio = opt / alg
    return RatioReport(opt, alg, ratio)
