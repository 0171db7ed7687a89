"""Discrete-time simulation of a BASEL architecture.

Each slot runs four phases: slack expiry, arrivals (in seq order), ``speedup``
processing cycles per port (ports in declaration order), then queue-length
sampling. A packet leaves the instant its remaining processing hits zero, so
it can arrive and depart in the same slot.
"""
from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from typing import Optional

from .arch import INF, Architecture, PortState, get_best_queue, remove_hol_cycle, _run_action
from .errors import EvalError, SimulationError

CSV_HEADER = [
    "seed", "slots", "C", "policy", "transmitted", "value",
    "drops.pushout", "drops.self", "drops.slack", "meanQlen", "maxQlen", "meanLatency",
]


@dataclass
class SimConfig:
    slots: int
    speedup: int = 1
    constants: dict = field(default_factory=dict)
    seed: int = 0
    slack_enforced: bool = False
    policy: str = ""

    def __post_init__(self):
        if self.slots < 0:
            raise ValueError("slots must be >= 0")
        if self.speedup < 1:
            raise ValueError("speedup must be >= 1")


@dataclass
class Metrics:
    seed: int = 0
    slots: int = 0
    speedup: int = 1
    policy: str = ""
    arrivals: int = 0
    transmitted_count: int = 0
    transmitted_value: int = 0
    drops_pushout: int = 0
    drops_self: int = 0
    drops_slack: int = 0
    stored: int = 0
    latency_sum: int = 0
    qlen_sum: dict = field(default_factory=dict)
    qlen_max: dict = field(default_factory=dict)
    total_qlen_sum: int = 0
    total_qlen_max: int = 0
    events: list = field(default_factory=list)

    @property
    def drops(self):
        return self.drops_pushout + self.drops_self + self.drops_slack

    @property
    def mean_latency(self):
        """Mean slots in system; a packet served in its arrival slot counts 1."""
        return self.latency_sum / self.transmitted_count if self.transmitted_count else 0.0

    @property
    def mean_qlen(self):
        """Time-average of total stored bytes over all queues."""
        return self.total_qlen_sum / self.slots if self.slots else 0.0

    @property
    def max_qlen(self):
        return self.total_qlen_max

    def queue_stats(self):
        return {name: (self.qlen_sum[name] / self.slots if self.slots else 0.0, self.qlen_max[name])
                for name in self.qlen_sum}

    def conserved(self) -> bool:
        return self.arrivals == self.transmitted_count + self.drops + self.stored

    def row(self):
        return [
            self.seed, self.slots, self.speedup, self.policy, self.transmitted_count, self.transmitted_value,
            self.drops_pushout, self.drops_self, self.drops_slack,
            f"{self.mean_qlen:.6f}", self.max_qlen, f"{self.mean_latency:.6f}",
        ]

    def events_json(self) -> str:
        return json.dumps([{"slot": e.slot, "kind": e.kind, "target": e.target} for e in self.events],
                          indent=1, sort_keys=True)


@dataclass
class SlotEvents:
    slot: int
    admitted: list = field(default_factory=list)
    dropped: list = field(default_factory=list)  # (packet, cause)
    transmitted: list = field(default_factory=list)
    effects: list = field(default_factory=list)


def process_cycle(port: PortState, cx=None):
    """One processing cycle: serve the best non-empty queue's HOL packet.

    Sets ``port.curr_queue``, decrements the HOL, then runs postSchedAct
    (which still sees a just-completed packet as the HOL). Returns
    ``(transmitted packet or None, effects)``.
    """
    cx = cx or port.cx
    if not any(q.packets for q in port.queues):
        return None, []
    q = get_best_queue(port, cx)
    port.curr_queue = q
    effects = []
    hook = None
    if port.post_sched_act is not None:
        def hook():
            effects.extend(_run_action(port.post_sched_act, port, cx))
    done = remove_hol_cycle(q, hook, cx)
    return done, effects


class Simulator:
    def __init__(self, spec, cfg: SimConfig, check=False):
        self.cfg = cfg
        self.arch = Architecture.build(spec, cfg.constants)
        self.cx = self.arch.cx
        self.check = check
        self.metrics = Metrics(seed=cfg.seed, slots=cfg.slots, speedup=cfg.speedup, policy=cfg.policy)
        for q in self.arch.queues:
            self.metrics.qlen_sum[q.name] = 0
            self.metrics.qlen_max[q.name] = 0
        self._deadlines = []
        self._arrivals = []
        self._cursor = 0
        self._next_slot = 0

    def load(self, trace):
        packets = list(trace.packets if hasattr(trace, "packets") else trace)
        for a, b in zip(packets, packets[1:]):
            if b.arrival < a.arrival or b.seq <= a.seq:
                raise SimulationError("trace must be sorted by arrival with increasing seq")
        self._arrivals = packets
        self._cursor = 0

    def run(self, trace) -> Metrics:
        self.load(trace)
        for t in range(self.cfg.slots):
            self.run_slot(t)
        self.metrics.stored = self.arch.stored()
        return self.metrics

    def run_slot(self, t: int) -> SlotEvents:
        if t != self._next_slot:
            raise SimulationError(f"slot {t} run out of order (expected {self._next_slot})", slot=t)
        self._next_slot += 1
        cx = self.cx
        cx.slot = t
        m = self.metrics
        ev = SlotEvents(t)
        try:
            if self.cfg.slack_enforced:
                self._expire(t, ev)
            while self._cursor < len(self._arrivals) and self._arrivals[self._cursor].arrival <= t:
                src = self._arrivals[self._cursor]
                self._cursor += 1
                if src.arrival < t:
                    continue  # before the simulated window
                p = src.copy()
                m.arrivals += 1
                out = self.arch.admit(p)
                for v in out.dropped:
                    m.drops_pushout += 1
                    ev.dropped.append((v, "pushout"))
                if out.admitted:
                    ev.admitted.append(p)
                    if self.cfg.slack_enforced and p.slack != INF:
                        heapq.heappush(self._deadlines, (p.arrival + p.slack, p.seq, p))
                else:
                    m.drops_self += 1
                    ev.dropped.append((p, "self"))
                self._log(out.effects, ev)
                if self.check:
                    self._check()
            for port in self.arch.ports:
                for _ in range(self.cfg.speedup):
                    done, effects = process_cycle(port, cx)
                    self._log(effects, ev)
                    if done is None:
                        if not any(q.packets for q in port.queues):
                            break
                        continue
                    m.transmitted_count += 1
                    m.transmitted_value += done.value
                    m.latency_sum += t + 1 - done.arrival  # departs at the end of slot t
                    ev.transmitted.append(done)
                if self.check:
                    self._check()
        except EvalError as e:
            raise SimulationError(f"slot {t}: {e}", slot=t, where=e.where) from e
        total = 0
        for q in self.arch.queues:
            m.qlen_sum[q.name] += q.curr_size
            if q.curr_size > m.qlen_max[q.name]:
                m.qlen_max[q.name] = q.curr_size
            total += q.curr_size
        m.total_qlen_sum += total
        m.total_qlen_max = max(m.total_qlen_max, total)
        if self.check:
            m.stored = self.arch.stored()
            assert m.conserved(), "conservation violated"
        return ev

    def _expire(self, t, ev):
        dl = self._deadlines
        while dl and dl[0][0] < t:
            _, _, p = heapq.heappop(dl)
            q = self.arch.by_id[p.queue]
            if q.packets.get(p.seq) is p:
                q.remove(p)
                self.metrics.drops_slack += 1
                ev.dropped.append((p, "slack"))

    def _log(self, effects, ev):
        if not effects:
            return
        ev.effects.extend(effects)
        self.metrics.events.extend(e for e in effects if e.kind in ("MARK", "NOTIFY"))

    def _check(self):
        self.arch.check_invariants()


def run(spec, trace, cfg: SimConfig, check=False) -> Metrics:
    """Simulate ``spec`` on ``trace``; identical inputs give identical Metrics."""
    return Simulator(spec, cfg, check=check).run(trace)
