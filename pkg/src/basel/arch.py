"""Runtime object model: packets, queues, ports and buffers.

A queue keeps one authoritative packet store plus two comparator-ordered
views over it. The processing view's head is the HOL packet; the admission
view's head is the next push-out victim.

Admission is virtual: the arrival is placed in its queue (store, views and
currSize) as a *pending* packet, and victims are evicted while the congestion
predicate holds. Congestion predicates observe the committed occupancy,
that is, without the pending arrival; they answer "is there no room for the
arrival?". Victim selection sees the arrival like any stored packet, so the
arrival can be its own victim.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from . import builtins
from .dsl import ast as A
from .dsl.check import resolve_bindings, validate
from .dsl.evaluator import Compiler, Context, Effect
from .errors import EvalError, SpecError

INF = 2 ** 63 - 1  # slack value meaning "no deadline"


@dataclass(eq=False, slots=True)
class Packet:
    seq: int
    arrival: int
    size: int = 1
    value: int = 1
    processing: int = 1
    slack: int = INF
    queue: int = 1

    def basel_attr(self, name, cx):
        if name in ("size", "value", "processing", "arrival", "slack", "queue"):
            return getattr(self, name)
        raise AttributeError(name)

    def copy(self):
        return Packet(self.seq, self.arrival, self.size, self.value, self.processing, self.slack, self.queue)

    def key(self):
        return (self.seq, self.arrival, self.size, self.value, self.processing, self.slack, self.queue)


class PriorityView:
    """Indexed binary heap ordered by ``before(a, b)``.

    Supports removal of arbitrary members and re-keying in O(log n); only
    the head is exposed for reading.
    """

    def __init__(self, before):
        self.before = before
        self._heap = []
        self._pos = {}

    def __len__(self):
        return len(self._heap)

    def __contains__(self, p):
        return p.seq in self._pos

    def __iter__(self):
        return iter(list(self._heap))

    def peek(self):
        if not self._heap:
            raise IndexError("peek on empty view")
        return self._heap[0]

    def push(self, p):
        self._heap.append(p)
        self._pos[p.seq] = len(self._heap) - 1
        self._up(len(self._heap) - 1)

    def remove(self, p):
        i = self._pos.pop(p.seq)
        last = self._heap.pop()
        if i < len(self._heap):
            self._heap[i] = last
            self._pos[last.seq] = i
            self._up(i)
            self._down(self._pos[last.seq])

    def update(self, p):
        i = self._pos[p.seq]
        self._up(i)
        self._down(self._pos[p.seq])

    def _swap(self, i, j):
        h = self._heap
        h[i], h[j] = h[j], h[i]
        self._pos[h[i].seq] = i
        self._pos[h[j].seq] = j

    def _up(self, i):
        h, before = self._heap, self.before
        while i > 0:
            parent = (i - 1) >> 1
            if before(h[i], h[parent]):
                self._swap(i, parent)
                i = parent
            else:
                break

    def _down(self, i):
        h, before = self._heap, self.before
        n = len(h)
        while True:
            left = 2 * i + 1
            best = i
            if left < n and before(h[left], h[best]):
                best = left
            if left + 1 < n and before(h[left + 1], h[best]):
                best = left + 1
            if best == i:
                return
            self._swap(i, best)
            i = best

    def check(self):
        h = self._heap
        assert len(self._pos) == len(h)
        for i, p in enumerate(h):
            assert self._pos[p.seq] == i
            if i:
                assert not self.before(p, h[(i - 1) >> 1]), "heap order violated"


def _order(cmp, cx, newest_first):
    """Strict order from a user comparator, ties broken by packet seq."""
    if cmp is None:
        if newest_first:
            return lambda a, b: a.seq > b.seq
        return lambda a, b: a.seq < b.seq

    def before(a, b):
        if cmp(a, b, cx):
            return True
        if cmp(b, a, cx):
            return False
        return a.seq > b.seq if newest_first else a.seq < b.seq

    return before


class QueueState:
    def __init__(self, name, qid, size, *, proc_prio=None, adm_prio=None, congestion=None,
                 post_adm_act=None, weight_adm=0, weight_sched=0, cx=None):
        self.name = name
        self.qid = qid
        self.size = size
        self.buffer = None
        self.cx = cx if cx is not None else Context()
        self.packets = {}
        self.curr_size = 0
        self.proc_prio = proc_prio
        self.adm_prio = adm_prio
        self.congestion = congestion if congestion is not None else default_congestion()
        self.post_adm_act = post_adm_act
        self.weight_adm = weight_adm
        self.weight_sched = weight_sched
        self.pending = None
        self.completing = None
        self.proc_view = PriorityView(_order(proc_prio, self.cx, newest_first=False))
        # ties in the push-out order evict the newest packet first
        self.adm_view = PriorityView(_order(adm_prio, self.cx, newest_first=True))

    def __repr__(self):
        return f"<Queue {self.name} {self.curr_size}/{self.size}>"

    def __len__(self):
        return len(self.packets)

    def is_empty(self):
        return not self.packets

    def occupancy(self, cx=None):
        if cx is not None and cx.exclude_pending and self.pending is not None:
            return self.curr_size - self.pending.size
        return self.curr_size

    def basel_attr(self, name, cx):
        if name == "currSize":
            return self.occupancy(cx)
        if name == "size":
            return self.size
        if name == "weightSched":
            return self.weight_sched
        if name == "weightAdm":
            return self.weight_adm
        if name == "buffer":
            if self.buffer is None:
                raise EvalError(f"queue {self.name} has no buffer")
            return self.buffer
        raise AttributeError(name)

    def basel_method(self, name, cx):
        if name == "getHOL":
            return get_hol(self, cx)
        raise EvalError(f"Queue has no method {name}()")

    def insert(self, p):
        self.packets[p.seq] = p
        self.proc_view.push(p)
        self.adm_view.push(p)
        self.curr_size += p.size

    def remove(self, p):
        del self.packets[p.seq]
        self.proc_view.remove(p)
        self.adm_view.remove(p)
        self.curr_size -= p.size

    def is_congested(self, cx):
        saved = cx.exclude_pending
        cx.exclude_pending = True
        try:
            return bool(self.congestion(self, cx))
        finally:
            cx.exclude_pending = saved

    def check_invariants(self):
        assert self.curr_size == sum(p.size for p in self.packets.values()), "currSize mismatch"
        ids = set(self.packets)
        assert {p.seq for p in self.proc_view} == ids, "procView differs from store"
        assert {p.seq for p in self.adm_view} == ids, "admView differs from store"
        assert len(self.proc_view) == len(ids) == len(self.adm_view)
        self.proc_view.check()
        self.adm_view.check()
        for p in self.packets.values():
            assert p.processing >= 1, "stored packet with zero processing"


class PortState:
    def __init__(self, name, queues, *, sched_prio=None, post_sched_act=None, cx=None):
        self.name = name
        self.queues = list(queues)
        self.sched_prio = sched_prio
        self.post_sched_act = post_sched_act
        self.curr_queue = None
        self.cx = cx if cx is not None else Context()

    def __repr__(self):
        return f"<Port {self.name}>"

    def basel_attr(self, name, cx):
        raise AttributeError(name)

    def basel_method(self, name, cx):
        if name == "getCurrQueue":
            if self.curr_queue is None:
                raise EvalError(f"port {self.name} has no current queue")
            return self.curr_queue
        if name == "getBestQueue":
            return get_best_queue(self, cx)
        raise EvalError(f"Port has no method {name}()")


class BufferState:
    def __init__(self, name, size, queues, *, congestion=None, queue_prio=None, post_adm_act=None, cx=None):
        self.name = name
        self.size = size
        self.queues = list(queues)
        self.congestion = congestion if congestion is not None else default_congestion()
        self.queue_prio = queue_prio if queue_prio is not None else default_queue_prio()
        self.post_adm_act = post_adm_act
        self.curr_queue = None
        self.cx = cx if cx is not None else Context()
        for q in self.queues:
            q.buffer = self

    def __repr__(self):
        return f"<Buffer {self.name} {self.curr_size}/{self.size}>"

    @property
    def curr_size(self):
        return sum(q.curr_size for q in self.queues)

    def occupancy(self, cx=None):
        return sum(q.occupancy(cx) for q in self.queues)

    def basel_attr(self, name, cx):
        if name == "currSize":
            return self.occupancy(cx)
        if name == "size":
            return self.size
        raise AttributeError(name)

    def basel_method(self, name, cx):
        if name == "getCurrQueue":
            if self.curr_queue is None:
                raise EvalError(f"buffer {self.name} has no current queue")
            return self.curr_queue
        if name == "getBestQueue":
            return select_victim_queue(self, cx)
        raise EvalError(f"Buffer has no method {name}()")

    def is_congested(self, cx):
        saved = cx.exclude_pending
        cx.exclude_pending = True
        try:
            return bool(self.congestion(self, cx))
        finally:
            cx.exclude_pending = saved


_compiler = Compiler()


def default_congestion():
    return _compiler.predicate(builtins.lookup("defCongestion"))


def default_queue_prio():
    return _compiler.comparator(builtins.lookup("lqd"))


# -- operations ---------------------------------------------------------


@dataclass
class AdmissionOutcome:
    packet: Packet
    admitted: bool
    dropped: list = field(default_factory=list)
    effects: list = field(default_factory=list)


def get_hol(q: QueueState, cx: Optional[Context] = None) -> Packet:
    """Head of the processing view."""
    if q.completing is not None:
        return q.completing
    if not q.packets:
        raise EvalError(f"getHOL() on empty queue {q.name}")
    head = q.proc_view.peek()
    if cx is not None and cx.exclude_pending and head is q.pending:
        if len(q.packets) == 1:
            raise EvalError(f"getHOL() on empty queue {q.name}")
        q.proc_view.remove(head)
        try:
            return q.proc_view.peek()
        finally:
            q.proc_view.push(head)
    return head


def select_victim_packet(q: QueueState) -> Packet:
    if not q.packets:
        raise EvalError(f"push-out from empty queue {q.name}")
    return q.adm_view.peek()


def _head(items, cmp, cx):
    best = None
    for it in items:
        if best is None or (cmp is not None and cmp(it, best, cx)):
            best = it
    return best


def get_best_queue(port: PortState, cx: Optional[Context] = None) -> QueueState:
    """Head of schedPrio over the non-empty member queues (ties: declaration order)."""
    cx = cx or port.cx
    best = _head((q for q in port.queues if q.packets), port.sched_prio, cx)
    if best is None:
        raise EvalError(f"getBestQueue() on port {port.name} with no packets")
    return best


def select_victim_queue(b: BufferState, cx: Optional[Context] = None) -> QueueState:
    """Head of queuePrio over the non-empty member queues (ties: declaration order)."""
    cx = cx or b.cx
    saved = cx.exclude_pending
    cx.exclude_pending = False
    try:
        best = _head((q for q in b.queues if q.packets), b.queue_prio, cx)
    finally:
        cx.exclude_pending = saved
    if best is None:
        raise EvalError(f"buffer {b.name} has no packets to push out")
    return best


def _run_action(fn, obj, cx):
    saved = cx.effects
    cx.effects = []
    try:
        fn(obj, cx)
        return cx.effects
    finally:
        cx.effects = saved


def _resolve_queue(q, p, cx, dropped):
    """Evict from ``q`` while it is congested; False if ``p`` itself went."""
    while q.is_congested(cx):
        v = select_victim_packet(q)
        q.remove(v)
        if v is p:
            return False
        dropped.append(v)
    return True


def admit_to_queue(q: QueueState, p: Packet, cx: Optional[Context] = None) -> AdmissionOutcome:
    if q.buffer is not None:
        raise ValueError(f"queue {q.name} belongs to buffer {q.buffer.name}; use admit_to_buffer")
    cx = cx or q.cx
    dropped = []
    q.insert(p)
    q.pending = p
    try:
        admitted = _resolve_queue(q, p, cx, dropped)
    finally:
        q.pending = None
    effects = []
    if admitted and q.post_adm_act is not None:
        effects = _run_action(q.post_adm_act, q, cx)
    return AdmissionOutcome(p, admitted, dropped, effects)


def admit_to_buffer(b: BufferState, p: Packet, cx: Optional[Context] = None) -> AdmissionOutcome:
    cx = cx or b.cx
    target = next((q for q in b.queues if q.qid == p.queue), None)
    if target is None:
        raise ValueError(f"packet targets queue {p.queue}, which is not in buffer {b.name}")
    dropped = []
    admitted = True
    target.insert(p)
    target.pending = p
    try:
        while b.is_congested(cx):
            vq = select_victim_queue(b, cx)
            v = select_victim_packet(vq)
            vq.remove(v)
            if v is p:
                admitted = False
                break
            dropped.append(v)
        if admitted:
            admitted = _resolve_queue(target, p, cx, dropped)
    finally:
        target.pending = None
    effects = []
    if admitted:
        b.curr_queue = target
        if target.post_adm_act is not None:
            effects.extend(_run_action(target.post_adm_act, target, cx))
        if b.post_adm_act is not None:
            effects.extend(_run_action(b.post_adm_act, b, cx))
    return AdmissionOutcome(p, admitted, dropped, effects)


def remove_hol_cycle(q: QueueState, hook=None, cx: Optional[Context] = None) -> Optional[Packet]:
    """Spend one processing cycle on the HOL packet.

    Returns the packet if it completed (and was removed). ``hook`` runs after
    the decrement while a completed packet is still visible as the HOL.
    """
    hol = get_hol(q)
    if hol.processing <= 0:
        raise EvalError(f"HOL packet of {q.name} has no processing left")
    if hol.processing == 1:
        q.proc_view.remove(hol)
        q.adm_view.remove(hol)
        hol.processing = 0
        q.completing = hol
        try:
            if hook is not None:
                hook()
        finally:
            q.completing = None
            del q.packets[hol.seq]
            q.curr_size -= hol.size
        return hol
    hol.processing -= 1
    q.proc_view.update(hol)
    q.adm_view.update(hol)
    if hook is not None:
        hook()
    return None


# -- instantiation ------------------------------------------------------


class Architecture:
    """Runtime instance of a validated program."""

    def __init__(self, spec, queues, ports, buffers, cx, compiler):
        self.spec = spec
        self.queues = queues
        self.ports = ports
        self.buffers = buffers
        self.cx = cx
        self.compiler = compiler
        self.by_id = {q.qid: q for q in queues}
        self.by_name = {o.name: o for o in (*queues, *ports, *buffers)}

    @classmethod
    def build(cls, spec: A.ArchSpec, constants=None) -> "Architecture":
        consts = dict(spec.constants)
        consts.update(constants or {})
        diags = validate(spec, consts)
        if diags:
            raise SpecError(diags)
        cx = Context(constants=consts)
        compiler = Compiler(spec)

        def value(expr, what):
            v = compiler.expr(expr, [])(None, cx)
            if not isinstance(v, int) or isinstance(v, bool):
                raise SpecError([_diag(expr, f"{what} must be an integer")])
            return v

        props = {}
        for r in resolve_bindings(spec):
            b = r.binding
            if r.role == "weight":
                props.setdefault(b.obj, {})[b.prop] = value(r.weight, f"{b.obj}.{b.prop}")
            elif r.role == "comparator":
                props.setdefault(b.obj, {})[b.prop] = compiler.comparator(r.definition)
            else:
                props.setdefault(b.obj, {})[b.prop] = compiler.predicate(r.definition)

        queues = []
        for d in spec.queues():
            p = props.get(d.name, {})
            size = value(d.capacity, f"capacity of {d.name}")
            if size < 0:
                raise SpecError([_diag(d, f"capacity of {d.name} is negative")])
            queues.append(QueueState(
                d.name, len(queues) + 1, size,
                proc_prio=p.get("procPrio"), adm_prio=p.get("admPrio"),
                congestion=p.get("congestion"), post_adm_act=p.get("postAdmAct"),
                weight_adm=p.get("weightAdm", 0), weight_sched=p.get("weightSched", 0), cx=cx))
        qmap = {q.name: q for q in queues}
        ports = []
        for d in spec.ports():
            p = props.get(d.name, {})
            ports.append(PortState(d.name, [qmap[m] for m in d.members],
                                   sched_prio=p.get("schedPrio"), post_sched_act=p.get("postSchedAct"), cx=cx))
        buffers = []
        for d in spec.buffers():
            p = props.get(d.name, {})
            size = value(d.capacity, f"capacity of {d.name}")
            buffers.append(BufferState(d.name, size, [qmap[m] for m in d.members],
                                       congestion=p.get("congestion"), queue_prio=p.get("queuePrio"),
                                       post_adm_act=p.get("postAdmAct"), cx=cx))
        return cls(spec, queues, ports, buffers, cx, compiler)

    def admit(self, p: Packet) -> AdmissionOutcome:
        q = self.by_id.get(p.queue)
        if q is None:
            raise EvalError(f"packet {p.seq} targets unknown queue {p.queue}")
        if q.buffer is not None:
            return admit_to_buffer(q.buffer, p, self.cx)
        return admit_to_queue(q, p, self.cx)

    def stored(self) -> int:
        return sum(len(q.packets) for q in self.queues)

    def check_invariants(self):
        for q in self.queues:
            q.check_invariants()
        for b in self.buffers:
            assert b.curr_size == sum(q.curr_size for q in b.queues)


def _diag(node, msg):
    from .errors import Diagnostic

    line, col = getattr(node, "pos", (0, 0))
    return Diagnostic(line, col, msg)


__all__ = [
    "INF", "Packet", "PriorityView", "QueueState", "PortState", "BufferState", "Architecture",
    "AdmissionOutcome", "Effect", "get_hol", "select_victim_packet", "admit_to_queue",
    "select_victim_queue", "admit_to_buffer", "get_best_queue", "remove_hol_cycle",
]
