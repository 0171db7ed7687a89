"""The builtin policy library, available to every program unless shadowed."""
from __future__ import annotations

from functools import lru_cache

PRELUDE = """\
// packet comparators: processing order / push-out order
fifo(p1,p2) = (p1.arrival < p2.arrival)
srpt(p1,p2) = (p1.processing < p2.processing)
rsrpt(p1,p2) = (p1.processing > p2.processing)

// queue comparators for scheduling
lqf(q1,q2)  = (q1.currSize > q2.currSize)
sqf(q1,q2)  = (q1.currSize < q2.currSize)
maxqf(q1,q2)= (q1.weightSched > q2.weightSched)
minqf(q1,q2)= (q1.weightSched < q2.weightSched)
crr(q1,q2)  = (q1.weightSched < q2.weightSched)
crrPostSchedAct() = lambda port,
         (port.getCurrQueue().weightSched += k)
prr(q1,q2)  = (q1.weightSched < q2.weightSched)
prrPostSchedAct() = lambda port,
  (let q = port.getCurrQueue() in
    if (q.getHOL().processing == 0)
        q.weightSched += k*k)

// shared buffer: the head of queuePrio is the queue that loses a packet
lqd(q1,q2) = (q1.currSize > q2.currSize)

defCongestion() = lambda q, (q.currSize >= q.size)
"""


@lru_cache(maxsize=None)
def prelude():
    from .dsl.parser import parse

    return parse(PRELUDE)


def lookup(name):
    return prelude().definition(name)


def names():
    p = prelude()
    return list(p.comparators) + list(p.predicates) + list(p.actions)


def catalog():
    """Builtin definitions in declaration order, as ``(name, kind, text)``."""
    from .dsl import ast as A
    from .dsl.printer import format_def

    p = prelude()
    order = []
    for line in PRELUDE.splitlines():
        head = line.split("(", 1)[0].strip()
        if head and not head.startswith("//") and p.definition(head) is not None and head not in order:
            order.append(head)
    out = []
    for name in order:
        d = p.definition(name)
        kind = {A.ComparatorDef: "comparator", A.PredicateDef: "predicate", A.ActionDef: "action"}[type(d)]
        out.append((name, kind, format_def(d)))
    return out
