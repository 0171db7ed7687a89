from __future__ import annotations

import pytest

from basel.arch import Architecture, Packet
from basel.dsl import parse

GENERIC = """\
// considered priorities for admission and
// processing
fifo(p1,p2) = (p1.arrival < p2.arrival)
srpt(p1,p2) = (p1.processing < p2.processing)
rsrpt(p1,p2) = (p1.processing > p2.processing)

// default congestion condition for all
// considered policies
defCongestion() = lambda q, (q.currSize >= q.size)

// initializing a generic buffering architecture
q1=Queue(B); out=Port(q1);
q1.proPrio(p1,p2)=fifo(p1,p2);
q1.congestion=defCongestion(q1);
"""

# scheduling priorities and postSchedAct actions, balanced parentheses
SCHEDULERS = """\
// LQF: HOL packet from Longest-Queue-First
lqf(q1,q2)  = (q1.currSize > q2.currSize);
// SQF: HOL packet from Shortest-Queue-First
sqf(q1,q2)  = (q1.currSize < q2.currSize);
// MAXQF: HOL packet from queue that
// admits max processing
maxqf(q1,q2)= (q1.weightSched > q2.weightSched);
// MINQF: HOL packet from queue that admits
// min processing
minqf(q1,q2)= (q1.weightSched < q2.weightSched);
// CRR: Round-Robin with per cycle resolution
crr(q1,q2)  = (q1.weightSched < q2.weightSched);
crrPostSchedAct() = lambda port,
         (port.getCurrQueue().weightSched += k);
// PRR: Round-Robin with per packet resolution
prr(q1,q2)  = (q1.weightSched < q2.weightSched);
prrPostSchedAct() = lambda port,
  (let q = port.getCurrQueue() in
    if (q.getHOL().processing == 0)
        q.weightSched += k*k);
"""

SCHED_SNIPPET = """\
schedPrio(q1,q2) =
       q1.getHOL().value > q2.getHOL().value
"""

LQD_SNIPPET = "queuePrio(q1,q2) = q1.currSize < q2.currSize\n"


def build(text, **constants):
    return Architecture.build(parse(text), constants)


def single_queue(size, proc=None, adm=None, congestion=None):
    lines = [f"q1 = Queue({size})", "out = Port(q1)"]
    if proc:
        lines.append(f"q1.procPrio = {proc}")
    if adm:
        lines.append(f"q1.admPrio = {adm}")
    if congestion:
        lines.append(f"q1.congestion = {congestion}")
    return build("\n".join(lines))


def pkt(seq, arrival=0, processing=1, queue=1, size=1, value=1):
    return Packet(seq=seq, arrival=arrival, size=size, value=value, processing=processing, queue=queue)


def fill(arch, specs):
    """Admit packets given as (arrival, processing[, queue]); returns them."""
    out = []
    for i, s in enumerate(specs):
        p = pkt(i, s[0], s[1], s[2] if len(s) > 2 else 1)
        arch.admit(p)
        out.append(p)
    return out


@pytest.fixture
def sq_generic():
    return parse(GENERIC)
