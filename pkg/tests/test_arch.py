from __future__ import annotations

import pytest

from basel.arch import (
    PriorityView, admit_to_buffer, admit_to_queue, get_best_queue, get_hol, remove_hol_cycle,
    select_victim_packet, select_victim_queue,
)
from basel.errors import EvalError, SpecError

from conftest import build, fill, pkt, single_queue


def procs(q):
    return sorted(p.processing for p in q.packets.values())


# -- getHOL / victim -------------------------------------------------------------


def test_gethol_fifo_oldest():
    arch = single_queue(8, proc="fifo")
    q = arch.queues[0]
    for i, a in enumerate([5, 2, 9]):
        admit_to_queue(q, pkt(i, arrival=a))
    assert get_hol(q).arrival == 2


def test_gethol_srpt():
    arch = single_queue(8, proc="srpt")
    fill(arch, [(0, 3), (0, 1), (0, 2)])
    assert get_hol(arch.queues[0]).processing == 1


def test_gethol_singleton_and_empty():
    arch = single_queue(8)
    q = arch.queues[0]
    with pytest.raises(EvalError):
        get_hol(q)
    (p,) = fill(arch, [(0, 4)])
    assert get_hol(q) is p


def test_default_processing_is_seq_order():
    arch = single_queue(8)
    ps = fill(arch, [(0, 3), (0, 1), (0, 2)])
    assert get_hol(arch.queues[0]) is ps[0]


def test_victim_rsrpt_largest():
    arch = single_queue(8, adm="rsrpt")
    fill(arch, [(0, 4), (0, 1), (0, 2)])
    assert select_victim_packet(arch.queues[0]).processing == 4


def test_victim_default_latest_arrival():
    arch = single_queue(8)
    q = arch.queues[0]
    admit_to_queue(q, pkt(0, arrival=1))
    admit_to_queue(q, pkt(1, arrival=7))
    assert select_victim_packet(q).arrival == 7


def test_victim_tie_goes_to_larger_seq():
    arch = build("never(p1,p2) = (p1.arrival < 0 and p2.arrival < 0)\n"
                 "q1=Queue(8); out=Port(q1); q1.admPrio = never")
    ps = fill(arch, [(0, 1), (0, 1)])
    assert select_victim_packet(arch.queues[0]) is ps[1]


def test_victim_empty_faults():
    with pytest.raises(EvalError):
        select_victim_packet(single_queue(2).queues[0])


# -- queue admission ----------------------------------------------------------------


def test_admission_pushes_out_largest():
    arch = single_queue(2, proc="srpt", adm="rsrpt", congestion="defCongestion(q1)")
    q = arch.queues[0]
    fill(arch, [(0, 3), (0, 2)])
    out = admit_to_queue(q, pkt(5, processing=1))
    assert out.admitted
    assert [p.processing for p in out.dropped] == [3]
    assert procs(q) == [1, 2]


def test_admission_into_empty_queue():
    arch = single_queue(2, adm="rsrpt")
    out = admit_to_queue(arch.queues[0], pkt(0, processing=9))
    assert out.admitted and out.dropped == []


def test_incoming_is_its_own_victim():
    arch = single_queue(2, adm="rsrpt")
    q = arch.queues[0]
    fill(arch, [(0, 1), (0, 1)])
    out = admit_to_queue(q, pkt(9, processing=5))
    assert not out.admitted and out.dropped == []
    assert procs(q) == [1, 1] and 9 not in q.packets


def test_capacity_one_same_slot_keeps_first():
    arch = single_queue(1)
    a, b = fill(arch, [(0, 1), (0, 1)])
    assert list(arch.queues[0].packets.values()) == [a]


def test_explicit_fifo_admission_drops_oldest():
    arch = single_queue(1, adm="fifo")
    a, b = fill(arch, [(0, 1), (1, 1)])
    assert list(arch.queues[0].packets.values()) == [b]


def test_admission_never_exceeds_capacity():
    arch = single_queue(6, congestion="defCongestion(q1)")
    q = arch.queues[0]
    for i in range(20):
        admit_to_queue(q, pkt(i))
        assert q.curr_size <= 6
    assert q.curr_size == 6


def test_post_admission_action_runs_on_admit_only():
    arch = build("flag() = lambda q, (q.weightAdm += 1)\n"
                 "q1=Queue(1); out=Port(q1); q1.postAdmAct = flag(q1)")
    q = arch.queues[0]
    assert admit_to_queue(q, pkt(0)).admitted
    assert not admit_to_queue(q, pkt(1)).admitted
    assert q.weight_adm == 1


def test_user_congestion_sees_committed_state():
    # at most two packets of processing >= 3 may be stored
    arch = build("heavy() = lambda q, (q.currSize >= 2 and q.getHOL().processing >= 3)\n"
                 "q1=Queue(10); out=Port(q1); q1.procPrio = rsrpt; q1.congestion = heavy(q1)")
    q = arch.queues[0]
    for i in range(4):
        admit_to_queue(q, pkt(i, processing=3))
    assert q.curr_size == 2


def test_queue_in_buffer_needs_buffer_admission():
    arch = build("q1=Queue(2); b=Buffer(4, q1); out=Port(q1)")
    with pytest.raises(ValueError):
        admit_to_queue(arch.queues[0], pkt(0))


# -- buffer admission ---------------------------------------------------------------

SHARED = "q1=Queue(4); q2=Queue(4); mem=Buffer(4, q1, q2); out=Port(q1, q2)\n"


def test_buffer_lqd_default_tail_drop():
    arch = build(SHARED)
    fill(arch, [(0, 1, 1), (0, 1, 1), (0, 1, 2), (0, 1, 2)])
    q1, q2 = arch.queues
    out = admit_to_buffer(arch.buffers[0], pkt(10, queue=1))
    # q1 becomes the longest (3 vs 2); its push-out head is the newest packet, the arrival
    assert not out.admitted
    assert (q1.curr_size, q2.curr_size, arch.buffers[0].curr_size) == (2, 2, 4)


def test_buffer_lqd_pushes_out_of_q1():
    arch = build(SHARED + "q1.admPrio = fifo; q2.admPrio = fifo")
    old = fill(arch, [(0, 1, 1), (1, 1, 1), (0, 1, 2), (1, 1, 2)])
    q1, q2 = arch.queues
    out = admit_to_buffer(arch.buffers[0], pkt(10, arrival=2, queue=1))
    assert out.admitted and out.dropped == [old[0]]
    assert (q1.curr_size, q2.curr_size) == (2, 2)
    assert arch.buffers[0].curr_queue is q1


def test_buffer_below_capacity():
    arch = build(SHARED)
    out = admit_to_buffer(arch.buffers[0], pkt(0, queue=2))
    assert out.admitted and not out.dropped
    assert arch.buffers[0].curr_queue is arch.queues[1]


def test_buffer_drop_comes_from_longest_queue():
    arch = build(SHARED)
    kept = fill(arch, [(0, 1, 1), (0, 1, 1), (0, 1, 1), (0, 1, 2)])
    q1, q2 = arch.queues
    out = admit_to_buffer(arch.buffers[0], pkt(10, arrival=1, queue=2))
    assert out.admitted and out.dropped == [kept[2]]
    assert (q1.curr_size, q2.curr_size) == (2, 2)


def test_buffer_then_queue_congestion():
    arch = build("q1=Queue(1); q2=Queue(4); mem=Buffer(4, q1, q2); out=Port(q1, q2)")
    fill(arch, [(0, 1, 1)])
    out = admit_to_buffer(arch.buffers[0], pkt(5, queue=1))
    assert not out.admitted
    assert arch.queues[0].curr_size == 1


def test_buffer_post_adm_act():
    arch = build(SHARED + "note() = lambda b, NOTIFY\nmem.postAdmAct = note(mem)")
    out = admit_to_buffer(arch.buffers[0], pkt(0, queue=1))
    assert [(e.kind, e.target) for e in out.effects] == [("NOTIFY", "mem")]


# -- queue selection ------------------------------------------------------------------


def three_queues(extra=""):
    return build("q1=Queue(9); q2=Queue(9); q3=Queue(9); mem=Buffer(27, q1, q2, q3); out=Port(q1, q2, q3)\n" + extra)


def test_victim_queue_longest():
    arch = three_queues()
    fill(arch, [(0, 1, 1)] * 3 + [(0, 1, 2)] * 5 + [(0, 1, 3)])
    assert select_victim_queue(arch.buffers[0]) is arch.queues[1]


def test_victim_queue_singleton_and_tie():
    arch = three_queues()
    fill(arch, [(0, 1, 3)])
    assert select_victim_queue(arch.buffers[0]) is arch.queues[2]
    fill(arch, [(0, 1, 2)])
    assert select_victim_queue(arch.buffers[0]) is arch.queues[1]


def test_victim_queue_all_empty_faults():
    with pytest.raises(EvalError):
        select_victim_queue(three_queues().buffers[0])


def test_best_queue_minqf():
    arch = build("q1=Queue(4); q2=Queue(4); q3=Queue(4); out=Port(q1, q2, q3)\n"
                 "q1.weightSched=1; q2.weightSched=2; q3.weightSched=3; out.schedPrio = minqf")
    fill(arch, [(0, 1, 3), (0, 1, 2), (0, 1, 1)])
    assert get_best_queue(arch.ports[0]) is arch.queues[0]


def test_best_queue_lqf():
    arch = build("q1=Queue(9); q2=Queue(9); out=Port(q1, q2); out.schedPrio = lqf")
    fill(arch, [(0, 1, 1)] * 2 + [(0, 1, 2)] * 7)
    assert get_best_queue(arch.ports[0]) is arch.queues[1]


def test_best_queue_only_non_empty():
    arch = build("q1=Queue(4); q2=Queue(4); out=Port(q1, q2)\n"
                 "q1.weightSched=1; q2.weightSched=9; out.schedPrio = minqf")
    fill(arch, [(0, 1, 2)])
    assert get_best_queue(arch.ports[0]) is arch.queues[1]
    assert arch.ports[0].curr_queue is None


def test_best_queue_default_declaration_order():
    arch = build("q1=Queue(4); q2=Queue(4); q3=Queue(4); out=Port(q3, q1, q2)")
    fill(arch, [(0, 1, 2), (0, 1, 1)])
    assert get_best_queue(arch.ports[0]) is arch.queues[0]


def test_best_queue_empty_faults():
    with pytest.raises(EvalError):
        get_best_queue(build("q1=Queue(4); out=Port(q1)").ports[0])


# -- processing cycles ---------------------------------------------------------------


def test_remove_hol_completes():
    arch = single_queue(4)
    (p,) = fill(arch, [(0, 1)])
    q = arch.queues[0]
    assert remove_hol_cycle(q) is p
    assert q.curr_size == 0 and not q.packets and p.processing == 0


def test_remove_hol_decrements():
    arch = single_queue(4)
    (p,) = fill(arch, [(0, 3)])
    assert remove_hol_cycle(arch.queues[0]) is None
    assert p.processing == 2


def test_srpt_head_stays_after_decrement():
    arch = single_queue(4, proc="srpt")
    a, b = fill(arch, [(0, 2), (0, 2)])
    q = arch.queues[0]
    remove_hol_cycle(q)
    assert a.processing == 1 and get_hol(q) is a


def test_rekey_moves_admission_head():
    arch = single_queue(4, proc="fifo", adm="rsrpt")
    a, b = fill(arch, [(0, 3), (0, 2)])
    q = arch.queues[0]
    assert select_victim_packet(q) is a
    remove_hol_cycle(q)
    remove_hol_cycle(q)
    assert select_victim_packet(q) is b
    q.check_invariants()


def test_remove_hol_empty_faults():
    with pytest.raises(EvalError):
        remove_hol_cycle(single_queue(4).queues[0])


# -- instantiation ---------------------------------------------------------------------


def test_qids_follow_declaration_order():
    arch = build("a=Queue(1); b=Queue(2); out=Port(b, a)")
    assert [(q.name, q.qid, q.size) for q in arch.queues] == [("a", 1, 1), ("b", 2, 2)]


def test_build_rejects_unbound_constant():
    from basel.dsl import parse
    from basel.arch import Architecture

    with pytest.raises(SpecError, match="unbound constant B"):
        Architecture.build(parse("q1=Queue(B); out=Port(q1)"), {})


def test_capacity_expression():
    arch = build("q1=Queue(B/k); out=Port(q1)", B=12, k=4)
    assert arch.queues[0].size == 3


def test_priority_view_order():
    view = PriorityView(lambda a, b: (a.processing, a.seq) < (b.processing, b.seq))
    ps = [pkt(i, processing=p) for i, p in enumerate([5, 3, 8, 3, 1])]
    for p in ps:
        view.push(p)
    view.remove(ps[4])
    assert view.peek() is ps[1]
    ps[2].processing = 0
    view.update(ps[2])
    assert view.peek() is ps[2]
    view.check()
    assert len(view) == 4 and ps[4] not in view
