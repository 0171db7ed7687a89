from __future__ import annotations

import math
import random

import pytest

from basel.arch import Architecture
from basel.dsl import parse
from basel.errors import OracleRefusal
from basel.library import load_program
from basel.oracle import (
    OracleBounds, Shape, brute_force_opt, competitive_ratio, reference_optimal_policy,
)
from basel.sim import SimConfig, run
from basel.traffic import make_trace


def rand_trace(seed, n_max=6, k=3, horizon=5, queues=1, by_processing=False):
    r = random.Random(seed)
    rows = []
    for a in sorted(r.randrange(horizon) for _ in range(r.randint(0, n_max))):
        proc = r.randint(1, k)
        rows.append((a, proc, proc if by_processing else r.randint(1, queues)))
    return make_trace(rows)


def drain(trace):
    return trace.packets[-1].arrival + sum(p.processing for p in trace.packets) + 1 if trace.packets else 0


def test_hand_example_arrivals_before_service():
    # proc 2 at t=0, proc 1 at t=1: the second arrival meets a full queue when B=1
    t = make_trace([(0, 2), (1, 1)])
    assert brute_force_opt(Shape.single_queue(1), t, 3) == 1
    assert brute_force_opt(Shape.single_queue(2), t, 3) == 2


def test_empty_trace():
    assert brute_force_opt(Shape.single_queue(2), make_trace([]), 5) == 0
    assert reference_optimal_policy(make_trace([]), 2) == 0


def test_no_contention_all_transmitted():
    t = make_trace([(0, 1), (1, 1), (1, 1), (3, 1)])
    assert brute_force_opt(Shape.single_queue(2), t) == 4


def test_horizon_truncates():
    t = make_trace([(0, 3)])
    assert brute_force_opt(Shape.single_queue(1), t, 2) == 0
    assert brute_force_opt(Shape.single_queue(1), t, 3) == 1


def test_opt_picks_short_jobs():
    t = make_trace([(0, 3), (0, 3), (0, 1), (0, 1)])
    assert brute_force_opt(Shape.single_queue(2), t, 2) == 2


def test_memo_soundness():
    for seed in range(80):
        t = rand_trace(seed, n_max=5, queues=2)
        shape = Shape((2, 1), ((0, 1),))
        assert brute_force_opt(shape, t, memo=True) == brute_force_opt(shape, t, memo=False)


def test_memo_soundness_shared_buffer():
    shape = Shape((2, 2), ((0, 1),), ((3, (0, 1)),))
    for seed in range(40):
        t = rand_trace(seed, n_max=5, queues=2)
        assert brute_force_opt(shape, t, memo=True) == brute_force_opt(shape, t, memo=False)


def test_reference_equals_opt():
    for seed in range(200):
        t = rand_trace(seed)
        assert reference_optimal_policy(t, 2) == brute_force_opt(Shape.single_queue(2), t), seed


@pytest.mark.parametrize("name, consts, queues", [
    ("sq_fifo_fifo", {"B": 2}, 1), ("sq_fifo_srpt", {"B": 2}, 1), ("sq_rsrpt_srpt", {"B": 2}, 1),
    ("sq_generic", {"B": 2}, 1), ("mq_lqf", {"B": 6, "k": 3}, 3), ("mq_sqf", {"B": 6, "k": 3}, 3),
    ("mq_maxqf", {"B": 6, "k": 3}, 3), ("mq_minqf", {"B": 6, "k": 3}, 3), ("mq_crr", {"B": 6, "k": 3}, 3),
    ("mq_prr", {"B": 6, "k": 3}, 3), ("lqd_shared", {"B": 3}, 2),
])
def test_oracle_dominates_online_policies(name, consts, queues):
    spec = load_program(name, consts)
    shape = Shape.from_arch(Architecture.build(spec, consts))
    for seed in range(60):
        t = rand_trace(seed, n_max=7, queues=queues, by_processing=queues == 3)
        slots = drain(t)
        alg = run(spec, t, SimConfig(slots=slots, constants=consts)).transmitted_value
        assert brute_force_opt(shape, t, slots) >= alg


def test_shape_from_arch():
    arch = Architecture.build(parse("a=Queue(2); b=Queue(3); m=Buffer(4, a, b); out=Port(b, a)"), {})
    assert Shape.from_arch(arch) == Shape((2, 3), ((1, 0),), ((4, (0, 1)),))


def test_refusals():
    big = make_trace([(0, 1)] * 13)
    with pytest.raises(OracleRefusal, match="packets"):
        brute_force_opt(Shape.single_queue(2), big)
    with pytest.raises(OracleRefusal, match="unit size"):
        brute_force_opt(Shape.single_queue(2), make_trace([{"arrival": 0, "processing": 1, "value": 2}]))
    with pytest.raises(OracleRefusal, match="slack"):
        brute_force_opt(Shape.single_queue(2), make_trace([{"arrival": 0, "processing": 1, "slack": 3}]))
    with pytest.raises(OracleRefusal, match="processing"):
        brute_force_opt(Shape.single_queue(2), make_trace([(0, 9)]))
    with pytest.raises(OracleRefusal, match="capacity"):
        brute_force_opt(Shape.single_queue(9), make_trace([(0, 1)]))
    with pytest.raises(OracleRefusal, match="unknown queue"):
        brute_force_opt(Shape.single_queue(2), make_trace([(0, 1, 2)]))
    with pytest.raises(OracleRefusal, match="budget"):
        brute_force_opt(Shape.single_queue(4), make_trace([(t, 3) for t in range(10)]),
                        bounds=OracleBounds(node_budget=20))


@pytest.mark.parametrize("opt, alg, ratio", [(10, 5, 2.0), (0, 0, 1.0), (7, 7, 1.0), (3, 0, math.inf), (4, 8, 0.5)])
def test_competitive_ratio(opt, alg, ratio):
    rep = competitive_ratio(opt, alg)
    assert (rep.opt_value, rep.alg_value, rep.ratio) == (opt, alg, ratio)
