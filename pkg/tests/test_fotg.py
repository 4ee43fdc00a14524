from fractions import Fraction

import pytest

from stress_tsm import model as M
from stress_tsm.fotg import (
    BoundExhaustedError,
    EventSequence,
    TargetEvent,
    TimedEvent,
    UnknownTargetError,
    backward_search,
    classify_transitions,
    expand_branches,
    formulate_overhead_constraints,
    forward_verify,
    parse_trace,
    synthesize_response_time,
    trace_dump,
    trace_lines,
)
from stress_tsm.model import Drop, Ev, Kind
from stress_tsm.symbolic import SymbolicTime, parse_side
from stress_tsm.vlan import Interval


def expr(text):
    return parse_side(text)


# ---------------------------------------------------------------- classification

def test_classify_maximize_response():
    c = classify_transitions(M.build_tsm(2), TargetEvent("p_t"))
    assert c.wanted == ("res_tmr", "rcv_req")
    assert c.wanted_conditions == (Kind.D_T,)
    assert c.unwanted == ("rcv_res",)


def test_classify_minimize_swaps_roles():
    c = classify_transitions(M.build_tsm(2), TargetEvent("p_t", "minimize"))
    assert c.wanted == ("rcv_res",)
    assert c.unwanted == ("res_tmr",)


def test_classify_loss_has_no_unwanted():
    c = classify_transitions(M.build_tsm(2), TargetEvent("L"))
    assert c.wanted == ("loss",) and c.unwanted == ()


def test_unknown_target():
    with pytest.raises(ValueError):
        TargetEvent("bogus")
    with pytest.raises(ValueError):
        TargetEvent("p_t", "sideways")
    rules = tuple(r for r in M.TSM_RULES if r.symbol == "loss")
    with pytest.raises(UnknownTargetError):
        classify_transitions(M.ProtocolModel(2, rules, 1), TargetEvent("p_r"))


# ---------------------------------------------------------------- backward search

def test_chain_to_a_response():
    seqs = backward_search(M.build_tsm(2), M.p_t(2), 1)
    assert len(seqs) == 1
    s = seqs[0]
    assert s.rules == ("loss", "tx_req", "rcv_req", "res_tmr", "tx_res")
    assert [e.stimulus.kind for e in s.events] == [Ev.L, Ev.q_t, Ev.q_r, Ev.Res, Ev.p_t]
    assert s.time == expr("d_Q_2 + Exp_2")
    assert trace_dump(s).splitlines()[2] == "1*d_Q_2\tq_r\t2"


def test_chain_to_a_forwarded_response():
    (s,) = backward_search(M.build_tsm(2), M.p_r(2, 1), 1)
    assert s.time == expr("d_Q_1 + Exp_1 + d_1_2")


def test_request_reception_branches_over_rounds():
    seqs = backward_search(M.build_tsm(1, 2), M.q_r(1), 2)
    assert [(s.rounds, s.rules) for s in seqs] == [
        (1, ("loss", "tx_req", "rcv_req")),
        (2, ("loss", "tx_req", "req_tmr", "tx_req", "rcv_req")),
    ]
    assert [s.rounds for s in backward_search(M.build_tsm(1, 2), M.q_r(1), 1)] == [1]


def test_response_at_requester_times():
    seqs = backward_search(M.build_tsm(1, 2), M.p_r(0, 1), 2)
    assert [s.time for s in seqs] == [expr("d_Q_1 + Exp_1 + d_1_Q"), expr("d_Q_1 + Exp_1 + d_1_Q + Exp_Q")]


def test_state_symbol_target():
    seqs = backward_search(M.build_tsm(1), M.StateSymbol(Kind.D_T, 1), 1)
    assert seqs and all(s.target.kind == Ev.q_r for s in seqs)


def test_backward_bad_bound():
    with pytest.raises(ValueError):
        backward_search(M.build_tsm(1), M.p_t(1), 0)


# ---------------------------------------------------------------- forward verification

def two_round_chain():
    (s,) = [x for x in backward_search(M.build_tsm(1, 2), M.p_r(0, 1), 2) if x.rounds == 2]
    return s


def test_two_rounds_need_the_first_response_lost():
    m = M.build_tsm(1, 2)
    s = two_round_chain()
    v = forward_verify(m, s, {Drop(1, "p", 0, 1)})
    assert v.accepted
    assert not forward_verify(m, s)


def test_single_loss_event_is_replayable():
    seq = EventSequence((TimedEvent(M.loss(), SymbolicTime()),))
    assert forward_verify(M.build_tsm(3), seq).accepted


def test_concrete_replay_checks_times():
    m = M.build_tsm(1)
    (s,) = backward_search(m, M.p_t(1), 1)
    good = {"d_Q_1": Fraction(3), "d_1_Q": Fraction(3), "Exp_1": Fraction(4), "Exp_Q": Fraction(100)}
    assert forward_verify(m, s, assignment=good).accepted
    bad = EventSequence(s.events[:-1] + (TimedEvent(s.target, expr("d_Q_1 + Exp_1 + 1")),))
    assert not forward_verify(m, bad, assignment=good).accepted


def test_chain_event_dropped_by_pattern_is_rejected():
    m = M.build_tsm(1)
    (s,) = backward_search(m, M.q_r(1), 1)
    v = forward_verify(m, s, {Drop(1, "q", 1, 0)})
    assert not v and "dropped" in v.reason


def test_forward_verify_empty_sequence():
    with pytest.raises(ValueError):
        forward_verify(M.build_tsm(1), EventSequence(()))


def test_trace_round_trip():
    s = two_round_chain()
    back = parse_trace(trace_lines(s))
    assert back.events == s.events


def test_trace_parse_errors():
    with pytest.raises(ValueError, match="line 1"):
        parse_trace(["0\tL\tQ"])


# ---------------------------------------------------------------- interval branching

def after_loss(n=2, rounds=2):
    m = M.build_tsm(n, rounds)
    return m, M.step(m, m.initial_state(), M.loss(), M.SymbolicTiming())


def test_forward_request_timer_first():
    m, g = after_loss()
    vals = {"d_Q_1": Interval(10, 10), "d_Q_2": Interval(10, 10), "Exp_Q": Interval(5, 5)}
    (b,) = expand_branches(m, g, vals)
    assert [s.kind for s in b.events] == [Ev.Req]
    assert b.state.rounds == 2


def test_forward_branches_respect_interval_order():
    m, g = after_loss()
    vals = {"d_Q_1": Interval(3, 5), "d_Q_2": Interval(5, 7), "Exp_Q": Interval(100, 100)}
    out = expand_branches(m, g, vals)
    rels = sorted(c.relation for b in out for c in b.conditions
                  if {str(c.lhs), str(c.rhs)} == {"1*d_Q_1", "1*d_Q_2"})
    assert rels == ["<", "="]
    assert all(b.events[0].destination == 1 for b in out)


def test_backward_fresh_timer_always_after_residual():
    m, g = after_loss()
    g = M.step(m, g, M.q_r(1, 1), M.SymbolicTiming())
    vals = {"Exp_1": Interval(3, 5), "Exp_Q": Interval(0, 2)}
    out = [b for b in expand_branches(m, g, vals, "backward") if b.rule == "rcv_req"]
    assert [c.relation for b in out for c in b.conditions] == [">"]


def test_backward_overlapping_ranges_keep_all_orders():
    m, g = after_loss()
    g = M.step(m, g, M.q_r(1, 1), M.SymbolicTiming())
    vals = {"Exp_1": Interval(3, 5), "Exp_Q": Interval(0, 10)}
    out = [b for b in expand_branches(m, g, vals, "backward") if b.rule == "rcv_req"]
    assert [c.relation for b in out for c in b.conditions] == ["<", "=", ">"]


def test_expand_bad_direction():
    m, g = after_loss()
    with pytest.raises(ValueError):
        expand_branches(m, g, {}, "sideways")


# ---------------------------------------------------------------- overhead constraints

def strings(pairs):
    return {p.pair: [[str(c) for c in alt] for alt in p.alternatives] for p in pairs}


def test_worst_two_responders():
    got = strings(formulate_overhead_constraints(2, "worst"))
    assert got[(1, 2)] == [["1*Exp_1 + 1*d_Q_1 < 1*Exp_2 + 1*d_2_1 + 1*d_Q_2"],
                           ["1*Exp_2 + 1*d_2_1 + 1*d_Q_2 < 1*d_Q_1"]]
    assert got[(2, 1)][0] == ["1*Exp_2 + 1*d_Q_2 < 1*Exp_1 + 1*d_1_2 + 1*d_Q_1"]


def test_best_two_responders():
    got = strings(formulate_overhead_constraints(2, "best"))
    assert got == {(2, 1): [["1*d_Q_2 < 1*Exp_1 + 1*d_1_2 + 1*d_Q_1",
                             "1*Exp_1 + 1*d_1_2 + 1*d_Q_1 < 1*Exp_2 + 1*d_Q_2"]]}


def test_single_responder_has_no_pairs():
    assert formulate_overhead_constraints(1, "worst") == []
    assert formulate_overhead_constraints(1, "best") == []


def test_pair_count_is_quadratic():
    assert len(formulate_overhead_constraints(4, "worst")) == 12
    assert len(formulate_overhead_constraints(4, "best")) == 3


def test_overhead_bad_input():
    with pytest.raises(ValueError):
        formulate_overhead_constraints(0, "worst")
    with pytest.raises(ValueError):
        formulate_overhead_constraints(2, "median")


# ---------------------------------------------------------------- response time

def test_response_time_one_round():
    r = synthesize_response_time(M.build_tsm(1), 1)
    assert r.time == expr("d_Q_1 + Exp_1 + d_1_Q")
    assert r.loss_pattern == frozenset() and r.rounds == 1


def test_response_time_selective_loss():
    r = synthesize_response_time(M.build_tsm(1, 2), 2)
    assert r.time == expr("d_Q_1 + Exp_1 + d_1_Q + Exp_Q")
    assert [str(d) for d in r.loss_pattern] == ["p@round1:1->Q"]
    assert r.rounds == 2
    assert r.sequence.count(Ev.q_t) <= 2


def test_response_time_two_responders_single_survivor():
    r = synthesize_response_time(M.build_tsm(2, 2), 2)
    assert r.time == expr("d_Q_1 + Exp_1 + d_1_Q + Exp_Q")
    assert r.survivor == 1
    side = {str(c) for c in r.side_constraints}
    assert "1*Exp_1 + 1*d_1_2 + 1*d_Q_1 <= 1*Exp_2 + 1*d_Q_2" in side
    firing = {e.stimulus.node for e in r.branch.sequence.events if e.stimulus.kind == Ev.Res}
    assert firing == {1}


def test_response_time_bound_exhausted():
    rules = tuple(r for r in M.TSM_RULES if r.symbol != "res_tmr")
    with pytest.raises(BoundExhaustedError):
        synthesize_response_time(M.ProtocolModel(1, rules, 1), 1)
    with pytest.raises(ValueError):
        synthesize_response_time(M.build_tsm(1), 0)
