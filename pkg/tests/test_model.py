from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stress_tsm import model as M
from stress_tsm.model import Ev, Kind
from stress_tsm.symbolic import REQUESTER, SymbolicTime
from stress_tsm.vlan import DelayMatrix


def concrete(n, delay=10, exp=None, exp_q=1000):
    durations = {REQUESTER: Fraction(exp_q)}
    durations.update({i: Fraction(exp[i - 1] if exp else 50) for i in range(1, n + 1)})
    return M.ConcreteTiming(DelayMatrix.uniform(n + 1, delay), durations)


def test_build_tsm_shape():
    m = M.build_tsm(3)
    assert m.n_nodes == 4
    assert len(m.rules) == 7
    assert m.initial_state().states == (Kind.R, Kind.D, Kind.D, Kind.D)
    assert m.initial_state().quiescent()


def test_rule_table_symbols():
    assert [r.symbol for r in M.TSM_RULES] == ["loss", "tx_req", "rcv_req", "res_tmr", "tx_res", "rcv_res",
                                               "req_tmr"]
    for r in M.TSM_RULES:
        for e in r.effects:
            assert not (e.sets_timer and e.clears_timer)


def test_build_tsm_rejects_empty():
    with pytest.raises(M.InvalidModelError):
        M.build_tsm(0)
    with pytest.raises(M.InvalidModelError):
        M.build_tsm(2, max_rounds=0)


def test_initial_enabled_is_loss_only():
    m = M.build_tsm(3)
    assert M.enabled(m, m.initial_state()) == [M.loss()]


def test_loss_sends_q_to_every_responder():
    m = M.build_tsm(3)
    a = M.apply(m, m.initial_state(), M.loss(), concrete(3))
    g = a.state
    assert g.states[REQUESTER] == Kind.R_T
    assert sorted(msg.receiver for msg in g.in_flight) == [1, 2, 3]
    assert all(msg.kind == Ev.q_r and msg.arrives == 10 for msg in g.in_flight)
    assert g.timer(REQUESTER).expires == 1000
    assert (a.emitted.kind, a.emitted.source, a.emitted.round) == (Ev.q_t, REQUESTER, 1)


def test_response_timer_expiry_sends_p():
    m = M.build_tsm(3)
    t = concrete(3)
    g = M.step(m, m.initial_state(), M.loss(), t)
    g = M.step(m, g, M.q_r(1, 1), t)
    assert g.states[1] == Kind.D_T
    a = M.apply(m, g, M.res(1), t)
    assert a.state.states[1] == Kind.D
    sent = [x for x in a.state.in_flight if x.kind == Ev.p_r]
    assert sorted(x.receiver for x in sent) == [0, 2, 3]


def test_p_at_idle_node_has_no_effect():
    m = M.build_tsm(2)
    t = concrete(2)
    g = M.step(m, m.initial_state(), M.loss(), t)
    g = M.step(m, g, M.q_r(1, 1), t)
    g = M.step(m, g, M.res(1), t)
    a = M.apply(m, g, M.p_r(2, 1), t)  # node 2 never got q yet: still D
    assert not a.effective
    assert a.state.states == g.states


def test_res_without_timer_names_guard():
    m = M.build_tsm(1)
    g = M.step(m, m.initial_state(), M.loss(), concrete(1))
    with pytest.raises(M.NotEnabledError, match="no running timer"):
        M.apply(m, g, M.res(1), concrete(1))


def test_requester_alone_enables_req():
    m = M.build_tsm(1, max_rounds=3)
    t = concrete(1)
    g = M.step(m, m.initial_state(), M.loss(), t, loss=[M.Drop(1, "q", 1)])
    assert g.in_flight == ()
    assert [(s.kind, s.node) for s in M.enabled(m, g)] == [(Ev.Req, REQUESTER)]


def test_recovery_quiesces():
    m = M.build_tsm(1)
    t = concrete(1)
    g = m.initial_state()
    while True:
        nxt = M.enabled(m, g)
        if not nxt:
            break
        g = M.step(m, g, nxt[0], t)
    assert g.quiescent()
    assert g.states == (Kind.R, Kind.D)


def test_symbolic_times():
    m = M.build_tsm(2)
    t = M.SymbolicTiming()
    g = M.step(m, m.initial_state(), M.loss(), t)
    g = M.step(m, g, M.q_r(1, 1), t)
    assert g.timer(1).expires == SymbolicTime.from_map(0, {"d_Q_1": 1, "Exp_1": 1})
    assert {(s.kind, s.node) for s in M.enabled(m, g)} == {(Ev.q_r, 2), (Ev.Res, 1), (Ev.Req, REQUESTER)}


def test_predecessors_of_initial_state():
    m = M.build_tsm(2)
    assert M.predecessors(m, m.initial_state(), M.SymbolicTiming()) == []


def test_predecessor_of_armed_responder():
    m = M.build_tsm(2)
    t = M.SymbolicTiming()
    g = M.step(m, m.initial_state(), M.loss(), t)
    prev = g
    g = M.step(m, g, M.q_r(1, 1), t)
    preds = M.predecessors(m, g, t)
    rules = {r.symbol: p for p, r in preds}
    assert "rcv_req" in rules
    assert rules["rcv_req"].states[1] == Kind.D
    assert rules["rcv_req"] == prev


def test_requester_waiting_has_two_predecessors():
    m = M.build_tsm(1)
    t = M.SymbolicTiming()
    # history unknown: the q now in flight may come from the loss or from a timeout
    zero = SymbolicTime()
    g = M.GlobalState((Kind.R_T, Kind.D),
                      (M.Message(Ev.q_r, REQUESTER, 1, 0, zero, zero + "d_Q_1"),),
                      (M.Timer(REQUESTER, 0, zero, zero + "Exp_Q"),),
                      None)
    assert {r.symbol for _, r in M.predecessors(m, g, t)} == {"loss", "req_tmr"}


def _full(g):
    return (g.states, tuple((x, x.sent, x.arrives) for x in g.in_flight),
            tuple((x, x.set_at, x.expires) for x in g.timers), g.rounds)


FOOTPRINT = {"loss", "rcv_req", "res_tmr", "req_tmr"}


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 3),
       delays=st.lists(st.integers(1, 40), min_size=16, max_size=16),
       exp=st.lists(st.integers(1, 60), min_size=3, max_size=3),
       exp_q=st.integers(20, 200),
       rounds=st.integers(1, 3))
def test_predecessors_invert_footprint_steps(n, delays, exp, exp_q, rounds):
    """Every state-creating step is undone exactly by one of its predecessors."""
    rows = [[0 if i == j else delays[i * 4 + j] for j in range(n + 1)] for i in range(n + 1)]
    D = DelayMatrix(tuple(tuple(r) for r in rows))
    timing = M.ConcreteTiming(D, {REQUESTER: exp_q, **{i: exp[i - 1] for i in range(1, n + 1)}})
    m = M.build_tsm(n, rounds)
    g = m.initial_state()
    for _ in range(200):
        nxt = M.enabled(m, g)
        if not nxt:
            break
        a = M.apply(m, g, nxt[0], timing)
        if a.rule.symbol in FOOTPRINT and a.effective:
            back = [p for p, r in M.predecessors(m, a.state, timing) if r.symbol == a.rule.symbol]
            assert _full(g) in [_full(p) for p in back]
        g = a.state
    assert g.quiescent()
