from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import pairwise_responses
from stress_tsm.model import Drop
from stress_tsm.sim import (
    SimConfig,
    SimulationError,
    event_log_tsv,
    metrics_table,
    oracle_max_responses,
    run,
    run_table,
    sweep,
)
from stress_tsm.tasks import synthesize_topology
from stress_tsm.timers import TimerPolicy, TimerSpecError, make_rng
from stress_tsm.vlan import DelayMatrix, Interval


def matrix(rows):
    return DelayMatrix(tuple(tuple(r) for r in rows))


WB = matrix([[0, 100, 100, 100], [100, 0, 301, 301], [100, 301, 0, 201], [100, 301, 201, 0]])


# ---------------------------------------------------------------- timers

def test_spec_parsing():
    assert TimerPolicy.from_spec("wb-fixed", 3).intervals == (Interval(100, 200), Interval(200, 400), Interval(200, 400))
    assert TimerPolicy.from_spec("uniform:2,5", 2).intervals == (Interval(2, 5),) * 2
    p = TimerPolicy.from_spec("fixed:1,2;exp_q=9", 2)
    assert p.deterministic and p.exp_q == 9
    assert TimerPolicy.from_spec("distance:1,1", 3).c2 == 1
    assert TimerPolicy.from_spec("deterministic", 2).deterministic


@pytest.mark.parametrize("bad", ["uniform:5,2", "fixed:1", "nope", "uniform:a,b", "fixed:1,1;foo=2"])
def test_bad_specs(bad):
    with pytest.raises(TimerSpecError):
        TimerPolicy.from_spec(bad, 2)


def test_distance_bounds():
    D = DelayMatrix.uniform(3, 100).replace(1, 0, 50)
    p = TimerPolicy.from_spec("distance:1,1", 2)
    assert p.bounds(1, D) == Interval(75, 150)
    assert p.bounds(2, D) == Interval(100, 200)


def test_draws_in_range_and_seeded():
    p = TimerPolicy.from_spec("uniform:2,5", 1)
    D = DelayMatrix.uniform(2, 1)
    a = [p.draw(1, D, make_rng(7)) for _ in range(3)]
    b = [p.draw(1, D, make_rng(7)) for _ in range(3)]
    assert a == b
    assert all(2 <= x <= 5 for x in a)


def test_adaptive_raises_lower_bound_with_duplicates():
    p = TimerPolicy.from_spec("adaptive:1,1", 1)
    D = DelayMatrix.uniform(2, 10)
    rng = make_rng(0)
    assert all(p.draw(1, D, rng, duplicates=1) >= 20 for _ in range(20))


# ---------------------------------------------------------------- run

def test_wb_no_suppression():
    m = run(WB, SimConfig(TimerPolicy.fixed([200, 400, 400])))
    assert m.responses == 3
    assert m.suppressed == 0
    assert m.recovery_time == 100 + 200 + 100


def test_deterministic_synthesized_extremes():
    p = TimerPolicy.from_spec("deterministic", 3)
    worst = synthesize_topology(p, "worst", 3)
    best = synthesize_topology(p, "best", 3)
    assert run(worst.delays, SimConfig(p)).responses == 3
    assert run(best.delays, SimConfig(p)).responses == 1


def test_selective_loss_costs_one_round():
    D = DelayMatrix.uniform(2, 10)
    p = TimerPolicy.fixed([5], exp_q=1000)
    m = run(D, SimConfig(p, loss_pattern={Drop(1, "p", 0, 1)}, max_rounds=3))
    assert m.rounds_used == 2
    assert m.recovery_time == 1000 + 10 + 5 + 10


def test_unrecovered_is_reported_not_raised():
    D = DelayMatrix.uniform(2, 10)
    p = TimerPolicy.fixed([5], exp_q=100)
    loss = {Drop(r, "p", 0, 1) for r in (1, 2)}
    m = run(D, SimConfig(p, loss_pattern=loss, max_rounds=2))
    assert not m.recovered and m.recovery_time is None
    assert m.rounds_used == 2
    assert m.responses_per_round == (1, 1)


def test_requester_listens_after_last_request():
    D = DelayMatrix.uniform(2, 10)
    p = TimerPolicy.fixed([5], exp_q=12)
    m = run(D, SimConfig(p, max_rounds=1))
    assert m.recovery_time == 25


def test_bad_config_and_matrix():
    with pytest.raises(SimulationError):
        SimConfig(TimerPolicy.fixed([1]), max_rounds=0)
    with pytest.raises(SimulationError):
        run(DelayMatrix.uniform(2, 0), SimConfig(TimerPolicy.fixed([1])))


def test_same_seed_same_log():
    p = TimerPolicy.from_spec("uniform:100,400", 3)
    a = run(WB, SimConfig(p, seed=3))
    b = run(WB, SimConfig(p, seed=3))
    assert event_log_tsv(a) == event_log_tsv(b)


def test_event_log_format():
    m = run(DelayMatrix.uniform(2, 10), SimConfig(TimerPolicy.fixed([5])))
    lines = event_log_tsv(m).splitlines()
    assert lines[0] == "0\tL\tQ\t-"
    assert "10\tq_r\t1\tQ" in lines
    assert "25\tp_r\tQ\t1" in lines
    assert all(len(x.split("\t")) == 4 for x in lines)


def test_run_table_labels_both_counts():
    m = run(WB, SimConfig(TimerPolicy.fixed([200, 400, 400])))
    head, row = run_table(m, 3).splitlines()
    cells = dict(zip(head.split("\t"), row.split("\t")))
    assert cells["responders"] == "3" and cells["receivers"] == "4"
    assert cells["responses"] == "3"


# ---------------------------------------------------------------- oracle

def test_oracle_examples():
    assert oracle_max_responses(WB, [200, 400, 400]) == 3
    D = matrix([[0, 10, 10], [10, 0, 10 ** 6], [10, 10 ** 6, 0]])
    assert oracle_max_responses(D, [50, 50]) == 2
    D = DelayMatrix.uniform(3, 1)
    assert oracle_max_responses(D, [1, 100]) == 1
    assert run(D, SimConfig(TimerPolicy.fixed([1, 100]))).responses == 1


@st.composite
def instances(draw, max_n=6):
    n = draw(st.integers(1, max_n))
    vals = st.integers(1, 60)
    rows = [[0 if i == j else draw(vals) for j in range(n + 1)] for i in range(n + 1)]
    exp = [draw(st.integers(0, 120)) for _ in range(n)]
    return matrix(rows), exp


@settings(max_examples=200, deadline=None)
@given(instances())
def test_run_matches_oracles(inst):
    D, exp = inst
    m = run(D, SimConfig(TimerPolicy.fixed(exp), max_rounds=1))
    assert m.responses == oracle_max_responses(D, exp)
    assert m.responses == pairwise_responses(D.d, exp)
    assert m.responses_per_round[0] <= D.n_responders


@settings(max_examples=60, deadline=None)
@given(instances(max_n=4), st.fractions(min_value=Fraction(1, 7), max_value=10, max_denominator=7),
       st.integers(1, 3))
def test_scaling_time_scales_outcome(inst, k, rounds):
    """Multiplying every delay and timer by k > 0 multiplies every event time by k."""
    D, exp = inst
    loss = {Drop(1, "p", 0, 1)}
    a = run(D, SimConfig(TimerPolicy.fixed(exp, exp_q=150), loss_pattern=loss, max_rounds=rounds))
    b = run(D.scaled(k), SimConfig(TimerPolicy.fixed([x * k for x in exp], exp_q=150 * k),
                                   loss_pattern=loss, max_rounds=rounds))
    assert a.responses == b.responses
    assert a.rounds_used == b.rounds_used
    assert (b.recovery_time is None) == (a.recovery_time is None)
    if a.recovered:
        assert b.recovery_time == a.recovery_time * k
    assert [(e.event, e.node) for e in a.event_log] == [(e.event, e.node) for e in b.event_log]


# ---------------------------------------------------------------- sweep

def test_sweep_worst_family():
    p = "deterministic"
    cases = []
    for n in (3, 5, 10, 20):
        pol = TimerPolicy.from_spec(p, n)
        cases.append((f"n={n}", synthesize_topology(pol, "worst", n).delays, pol))
    rows = [sweep([(label, D)], [pol], repetitions=2)[0] for label, D, pol in cases]
    assert [r.max_responses for r in rows] == [3, 5, 10, 20]


def test_sweep_is_reproducible():
    p = TimerPolicy.from_spec("uniform:100,400", 3)
    a = sweep([("wb", WB)], [p, TimerPolicy.fixed([200, 400, 400])], repetitions=5, seed=11)
    b = sweep([("wb", WB)], [p, TimerPolicy.fixed([200, 400, 400])], repetitions=5, seed=11)
    assert metrics_table(a) == metrics_table(b)
    assert a[1].mean_responses == a[1].max_responses == 3
    assert [r.cell for r in a] == [0, 1]


def test_sweep_needs_input():
    with pytest.raises(SimulationError):
        sweep([], [TimerPolicy.fixed([1])])
