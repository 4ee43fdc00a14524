import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stress_tsm.model import Drop
from stress_tsm.scenario import CLAIMS, Scenario, dumps, loads
from stress_tsm.solve import Bound, ConstraintSystem, ParseError
from stress_tsm.symbolic import LinearConstraint, SymbolicTime
from stress_tsm.tasks import synthesize_topology
from stress_tsm.timers import TimerPolicy
from stress_tsm.vlan import DelayMatrix


def wb_scenario():
    r = synthesize_topology(TimerPolicy.from_spec("wb-fixed", 3), "worst", 3)
    return Scenario(3, "worst", "no-suppression", "wb-fixed", r.delays, r.system, r.status,
                    loss_pattern=(Drop(1, "p", 0, 2),), witness=(("0\tL\tQ\t-\t-",),))


def test_wb_round_trip_is_byte_exact():
    s = wb_scenario()
    text = dumps(s)
    back = loads(text)
    assert back == s
    assert dumps(back) == text


def test_rationals_are_strings():
    s = wb_scenario()
    D = s.delays.replace(1, 2, Fraction(603, 2))
    text = dumps(Scenario(3, "worst", "no-suppression", "wb-fixed", D, s.system))
    assert json.loads(text)["delays"][1][2] == "603/2"
    assert loads(text).delays(1, 2) == Fraction(603, 2)


def bad_line(text, key, value):
    data = json.loads(text)
    data[key] = value
    return json.dumps(data, indent=2) + "\n"


def line_of(text, needle):
    return next(k for k, x in enumerate(text.splitlines(), 1) if needle in x)


def test_errors_carry_line_numbers():
    text = dumps(wb_scenario())
    with pytest.raises(ParseError) as e:
        loads(text.replace('"schema": 1', '"schema": 9'))
    assert e.value.line == 2
    t = bad_line(text, "claim", "bogus")
    with pytest.raises(ParseError) as e:
        loads(t)
    assert e.value.line == line_of(t, '"claim"')


def test_bad_constraint_line_is_located():
    text = dumps(wb_scenario())
    t = text.replace("300 < 1*d_1_3  #", "300 <  #")
    with pytest.raises(ParseError) as e:
        loads(t)
    assert e.value.line == line_of(t, "300 <  #")


def test_truncated_json():
    text = dumps(wb_scenario())
    with pytest.raises(ParseError) as e:
        loads(text[: len(text) // 2])
    assert e.value.line > 1


@pytest.mark.parametrize("key,value", [("delays", [["0"]]), ("epsilon", "x"), ("n_responders", 0),
                                       ("loss_pattern", [{"round": 1}]), ("response_time", "3*")])
def test_field_errors(key, value):
    with pytest.raises(ParseError, match=key):
        loads(bad_line(dumps(wb_scenario()), key, value))


def test_missing_and_unknown_fields():
    data = json.loads(dumps(wb_scenario()))
    del data["seed"]
    with pytest.raises(ParseError, match="missing"):
        loads(json.dumps(data))
    data = json.loads(dumps(wb_scenario()))
    data["extra"] = 1
    with pytest.raises(ParseError, match="unknown"):
        loads(json.dumps(data))


fractions = st.fractions(min_value=Fraction(1, 3), max_value=500, max_denominator=9)


@st.composite
def scenarios(draw):
    n = draw(st.integers(1, 4))
    rows = tuple(tuple(Fraction(0) if i == j else draw(fractions) for j in range(n + 1)) for i in range(n + 1))
    names = [f"d_{i}_{j}" for i in range(1, n + 1) for j in range(1, n + 1) if i != j] or ["d_Q_1"]
    cons = []
    for _ in range(draw(st.integers(0, 4))):
        v = draw(st.sampled_from(names))
        cons.append(LinearConstraint(SymbolicTime.of(draw(fractions)), SymbolicTime.of(v), draw(st.booleans())))
    bounds = {v: Bound(draw(fractions)) for v in sorted({c.rhs.terms[0][0] for c in cons})}
    drops = draw(st.lists(st.builds(Drop, st.integers(1, 3), st.sampled_from(["p", "q"]),
                                    st.integers(0, n), st.integers(0, n)), max_size=3, unique=True))
    return Scenario(n, draw(st.sampled_from(["worst", "best"])), draw(st.sampled_from(CLAIMS)),
                    draw(st.sampled_from(["deterministic", "uniform:1,2", "fixed:1;exp_q=3/2"])),
                    DelayMatrix(rows), ConstraintSystem(tuple(cons), bounds, {}),
                    epsilon=draw(fractions), seed=draw(st.integers(0, 10 ** 6)),
                    max_rounds=draw(st.integers(1, 5)), loss_pattern=tuple(drops),
                    assumptions=tuple(draw(st.lists(st.text(max_size=20), max_size=2))),
                    response_time=draw(st.sampled_from([None, "1*Exp_1 + 1*d_Q_1"])))


@settings(max_examples=100, deadline=None)
@given(scenarios())
def test_round_trip_property(s):
    text = dumps(s)
    back = loads(text)
    assert back == s
    assert dumps(back) == text
