from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import grid_relations
from stress_tsm.symbolic import (
    LinearConstraint,
    SymbolicTime,
    definitely_less,
    format_constraint,
    parse_constraint,
    parse_side,
)
from stress_tsm.vlan import (
    DelayMatrix,
    IncompleteTopologyError,
    Interval,
    LinkTopology,
    admits,
    chain_topology,
    compare_intervals,
    end_to_end,
    validate,
)


def test_uniform_matrix_is_valid():
    assert validate(DelayMatrix.uniform(4, 100)) == []


def test_zero_delay_reported():
    D = DelayMatrix.uniform(3, 100).replace(1, 2, 0)
    bad = validate(D)
    assert [(v.i, v.j, v.reason) for v in bad] == [(1, 2, "non-positive delay")]


def test_self_delay_reported():
    D = DelayMatrix.uniform(3, 100).replace(0, 0, 5)
    assert [(v.i, v.j, v.reason) for v in validate(D)] == [(0, 0, "nonzero self-delay")]


def test_asymmetric_matrix_allowed():
    D = DelayMatrix.uniform(3, 100).replace(1, 2, 7)
    assert validate(D) == []
    assert D(1, 2) != D(2, 1)


def test_star_two_links():
    topo = LinkTopology({"qh": 10, "h1": 20}, {(0, 1): ("qh", "h1"), (1, 0): ("h1", "qh")})
    assert end_to_end(topo)(0, 1) == 30


def test_single_link():
    topo = LinkTopology({"a": 7}, {(0, 1): ("a",), (1, 0): ("a",)})
    assert end_to_end(topo)(1, 0) == 7


def test_chain_paths():
    D = end_to_end(chain_topology([4, 5, 8]))
    assert D(1, 3) == 13
    assert D(1, 2) == 5
    assert D(0, 3) == 17


def test_missing_path_raises():
    topo = LinkTopology({"a": 1}, {(0, 1): ("a",)}, n=2)
    with pytest.raises(IncompleteTopologyError):
        end_to_end(topo)


def test_interval_examples():
    assert compare_intervals(Interval(3, 5), Interval(4, 6)) == {"<", "=", ">"}
    assert compare_intervals(Interval(3, 5), Interval(5, 7)) == {"<", "="}
    assert compare_intervals(Interval(5, 5), Interval(5, 5)) == {"="}
    assert compare_intervals(Interval(1, 2), Interval(3, 4)) == {"<"}


def test_empty_interval_rejected():
    with pytest.raises(ValueError):
        Interval(2, 1)


def test_admits():
    assert admits("<", Interval(-1, 3))
    assert not admits("<", Interval(0, 3))
    assert admits("<=", Interval(0, 3))
    assert not admits("=", Interval(1, 3))


ends = st.integers(-20, 20)


@st.composite
def intervals(draw):
    a, b = draw(ends), draw(ends)
    return Interval(min(a, b), max(a, b))


MIRROR = {"<": ">", ">": "<", "=": "="}


@given(intervals(), intervals())
def test_compare_mirror_symmetry(a, b):
    assert compare_intervals(b, a) == {MIRROR[r] for r in compare_intervals(a, b)}


@given(intervals(), intervals())
def test_compare_matches_grid_search(a, b):
    assert compare_intervals(a, b) == grid_relations(a, b)


# ---------------------------------------------------------------- symbolic

def test_symbolic_arithmetic():
    t = SymbolicTime.of("d_Q_1") + "Exp_1" + SymbolicTime.of("d_1_Q")
    assert t.evaluate({"d_Q_1": 1, "Exp_1": 2, "d_1_Q": 3}) == 6
    assert (t - "Exp_1").variables == {"d_Q_1", "d_1_Q"}
    assert (t * 0).is_constant()


def test_definitely_less_for_positive_vars():
    a = SymbolicTime.of("d_Q_1")
    assert definitely_less(a, a + "Exp_1")
    assert not definitely_less(a + "Exp_1", a)
    assert not definitely_less(SymbolicTime.of("x"), SymbolicTime.of("y"))


def test_constraint_text_round_trip():
    c = LinearConstraint(parse_side("Exp_1 - Exp_2"), parse_side("d_2_1"), True)
    assert parse_constraint(format_constraint(c)) == c
    assert str(c) == "1*Exp_1 + -1*Exp_2 < 1*d_2_1"


def test_parse_side_accepts_minus():
    assert parse_side("Exp_j - 45") == SymbolicTime.from_map(-45, {"Exp_j": 1})
    assert parse_side("2*x + -1/2*y + 3") == SymbolicTime.from_map(3, {"x": 2, "y": Fraction(-1, 2)})


def test_parse_side_rejects_garbage():
    with pytest.raises(ValueError):
        parse_side("3*")
    with pytest.raises(ValueError):
        parse_constraint("x = y")


coeff = st.fractions(min_value=-5, max_value=5, max_denominator=4)
names = st.sampled_from(["d_Q_1", "d_1_Q", "Exp_1", "Exp_Q", "x"])


@given(st.dictionaries(names, coeff, min_size=1), coeff, st.dictionaries(names, coeff), coeff, st.booleans())
def test_constraint_format_parse_round_trip(lc, lk, rc, rk, strict):
    lhs, rhs = SymbolicTime.from_map(lk, lc), SymbolicTime.from_map(rk, rc)
    if not (lhs.variables or rhs.variables):
        return
    c = LinearConstraint(lhs, rhs, strict)
    assert parse_constraint(format_constraint(c)) == c
