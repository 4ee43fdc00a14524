"""Task-level solvers: delay synthesis for given timers, timer configuration
for given delays."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence, Union

from .fotg import WORST, formulate_overhead_constraints
from .solve import (
    DEFAULT_EPSILON,
    Bound,
    ConstraintSystem,
    Solution,
    binding_report,
    max_feasible_subset,
    solve_feasible,
)
from .symbolic import (
    REQUESTER,
    LinearConstraint,
    Number,
    SymbolicTime,
    delay_var,
    format_number,
    parse_delay_var,
    timer_var,
)
from .timers import TimerPolicy
from .vlan import DelayMatrix, Interval

ABSOLUTE, MAXIMAL = "absolute", "maximal"
DEFAULT_DELAY = Fraction(100)

Range = tuple[SymbolicTime, SymbolicTime]


class InfeasibleError(RuntimeError):
    def __init__(self, message: str, binding: Sequence[LinearConstraint] = ()):
        super().__init__(message)
        self.binding = tuple(binding)


def worst_case(c: LinearConstraint, ranges: Mapping[str, Range]) -> Union[LinearConstraint, bool]:
    """Tighten ``c`` so it holds for every value of the ranged variables.

    Each ranged variable is replaced by the end of its range that makes
    ``lhs - rhs`` largest.  Returns the canonical reduced constraint, or its
    truth value when no variable is left.
    """
    diff = c.difference
    out = SymbolicTime.of(diff.constant)
    for v, k in diff.terms:
        if v in ranges:
            lo, hi = ranges[v]
            out = out + SymbolicTime.of(hi if k > 0 else lo) * k
        else:
            out = out + SymbolicTime.from_map(0, {v: k})
    if out.is_constant():
        return out.constant < 0 if c.strict else out.constant <= 0
    r = LinearConstraint(out, SymbolicTime(), c.strict, c.label).canonical()
    if r.provably_true():
        return True
    if r.provably_false():
        return False
    return r


def _timer_ranges(timers, n: int) -> dict[int, Range]:
    if isinstance(timers, TimerPolicy):
        return {i: timers.symbolic_bounds(i) for i in range(1, n + 1)}
    out = {}
    for i in range(1, n + 1):
        v = timers[i]
        if isinstance(v, Interval):
            out[i] = (SymbolicTime.of(v.lo), SymbolicTime.of(v.hi))
        elif isinstance(v, tuple):
            out[i] = (SymbolicTime.of(v[0]), SymbolicTime.of(v[1]))
        else:
            out[i] = (SymbolicTime.of(v), SymbolicTime.of(v))
    return out


@dataclass(frozen=True)
class TopologyResult:
    delays: DelayMatrix
    solution: Solution
    system: ConstraintSystem
    status: str  # absolute | maximal
    dropped: tuple[LinearConstraint, ...] = ()
    pins: Mapping[str, Fraction] = field(default_factory=dict)
    pairs: tuple[tuple[int, int], ...] = ()
    choice: tuple[int, ...] = ()

    @property
    def constraints(self) -> tuple[LinearConstraint, ...]:
        return self.system.constraints


def ordered_pairs(ranges: Mapping[int, Range], pins: Mapping[str, Fraction], n: int):
    """Pairs (i, j) with i ranked after j by the constant interval of
    ``d_Q_i + Exp_i``; ``None`` when those intervals are not constant."""
    key = {}
    for i in range(1, n + 1):
        lo, hi = ranges[i]
        dq = SymbolicTime.of(delay_var(REQUESTER, i)).substitute(pins)
        a, b = (lo + dq).substitute(pins), (hi + dq).substitute(pins)
        if not (a.is_constant() and b.is_constant()):
            return None
        key[i] = (a.constant, b.constant, i)
    rank = {i: k for k, i in enumerate(sorted(key, key=lambda x: key[x]))}
    return {(i, j) for i in rank for j in rank if rank[i] > rank[j]}


def synthesize_topology(timers, mode: str, n: int, pin_dq: Optional[Number] = DEFAULT_DELAY,
                        epsilon: Number = DEFAULT_EPSILON, pin_iq: Optional[Number] = None,
                        default: Number = DEFAULT_DELAY, survivor: int = 1,
                        closure: str = "auto", branch_limit: int = 1,
                        upper: Optional[Number] = None) -> TopologyResult:
    """Delays driving the responders to maximum (worst) or minimum (best) overhead.

    Interval timers are reduced to their conservative ends, ``d_Q_i`` (and
    ``d_i_Q`` when ``pin_iq`` is given) are pinned, and the remaining
    inequalities are solved exactly.  With constant, ranked per-node windows
    the worst case only constrains pairs where i ranks after j
    (``closure="ordered"``; ``"all"`` keeps every pair, ``"auto"`` picks
    ordered when the windows allow it and some timer is a genuine range).
    Disjunct combinations are tried up to ``branch_limit``; if none is
    feasible the largest satisfiable subset is used and the result is
    flagged maximal.
    """
    if n < 1:
        raise ValueError("need at least one responder")
    epsilon = Fraction(epsilon)
    pins: dict[str, Fraction] = {}
    for i in range(1, n + 1):
        if pin_dq is not None:
            pins[delay_var(REQUESTER, i)] = Fraction(pin_dq)
        if pin_iq is not None:
            pins[delay_var(i, REQUESTER)] = Fraction(pin_iq)
    ranges = {timer_var(i): (lo.substitute(pins), hi.substitute(pins))
              for i, (lo, hi) in _timer_ranges(timers, n).items()}
    pairs = formulate_overhead_constraints(n, mode, survivor) if n >= 2 else []

    if mode == WORST and closure != "all":
        per_node = {i: ranges[timer_var(i)] for i in range(1, n + 1)}
        ordered = ordered_pairs(per_node, pins, n)
        genuine = any(lo != hi for lo, hi in per_node.values())
        if closure == "ordered" and ordered is None:
            raise ValueError("ordered closure needs constant timer windows")
        if ordered is not None and (closure == "ordered" or genuine):
            pairs = [p for p in pairs if p.pair in ordered]

    reduced: list[list[tuple[list[LinearConstraint], bool]]] = []
    for p in pairs:
        alts = []
        for alt in p.alternatives:
            cons, possible = [], True
            for c in alt:
                r = worst_case(LinearConstraint(c.lhs.substitute(pins), c.rhs.substitute(pins),
                                                c.strict, c.label) if (c.variables & set(pins)) else c,
                               ranges)
                if r is False:
                    possible = False
                    cons.append(_falsified(c, ranges, pins))
                elif r is not True:
                    cons.append(r)
            alts.append((cons, possible))
        reduced.append(alts)

    bounds_hi = None if upper is None else Fraction(upper)

    def make_system(cons: Sequence[LinearConstraint]) -> ConstraintSystem:
        real = [c for c in cons if c is not None and c.variables]
        b = {v: Bound(epsilon, bounds_hi) for v in _vars(real)}
        return ConstraintSystem(tuple(real), b, {})

    hint = {delay_var(i, j): Fraction(default) for i in range(n + 1) for j in range(n + 1) if i != j}
    combos = itertools.product(*[range(len(a)) for a in reduced])
    first = None
    tried = 0
    for choice in combos:
        if tried >= max(1, branch_limit):
            break
        tried += 1
        if any(not reduced[k][c][1] for k, c in enumerate(choice)):
            if first is None:
                first = choice
            continue
        cons = [c for k, ch in enumerate(choice) for c in reduced[k][ch][0]]
        system = make_system(cons)
        sol = solve_feasible(system, epsilon, hint)
        if first is None:
            first = choice
        if sol.feasible:
            return _topology(n, sol, system, ABSOLUTE, (), pins, default, pairs, choice)
    if first is None:  # no pairs at all
        system = make_system([])
        sol = solve_feasible(system, epsilon)
        return _topology(n, sol, system, ABSOLUTE, (), pins, default, pairs, ())

    choice = first
    cons: list[LinearConstraint] = []
    impossible: list[LinearConstraint] = []
    for k, ch in enumerate(choice):
        cs, possible = reduced[k][ch]
        for c in cs:
            (cons if c.variables and not _is_marker(c) else impossible).append(c)
    system = make_system(cons)
    r = max_feasible_subset(system, epsilon)
    kept = system.subset(r.kept)
    sol = solve_feasible(kept, epsilon, hint)
    dropped = tuple(impossible) + tuple(system.constraints[k] for k in r.dropped)
    return _topology(n, sol, kept, MAXIMAL, dropped, pins, default, pairs, choice)


class _Falsified(LinearConstraint):
    """A requirement that reduced to a false constant; kept for reporting."""


def _falsified(c: LinearConstraint, ranges, pins) -> LinearConstraint:
    return _Falsified(c.lhs, c.rhs, c.strict, c.label or "unsatisfiable")


def _is_marker(c: LinearConstraint) -> bool:
    return isinstance(c, _Falsified)


def _vars(cons: Sequence[LinearConstraint]) -> list[str]:
    out = set()
    for c in cons:
        out |= c.variables
    return sorted(out)


def _topology(n, sol, system, status, dropped, pins, default, pairs, choice) -> TopologyResult:
    assignment = {**{k: v for k, v in sol.assignment.items() if parse_delay_var(k)}, **pins}
    D = DelayMatrix.from_assignment(n + 1, assignment, default)
    return TopologyResult(D, sol, system, status, tuple(dropped), dict(pins),
                          tuple(p.pair for p in pairs), tuple(choice))


# ---------------------------------------------------------------- timer configuration

@dataclass(frozen=True)
class TimerConfig:
    constraints: tuple[LinearConstraint, ...]
    witness: Mapping[str, Fraction]
    generic: Optional[str] = None
    bound: Optional[Fraction] = None

    def lines(self) -> list[str]:
        out = []
        if self.generic:
            out.append(self.generic)
        out += [str(c) for c in self.constraints]
        return out


def _delay_ranges(delays, n: int) -> tuple[dict[str, Range], bool]:
    """Per-variable ranges and whether every range is a single point."""
    out = {}
    for i in range(n + 1):
        for j in range(n + 1):
            if i == j:
                continue
            if isinstance(delays, DelayMatrix):
                iv = Interval.point(delays(i, j))
            elif isinstance(delays, Interval):
                iv = delays
            else:
                iv = delays[(i, j)]
            out[delay_var(i, j)] = (SymbolicTime.of(iv.lo), SymbolicTime.of(iv.hi))
    scalar = all(lo == hi for lo, hi in out.values())
    return out, scalar


def configure_timers(delays, mode: str, n: int, epsilon: Number = DEFAULT_EPSILON,
                     exp_upper: Optional[Number] = None, exp_lower: Optional[Number] = None,
                     survivor: int = 1) -> TimerConfig:
    """Relative timer conditions for the given delays, plus an exact witness.

    Worst mode requires every responder to fire before hearing any other
    response.  With ranged delays each condition must hold over the whole
    range, and only pairs with i > j are constrained (responders fire in
    decreasing index order); scalar delays constrain every pair.
    """
    epsilon = Fraction(epsilon)
    ranges, scalar = _delay_ranges(delays, n)
    pairs = formulate_overhead_constraints(n, mode, survivor) if n >= 2 else []
    cons: list[LinearConstraint] = []
    bounds_seen = set()
    for p in pairs:
        i, j = p.pair
        if mode == WORST and not scalar and not i > j:
            continue
        for c in p.alternatives[0]:
            r = worst_case(c, ranges)
            if r is True:
                continue
            if r is False:
                raise InfeasibleError(f"condition {c} cannot hold for the given delays", (c,))
            cons.append(LinearConstraint(r.lhs, r.rhs, r.strict, r.label))
            if mode == WORST:
                bounds_seen.add(_relative_bound(r, i, j))

    generic = bound = None
    if mode == WORST and not scalar and len(bounds_seen) == 1 and None not in bounds_seen:
        bound = bounds_seen.pop()
        sign = "-" if bound < 0 else "+"
        generic = f"Exp_i < Exp_j {sign} {format_number(abs(bound))}  (for all i > j)"

    lo = epsilon if exp_lower is None else Fraction(exp_lower)
    hi = None if exp_upper is None else Fraction(exp_upper)
    b = {timer_var(i): Bound(lo, hi) for i in range(1, n + 1)}
    system = ConstraintSystem(tuple(cons), b, {})
    sol = solve_feasible(system, epsilon)
    if not sol.feasible:
        raise InfeasibleError("no timer setting satisfies the conditions",
                              binding_report(system, epsilon))
    witness = {timer_var(i): sol.assignment[timer_var(i)] for i in range(1, n + 1)}
    return TimerConfig(tuple(cons), witness, generic, bound)


def _relative_bound(c: LinearConstraint, i: int, j: int) -> Optional[Fraction]:
    """``b`` when ``c`` reads ``Exp_i < Exp_j + b``."""
    d = c.difference
    coeffs = d.coeffs
    if coeffs == {timer_var(i): 1, timer_var(j): -1}:
        return -d.constant
    return None
