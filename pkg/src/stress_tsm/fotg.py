"""Fault-oriented test generation over the TSM model.

Backward search builds implication chains from a target event to the
packet-loss event, using three rules: a reception implies an earlier
transmission (shifted by the link delay), a timer expiration implies an
earlier timer setting (shifted by the timer duration), and a state implies
the transition that created it.  Forward verification replays a chain
through the model, filling in the events the chain does not mention and
branching on every undecided ordering of pending events.  Each branch
carries the linear conditions that make its ordering happen.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from . import model as M
from .model import (
    MULTICAST,
    RECEPTIONS,
    Drop,
    Ev,
    GlobalState,
    Kind,
    ProtocolModel,
    Stimulus,
    SymbolicTiming,
    ConcreteTiming,
)
from .solve import ConstraintSystem, solve_feasible
from .symbolic import (
    REQUESTER,
    LinearConstraint,
    SymbolicTime,
    definitely_less,
    node_name,
    parse_node,
    parse_side,
    timer_var,
)
from .vlan import DelayMatrix, Interval, admits, compare_intervals, interval_of


class UnknownTargetError(ValueError):
    pass


class BoundExhaustedError(RuntimeError):
    pass


MAXIMIZE, MINIMIZE = "maximize", "minimize"
WORST, BEST = "worst", "best"


@dataclass(frozen=True)
class TargetEvent:
    kind: Ev
    objective: str = MAXIMIZE

    def __post_init__(self):
        object.__setattr__(self, "kind", Ev(self.kind))
        if self.objective not in (MAXIMIZE, MINIMIZE):
            raise ValueError(f"objective must be {MAXIMIZE} or {MINIMIZE}")


@dataclass(frozen=True)
class TimedEvent:
    stimulus: Stimulus
    time: object  # SymbolicTime or Fraction

    def __str__(self) -> str:
        s = self.stimulus
        node = node_name(s.node)
        return f"{self.time}\t{s.kind}\t{node}"


@dataclass(frozen=True)
class EventSequence:
    events: tuple[TimedEvent, ...]
    rules: tuple[str, ...] = ()
    states: tuple[GlobalState, ...] = ()

    @property
    def rounds(self) -> int:
        return sum(1 for e in self.events if e.stimulus.kind == Ev.q_t)

    @property
    def time(self):
        return self.events[-1].time

    @property
    def target(self) -> Stimulus:
        return self.events[-1].stimulus

    def count(self, kind: Ev) -> int:
        return sum(1 for e in self.events if e.stimulus.kind == kind)

    def __len__(self) -> int:
        return len(self.events)


def trace_dump(seq: EventSequence) -> str:
    """One timed event per line: time expression, event, node."""
    return "".join(str(e) + "\n" for e in seq.events)


def trace_lines(seq: EventSequence) -> list[str]:
    """Like :func:`trace_dump` with two more columns, peer and round, so
    that :func:`parse_trace` can rebuild the sequence."""
    out = []
    for e in seq.events:
        s = e.stimulus
        peer = "m" if s.destination == MULTICAST else ("-" if s.peer is None else node_name(s.peer))
        rnd = "-" if s.round is None else str(s.round)
        out.append(f"{e}\t{peer}\t{rnd}")
    return out


def parse_trace(lines: Sequence[str]) -> EventSequence:
    events = []
    for k, line in enumerate(lines, 1):
        parts = line.split("\t")
        if len(parts) != 5:
            raise ValueError(f"trace line {k}: expected 5 tab-separated fields")
        time, kind, node, peer, rnd = parts
        kind = Ev(kind)
        node = parse_node(node)
        r = None if rnd == "-" else int(rnd)
        if kind in RECEPTIONS:
            s = Stimulus(kind, parse_node(peer), node, r)
        elif peer == "m":
            s = Stimulus(kind, node, MULTICAST, r)
        else:
            s = Stimulus(kind, node, node, r)
        events.append(TimedEvent(s, parse_side(time)))
    return EventSequence(tuple(events))


# ---------------------------------------------------------------- classification

@dataclass(frozen=True)
class TransitionClassification:
    wanted: tuple[str, ...]
    wanted_conditions: tuple[Kind, ...]
    unwanted: tuple[str, ...]


def classify_transitions(model: ProtocolModel, target: TargetEvent) -> TransitionClassification:
    """Wanted transitions establish the target; unwanted ones nullify its condition."""
    producers = [r for r in model.rules if target.kind in r.emits]
    if not producers:
        producers = [r for r in model.rules if r.event == target.kind]
    if not producers:
        raise UnknownTargetError(f"no rule produces or consumes {target.kind}")
    initial = set(model.initial_state().states)
    wanted: list[str] = []
    conditions: list[Kind] = []
    for r in producers:
        wanted.append(r.symbol)
        for g in sorted(r.guards, key=str):
            conditions.append(g)
            if g not in initial:
                wanted += [c.symbol for c in M.creators(model, g) if c.symbol not in wanted]
    destroyers = []
    for kind in conditions:
        for r in model.rules:
            if r.symbol in wanted or r.symbol in destroyers:
                continue
            if any(e.start == kind and e.end != kind for e in r.effects):
                destroyers.append(r.symbol)
    if target.objective == MINIMIZE:
        emitters = [r.symbol for r in producers]
        return TransitionClassification(tuple(destroyers), tuple(conditions), tuple(emitters))
    return TransitionClassification(tuple(wanted), tuple(conditions), tuple(destroyers))


# ---------------------------------------------------------------- backward search

_Chain = tuple[tuple[TimedEvent, ...], tuple[str, ...]]


class _Backward:
    def __init__(self, model: ProtocolModel, max_rounds: int, timing):
        self.model = model
        self.max_rounds = max_rounds
        self.timing = timing

    def rounds(self, events) -> int:
        return sum(1 for e in events if e.stimulus.kind == Ev.q_t)

    def explain(self, kind: Ev, node: int, peer: Optional[int], budget: int) -> list[_Chain]:
        """Chains from the loss event that end with ``kind`` at ``node``."""
        if budget < 0:
            return []
        m = self.model
        if kind == Ev.L:
            return [((TimedEvent(M.loss(), self.timing.zero()),), ("loss",))]
        out: list[_Chain] = []
        if kind in RECEPTIONS:
            tx = next(r for r in m.rules if kind in r.emits)  # Tx_Rcv
            senders = [REQUESTER] if kind == Ev.q_r else (
                [peer] if peer is not None else [j for j in m.responders if j != node])
            for j in senders:
                if j == node:
                    continue
                for events, rules in self.explain(tx.event, j, None, budget):
                    last = events[-1]
                    t = last.time + self.timing.delay(j, node)
                    s = Stimulus(kind, j, node, last.stimulus.round)
                    out.append((events + (TimedEvent(s, t),), rules + (tx.symbol,)))
        elif kind in (Ev.q_t, Ev.p_t):
            for r in M.emitters(m, kind):  # St_Cr on the emitting transition
                sub_budget = budget - 1 if kind == Ev.q_t else budget
                for events, rules in self.explain(r.event, node, None, sub_budget):
                    rnd = self.rounds(events) + 1 if kind == Ev.q_t else events[-1].stimulus.round
                    s = Stimulus(kind, node, MULTICAST, rnd)
                    out.append((events + (TimedEvent(s, events[-1].time),), rules + (r.symbol,)))
        elif kind in (Ev.Res, Ev.Req):
            rule = M.rule_for(m, kind)  # Tmr_Exp
            for guard in sorted(rule.guards, key=str):
                for setter in M.timer_setters(m, guard):
                    src = REQUESTER if setter.event == Ev.q_r else None
                    sends_q = Ev.q_t in setter.emits
                    for events, rules in self.explain(setter.event, node, src, budget - sends_q):
                        if sends_q:
                            qs = Stimulus(Ev.q_t, node, MULTICAST, self.rounds(events) + 1)
                            events = events + (TimedEvent(qs, events[-1].time),)
                            rules = rules + (setter.symbol,)
                            rnd = self.rounds(events)
                        else:
                            rnd = events[-1].stimulus.round
                        t = events[-1].time + self.timing.duration(node)
                        s = Stimulus(kind, node, node, rnd)
                        out.append((events + (TimedEvent(s, t),), rules + (rule.symbol,)))
        return out


def backward_search(model: ProtocolModel, target, max_rounds: int = 1,
                    timing=None) -> list[EventSequence]:
    """All implication chains from the loss event to ``target``.

    ``target`` is a Stimulus (a reception with ``source=None`` branches over
    every possible sender) or a StateSymbol, which is explained through the
    transition that creates it.  Chains with more than ``max_rounds``
    request transmissions are cut.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be at least 1")
    timing = timing or SymbolicTiming()
    b = _Backward(model, max_rounds, timing)
    if isinstance(target, M.StateSymbol):
        chains = []
        for r in M.creators(model, target.kind):
            src = REQUESTER if r.event == Ev.q_r else None
            chains += b.explain(r.event, target.node, src, max_rounds)
    else:
        chains = b.explain(target.kind, target.node if target.node is not None else REQUESTER,
                           target.peer, max_rounds)
        if target.round is not None:
            chains = [c for c in chains if c[0][-1].stimulus.round == target.round]
    seqs = [EventSequence(ev, tuple(M.rule_for(model, e.stimulus.kind).symbol for e in ev))
            for ev, _ in chains if b.rounds(ev) <= max_rounds]
    seqs.sort(key=lambda s: (s.rounds, [str(e) for e in s.events]))
    return seqs


# ---------------------------------------------------------------- forward verification

@dataclass(frozen=True)
class Branch:
    sequence: EventSequence
    conditions: tuple[LinearConstraint, ...]
    loss: frozenset = frozenset()


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: str = ""
    branches: tuple[Branch, ...] = ()

    def __bool__(self) -> bool:
        return self.accepted

    @property
    def branch(self) -> Optional[Branch]:
        return self.branches[0] if self.branches else None


def _cmp(a, b, strict: bool):
    """``a < b`` (or ``<=``) as a constraint, or its truth value when decided."""
    if not isinstance(a, SymbolicTime) and not isinstance(b, SymbolicTime):
        return a < b if strict else a <= b
    diff = SymbolicTime.of(a) - SymbolicTime.of(b)
    if diff.is_constant():
        return diff.constant < 0 if strict else diff.constant <= 0
    c = LinearConstraint(SymbolicTime.of(a), SymbolicTime.of(b), strict)
    if c.provably_true():
        return True
    if c.provably_false():
        return False
    return c


def _same_event(s: Stimulus, c: Stimulus) -> bool:
    return (s.kind == c.kind and s.source == c.source and s.destination == c.destination
            and (c.round is None or s.round == c.round))


@dataclass
class _Ctx:
    model: ProtocolModel
    chain: tuple[TimedEvent, ...]
    chain_times: tuple
    timing: object
    loss: frozenset
    epsilon: Fraction
    ranges: Optional[Mapping[str, Interval]]
    side: tuple[LinearConstraint, ...]
    max_depth: int
    all_branches: bool
    found: list
    first_reason: list
    concrete: bool
    silent: frozenset = frozenset()


def _feasible(ctx: _Ctx, conds: Sequence[LinearConstraint]) -> bool:
    if ctx.concrete or not conds:
        return True
    system = ConstraintSystem.build(tuple(conds) + ctx.side, lower=ctx.epsilon)
    return solve_feasible(system, ctx.epsilon).feasible


def _interval_ok(ctx: _Ctx, c: LinearConstraint) -> bool:
    if ctx.ranges is None or not c.variables <= set(ctx.ranges):
        return True
    return admits(c.relation, interval_of(c.difference, ctx.ranges))


def _reject(ctx: _Ctx, reason: str) -> None:
    if not ctx.first_reason:
        ctx.first_reason.append(reason)


def _node_of(s: Stimulus) -> int:
    return s.node


def _explore(ctx: _Ctx, g: GlobalState, idx: int, conds: tuple, trace: tuple, states: tuple,
             depth: int, last: tuple, sleep: frozenset):
    """Depth-first search over per-node event orders.

    Events at different nodes commute (messages carry absolute arrival
    times), so conditions are only imposed between events at the same
    node: the executed event precedes every other event pending there, and
    every message created later for a node arrives after that node's last
    executed event.  Sleep sets skip interleavings that differ only in the
    order of independent events.  A branch is accepted when the chain is
    complete and nothing is pending.
    """
    if ctx.found and not ctx.all_branches:
        return
    if depth > ctx.max_depth:
        _reject(ctx, "search depth exhausted")
        return
    m = ctx.model
    if g.rounds == 0 and g.states[REQUESTER] == Kind.R:
        pend = [(M.loss(), ctx.timing.zero())]
    else:
        pend = M.pending(g)
    if not pend:
        if idx == len(ctx.chain):
            ctx.found.append(Branch(EventSequence(trace, (), states), conds, ctx.loss))
        else:
            _reject(ctx, f"{ctx.chain[idx].stimulus} cannot be reached")
        return
    if ctx.concrete:
        options = [min(pend, key=lambda p: (p[1], M._priority(p[0])))]
    else:
        options = [p for p in pend if p[0] not in sleep]
    lastmap = dict(last)
    done: list[Stimulus] = []
    for s, t in options:
        node = _node_of(s)
        new = []
        ok = True
        if not ctx.concrete:
            for o, ot in pend:
                if o == s or _node_of(o) != node:
                    continue
                c = _cmp(t, ot, strict=not (M._priority(s) < M._priority(o)))
                if c is False:
                    ok = False
                    break
                if c is not True:
                    new.append(c)
        a = None
        if ok:
            a = M.apply(m, g, s, ctx.timing, ctx.loss)
            if not ctx.concrete:
                after = dict(lastmap)
                after[node] = (s, t)
                created = [mm for mm in a.state.in_flight if mm not in g.in_flight]
                for mm in created:
                    if mm.receiver in after:
                        ls, lt = after[mm.receiver]
                        c = _cmp(lt, mm.arrives, strict=not (M._priority(ls) < M._priority(mm.stimulus())))
                        if c is False:
                            ok = False
                            break
                        if c is not True:
                            new.append(c)
        if ok and not all(_interval_ok(ctx, c) for c in new):
            ok = False
        all_conds = conds + tuple(c for c in new if c not in conds)
        if ok and new and len(all_conds) > len(conds) and not _feasible(ctx, all_conds):
            ok = False
        if not ok:
            done.append(s)
            continue
        k = idx
        fail = None
        steps = [TimedEvent(s, t)]
        if k < len(ctx.chain) and _same_event(s, ctx.chain[k].stimulus):
            if t != ctx.chain_times[k]:
                fail = f"{s} occurs at a time other than the chain requires"
            elif not a.effective:
                fail = f"{s} has no effect in state {g}"
            else:
                k += 1
        elif any(_same_event(s, c.stimulus) for c in ctx.chain[k:]):
            fail = f"{s} occurs out of chain order"
        if a.emitted is not None:
            steps.append(TimedEvent(a.emitted, t))
            if fail is None and k < len(ctx.chain) and _same_event(a.emitted, ctx.chain[k].stimulus):
                if t != ctx.chain_times[k]:
                    fail = f"{a.emitted} occurs at a time other than the chain requires"
                else:
                    k += 1
        if fail is None and s.kind == Ev.Res and node in ctx.silent and a.effective:
            fail = f"responder {node_name(node)} must stay silent"
        if fail is None and any(ch == (REQUESTER, Kind.R_T, Kind.R) for ch in a.changes):
            if any(e.stimulus.node == REQUESTER for e in ctx.chain[k:]):
                fail = "the requester recovered before the chain completed"
        if fail is not None:
            _reject(ctx, fail)
            done.append(s)
            continue
        nl = dict(lastmap)
        nl[node] = (s, t)
        child_sleep = frozenset(x for x in (set(sleep) | set(done)) if _node_of(x) != node)
        _explore(ctx, a.state, k, all_conds, trace + tuple(steps), states + (a.state,), depth + 1,
                 tuple(sorted(nl.items(), key=lambda kv: kv[0])), child_sleep)
        done.append(s)
        if ctx.found and not ctx.all_branches:
            return


def forward_verify(model: ProtocolModel, seq: EventSequence, loss_pattern=frozenset(),
                   assignment: Optional[Mapping[str, Fraction]] = None,
                   ranges: Optional[Mapping[str, Interval]] = None,
                   side: Sequence[LinearConstraint] = (),
                   epsilon: Fraction = Fraction(1),
                   all_branches: bool = False,
                   max_depth: Optional[int] = None,
                   silent: Iterable[int] = ()) -> Verdict:
    """Replay ``seq`` forward from the initial state until nothing is pending.

    Without ``assignment`` the replay is symbolic: undecided orders of
    events at the same node branch, each branch guarded by linear
    conditions that must stay jointly feasible (with ``side`` constraints)
    for strictly positive variables.  With ``assignment`` the replay is
    concrete and unbranched.  A branch is accepted when every chain event
    occurred at its stated time and with an effect.  Responders in
    ``silent`` may not send a response on any accepted branch.
    """
    if not seq.events:
        raise ValueError("empty sequence")
    rounds = max(1, seq.rounds)
    mr = model.max_rounds if model.max_rounds is not None else rounds
    m = M.ProtocolModel(model.n_responders, model.rules, mr)
    n = model.n_responders
    loss_pattern = frozenset(loss_pattern)
    for e in seq.events:
        s = e.stimulus
        if s.kind in RECEPTIONS and M.dropped(loss_pattern, "q" if s.kind == Ev.q_r else "p",
                                             s.source, s.destination, s.round or 0):
            return Verdict(False, f"{s} is dropped by the loss pattern")
    if assignment is not None:
        D = DelayMatrix.from_assignment(n + 1, assignment, 1)
        durations = {i: assignment.get(timer_var(i), 0) for i in range(n + 1)}
        timing = ConcreteTiming(D, durations)
        times = tuple(SymbolicTime.of(e.time).evaluate(_total(assignment, e.time)) for e in seq.events)
    else:
        timing = SymbolicTiming()
        times = tuple(SymbolicTime.of(e.time) for e in seq.events)
    per_round = 2 + 2 * n + n * n
    depth = max_depth if max_depth is not None else mr * per_round + 2
    ctx = _Ctx(m, seq.events, times, timing, loss_pattern, Fraction(epsilon), ranges,
               tuple(side), depth, all_branches, [], [], assignment is not None, frozenset(silent))
    _explore(ctx, m.initial_state(), 0, (), (), (), 0, (), frozenset())
    if ctx.found:
        return Verdict(True, "", tuple(ctx.found))
    return Verdict(False, ctx.first_reason[0] if ctx.first_reason else "no consistent branch")


def _total(assignment: Mapping[str, Fraction], expr) -> Mapping[str, Fraction]:
    e = SymbolicTime.of(expr)
    missing = [v for v in e.variables if v not in assignment]
    if missing:
        raise KeyError(f"assignment lacks {', '.join(missing)}")
    return assignment


# ---------------------------------------------------------------- interval branching

@dataclass(frozen=True)
class BranchCondition:
    lhs: object
    relation: str  # "<", "=", ">"
    rhs: object

    def __str__(self) -> str:
        return f"{self.lhs} {self.relation} {self.rhs}"


@dataclass(frozen=True)
class ExpandedBranch:
    state: GlobalState
    events: tuple[Stimulus, ...]
    conditions: tuple[BranchCondition, ...]
    rule: Optional[str] = None


def _relation_ok(a, rel: str, b, values: Mapping[str, Interval]) -> bool:
    ia, ib = _range(a, values), _range(b, values)
    if ia is None or ib is None:
        diff = SymbolicTime.of(a) - SymbolicTime.of(b)
        if diff.is_constant():
            return {"<": diff.constant < 0, "=": diff.constant == 0, ">": diff.constant > 0}[rel]
        return True
    return rel in compare_intervals(ia, ib)


def _range(x, values: Mapping[str, Interval]) -> Optional[Interval]:
    if isinstance(x, Interval):
        return x
    e = SymbolicTime.of(x)
    if not e.variables <= set(values):
        return None
    return interval_of(e, values)


def expand_branches(model: ProtocolModel, g: GlobalState, values: Mapping[str, Interval],
                    direction: str = "forward", timing=None,
                    residuals: Optional[Mapping[int, object]] = None) -> list[ExpandedBranch]:
    """Branch on the ordering of pending timers and messages.

    Forward: each nonempty set of pending events that can be the joint
    minimum yields a branch (its members equal, all strictly earlier than
    the rest), kept only if interval comparison admits every condition; the
    members are applied in tie-break order.

    Backward: each predecessor that undoes a timer setting at node k is
    paired with every admissible relation between the fresh duration
    ``Exp_k`` and the residual of each other running timer.  Residuals are
    ``residuals[node]`` when supplied, else ``[0, hi(Exp_node)]`` (the
    elapsed time of an older timer is unknown).
    """
    timing = timing or SymbolicTiming()
    if direction == "forward":
        return _expand_forward(model, g, values, timing)
    if direction == "backward":
        return _expand_backward(model, g, values, timing, residuals or {})
    raise ValueError("direction must be 'forward' or 'backward'")


def _expand_forward(model, g, values, timing) -> list[ExpandedBranch]:
    if g.rounds == 0 and g.states[REQUESTER] == Kind.R:
        a = M.apply(model, g, M.loss(), timing)
        return [ExpandedBranch(a.state, (M.loss(),), ())]
    pend = M.pending(g)
    if not pend:
        raise ValueError("no pending timer or message")
    out = []
    for size in range(1, len(pend) + 1):
        for group in itertools.combinations(range(len(pend)), size):
            members = [pend[k] for k in group]
            rest = [pend[k] for k in range(len(pend)) if k not in group]
            conds = [BranchCondition(members[0][1], "=", m[1]) for m in members[1:]]
            conds += [BranchCondition(members[0][1], "<", o[1]) for o in rest]
            if not all(_relation_ok(c.lhs, c.relation, c.rhs, values) for c in conds):
                continue
            if any(_decided_false(c) for c in conds):
                continue
            state = g
            done = []
            for s, _ in members:
                try:
                    state = M.apply(model, state, s, timing).state
                    done.append(s)
                except M.NotEnabledError:
                    pass  # cancelled by an earlier member of the group
            out.append(ExpandedBranch(state, tuple(done), tuple(conds)))
    return out


def _decided_false(c: BranchCondition) -> bool:
    a, b = SymbolicTime.of(c.lhs), SymbolicTime.of(c.rhs)
    if c.relation == "<":
        return definitely_less(b, a) or a == b
    if c.relation == "=":
        return definitely_less(a, b) or definitely_less(b, a)
    return definitely_less(a, b) or a == b


def _expand_backward(model, g, values, timing, residuals) -> list[ExpandedBranch]:
    out = []
    for prev, rule in M.predecessors(model, g, timing):
        if not any(e.sets_timer for e in rule.effects):
            out.append(ExpandedBranch(prev, (Stimulus(rule.event, None, None),), (), rule.symbol))
            continue
        k = REQUESTER if rule.event in (Ev.L, Ev.Req) else next(
            i for i in model.responders if g.states[i] == Kind.D_T and prev.states[i] == Kind.D)
        fresh = SymbolicTime.of(timer_var(k))
        others = [t.node for t in g.timers if t.node != k]
        options = []
        for o in others:
            res = residuals.get(o)
            if res is None:
                hi = values[timer_var(o)].hi if timer_var(o) in values else None
                res = Interval(0, hi) if hi is not None else None
            rels = []
            for rel in ("<", "=", ">"):
                fr = _range(fresh, values)
                if fr is None or res is None or rel in compare_intervals(fr, res):
                    rels.append(BranchCondition(fresh, rel, _residual_label(o, res)))
            options.append(rels)
        for combo in itertools.product(*options) if options else [()]:
            out.append(ExpandedBranch(prev, (Stimulus(rule.event, k, k),), tuple(combo), rule.symbol))
    return out


def _residual_label(node: int, res) -> SymbolicTime:
    return SymbolicTime.of(timer_var(node)) - SymbolicTime.of("x")


# ---------------------------------------------------------------- overhead constraints

@dataclass(frozen=True)
class PairAlternatives:
    """Constraints for one ordered pair: any one alternative (a conjunction) suffices."""

    pair: tuple[int, int]
    alternatives: tuple[tuple[LinearConstraint, ...], ...]


def _event_time(model, stimulus) -> SymbolicTime:
    seqs = backward_search(model, stimulus, 1)
    if len(seqs) != 1:
        raise RuntimeError(f"expected one single-round chain to {stimulus}, got {len(seqs)}")
    return seqs[0].time


def _constraint(a: SymbolicTime, b: SymbolicTime, label: str):
    """``a < b``: None when it is implied by positivity, False when impossible."""
    c = _cmp(a, b, strict=True)
    if c is True:
        return None
    if c is False:
        return False
    return LinearConstraint(c.lhs, c.rhs, True, label)


def formulate_overhead_constraints(n_responders: int, mode: str = WORST,
                                   survivor: int = 1) -> list[PairAlternatives]:
    """Per-pair conditions on the single-round event times.

    A response p from j reaches i either before i's timer is set, while it
    runs, or after it fired.  Worst mode (no suppression) asks for one of
    the two outer regions for every ordered pair; best mode asks the inner
    region for every responder against ``survivor``.  Regions contradicting
    positivity are removed.
    """
    if n_responders < 1:
        raise ValueError("need at least one responder")
    if mode not in (WORST, BEST):
        raise ValueError(f"mode must be {WORST} or {BEST}")
    model = M.build_tsm(n_responders)
    if mode == BEST and not 1 <= survivor <= n_responders:
        raise ValueError("survivor must be a responder")
    out = []
    for i in model.responders:
        t_q = _event_time(model, M.q_r(i))
        t_p = _event_time(model, M.p_t(i))
        senders = [j for j in model.responders if j != i]
        if mode == BEST:
            senders = [survivor] if i != survivor else []
        for j in senders:
            t_h = _event_time(model, M.p_r(i, j))
            if mode == WORST:
                regions = [(_constraint(t_p, t_h, f"fires-before({i},{j})"),),
                           (_constraint(t_h, t_q, f"heard-before-request({i},{j})"),)]
            else:
                regions = [(_constraint(t_q, t_h, f"heard-after-request({i},{j})"),
                            _constraint(t_h, t_p, f"heard-before-firing({i},{j})"))]
            alts = []
            trivially = False
            for region in regions:
                if any(c is False for c in region):
                    continue
                kept = tuple(c for c in region if c is not None)
                if not kept:
                    trivially = True
                    break
                alts.append(kept)
            if trivially:
                continue
            out.append(PairAlternatives((i, j), tuple(alts)))
    return out


# ---------------------------------------------------------------- response time

@dataclass(frozen=True)
class ResponseTimeResult:
    sequence: EventSequence
    time: SymbolicTime
    loss_pattern: frozenset
    side_constraints: tuple[LinearConstraint, ...]
    survivor: int
    branch: Optional[Branch] = None

    @property
    def rounds(self) -> int:
        return self.sequence.rounds


def _loss_patterns(n: int, rounds: int, max_losses: int) -> list[frozenset]:
    drops = [Drop(r, "p", REQUESTER, s) for r in range(1, rounds) for s in range(1, n + 1)]
    out = []
    for k in range(0, min(max_losses, len(drops)) + 1):
        out += [frozenset(c) for c in itertools.combinations(drops, k)]
    return out


def synthesize_response_time(model: ProtocolModel, max_rounds: int,
                             n_responders: Optional[int] = None,
                             epsilon: Fraction = Fraction(1)) -> ResponseTimeResult:
    """Longest verified recovery: a chain to a response reaching the requester,
    with selective response losses at the requester in earlier rounds.

    Among accepted branches the one whose recovery time is not provably
    smaller than another's wins; remaining ties prefer more rounds, fewer
    distinct responders firing, fewer responses, fewer losses, then the
    smaller responder index.
    """
    if max_rounds < 1:
        raise ValueError("max_rounds must be at least 1")
    n = n_responders if n_responders is not None else model.n_responders
    m = M.ProtocolModel(n, model.rules, max_rounds)
    found = []
    for j in m.responders:
        for seq in backward_search(m, M.p_r(REQUESTER, j), max_rounds):
            for loss in _loss_patterns(n, seq.rounds, max_rounds - 1):
                others = [k for k in m.responders if k != j]
                v = forward_verify(m, seq, loss, epsilon=epsilon, silent=others)
                if not v.accepted and others:
                    v = forward_verify(m, seq, loss, epsilon=epsilon)
                if v.accepted:
                    found.append((seq, v.branch, loss, j))
    if not found:
        raise BoundExhaustedError(f"no feasible recovery sequence within {max_rounds} rounds")

    def dominated(x):
        return any(definitely_less(SymbolicTime.of(x[0].time), SymbolicTime.of(y[0].time)) for y in found)

    def firing(b: Branch) -> int:
        return len({e.stimulus.source for e in b.sequence.events if e.stimulus.kind == Ev.p_t})

    top = [x for x in found if not dominated(x)]
    top.sort(key=lambda x: (-x[0].rounds, firing(x[1]), x[1].sequence.count(Ev.p_t), len(x[2]), x[3],
                            sorted(map(str, x[2])), [str(e) for e in x[0].events],
                            [str(c) for c in x[1].conditions]))
    seq, branch, loss, j = top[0]
    return ResponseTimeResult(seq, SymbolicTime.of(seq.time), loss, branch.conditions, j, branch)
