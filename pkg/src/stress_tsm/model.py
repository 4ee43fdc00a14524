"""Per-node FSM and global FSM of the timer suppression mechanism (TSM).

Node 0 is the requester Q; nodes 1..n are potential responders.  A global
state holds every node's state symbol, the in-flight messages (one
scheduled reception per receiver) and the running timers.  Time values are
either exact rationals or :class:`~stress_tsm.symbolic.SymbolicTime`
expressions; the same transition code serves the simulator-style replay
and the symbolic search.
"""
from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from .symbolic import (
    REQUESTER,
    SymbolicTime,
    definitely_less,
    delay_var,
    node_name,
    timer_var,
)

MULTICAST = -1


class InvalidModelError(ValueError):
    pass


class NotEnabledError(ValueError):
    """A stimulus was applied whose guard does not hold."""


class Kind(str, enum.Enum):
    R = "R"
    R_T = "R_T"
    D = "D"
    D_T = "D_T"

    def __str__(self) -> str:
        return self.value


TIMED = frozenset({Kind.R_T, Kind.D_T})


class Ev(str, enum.Enum):
    L = "L"
    q_t = "q_t"
    q_r = "q_r"
    p_t = "p_t"
    p_r = "p_r"
    Res = "Res"
    Req = "Req"

    def __str__(self) -> str:
        return self.value


RECEPTIONS = frozenset({Ev.q_r, Ev.p_r})
EXPIRATIONS = frozenset({Ev.Res, Ev.Req})


@dataclass(frozen=True)
class StateSymbol:
    kind: Kind
    node: int

    def __str__(self) -> str:
        return f"{self.kind}_{node_name(self.node)}"


@dataclass(frozen=True, order=True)
class Stimulus:
    """An event.  Receptions carry the original sender as ``source`` and the
    receiver as ``destination``; transmissions use ``MULTICAST``."""

    kind: Ev
    source: Optional[int]
    destination: Optional[int]
    round: Optional[int] = None

    @property
    def node(self) -> Optional[int]:
        """Node at which the event takes effect."""
        return self.destination if self.kind in RECEPTIONS else self.source

    @property
    def peer(self) -> Optional[int]:
        return self.source if self.kind in RECEPTIONS else None

    def __str__(self) -> str:
        if self.kind in RECEPTIONS:
            return f"{self.kind}[{_nm(self.destination)}<-{_nm(self.source)}]"
        return f"{self.kind}[{_nm(self.source)}]"


def _nm(node: Optional[int]) -> str:
    return "*" if node is None else ("m" if node == MULTICAST else node_name(node))


def loss() -> Stimulus:
    return Stimulus(Ev.L, REQUESTER, REQUESTER)


def req() -> Stimulus:
    return Stimulus(Ev.Req, REQUESTER, REQUESTER)


def res(i: int) -> Stimulus:
    return Stimulus(Ev.Res, i, i)


def q_t() -> Stimulus:
    return Stimulus(Ev.q_t, REQUESTER, MULTICAST)


def p_t(i: int) -> Stimulus:
    return Stimulus(Ev.p_t, i, MULTICAST)


def q_r(i: int, round: Optional[int] = None) -> Stimulus:
    return Stimulus(Ev.q_r, REQUESTER, i, round)


def p_r(receiver: int, sender: Optional[int], round: Optional[int] = None) -> Stimulus:
    return Stimulus(Ev.p_r, sender, receiver, round)


# ---------------------------------------------------------------- rule table

@dataclass(frozen=True)
class Effect:
    start: Optional[Kind]
    end: Optional[Kind]
    emits: Optional[Ev] = None
    sets_timer: bool = False
    clears_timer: bool = False


@dataclass(frozen=True)
class TransitionRule:
    symbol: str
    event: Ev
    effects: tuple[Effect, ...]
    meaning: str = ""

    @property
    def guards(self) -> frozenset[Kind]:
        return frozenset(e.start for e in self.effects if e.start is not None)

    @property
    def emits(self) -> frozenset[Ev]:
        return frozenset(e.emits for e in self.effects if e.emits is not None)

    @property
    def creates(self) -> frozenset[Kind]:
        return frozenset(e.end for e in self.effects if e.end is not None and e.end != e.start)


TSM_RULES: tuple[TransitionRule, ...] = (
    TransitionRule("loss", Ev.L, (Effect(Kind.R, Kind.R_T, Ev.q_t, sets_timer=True),),
                   "loss detection sends q and sets the request timer"),
    TransitionRule("tx_req", Ev.q_t, (Effect(None, None, Ev.q_r),),
                   "q is received by every member after its delay"),
    TransitionRule("rcv_req", Ev.q_r, (Effect(Kind.D, Kind.D_T, sets_timer=True),),
                   "a potential responder sets its response timer"),
    TransitionRule("res_tmr", Ev.Res, (Effect(Kind.D_T, Kind.D, Ev.p_t),),
                   "response timer expiry sends p"),
    TransitionRule("tx_res", Ev.p_t, (Effect(None, None, Ev.p_r),),
                   "p is received by every member after its delay"),
    TransitionRule("rcv_res", Ev.p_r, (Effect(Kind.R_T, Kind.R, clears_timer=True),
                                       Effect(Kind.D_T, Kind.D, clears_timer=True)),
                   "p received while a timer runs: recovery at Q, suppression elsewhere"),
    # The request timer restarts on expiry so that later rounds can follow.
    TransitionRule("req_tmr", Ev.Req, (Effect(Kind.R_T, Kind.R_T, Ev.q_t, sets_timer=True),),
                   "request timer expiry re-sends q"),
)


def rule_for(model: "ProtocolModel", event: Ev) -> TransitionRule:
    for r in model.rules:
        if r.event == event:
            return r
    raise KeyError(f"no rule for event {event}")


def emitters(model: "ProtocolModel", kind: Ev) -> list[TransitionRule]:
    return [r for r in model.rules if kind in r.emits]


def creators(model: "ProtocolModel", kind: Kind) -> list[TransitionRule]:
    return [r for r in model.rules if kind in r.creates]


def timer_setters(model: "ProtocolModel", kind: Kind) -> list[TransitionRule]:
    """Rules that (re)start the timer attached to state ``kind``."""
    return [r for r in model.rules if any(e.sets_timer and e.end == kind for e in r.effects)]


# ---------------------------------------------------------------- global state

@dataclass(frozen=True, order=True)
class Message:
    kind: Ev  # q_r or p_r: the reception it will cause
    sender: int
    receiver: int
    round: int
    sent: object = field(compare=False)
    arrives: object = field(compare=False)

    def stimulus(self) -> Stimulus:
        return Stimulus(self.kind, self.sender, self.receiver, self.round)


@dataclass(frozen=True, order=True)
class Timer:
    node: int
    round: int
    set_at: object = field(compare=False)
    expires: object = field(compare=False)


@dataclass(frozen=True)
class Drop:
    """Selective loss: messages of ``kind`` (``"q"`` or ``"p"``) tagged with
    request ``round`` are not delivered to ``receiver``.  ``sender=None``
    matches every sender."""

    round: int
    kind: str
    receiver: int
    sender: Optional[int] = None

    def matches(self, kind: str, sender: int, receiver: int, round: int) -> bool:
        return (self.round == round and self.kind == kind and self.receiver == receiver
                and (self.sender is None or self.sender == sender))

    def __str__(self) -> str:
        s = "*" if self.sender is None else node_name(self.sender)
        return f"{self.kind}@round{self.round}:{s}->{node_name(self.receiver)}"


LossPattern = frozenset  # of Drop


def dropped(loss: Iterable[Drop], kind: str, sender: int, receiver: int, round: int) -> bool:
    return any(d.matches(kind, sender, receiver, round) for d in loss)


@dataclass(frozen=True)
class GlobalState:
    states: tuple[Kind, ...]
    in_flight: tuple[Message, ...] = ()
    timers: tuple[Timer, ...] = ()
    rounds: Optional[int] = 0  # q transmissions so far; None = unknown history

    def __post_init__(self):
        object.__setattr__(self, "in_flight", tuple(sorted(self.in_flight)))
        object.__setattr__(self, "timers", tuple(sorted(self.timers)))

    def symbol(self, node: int) -> StateSymbol:
        return StateSymbol(self.states[node], node)

    def timer(self, node: int) -> Optional[Timer]:
        for t in self.timers:
            if t.node == node:
                return t
        return None

    def residual(self, node: int, now):
        """Time remaining on ``node``'s timer at time ``now``."""
        t = self.timer(node)
        return None if t is None else t.expires - now

    def with_node(self, node: int, kind: Kind) -> "GlobalState":
        s = list(self.states)
        s[node] = kind
        return replace(self, states=tuple(s))

    def quiescent(self) -> bool:
        return not self.in_flight and not self.timers

    def __str__(self) -> str:
        return ".".join(f"{k}_{node_name(i)}" for i, k in enumerate(self.states))


@dataclass(frozen=True)
class ProtocolModel:
    n_responders: int
    rules: tuple[TransitionRule, ...] = TSM_RULES
    max_rounds: Optional[int] = None

    @property
    def n_nodes(self) -> int:
        return self.n_responders + 1

    @property
    def responders(self) -> range:
        return range(1, self.n_nodes)

    def initial_state(self) -> GlobalState:
        return GlobalState((Kind.R,) + (Kind.D,) * self.n_responders)

    def rule(self, symbol: str) -> TransitionRule:
        for r in self.rules:
            if r.symbol == symbol:
                return r
        raise KeyError(symbol)


def build_tsm(n_responders: int, max_rounds: Optional[int] = None) -> ProtocolModel:
    if n_responders < 1:
        raise InvalidModelError("a TSM model needs at least one responder")
    if max_rounds is not None and max_rounds < 1:
        raise InvalidModelError("max_rounds must be at least 1")
    return ProtocolModel(n_responders, TSM_RULES, max_rounds)


# ---------------------------------------------------------------- timing

class ConcreteTiming:
    """Numeric delays from a DelayMatrix and fixed per-node timer durations."""

    def __init__(self, delays, durations: Mapping[int, Fraction]):
        self.delays = delays
        self.durations = {k: Fraction(v) for k, v in durations.items()}

    def delay(self, i: int, j: int):
        return self.delays(i, j)

    def duration(self, node: int):
        return self.durations[node]

    def zero(self):
        return Fraction(0)

    symbolic = False


class SymbolicTiming:
    """Delays ``d_i_j`` and durations ``Exp_i`` kept as variables."""

    def delay(self, i: int, j: int) -> SymbolicTime:
        return SymbolicTime.of(delay_var(i, j))

    def duration(self, node: int) -> SymbolicTime:
        return SymbolicTime.of(timer_var(node))

    def zero(self) -> SymbolicTime:
        return SymbolicTime()

    symbolic = True


# ---------------------------------------------------------------- stepping

@dataclass(frozen=True)
class Applied:
    """Result of applying one stimulus."""

    state: GlobalState
    stimulus: Stimulus
    time: object
    rule: TransitionRule
    effective: bool  # False when no effect's start state was present
    emitted: Optional[Stimulus] = None
    changes: tuple[tuple[int, Kind, Kind], ...] = ()


def _find_message(g: GlobalState, s: Stimulus) -> Message:
    cands = [m for m in g.in_flight
             if m.kind == s.kind and m.receiver == s.destination
             and (s.source is None or m.sender == s.source)
             and (s.round is None or m.round == s.round)]
    if not cands:
        raise NotEnabledError(f"{s}: no matching message in flight")
    return cands[0]


def event_time(g: GlobalState, s: Stimulus, timing):
    if s.kind == Ev.L:
        return timing.zero()
    if s.kind in RECEPTIONS:
        return _find_message(g, s).arrives
    t = g.timer(s.source)
    if t is None:
        raise NotEnabledError(f"{s}: no running timer at {node_name(s.source)}")
    return t.expires


def _fanout(model: ProtocolModel, kind: Ev, sender: int, round: int, now, timing, loss) -> list[Message]:
    tag = "q" if kind == Ev.q_r else "p"
    out = []
    for r in range(model.n_nodes):
        if r == sender or (kind == Ev.q_r and r == REQUESTER):
            continue
        if dropped(loss, tag, sender, r, round):
            continue
        out.append(Message(kind, sender, r, round, now, now + timing.delay(sender, r)))
    return out


_RECEPTION_OF = {Ev.q_t: Ev.q_r, Ev.p_t: Ev.p_r}


def apply(model: ProtocolModel, g: GlobalState, s: Stimulus, timing, loss=frozenset()) -> Applied:
    """Apply ``s`` to ``g``; emitted transmissions fan out immediately."""
    rule = rule_for(model, s.kind)
    now = event_time(g, s, timing)
    states = list(g.states)
    in_flight = list(g.in_flight)
    timers = list(g.timers)
    rounds = g.rounds
    node = s.node
    emitted = None
    changes = []

    if s.kind == Ev.L:
        if states[REQUESTER] != Kind.R or (rounds not in (0, None)):
            raise NotEnabledError(f"{s}: requester must be in R before any request (missing R_Q)")
    elif s.kind in RECEPTIONS:
        in_flight.remove(_find_message(g, s))
    else:
        t = g.timer(node)
        timers.remove(t)

    if s.kind == Ev.Req and states[REQUESTER] != Kind.R_T:
        raise NotEnabledError(f"{s}: missing guard state R_T_Q")
    if s.kind == Ev.Res and states[node] != Kind.D_T:
        raise NotEnabledError(f"{s}: missing guard state D_T_{node_name(node)}")

    applied = None
    for eff in rule.effects:
        if eff.start is not None and states[node] != eff.start:
            continue
        applied = eff
        break

    give_up = (s.kind == Ev.Req and model.max_rounds is not None and rounds is not None
               and rounds >= model.max_rounds)
    if applied is not None and not give_up:
        if applied.end is not None:
            changes.append((node, states[node], applied.end))
            states[node] = applied.end
        if applied.clears_timer:
            timers = [t for t in timers if t.node != node]
        if applied.emits in _RECEPTION_OF:
            if applied.emits == Ev.q_t:
                rounds = None if rounds is None else rounds + 1
                tag_round = rounds if rounds is not None else 0
            else:
                tag_round = _response_round(g, node)
            emitted = Stimulus(applied.emits, node, MULTICAST, tag_round)
            in_flight += _fanout(model, _RECEPTION_OF[applied.emits], node, tag_round, now, timing, loss)
        if applied.sets_timer:
            r = (rounds if rounds is not None else 0) if node == REQUESTER else s.round or 0
            timers.append(Timer(node, r, now, now + timing.duration(node)))

    new = GlobalState(tuple(states), tuple(in_flight), tuple(timers), rounds)
    return Applied(new, s, now, rule, applied is not None and not give_up, emitted, tuple(changes))


def _response_round(g: GlobalState, node: int) -> int:
    t = g.timer(node)
    return t.round if t is not None else 0


def step(model: ProtocolModel, g: GlobalState, s: Stimulus, timing, loss=frozenset()) -> GlobalState:
    return apply(model, g, s, timing, loss).state


@functools.lru_cache(maxsize=65536)
def _priority(s: Stimulus) -> tuple:
    cls = {Ev.q_r: 0, Ev.p_r: 1}.get(s.kind, 2)
    return (cls, s.node, -1 if s.peer is None else s.peer, s.round or 0)


def pending(g: GlobalState) -> list[tuple[Stimulus, object]]:
    """Every scheduled reception and timer expiry with its time."""
    out = [(m.stimulus(), m.arrives) for m in g.in_flight]
    for t in g.timers:
        kind = Ev.Req if t.node == REQUESTER else Ev.Res
        out.append((Stimulus(kind, t.node, t.node, t.round), t.expires))
    out.sort(key=lambda x: _priority(x[0]))
    return out


def precedes(a: tuple[Stimulus, object], b: tuple[Stimulus, object]) -> bool:
    """Whether pending event ``a`` surely happens before ``b`` (tie-break included)."""
    sa, ta = a
    sb, tb = b
    if isinstance(ta, SymbolicTime) or isinstance(tb, SymbolicTime):
        ta, tb = SymbolicTime.of(ta), SymbolicTime.of(tb)
        if ta == tb:
            return _priority(sa) < _priority(sb)
        return definitely_less(ta, tb)
    return ta < tb or (ta == tb and _priority(sa) < _priority(sb))


def enabled(model: ProtocolModel, g: GlobalState) -> list[Stimulus]:
    """Stimuli that may occur next.

    With numeric times this is the single earliest pending event (ties are
    broken receptions-first, requests before responses, then by node id).
    With symbolic times every pending event that is not provably preceded
    by another is returned, in tie-break order.
    """
    if g.rounds == 0 and g.states[REQUESTER] == Kind.R:
        return [loss()]
    events = pending(g)
    if events and not any(isinstance(t, SymbolicTime) for _, t in events):
        return [min(events, key=lambda e: (e[1], _priority(e[0])))[0]]
    frontier =[e for e in events if not any(precedes(o, e) for o in events if o is not e)]
    return [s for s, _ in frontier]


# ---------------------------------------------------------------- reversal

def predecessors(model: ProtocolModel, g: GlobalState, timing) -> list[tuple[GlobalState, TransitionRule]]:
    """States ``g'`` with ``step(g', rule.event) == g`` for state-creating rules.

    Reversal uses the footprint a transition leaves: a freshly set timer
    and, for transmissions, the fan-out sent at that instant.  Receptions
    that only consume a message (suppression, recovery, no-ops) leave no
    footprint and are not reversed.
    """
    out: list[tuple[GlobalState, TransitionRule]] = []
    if g.rounds == 0:
        return out

    qt = g.timer(REQUESTER)
    if g.states[REQUESTER] == Kind.R_T and qt is not None:
        fresh_q = tuple(m for m in g.in_flight if m.kind == Ev.q_r and m.sent == qt.set_at)
        rest = tuple(m for m in g.in_flight if m not in fresh_q)
        others = tuple(t for t in g.timers if t.node != REQUESTER)
        quiet = not rest and not others
        if g.rounds in (1, None) and qt.set_at == timing.zero() and quiet:
            prev = GlobalState(g.states[:REQUESTER] + (Kind.R,) + g.states[REQUESTER + 1:],
                               rest, others, 0 if g.rounds == 1 else None)
            out.append((prev, model.rule("loss")))
        if fresh_q and (g.rounds is None or g.rounds >= 2):
            old = Timer(REQUESTER, qt.round - 1 if g.rounds else 0,
                        qt.set_at - timing.duration(REQUESTER), qt.set_at)
            prev = GlobalState(g.states, rest, others + (old,), None if g.rounds is None else g.rounds - 1)
            out.append((prev, model.rule("req_tmr")))

    for i in model.responders:
        t = g.timer(i)
        if g.states[i] == Kind.D_T and t is not None:
            msg = Message(Ev.q_r, REQUESTER, i, t.round, t.set_at - timing.delay(REQUESTER, i), t.set_at)
            prev = GlobalState(g.states[:i] + (Kind.D,) + g.states[i + 1:],
                               g.in_flight + (msg,), tuple(x for x in g.timers if x.node != i), g.rounds)
            out.append((prev, model.rule("rcv_req")))
        elif g.states[i] == Kind.D:
            sent = [m for m in g.in_flight if m.kind == Ev.p_r and m.sender == i]
            if sent:
                r = max(m.round for m in sent)
                batch = [m for m in sent if m.round == r]
                at = batch[0].sent
                if all(m.sent == at for m in batch):
                    old = Timer(i, r, at - timing.duration(i), at)
                    prev = GlobalState(g.states[:i] + (Kind.D_T,) + g.states[i + 1:],
                                       tuple(m for m in g.in_flight if m not in batch),
                                       g.timers + (old,), g.rounds)
                    out.append((prev, model.rule("res_tmr")))
    return out
