"""Discrete-event simulation of TSM over a delay matrix."""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .model import dropped
from .symbolic import REQUESTER, Number, format_number, node_name
from .timers import TimerPolicy, make_rng
from .vlan import DelayMatrix, validate

# event classes in tie-break order at equal timestamps
_Q_R, _P_R, _EXPIRE = 0, 1, 2


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    policy: TimerPolicy
    seed: int = 0
    loss_pattern: frozenset = frozenset()
    max_rounds: int = 3

    def __post_init__(self):
        if self.max_rounds < 1:
            raise SimulationError("max_rounds must be at least 1")
        object.__setattr__(self, "loss_pattern", frozenset(self.loss_pattern))


@dataclass(frozen=True)
class LogEntry:
    time: Fraction
    event: str
    node: int
    peer: Optional[int] = None
    round: int = 0

    def to_line(self) -> str:
        peer = "-" if self.peer is None else node_name(self.peer)
        return f"{format_number(self.time)}\t{self.event}\t{node_name(self.node)}\t{peer}"


@dataclass(frozen=True)
class Metrics:
    responses: int
    recovery_time: Optional[Fraction]
    rounds_used: int
    event_log: tuple[LogEntry, ...]
    responses_per_round: tuple[int, ...] = ()
    suppressed: int = 0
    exp_q: Fraction = Fraction(0)
    timers: Mapping[tuple[int, int], Fraction] = field(default_factory=dict)  # (round, node) -> Exp

    @property
    def recovered(self) -> bool:
        return self.recovery_time is not None

    def first_responders(self) -> list[int]:
        return [e.node for e in self.event_log if e.event == "p_t"]


def run(D: DelayMatrix, config: SimConfig, rng: Optional[np.random.Generator] = None) -> Metrics:
    """Simulate one loss-recovery episode starting with loss detection at Q at t = 0."""
    bad = validate(D)
    if bad:
        raise SimulationError("invalid delay matrix: " + "; ".join(map(str, bad)))
    policy = config.policy
    if rng is None and not policy.deterministic:
        rng = make_rng(config.seed)
    n = D.n_responders
    loss = config.loss_pattern
    exp_q = policy.request_timer(D)

    heap: list = []
    seq = itertools.count()
    log: list[LogEntry] = []
    timer_id: dict[int, int] = {}  # node -> id of its live timer
    timer_round: dict[int, int] = {}
    ids = itertools.count(1)
    received_p: dict[tuple[int, int], int] = {}  # (node, round) -> p receptions
    per_round: list[int] = []
    drawn: dict[tuple[int, int], Fraction] = {}
    state = {"rounds": 0, "responses": 0, "suppressed": 0, "recovery": None, "waiting": True}

    def push(t, cls, node, peer, payload):
        heapq.heappush(heap, (t, cls, node, -1 if peer is None else peer, next(seq), payload))

    def send_q(now):
        state["rounds"] += 1
        r = state["rounds"]
        per_round.append(0)
        log.append(LogEntry(now, "q_t", REQUESTER, None, r))
        for i in range(1, n + 1):
            if not dropped(loss, "q", REQUESTER, i, r):
                push(now + D(REQUESTER, i), _Q_R, i, REQUESTER, ("q", r))
        tid = next(ids)
        timer_id[REQUESTER] = tid
        push(now + exp_q, _EXPIRE, REQUESTER, None, ("timer", tid))

    send_q(Fraction(0))
    log.insert(0, LogEntry(Fraction(0), "L", REQUESTER))

    while heap:
        now, cls, node, peer, _, payload = heapq.heappop(heap)
        peer = None if peer < 0 else peer
        if payload[0] == "q":
            r = payload[1]
            log.append(LogEntry(now, "q_r", node, peer, r))
            if node not in timer_id:
                dup = max(0, received_p.get((node, r - 1), 0) - 1)
                e = policy.draw(node, D, rng, dup)
                drawn[(r, node)] = e
                tid = next(ids)
                timer_id[node] = tid
                timer_round[node] = r
                push(now + e, _EXPIRE, node, None, ("timer", tid))
        elif payload[0] == "p":
            r = payload[1]
            log.append(LogEntry(now, "p_r", node, peer, r))
            received_p[(node, r)] = received_p.get((node, r), 0) + 1
            if node == REQUESTER:
                # Q keeps listening after its last request has expired
                if state["waiting"]:
                    state["waiting"] = False
                    state["recovery"] = now
                    timer_id.pop(REQUESTER, None)
            elif node in timer_id:
                del timer_id[node]
                state["suppressed"] += 1
        else:
            if timer_id.get(node) != payload[1]:
                continue  # cancelled
            del timer_id[node]
            if node == REQUESTER:
                log.append(LogEntry(now, "Req", REQUESTER))
                if state["rounds"] < config.max_rounds:
                    send_q(now)
            else:
                r = timer_round.pop(node)
                log.append(LogEntry(now, "Res", node))
                log.append(LogEntry(now, "p_t", node, None, r))
                state["responses"] += 1
                per_round[r - 1] += 1
                for k in range(n + 1):
                    if k != node and not dropped(loss, "p", node, k, r):
                        push(now + D(node, k), _P_R, k, node, ("p", r))

    return Metrics(
        responses=state["responses"],
        recovery_time=state["recovery"],
        rounds_used=state["rounds"],
        event_log=tuple(log),
        responses_per_round=tuple(per_round),
        suppressed=state["suppressed"],
        exp_q=exp_q,
        timers=drawn,
    )


def oracle_max_responses(D: DelayMatrix, exp: Mapping[int, Number] | Sequence[Number]) -> int:
    """Closed-form response count for one loss-free round with scalar timers.

    Responders are taken in order of their would-be firing time
    ``d_Q_i + Exp_i``; i fires unless some responder j that already fired
    has its response reach i inside ``[t(q_r_i), t(p_t_i)]``.
    """
    n = D.n_responders
    if not isinstance(exp, Mapping):
        exp = {i + 1: v for i, v in enumerate(exp)}
    V = {i: D(REQUESTER, i) + Fraction(exp[i]) for i in range(1, n + 1)}
    fired: list[int] = []
    for i in sorted(V, key=lambda k: (V[k], k)):
        q_r = D(REQUESTER, i)
        quiet = all(V[i] < V[j] + D(j, i) or V[j] + D(j, i) < q_r for j in fired)
        if quiet:
            fired.append(i)
    return len(fired)


# ---------------------------------------------------------------- batch runs

@dataclass(frozen=True)
class SweepRow:
    cell: int
    label: str
    policy: str
    n: int
    repetitions: int
    mean_responses: Fraction
    max_responses: int
    mean_recovery: Optional[Fraction]
    max_recovery: Optional[Fraction]
    unrecovered: int

    HEADER = ("cell", "label", "policy", "n", "repetitions", "mean_responses", "max_responses",
              "mean_recovery", "max_recovery", "unrecovered")

    def cells(self) -> tuple[str, ...]:
        f = lambda x: "-" if x is None else format_number(x)
        return (str(self.cell), self.label, self.policy, str(self.n), str(self.repetitions),
                f(self.mean_responses), str(self.max_responses), f(self.mean_recovery),
                f(self.max_recovery), str(self.unrecovered))


def sweep(cases: Iterable[tuple[str, DelayMatrix]], policies: Sequence[TimerPolicy],
          repetitions: int = 1, seed: int = 0, max_rounds: int = 3,
          loss_pattern: frozenset = frozenset()) -> list[SweepRow]:
    """Run every (case, policy) cell ``repetitions`` times.

    Cells are visited case-major in input order; each cell owns a generator
    seeded from ``(seed, cell index)``.
    """
    cases = list(cases)
    if not cases or not policies:
        raise SimulationError("sweep needs at least one case and one policy")
    rows = []
    cell = 0
    for label, D in cases:
        for pol in policies:
            rng = np.random.Generator(np.random.PCG64([seed, cell]))
            cfg = SimConfig(pol, seed, loss_pattern, max_rounds)
            ms = [run(D, cfg, rng) for _ in range(repetitions)]
            rec = [m.recovery_time for m in ms if m.recovered]
            rows.append(SweepRow(
                cell, label, _spec(pol), D.n_responders, repetitions,
                Fraction(sum(m.responses for m in ms), len(ms)),
                max(m.responses for m in ms),
                sum(rec, Fraction(0)) / len(rec) if rec else None,
                max(rec) if rec else None,
                sum(1 for m in ms if not m.recovered),
            ))
            cell += 1
    return rows


def _spec(p: TimerPolicy) -> str:
    try:
        return p.to_spec()
    except ValueError:
        return p.kind


def event_log_tsv(metrics: Metrics) -> str:
    return "".join(e.to_line() + "\n" for e in metrics.event_log)


def metrics_table(rows: Sequence[SweepRow], sep: str = "\t") -> str:
    lines = [sep.join(SweepRow.HEADER)] + [sep.join(r.cells()) for r in rows]
    return "\n".join(lines) + "\n"


RUN_HEADER = ("responders", "receivers", "responses", "suppressed", "recovered", "recovery_time",
              "rounds_used", "responses_per_round")


def run_table(metrics: Metrics, n_responders: int, sep: str = "\t") -> str:
    """One-row table for a single run.  ``receivers`` counts the requester too."""
    rec = "-" if metrics.recovery_time is None else format_number(metrics.recovery_time)
    row = (str(n_responders), str(n_responders + 1), str(metrics.responses), str(metrics.suppressed),
           "yes" if metrics.recovered else "no", rec, str(metrics.rounds_used),
           ",".join(map(str, metrics.responses_per_round)))
    return sep.join(RUN_HEADER) + "\n" + sep.join(row) + "\n"
