"""Command-line front end.

Exit codes: 0 success, 1 usage or parse error, 2 infeasible, 3 verification
failure.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional, Sequence, TextIO

from . import model as M
from .fotg import (
    BEST,
    WORST,
    BoundExhaustedError,
    backward_search,
    forward_verify,
    parse_trace,
    synthesize_response_time,
    trace_lines,
)
from .scenario import (
    NO_SUPPRESSION,
    RESPONSE_TIME,
    SINGLE_RESPONSE,
    Scenario,
    dumps,
    loads,
)
from .sim import Metrics, SimConfig, event_log_tsv, metrics_table, run, run_table, sweep
from .solve import Bound, ConstraintSystem, ParseError, solve_feasible
from .symbolic import REQUESTER, format_number, parse_side, timer_var
from .tasks import ABSOLUTE, InfeasibleError, configure_timers, synthesize_topology
from .timers import TimerPolicy, TimerSpecError
from .vlan import DelayMatrix, Interval

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_VERIFY = 0, 1, 2, 3

TIE_BREAK = "equal-time events: receptions before expirations, requests before responses, lower node first"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------- scenario builders

def _witness_chains(n: int, targets: Sequence[int]) -> tuple[tuple[str, ...], ...]:
    model = M.build_tsm(n, 1)
    out = []
    for i in targets:
        chains = backward_search(model, M.p_t(i), 1)
        if chains:
            out.append(tuple(trace_lines(chains[0])))
    return tuple(out)


def first_round_draws(policy: TimerPolicy, D: DelayMatrix, seed: int) -> dict[int, Fraction]:
    """Response timers the simulator draws in round 1 for ``seed``."""
    m = run(D, SimConfig(policy, seed, max_rounds=1))
    return {i: v for (r, i), v in m.timers.items() if r == 1}


def topology_scenario(n: int, mode: str, timers: str = "deterministic", pin_dq: Optional[Fraction] = Fraction(100),
                      pin_iq: Optional[Fraction] = None, epsilon: Fraction = Fraction(1), seed: int = 0,
                      max_rounds: int = 3, closure: str = "auto", branch_limit: int = 1,
                      survivor: int = 1) -> Scenario:
    policy = TimerPolicy.from_spec(timers, n)
    result = synthesize_topology(policy, mode, n, pin_dq, epsilon, pin_iq, survivor=survivor,
                                 closure=closure, branch_limit=branch_limit)
    assumptions = [TIE_BREAK]
    if pin_dq is not None:
        assumptions.append(f"d_Q_i pinned to {format_number(Fraction(pin_dq))}")
    if pin_iq is not None:
        assumptions.append(f"d_i_Q pinned to {format_number(Fraction(pin_iq))}")
    assumptions.append("delays outside the constraints default to 100")
    if not policy.deterministic:
        assumptions.append("timer ranges reduced to the end least favourable to the claim")
    if mode == WORST and n >= 2 and len(result.pairs) < n * (n - 1):
        assumptions.append("ordered closure: only pairs where i fires after j are constrained")

    if mode == BEST and result.status != ABSOLUTE and not policy.deterministic:
        # No delays work for every timer draw; condition on this seed's draws.
        draws = first_round_draws(policy, result.delays, seed)
        if len(draws) == n:
            best = min(draws, key=lambda i: (draws[i], i))
            cond = synthesize_topology(draws, mode, n, pin_dq, epsilon, pin_iq, survivor=best,
                                       closure=closure, branch_limit=branch_limit)
            if cond.status == ABSOLUTE and first_round_draws(policy, cond.delays, seed) == draws:
                result, survivor = cond, best
                assumptions[-1] = (f"no delays suppress every draw; best case for the round-1 timer "
                                   f"draws of seed {seed}, survivor {survivor}")

    claim = NO_SUPPRESSION if mode == WORST else SINGLE_RESPONSE
    targets = range(1, n + 1) if mode == WORST else [survivor]
    return Scenario(
        n_responders=n, mode=mode, claim=claim, timers=timers, delays=result.delays,
        system=result.system, status=result.status, epsilon=epsilon, seed=seed,
        max_rounds=max_rounds, dropped=tuple(str(c) for c in result.dropped),
        assumptions=tuple(assumptions), witness=_witness_chains(n, targets),
    )


def response_scenario(n: int, max_rounds: int, epsilon: Fraction = Fraction(1), seed: int = 0) -> Scenario:
    """Worst recovery-time scenario with a concrete satisfying assignment."""
    res = synthesize_response_time(M.build_tsm(n), max_rounds, n, epsilon)
    side = tuple(res.side_constraints)
    names = set(res.time.variables)
    for c in side:
        names |= c.variables
    bounds = {v: Bound(epsilon) for v in sorted(names)}
    system = ConstraintSystem(side, bounds, {})
    sol = solve_feasible(system, epsilon)
    if not sol.feasible:
        raise InfeasibleError("side constraints of the response-time sequence are infeasible")
    a = sol.assignment
    D = DelayMatrix.from_assignment(n + 1, a, 100)
    exp = [a.get(timer_var(i), Fraction(100)) for i in range(1, n + 1)]
    exp_q = a.get(timer_var(REQUESTER))
    timers = "fixed:" + ",".join(format_number(x) for x in exp)
    if exp_q is not None:
        timers += f";exp_q={format_number(exp_q)}"
    return Scenario(
        n_responders=n, mode=WORST, claim=RESPONSE_TIME, timers=timers, delays=D, system=system,
        status=ABSOLUTE, epsilon=epsilon, seed=seed, max_rounds=max_rounds,
        loss_pattern=tuple(res.loss_pattern),
        assumptions=(TIE_BREAK, f"responder {res.survivor} delivers the recovering response",
                     "delays outside the constraints default to 100"),
        response_time=str(res.time), witness=(tuple(trace_lines(res.sequence)),),
    )


# ---------------------------------------------------------------- simulate and verify

def scenario_policy(sc: Scenario, override: Optional[str] = None) -> TimerPolicy:
    return TimerPolicy.from_spec(override or sc.timers, sc.n_responders)


def simulate(sc: Scenario, policy: Optional[str] = None, seed: Optional[int] = None,
             max_rounds: Optional[int] = None) -> Metrics:
    cfg = SimConfig(scenario_policy(sc, policy), sc.seed if seed is None else seed,
                    frozenset(sc.loss_pattern), sc.max_rounds if max_rounds is None else max_rounds)
    return run(sc.delays, cfg)


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'}\t{self.name}" + (f"\t{self.detail}" if self.detail else "")


def _static_assignment(sc: Scenario, policy: TimerPolicy) -> dict[str, Fraction]:
    a = dict(sc.delays.as_assignment())
    for i in range(1, sc.n_responders + 1):
        iv = policy.bounds(i, sc.delays)
        if iv.degenerate:
            a[timer_var(i)] = iv.lo
    a[timer_var(REQUESTER)] = policy.request_timer(sc.delays)
    return a


def verify(sc: Scenario) -> list[Check]:
    """Checks in order; the list stops at the first failure."""
    out: list[Check] = []

    def add(name, ok, detail=""):
        out.append(Check(name, ok, detail))
        return ok

    sol = solve_feasible(sc.system, sc.epsilon)
    if not add("constraint system re-solves", sol.feasible, "" if sol.feasible else "system is infeasible"):
        return out
    policy = scenario_policy(sc)
    a = _static_assignment(sc, policy)
    for c in sc.system.constraints:
        missing = c.variables - set(a)
        if missing:
            add("delays satisfy constraints", False, f"{c} refers to unassigned {sorted(missing)}")
            return out
        if not c.holds(a, sc.epsilon):
            add("delays satisfy constraints", False, f"violated: {c}")
            return out
    add("delays satisfy constraints", True, f"{len(sc.system.constraints)} constraints, margin {format_number(sc.epsilon)}")

    m = simulate(sc)
    add("simulation completes", True, f"responses={m.responses} recovered={'yes' if m.recovered else 'no'}")

    replay = dict(a)
    for (r, i), v in m.timers.items():
        if r == 1:
            replay[timer_var(i)] = v
    replay[timer_var(REQUESTER)] = m.exp_q
    model = M.build_tsm(sc.n_responders, sc.max_rounds)
    for k, lines in enumerate(sc.witness, 1):
        v = forward_verify(model, parse_trace(lines), frozenset(sc.loss_pattern), assignment=replay)
        if not add(f"witness {k} replays", v.accepted, v.reason):
            return out

    if sc.claim == NO_SUPPRESSION:
        ok = m.responses == sc.n_responders and m.suppressed == 0
        add("claim no-suppression", ok, f"responses={m.responses} of {sc.n_responders}")
    elif sc.claim == SINGLE_RESPONSE:
        add("claim single-response", m.responses == 1, f"responses={m.responses}")
    else:
        want = parse_side(sc.response_time).evaluate(replay)
        got = m.recovery_time
        add("claim response-time", got == want,
            f"expected {format_number(want)}, measured {'-' if got is None else format_number(got)}")
    return out


# ---------------------------------------------------------------- input helpers

def _frac(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def parse_delays(text: str, n: Optional[int]):
    """``uniform:a,b`` (one interval for every delay), ``scalar:v``,
    ``matrix:r0;r1;...`` with comma-separated rows, or ``scenario:<file>``.
    Returns ``(delays, n)``."""
    kind, _, body = text.partition(":")
    if kind == "uniform":
        lo, hi = (Fraction(x) for x in body.split(","))
        if n is None:
            raise UsageError("--n is required with uniform delays")
        iv = Interval(lo, hi)
        return (DelayMatrix.uniform(n + 1, lo) if iv.degenerate else iv), n
    if kind == "scalar":
        if n is None:
            raise UsageError("--n is required with scalar delays")
        return DelayMatrix.uniform(n + 1, Fraction(body)), n
    if kind == "matrix":
        rows = tuple(tuple(Fraction(x) for x in r.split(",")) for r in body.split(";"))
        D = DelayMatrix(rows)
        return D, D.n_responders
    if kind == "scenario":
        with open(body) as f:
            sc = loads(f.read())
        return sc.delays, sc.n_responders
    raise UsageError(f"unknown delay input {text!r}")


def _read_scenario(path: str) -> Scenario:
    with open(path) as f:
        return loads(f.read())


def _emit(text: str, out: Optional[str], stdout: TextIO) -> None:
    if out:
        with open(out, "w") as f:
            f.write(text)
    else:
        stdout.write(text)


# ---------------------------------------------------------------- commands

def cmd_synth_topology(args, stdout, stderr) -> int:
    sc = topology_scenario(args.n, args.mode, args.timers, args.pin_dq, args.pin_iq, args.epsilon,
                           args.seed, args.max_rounds, args.closure, args.branch_limit, args.survivor)
    _emit(dumps(sc), args.out, stdout)
    if sc.status != ABSOLUTE:
        stderr.write("infeasible: kept the largest satisfiable subset; dropped:\n")
        for c in sc.dropped:
            stderr.write(f"  {c}\n")
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_synth_response(args, stdout, stderr) -> int:
    try:
        sc = response_scenario(args.n, args.max_rounds, args.epsilon, args.seed)
    except BoundExhaustedError as e:
        stderr.write(f"infeasible: {e}\n")
        return EXIT_INFEASIBLE
    _emit(dumps(sc), args.out, stdout)
    return EXIT_OK


def cmd_config_timers(args, stdout, stderr) -> int:
    delays, n = parse_delays(args.delays, args.n)
    cfg = configure_timers(delays, args.mode, n, args.epsilon, args.exp_upper, survivor=args.survivor)
    text = "".join(line + "\n" for line in cfg.lines())
    text += "witness\t" + "\t".join(f"{k}={format_number(v)}" for k, v in cfg.witness.items()) + "\n"
    _emit(text, args.out, stdout)
    return EXIT_OK


def cmd_simulate(args, stdout, stderr) -> int:
    sc = _read_scenario(args.scenario)
    m = simulate(sc, args.policy, args.seed, args.max_rounds)
    _emit(run_table(m, sc.n_responders) + "\n" + event_log_tsv(m), args.out, stdout)
    return EXIT_OK


def cmd_verify(args, stdout, stderr) -> int:
    sc = _read_scenario(args.scenario)
    checks = verify(sc)
    stdout.write("".join(c.line() + "\n" for c in checks))
    ok = all(c.ok for c in checks)
    stdout.write("PASS\n" if ok else "FAIL\n")
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_sweep(args, stdout, stderr) -> int:
    scenarios = [(path, _read_scenario(path)) for path in args.scenario]
    sizes = {sc.n_responders for _, sc in scenarios}
    if args.policy and len(sizes) > 1:
        raise UsageError("--policy needs scenarios with equal responder counts")
    rows = []
    if args.policy:
        n = sizes.pop()
        policies = [TimerPolicy.from_spec(p, n) for p in args.policy]
        rows = sweep([(p, sc.delays) for p, sc in scenarios], policies, args.repetitions, args.seed,
                     args.max_rounds)
    else:
        for k, (path, sc) in enumerate(scenarios):
            for row in sweep([(path, sc.delays)], [scenario_policy(sc)], args.repetitions,
                             args.seed + k, args.max_rounds, frozenset(sc.loss_pattern)):
                rows.append(replace(row, cell=k))
    _emit(metrics_table(rows), args.out, stdout)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stress-tsm", description="Stress scenarios for timer suppression.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth-topology", help="delays for maximum or minimum response overhead")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--mode", choices=(WORST, BEST), default=WORST)
    s.add_argument("--timers", default="deterministic")
    s.add_argument("--pin-dq", type=_frac, default=Fraction(100))
    s.add_argument("--pin-iq", type=_frac, default=None)
    s.add_argument("--epsilon", type=_frac, default=Fraction(1))
    s.add_argument("--survivor", type=int, default=1)
    s.add_argument("--closure", choices=("auto", "ordered", "all"), default="auto")
    s.add_argument("--branch-limit", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-rounds", type=int, default=3)
    s.add_argument("--out")
    s.set_defaults(func=cmd_synth_topology)

    s = sub.add_parser("synth-response", help="worst-case recovery time under selective loss")
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--max-rounds", type=int, default=2)
    s.add_argument("--epsilon", type=_frac, default=Fraction(1))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_synth_response)

    s = sub.add_parser("config-timers", help="relative timer conditions for given delays")
    s.add_argument("--delays", required=True)
    s.add_argument("--mode", choices=(WORST, BEST), default=WORST)
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--epsilon", type=_frac, default=Fraction(1))
    s.add_argument("--exp-upper", type=_frac, default=None)
    s.add_argument("--survivor", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_config_timers)

    s = sub.add_parser("simulate", help="run a scenario through the simulator")
    s.add_argument("--scenario", required=True)
    s.add_argument("--policy", default=None)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--max-rounds", type=int, default=None)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("verify", help="check a scenario end to end")
    s.add_argument("--scenario", required=True)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("sweep", help="repeat simulations over scenarios and policies")
    s.add_argument("--scenario", action="append", required=True)
    s.add_argument("--policy", action="append", default=None)
    s.add_argument("--repetitions", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-rounds", type=int, default=3)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv: Optional[Sequence[str]] = None, stdout: Optional[TextIO] = None,
         stderr: Optional[TextIO] = None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, stdout, stderr)
    except UsageError as e:
        stderr.write(f"usage error: {e}\n")
        return EXIT_USAGE
    except ParseError as e:
        stderr.write(f"parse error: {e}\n")
        return EXIT_USAGE
    except (TimerSpecError, OSError) as e:
        stderr.write(f"error: {e}\n")
        return EXIT_USAGE
    except InfeasibleError as e:
        stderr.write(f"infeasible: {e}\n")
        for c in e.binding:
            stderr.write(f"  binding: {c}\n")
        return EXIT_INFEASIBLE
    except ValueError as e:
        stderr.write(f"error: {e}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
