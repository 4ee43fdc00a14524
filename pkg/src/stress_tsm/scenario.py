"""Scenario files: a synthesized stress case in self-contained JSON text.

All numbers are exact rationals written as strings (``"301"``,
``"201/2"``).  Files written by :func:`dumps` parse back to an equal
:class:`Scenario` and re-serialize byte-identically.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .model import Drop
from .solve import ConstraintSystem, ParseError
from .symbolic import format_number, node_name, parse_node, parse_side
from .vlan import DelayMatrix

SCHEMA_VERSION = 1
TOOL_VERSION = "0.1.0"

NO_SUPPRESSION = "no-suppression"
SINGLE_RESPONSE = "single-response"
RESPONSE_TIME = "response-time"
CLAIMS = (NO_SUPPRESSION, SINGLE_RESPONSE, RESPONSE_TIME)


@dataclass(frozen=True)
class Scenario:
    n_responders: int
    mode: str
    claim: str
    timers: str
    delays: DelayMatrix
    system: ConstraintSystem
    status: str = "absolute"
    epsilon: Fraction = Fraction(1)
    seed: int = 0
    max_rounds: int = 3
    loss_pattern: tuple[Drop, ...] = ()
    dropped: tuple[str, ...] = ()
    assumptions: tuple[str, ...] = ()
    response_time: Optional[str] = None
    witness: tuple[tuple[str, ...], ...] = ()
    tool_version: str = TOOL_VERSION

    def __post_init__(self):
        object.__setattr__(self, "epsilon", Fraction(self.epsilon))
        object.__setattr__(self, "loss_pattern", tuple(sorted(self.loss_pattern, key=_drop_key)))

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "tool_version": self.tool_version,
            "n_responders": self.n_responders,
            "mode": self.mode,
            "claim": self.claim,
            "timers": self.timers,
            "epsilon": format_number(self.epsilon),
            "seed": self.seed,
            "max_rounds": self.max_rounds,
            "loss_pattern": [_drop_to(d) for d in self.loss_pattern],
            "delays": [[format_number(x) for x in row] for row in self.delays.d],
            "status": self.status,
            "constraints": self.system.to_lines(),
            "dropped": list(self.dropped),
            "assumptions": list(self.assumptions),
            "response_time": self.response_time,
            "witness": [list(w) for w in self.witness],
        }


def _drop_key(d: Drop):
    return (d.round, d.kind, d.receiver, -1 if d.sender is None else d.sender)


def _drop_to(d: Drop) -> dict:
    return {"round": d.round, "kind": d.kind, "receiver": node_name(d.receiver),
            "sender": None if d.sender is None else node_name(d.sender)}


def dumps(s: Scenario) -> str:
    return json.dumps(s.to_dict(), indent=2) + "\n"


def _line_of(text: str, key: str) -> int:
    needle = f'"{key}"'
    for k, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return k
    return 1


_KEYS = ("schema", "tool_version", "n_responders", "mode", "claim", "timers", "epsilon", "seed",
         "max_rounds", "loss_pattern", "delays", "status", "constraints", "dropped", "assumptions",
         "response_time", "witness")


def loads(text: str) -> Scenario:
    """Parse a scenario; every error carries a 1-based line number."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.lineno, e.msg) from None
    if not isinstance(data, dict):
        raise ParseError(1, "scenario must be a JSON object")
    for key in _KEYS:
        if key not in data:
            raise ParseError(1, f"missing field {key!r}")
    extra = [k for k in data if k not in _KEYS]
    if extra:
        raise ParseError(_line_of(text, extra[0]), f"unknown field {extra[0]!r}")

    def field_error(key, msg):
        return ParseError(_line_of(text, key), f"{key}: {msg}")

    if data["schema"] != SCHEMA_VERSION:
        raise field_error("schema", f"unsupported schema version {data['schema']!r}")
    try:
        n = int(data["n_responders"])
        if n < 1:
            raise ValueError("must be at least 1")
    except (TypeError, ValueError) as e:
        raise field_error("n_responders", str(e)) from None
    if data["claim"] not in CLAIMS:
        raise field_error("claim", f"unknown claim {data['claim']!r}")
    try:
        rows = tuple(tuple(Fraction(x) for x in row) for row in data["delays"])
        D = DelayMatrix(rows)
        if D.n != n + 1:
            raise ValueError(f"expected {n + 1}x{n + 1} matrix")
    except (TypeError, ValueError, ZeroDivisionError) as e:
        raise field_error("delays", str(e)) from None
    try:
        eps = Fraction(data["epsilon"])
    except (TypeError, ValueError, ZeroDivisionError) as e:
        raise field_error("epsilon", str(e)) from None
    base = _line_of(text, "constraints") + 1
    try:
        lines = data["constraints"]
        if not isinstance(lines, list) or not all(isinstance(x, str) for x in lines):
            raise ParseError(base - 1, "constraints: expected a list of strings")
        system = ConstraintSystem.from_lines(lines, base)
    except ParseError:
        raise
    try:
        drops = tuple(Drop(int(d["round"]), d["kind"], parse_node(d["receiver"]),
                           None if d["sender"] is None else parse_node(d["sender"]))
                      for d in data["loss_pattern"])
    except (TypeError, KeyError, ValueError) as e:
        raise field_error("loss_pattern", f"malformed entry ({e})") from None
    if data["response_time"] is not None:
        try:
            parse_side(data["response_time"])
        except ValueError as e:
            raise field_error("response_time", str(e)) from None
    try:
        seed = int(data["seed"])
        max_rounds = int(data["max_rounds"])
    except (TypeError, ValueError) as e:
        raise field_error("seed", str(e)) from None
    return Scenario(
        n_responders=n, mode=data["mode"], claim=data["claim"], timers=data["timers"],
        delays=D, system=system, status=data["status"], epsilon=eps, seed=seed,
        max_rounds=max_rounds, loss_pattern=drops, dropped=tuple(data["dropped"]),
        assumptions=tuple(data["assumptions"]), response_time=data["response_time"],
        witness=tuple(tuple(w) for w in data["witness"]), tool_version=data["tool_version"],
    )
