"""Constraint systems, LP feasibility, maximum feasible subsets."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .simplex import find_feasible
from .symbolic import (
    LinearConstraint,
    Number,
    SymbolicTime,
    format_constraint,
    format_number,
    link_var,
    parse_constraint,
    parse_delay_var,
    total_variables,
)
from .vlan import IncompleteTopologyError, LinkTopology

DEFAULT_EPSILON = Fraction(1)


class ValidationError(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class Bound:
    lo: Fraction = Fraction(0)
    hi: Optional[Fraction] = None

    def __post_init__(self):
        object.__setattr__(self, "lo", Fraction(self.lo))
        if self.hi is not None:
            object.__setattr__(self, "hi", Fraction(self.hi))


@dataclass(frozen=True)
class ConstraintSystem:
    constraints: tuple[LinearConstraint, ...]
    bounds: Mapping[str, Bound] = field(default_factory=dict)
    fixed: Mapping[str, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "bounds", dict(sorted(self.bounds.items())))
        object.__setattr__(self, "fixed", {k: Fraction(v) for k, v in sorted(self.fixed.items())})

    @classmethod
    def build(cls, constraints: Iterable[LinearConstraint], lower: Number = 0,
              bounds: Optional[Mapping[str, Bound]] = None,
              fixed: Optional[Mapping[str, Number]] = None) -> "ConstraintSystem":
        """Declare every referenced variable, with ``lower`` unless given in ``bounds``."""
        constraints = tuple(constraints)
        fixed = dict(fixed or {})
        b = {v: Bound(lower) for v in total_variables(constraints) if v not in fixed}
        b.update(bounds or {})
        return cls(constraints, b, fixed)

    @property
    def variables(self) -> list[str]:
        return sorted(set(self.bounds) | set(self.fixed))

    def validate(self) -> None:
        declared = set(self.bounds) | set(self.fixed)
        for k, c in enumerate(self.constraints):
            missing = c.variables - declared
            if missing:
                raise ValidationError(f"constraint {k} ({c}) uses undeclared {sorted(missing)}")
        for v, b in self.bounds.items():
            if b.lo < 0:
                raise ValidationError(f"variable {v} has a negative lower bound")
            if b.hi is not None and b.hi < b.lo:
                raise ValidationError(f"variable {v} has empty bounds")

    def subset(self, indices: Iterable[int]) -> "ConstraintSystem":
        return ConstraintSystem(tuple(self.constraints[k] for k in indices), self.bounds, self.fixed)

    def with_constraints(self, constraints: Iterable[LinearConstraint]) -> "ConstraintSystem":
        return ConstraintSystem(tuple(constraints), self.bounds, self.fixed)

    # text form --------------------------------------------------------
    def to_lines(self) -> list[str]:
        out = []
        for v, b in self.bounds.items():
            hi = "inf" if b.hi is None else format_number(b.hi)
            out.append(f"var {v} {format_number(b.lo)} {hi}")
        for v, x in self.fixed.items():
            out.append(f"fix {v} {format_number(x)}")
        for c in self.constraints:
            out.append(format_constraint(c) + (f"  # {c.label}" if c.label else ""))
        return out

    def to_text(self) -> str:
        return "".join(line + "\n" for line in self.to_lines())

    @classmethod
    def from_lines(cls, lines: Sequence[str], first_line: int = 1) -> "ConstraintSystem":
        bounds: dict[str, Bound] = {}
        fixed: dict[str, Fraction] = {}
        cons = []
        for k, raw in enumerate(lines):
            ln = first_line + k
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            try:
                head = line.split(None, 1)[0]
                if head == "var":
                    parts = line.split()
                    if len(parts) != 4:
                        raise ValueError("expected 'var <name> <lo> <hi>'")
                    bounds[parts[1]] = Bound(Fraction(parts[2]), None if parts[3] == "inf" else Fraction(parts[3]))
                elif head == "fix":
                    parts = line.split()
                    if len(parts) != 3:
                        raise ValueError("expected 'fix <name> <value>'")
                    fixed[parts[1]] = Fraction(parts[2])
                else:
                    body, _, label = line.partition("  # ")
                    c = parse_constraint(body)
                    cons.append(LinearConstraint(c.lhs, c.rhs, c.strict, label))
            except (ValueError, ZeroDivisionError) as e:
                raise ParseError(ln, str(e)) from None
        system = cls(tuple(cons), bounds, fixed)
        try:
            system.validate()
        except ValidationError as e:
            raise ParseError(first_line, str(e)) from None
        return system

    @classmethod
    def from_text(cls, text: str) -> "ConstraintSystem":
        return cls.from_lines(text.splitlines())


@dataclass(frozen=True)
class Solution:
    status: str  # "feasible" | "infeasible"
    assignment: Mapping[str, Fraction] = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


@dataclass(frozen=True)
class FeasibleSubsetResult:
    kept: tuple[int, ...]
    dropped: tuple[int, ...]
    assignment: Mapping[str, Fraction]


def _rows(constraints: Iterable[LinearConstraint], fixed: Mapping[str, Fraction], epsilon: Fraction):
    """LP rows ``a.x <= b``; ``None`` if some constraint is falsified by the fixed values."""
    rows = []
    for c in constraints:
        diff = c.difference.substitute(fixed)
        if c.strict:
            diff = diff + epsilon
        coeffs = dict(diff.terms)
        if not coeffs:
            if diff.constant > 0:
                return None
            continue
        rows.append((coeffs, -diff.constant))
    return rows


def solve_feasible(system: ConstraintSystem, epsilon: Number = DEFAULT_EPSILON,
                   hint: Optional[Mapping[str, Number]] = None) -> Solution:
    """Exact feasibility of ``system`` with strict constraints tightened by ``epsilon``.

    ``hint`` is returned unchanged (restricted to declared variables) when it
    already satisfies every tightened constraint and bound.
    """
    epsilon = Fraction(epsilon)
    if epsilon <= 0:
        raise ValidationError("epsilon must be positive")
    system.validate()
    rows = _rows(system.constraints, system.fixed, epsilon)
    if rows is None:
        return Solution("infeasible")
    free = list(system.bounds)
    if hint is not None:
        point = {v: Fraction(hint[v]) for v in free if v in hint}
        if len(point) == len(free) and _bounds_ok(system, point) and all(
                sum((c * point[v] for v, c in a.items()), Fraction(0)) <= b for a, b in rows):
            return Solution("feasible", {**point, **system.fixed})
    x = find_feasible(rows, free,
                      {v: b.lo for v, b in system.bounds.items()},
                      {v: b.hi for v, b in system.bounds.items() if b.hi is not None})
    if x is None:
        return Solution("infeasible")
    return Solution("feasible", {**x, **system.fixed})


def _bounds_ok(system: ConstraintSystem, point: Mapping[str, Fraction]) -> bool:
    return all(point[v] >= b.lo and (b.hi is None or point[v] <= b.hi) for v, b in system.bounds.items())


def max_feasible_subset(system: ConstraintSystem, epsilon: Number = DEFAULT_EPSILON) -> FeasibleSubsetResult:
    """Largest satisfiable subset of constraints; among maximum subsets the
    one that keeps the lowest-indexed constraints (lexicographic) wins."""
    m = len(system.constraints)
    full = solve_feasible(system, epsilon)
    if full.feasible:
        return FeasibleSubsetResult(tuple(range(m)), (), full.assignment)

    best: list = [(), solve_feasible(system.subset(()), epsilon).assignment]

    def feasible(kept):
        return solve_feasible(system.subset(kept), epsilon)

    def dfs(k: int, kept: tuple[int, ...]):
        if len(kept) + (m - k) <= len(best[0]):
            return
        if k == m:
            best[0] = kept
            best[1] = feasible(kept).assignment
            return
        trial = kept + (k,)
        if feasible(trial).feasible:
            dfs(k + 1, trial)
        dfs(k + 1, kept)

    dfs(0, ())
    kept = best[0]
    dropped = tuple(k for k in range(m) if k not in kept)
    return FeasibleSubsetResult(kept, dropped, best[1])


def substitute_link_delays(system: ConstraintSystem, topo: LinkTopology,
                           link_lower: Number = 0) -> ConstraintSystem:
    """Rewrite every ``d_i_j`` as the sum of its path's link-delay variables."""
    mapping: dict[str, SymbolicTime] = {}
    for v in system.variables:
        pair = parse_delay_var(v)
        if pair is None:
            continue
        try:
            path = topo.path(*pair)
        except IncompleteTopologyError:
            raise IncompleteTopologyError(f"topology does not cover {v}") from None
        expr = SymbolicTime()
        for link in path:
            expr = expr + SymbolicTime.of(link_var(link))
        mapping[v] = expr
    cons = []
    for c in system.constraints:
        cons.append(LinearConstraint(c.lhs.substitute(mapping), c.rhs.substitute(mapping), c.strict, c.label))
    bounds = {v: b for v, b in system.bounds.items() if v not in mapping}
    for c in cons:
        for v in c.variables:
            if v.startswith("dl_") and v not in bounds:
                bounds[v] = Bound(link_lower)
    fixed = {v: x for v, x in system.fixed.items() if v not in mapping}
    return ConstraintSystem(tuple(cons), bounds, fixed)


def binding_report(system: ConstraintSystem, epsilon: Number = DEFAULT_EPSILON) -> list[LinearConstraint]:
    """Constraints that must be dropped to restore feasibility."""
    r = max_feasible_subset(system, epsilon)
    return [system.constraints[k] for k in r.dropped]
