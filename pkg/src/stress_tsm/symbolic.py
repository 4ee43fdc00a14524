"""Affine time expressions and linear constraints over delay/timer variables.

Variables follow a fixed naming scheme so that constraint systems can be
written to and read from plain text:

    d_<i>_<j>   one-way delay from node i to node j (``Q`` is the requester)
    Exp_<i>     response timer duration at responder i
    Exp_Q       request timer duration at the requester
    dl_<id>     link delay (link-level topologies)

All arithmetic is exact (``fractions.Fraction``).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

Number = Union[int, Fraction]

REQUESTER = 0


def node_name(node: int) -> str:
    return "Q" if node == REQUESTER else str(node)


def parse_node(text: str) -> int:
    return REQUESTER if text == "Q" else int(text)


def delay_var(i: int, j: int) -> str:
    return f"d_{node_name(i)}_{node_name(j)}"


def timer_var(i: int) -> str:
    return f"Exp_{node_name(i)}"


def link_var(link_id: str) -> str:
    return f"dl_{link_id}"


_DELAY_RE = re.compile(r"^d_(Q|\d+)_(Q|\d+)$")
_TIMER_RE = re.compile(r"^Exp_(Q|\d+)$")


def parse_delay_var(name: str) -> tuple[int, int] | None:
    m = _DELAY_RE.match(name)
    if not m:
        return None
    return parse_node(m.group(1)), parse_node(m.group(2))


def parse_timer_var(name: str) -> int | None:
    m = _TIMER_RE.match(name)
    return parse_node(m.group(1)) if m else None


def format_number(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class SymbolicTime:
    """``constant + sum(coeff * var)``; immutable and hashable.

    Terms are kept sorted by variable name with zero coefficients removed,
    so structural equality is semantic equality.
    """

    constant: Fraction = Fraction(0)
    terms: tuple[tuple[str, Fraction], ...] = ()

    @classmethod
    def of(cls, value: "Number | str | SymbolicTime") -> "SymbolicTime":
        if isinstance(value, SymbolicTime):
            return value
        if isinstance(value, str):
            return cls(Fraction(0), ((value, Fraction(1)),))
        return cls(Fraction(value), ())

    @classmethod
    def from_map(cls, constant: Number, coeffs: Mapping[str, Number]) -> "SymbolicTime":
        terms = tuple(sorted((v, Fraction(c)) for v, c in coeffs.items() if c != 0))
        return cls(Fraction(constant), terms)

    @property
    def coeffs(self) -> dict[str, Fraction]:
        return dict(self.terms)

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(v for v, _ in self.terms)

    def is_constant(self) -> bool:
        return not self.terms

    def _combine(self, other, sign: int) -> "SymbolicTime":
        other = SymbolicTime.of(other)
        acc = dict(self.terms)
        for v, c in other.terms:
            acc[v] = acc.get(v, Fraction(0)) + sign * c
        return SymbolicTime.from_map(self.constant + sign * other.constant, acc)

    def __add__(self, other) -> "SymbolicTime":
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other) -> "SymbolicTime":
        return self._combine(other, -1)

    def __rsub__(self, other) -> "SymbolicTime":
        return SymbolicTime.of(other)._combine(self, -1)

    def __neg__(self) -> "SymbolicTime":
        return self * -1

    def __mul__(self, k: Number) -> "SymbolicTime":
        k = Fraction(k)
        return SymbolicTime.from_map(self.constant * k, {v: c * k for v, c in self.terms})

    __rmul__ = __mul__

    def substitute(self, mapping: Mapping[str, "Number | SymbolicTime"]) -> "SymbolicTime":
        out = SymbolicTime.of(self.constant)
        for v, c in self.terms:
            out = out + (SymbolicTime.of(mapping[v]) * c if v in mapping else SymbolicTime.from_map(0, {v: c}))
        return out

    def evaluate(self, assignment: Mapping[str, Number]) -> Fraction:
        missing = [v for v, _ in self.terms if v not in assignment]
        if missing:
            raise KeyError(f"unassigned variables: {', '.join(missing)}")
        return self.constant + sum((c * Fraction(assignment[v]) for v, c in self.terms), Fraction(0))

    def bounds(self, intervals: Mapping[str, tuple[Fraction, Fraction]]) -> tuple[Fraction, Fraction]:
        """Tightest ``(lo, hi)`` of the expression over a box of variable ranges."""
        lo = hi = self.constant
        for v, c in self.terms:
            a, b = intervals[v]
            lo += c * (a if c > 0 else b)
            hi += c * (b if c > 0 else a)
        return lo, hi

    def __str__(self) -> str:
        return format_side(self)


def is_positive(expr: SymbolicTime, strict: bool = True) -> bool:
    """True when ``expr`` is provably > 0 (or >= 0) for strictly positive variables."""
    if any(c < 0 for _, c in expr.terms) or expr.constant < 0:
        return False
    if not strict:
        return True
    return expr.constant > 0 or bool(expr.terms)


def definitely_less(a: SymbolicTime, b: SymbolicTime) -> bool:
    """``a < b`` for every assignment of strictly positive variables."""
    return is_positive(SymbolicTime.of(b) - SymbolicTime.of(a))


def definitely_leq(a: SymbolicTime, b: SymbolicTime) -> bool:
    return is_positive(SymbolicTime.of(b) - SymbolicTime.of(a), strict=False)


@dataclass(frozen=True)
class LinearConstraint:
    """``lhs < rhs`` (strict) or ``lhs <= rhs``."""

    lhs: SymbolicTime
    rhs: SymbolicTime
    strict: bool = True
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "lhs", SymbolicTime.of(self.lhs))
        object.__setattr__(self, "rhs", SymbolicTime.of(self.rhs))
        if not (self.lhs.variables or self.rhs.variables):
            raise ValueError(f"constraint without variables: {self.lhs} vs {self.rhs}")

    @property
    def relation(self) -> str:
        return "<" if self.strict else "<="

    @property
    def difference(self) -> SymbolicTime:
        """``lhs - rhs``; the constraint reads ``difference < 0`` (or ``<= 0``)."""
        return self.lhs - self.rhs

    @property
    def variables(self) -> frozenset[str]:
        return self.lhs.variables | self.rhs.variables

    def holds(self, assignment: Mapping[str, Number], margin: Number = 0) -> bool:
        """Exact check; strict constraints must hold with slack of at least ``margin``."""
        slack = self.rhs.evaluate(assignment) - self.lhs.evaluate(assignment)
        if self.strict:
            return slack > 0 and slack >= margin
        return slack >= 0

    def slack(self, assignment: Mapping[str, Number]) -> Fraction:
        return self.rhs.evaluate(assignment) - self.lhs.evaluate(assignment)

    def substitute(self, mapping: Mapping[str, "Number | SymbolicTime"]) -> "LinearConstraint | bool":
        """Substitute variables; a variable-free result collapses to its truth value."""
        lhs, rhs = self.lhs.substitute(mapping), self.rhs.substitute(mapping)
        diff = lhs - rhs
        if diff.is_constant():
            return diff.constant < 0 if self.strict else diff.constant <= 0
        if not (lhs.variables or rhs.variables):
            return diff.constant < 0 if self.strict else diff.constant <= 0
        return LinearConstraint(lhs, rhs, self.strict, self.label)

    def canonical(self) -> "LinearConstraint":
        """Positive terms on the left, negated negative terms on the right."""
        diff = self.difference
        left = {v: c for v, c in diff.terms if c > 0}
        right = {v: -c for v, c in diff.terms if c < 0}
        k = diff.constant
        return LinearConstraint(
            SymbolicTime.from_map(k if k > 0 else 0, left),
            SymbolicTime.from_map(-k if k < 0 else 0, right),
            self.strict,
            self.label,
        )

    def negated(self) -> "LinearConstraint":
        return LinearConstraint(self.rhs, self.lhs, not self.strict, self.label)

    def provably_true(self) -> bool:
        diff = self.rhs - self.lhs
        return is_positive(diff, strict=self.strict)

    def provably_false(self) -> bool:
        return self.negated().provably_true()

    def __str__(self) -> str:
        return format_constraint(self)


# ---------------------------------------------------------------- text format

def format_side(expr: SymbolicTime) -> str:
    parts = [f"{format_number(c)}*{v}" for v, c in expr.terms]
    if expr.constant != 0 or not parts:
        parts.append(format_number(expr.constant))
    return " + ".join(parts)


def format_constraint(c: LinearConstraint) -> str:
    return f"{format_side(c.lhs)} {c.relation} {format_side(c.rhs)}"


_TERM_RE = re.compile(r"^(-?\d+(?:/\d+)?)(?:\*([A-Za-z_][A-Za-z0-9_]*))?$")


def parse_number(text: str) -> Fraction:
    return Fraction(text.strip())


def parse_side(text: str) -> SymbolicTime:
    text = text.strip()
    if not text:
        raise ValueError("empty expression")
    # "a - b" is accepted as "a + -b"
    text = re.sub(r"([^\s+])\s*-\s*", r"\1 + -", text)
    coeffs: dict[str, Fraction] = {}
    constant = Fraction(0)
    for raw in text.split("+"):
        tok = raw.strip().replace(" ", "")
        if not tok:
            raise ValueError(f"malformed expression: {text!r}")
        m = _TERM_RE.match(tok)
        if not m:
            if re.match(r"^-?[A-Za-z_]", tok):
                neg = tok.startswith("-")
                name = tok.lstrip("-")
                coeffs[name] = coeffs.get(name, Fraction(0)) + (-1 if neg else 1)
                continue
            raise ValueError(f"malformed term {tok!r}")
        k = Fraction(m.group(1))
        if m.group(2):
            coeffs[m.group(2)] = coeffs.get(m.group(2), Fraction(0)) + k
        else:
            constant += k
    return SymbolicTime.from_map(constant, coeffs)


def parse_constraint(line: str) -> LinearConstraint:
    if "<=" in line:
        left, right = line.split("<=", 1)
        strict = False
    elif "<" in line:
        left, right = line.split("<", 1)
        strict = True
    else:
        raise ValueError(f"no relation in constraint: {line!r}")
    if "<" in right:
        raise ValueError(f"chained relations are not supported: {line!r}")
    return LinearConstraint(parse_side(left), parse_side(right), strict)


def total_variables(constraints: Iterable[LinearConstraint]) -> list[str]:
    out: set[str] = set()
    for c in constraints:
        out |= c.variables
    return sorted(out)
