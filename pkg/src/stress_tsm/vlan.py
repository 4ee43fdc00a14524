"""Virtual-LAN topology: delay matrices, link topologies, interval comparison."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .symbolic import Number, delay_var, node_name


class IncompleteTopologyError(ValueError):
    pass


@dataclass(frozen=True)
class Violation:
    i: int
    j: int
    reason: str

    def __str__(self) -> str:
        return f"({node_name(self.i)},{node_name(self.j)}): {self.reason}"


@dataclass(frozen=True)
class DelayMatrix:
    """n x n one-way delays; node 0 is the requester Q."""

    d: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(Fraction(x) for x in row) for row in self.d)
        if any(len(r) != len(rows) for r in rows):
            raise ValueError("delay matrix must be square")
        object.__setattr__(self, "d", rows)

    @classmethod
    def uniform(cls, n_nodes: int, value: Number) -> "DelayMatrix":
        return cls(tuple(tuple(Fraction(0) if i == j else Fraction(value) for j in range(n_nodes))
                         for i in range(n_nodes)))

    @classmethod
    def from_assignment(cls, n_nodes: int, assignment: Mapping[str, Number],
                        default: Number) -> "DelayMatrix":
        return cls(tuple(
            tuple(Fraction(0) if i == j else Fraction(assignment.get(delay_var(i, j), default))
                  for j in range(n_nodes))
            for i in range(n_nodes)))

    @property
    def n(self) -> int:
        return len(self.d)

    @property
    def n_responders(self) -> int:
        return self.n - 1

    def __call__(self, i: int, j: int) -> Fraction:
        return self.d[i][j]

    def replace(self, i: int, j: int, value: Number) -> "DelayMatrix":
        rows = [list(r) for r in self.d]
        rows[i][j] = Fraction(value)
        return DelayMatrix(tuple(tuple(r) for r in rows))

    def as_assignment(self) -> dict[str, Fraction]:
        return {delay_var(i, j): self.d[i][j] for i in range(self.n) for j in range(self.n) if i != j}

    def scaled(self, k: Number) -> "DelayMatrix":
        return DelayMatrix(tuple(tuple(x * Fraction(k) for x in r) for r in self.d))


def validate(D: DelayMatrix) -> list[Violation]:
    """All violations of ``d_ii = 0`` and ``d_ij > 0``; empty means valid."""
    out = []
    for i in range(D.n):
        for j in range(D.n):
            x = D.d[i][j]
            if i == j and x != 0:
                out.append(Violation(i, j, "nonzero self-delay"))
            elif i != j and x <= 0:
                out.append(Violation(i, j, "non-positive delay"))
    return out


@dataclass(frozen=True)
class LinkTopology:
    links: Mapping[str, Fraction]
    paths: Mapping[tuple[int, int], tuple[str, ...]]
    n: int = 0

    def __post_init__(self):
        object.__setattr__(self, "links", {k: Fraction(v) for k, v in self.links.items()})
        object.__setattr__(self, "paths", {k: tuple(p) for k, p in self.paths.items()})
        if not self.n:
            nodes = {x for pair in self.paths for x in pair}
            object.__setattr__(self, "n", max(nodes) + 1 if nodes else 0)

    def path(self, i: int, j: int) -> tuple[str, ...]:
        p = self.paths.get((i, j))
        if not p:
            raise IncompleteTopologyError(f"no path for pair ({node_name(i)},{node_name(j)})")
        unknown = [l for l in p if l not in self.links]
        if unknown:
            raise IncompleteTopologyError(f"path ({node_name(i)},{node_name(j)}) uses unknown links {unknown}")
        return p


def end_to_end(topo: LinkTopology) -> DelayMatrix:
    rows = []
    for i in range(topo.n):
        row = []
        for j in range(topo.n):
            row.append(Fraction(0) if i == j else sum((topo.links[l] for l in topo.path(i, j)), Fraction(0)))
        rows.append(tuple(row))
    return DelayMatrix(tuple(rows))


def chain_topology(delays: Sequence[Number]) -> LinkTopology:
    """Nodes 0..k on a line; link ``l<k>`` joins node k and k+1, both directions."""
    links = {f"l{k}": Fraction(x) for k, x in enumerate(delays)}
    n = len(delays) + 1
    paths = {}
    for i in range(n):
        for j in range(n):
            if i != j:
                lo, hi = min(i, j), max(i, j)
                paths[(i, j)] = tuple(f"l{k}" for k in range(lo, hi))
    return LinkTopology(links, paths, n)


# ---------------------------------------------------------------- intervals

@dataclass(frozen=True, order=True)
class Interval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", Fraction(self.lo))
        object.__setattr__(self, "hi", Fraction(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def point(cls, x: Number) -> "Interval":
        return cls(x, x)

    @property
    def degenerate(self) -> bool:
        return self.lo == self.hi

    def __add__(self, other: "Interval | Number") -> "Interval":
        o = other if isinstance(other, Interval) else Interval.point(other)
        return Interval(self.lo + o.lo, self.hi + o.hi)

    def __sub__(self, other: "Interval | Number") -> "Interval":
        o = other if isinstance(other, Interval) else Interval.point(other)
        return Interval(self.lo - o.hi, self.hi - o.lo)

    def __mul__(self, k: Number) -> "Interval":
        k = Fraction(k)
        a, b = self.lo * k, self.hi * k
        return Interval(min(a, b), max(a, b))

    __rmul__ = __mul__

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def __str__(self) -> str:
        return f"[{self.lo}, {self.hi}]"


LESS, EQUAL, GREATER = "<", "=", ">"


def compare_intervals(a: Interval, b: Interval) -> frozenset[str]:
    """Relations r for which some x in a and y in b satisfy ``x r y``."""
    out = set()
    if a.lo < b.hi:
        out.add(LESS)
    if a.lo <= b.hi and b.lo <= a.hi:
        out.add(EQUAL)
    if a.hi > b.lo:
        out.add(GREATER)
    return frozenset(out)


def interval_of(expr, values: Mapping[str, Interval]) -> Interval:
    """Range of a SymbolicTime over independent variable intervals."""
    lo, hi = expr.bounds({v: (iv.lo, iv.hi) for v, iv in values.items()})
    return Interval(lo, hi)


def admits(relation: str, diff_range: Interval) -> bool:
    """Whether ``lhs relation rhs`` is admissible given the range of ``lhs - rhs``."""
    rels = compare_intervals(diff_range, Interval.point(0))
    if relation == "<":
        return LESS in rels
    if relation == "<=":
        return LESS in rels or EQUAL in rels
    if relation == "=":
        return EQUAL in rels
    raise ValueError(relation)


def all_pairs(n_nodes: int) -> Iterable[tuple[int, int]]:
    return ((i, j) for i in range(n_nodes) for j in range(n_nodes) if i != j)
