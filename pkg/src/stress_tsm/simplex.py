"""Phase-one simplex over exact rationals.

Finds a point satisfying ``A x <= b`` with ``lo <= x <= hi`` or proves that
none exists.  Bland's rule guarantees termination; the problems solved here
have at most a few hundred rows, so a dense tableau is adequate.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Mapping, Optional, Sequence

Row = tuple[Mapping[str, Fraction], Fraction]  # sum(coeff * var) <= rhs


def _lower_point_ok(rows: Sequence[Row], lower: Mapping[str, Fraction]) -> bool:
    return all(sum((c * lower[v] for v, c in a.items()), Fraction(0)) <= b for a, b in rows)


def find_feasible(
    rows: Sequence[Row],
    variables: Sequence[str],
    lower: Mapping[str, Fraction],
    upper: Optional[Mapping[str, Fraction]] = None,
) -> Optional[dict[str, Fraction]]:
    """Return an exact feasible assignment, or ``None`` when infeasible."""
    upper = upper or {}
    lower = {v: Fraction(lower.get(v, 0)) for v in variables}
    for v in variables:
        if v in upper and upper[v] < lower[v]:
            return None
    if _lower_point_ok(rows, lower):
        return dict(lower)

    index = {v: k for k, v in enumerate(variables)}
    nv = len(variables)
    # shifted rows: a.y <= b - a.lo, y >= 0
    srows: list[tuple[list[Fraction], Fraction]] = []
    for a, b in rows:
        dense = [Fraction(0)] * nv
        shift = Fraction(0)
        for v, c in a.items():
            dense[index[v]] += c
            shift += c * lower[v]
        srows.append((dense, b - shift))
    for v, hi in upper.items():
        if v in index:
            dense = [Fraction(0)] * nv
            dense[index[v]] = Fraction(1)
            srows.append((dense, Fraction(hi) - lower[v]))

    m = len(srows)
    neg = [k for k, (_, b) in enumerate(srows) if b < 0]
    na = len(neg)
    width = nv + m + na + 1  # structural, slack, artificial, rhs
    tab: list[list[Fraction]] = []
    basis: list[int] = []
    art_of = {k: a for a, k in enumerate(neg)}
    for k, (dense, b) in enumerate(srows):
        row = [Fraction(0)] * width
        sign = -1 if b < 0 else 1
        for j, c in enumerate(dense):
            row[j] = sign * c
        row[nv + k] = Fraction(sign)
        row[-1] = sign * b
        if k in art_of:
            row[nv + m + art_of[k]] = Fraction(1)
            basis.append(nv + m + art_of[k])
        else:
            basis.append(nv + k)
        tab.append(row)

    # phase-one objective: minimize sum of artificials, kept as reduced costs
    obj = [Fraction(0)] * width
    for k in neg:
        for j in range(width):
            obj[j] -= tab[k][j]
    for a in range(na):
        obj[nv + m + a] = Fraction(0)

    while True:
        enter = next((j for j in range(width - 1) if obj[j] < 0), None)
        if enter is None:
            break
        best = None
        leave = None
        for k in range(m):
            c = tab[k][enter]
            if c > 0:
                ratio = tab[k][-1] / c
                if best is None or ratio < best or (ratio == best and basis[k] < basis[leave]):
                    best, leave = ratio, k
        if leave is None:  # cannot happen: phase one is bounded below by 0
            break
        _pivot(tab, obj, leave, enter)
        basis[leave] = enter

    if obj[-1] < 0:
        return None
    y = [Fraction(0)] * nv
    for k, j in enumerate(basis):
        if j < nv:
            y[j] = tab[k][-1]
    return {v: lower[v] + y[index[v]] for v in variables}


def _pivot(tab, obj, r, c) -> None:
    pr = tab[r]
    p = pr[c]
    if p != 1:
        tab[r] = pr = [x / p for x in pr]
    nz = [j for j, x in enumerate(pr) if x != 0]
    for k, row in enumerate(tab):
        if k != r and row[c] != 0:
            f = row[c]
            for j in nz:
                row[j] -= f * pr[j]
    f = obj[c]
    if f != 0:
        for j in nz:
            obj[j] -= f * pr[j]
