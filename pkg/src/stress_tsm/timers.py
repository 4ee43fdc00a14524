"""Response-timer policies.

A policy maps each responder to a range of timer durations, possibly
depending on the delay matrix through the estimated distance
``E_i = (d_i_Q + d_Q_i) / 2``.  The same policy is used symbolically by the
synthesis code (``symbolic_bounds``) and numerically by the simulator.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .symbolic import REQUESTER, Number, SymbolicTime, delay_var, format_number
from .vlan import DelayMatrix, Interval

DETERMINISTIC_DISTANCE = "deterministic-distance"
UNIFORM_FIXED = "uniform-fixed"
UNIFORM_DISTANCE = "uniform-distance"
ADAPTIVE_SIMPLIFIED = "adaptive-simplified"
KINDS = (DETERMINISTIC_DISTANCE, UNIFORM_FIXED, UNIFORM_DISTANCE, ADAPTIVE_SIMPLIFIED)

_DRAW_SCALE = 2 ** 32


class TimerSpecError(ValueError):
    pass


def distance(i: int) -> SymbolicTime:
    return (SymbolicTime.of(delay_var(i, REQUESTER)) + SymbolicTime.of(delay_var(REQUESTER, i))) * Fraction(1, 2)


@dataclass(frozen=True)
class TimerPolicy:
    """``kind`` plus parameters.

    uniform-fixed       ``intervals[i-1]`` is responder i's range
    deterministic-distance  ``Exp_i = c1 * E_i``
    uniform-distance    ``Exp_i`` in ``[c1 * E_i, (c1 + c2) * E_i]``
    adaptive-simplified uniform-distance whose lower bound is scaled by
                        ``1 + k`` after k duplicate responses in a round
    ``exp_q`` is the request-timer duration; ``None`` selects a value long
    enough for one full round trip plus any response timer, doubled.
    """

    kind: str
    intervals: tuple[Interval, ...] = ()
    c1: Fraction = Fraction(1)
    c2: Fraction = Fraction(1)
    exp_q: Optional[Fraction] = None
    spec: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise TimerSpecError(f"unknown timer policy {self.kind!r}")
        object.__setattr__(self, "c1", Fraction(self.c1))
        object.__setattr__(self, "c2", Fraction(self.c2))
        if self.exp_q is not None:
            object.__setattr__(self, "exp_q", Fraction(self.exp_q))
        if self.c1 < 0 or self.c2 < 0:
            raise TimerSpecError("distance coefficients must be nonnegative")
        if any(iv.lo < 0 for iv in self.intervals):
            raise TimerSpecError("timer intervals must be nonnegative")

    # constructors ------------------------------------------------------
    @classmethod
    def fixed(cls, values: Sequence[Number], exp_q: Optional[Number] = None) -> "TimerPolicy":
        return cls(UNIFORM_FIXED, tuple(Interval.point(v) for v in values), exp_q=exp_q)

    @classmethod
    def uniform(cls, intervals: Sequence[Interval], exp_q: Optional[Number] = None) -> "TimerPolicy":
        return cls(UNIFORM_FIXED, tuple(intervals), exp_q=exp_q)

    @classmethod
    def wb_fixed(cls, n: int, t: Number = 100, exp_q: Optional[Number] = None) -> "TimerPolicy":
        """Node 1 is the data source with ``[t, 2t]``; others ``[2t, 4t]``."""
        t = Fraction(t)
        ivs = (Interval(t, 2 * t),) + (Interval(2 * t, 4 * t),) * (n - 1)
        return cls(UNIFORM_FIXED, ivs, exp_q=exp_q)

    @classmethod
    def from_spec(cls, text: str, n: int) -> "TimerPolicy":
        """Parse ``wb-fixed``, ``uniform:a,b``, ``fixed:e1,...,en``,
        ``distance:c1,c2``, ``deterministic[:c1]`` or ``adaptive:c1,c2``;
        an optional ``;exp_q=<v>`` suffix sets the request timer."""
        body, _, extra = text.partition(";")
        exp_q = None
        if extra:
            key, _, val = extra.partition("=")
            if key.strip() != "exp_q":
                raise TimerSpecError(f"unknown timer option {key!r}")
            exp_q = Fraction(val)
        name, _, args = body.partition(":")
        try:
            nums = [Fraction(x) for x in args.split(",")] if args else []
        except (ValueError, ZeroDivisionError):
            raise TimerSpecError(f"bad numbers in timer spec {text!r}") from None
        if name == "wb-fixed":
            p = cls.wb_fixed(n, nums[0] if nums else 100, exp_q)
        elif name == "uniform":
            if len(nums) != 2 or nums[0] > nums[1]:
                raise TimerSpecError("uniform needs lo,hi with lo <= hi")
            p = cls.uniform((Interval(nums[0], nums[1]),) * n, exp_q)
        elif name == "fixed":
            if len(nums) != n:
                raise TimerSpecError(f"fixed needs {n} values, got {len(nums)}")
            p = cls.fixed(nums, exp_q)
        elif name in ("distance", "adaptive"):
            c1, c2 = (nums + [Fraction(1), Fraction(1)])[:2] if len(nums) < 2 else nums[:2]
            p = cls(UNIFORM_DISTANCE if name == "distance" else ADAPTIVE_SIMPLIFIED, c1=c1, c2=c2, exp_q=exp_q)
        elif name == "deterministic":
            p = cls(DETERMINISTIC_DISTANCE, c1=nums[0] if nums else 1, exp_q=exp_q)
        else:
            raise TimerSpecError(f"unknown timer spec {text!r}")
        if p.intervals and len(p.intervals) != n:
            raise TimerSpecError("timer spec does not cover every responder")
        return p.with_spec(text)

    def with_spec(self, text: str) -> "TimerPolicy":
        object.__setattr__(self, "spec", text)
        return self

    def to_spec(self) -> str:
        if self.spec:
            return self.spec
        suffix = "" if self.exp_q is None else f";exp_q={format_number(self.exp_q)}"
        if self.kind == UNIFORM_FIXED:
            if all(iv.degenerate for iv in self.intervals):
                return "fixed:" + ",".join(format_number(iv.lo) for iv in self.intervals) + suffix
            raise TimerSpecError("per-node interval policies have no compact spec")
        if self.kind == DETERMINISTIC_DISTANCE:
            return f"deterministic:{format_number(self.c1)}" + suffix
        name = "distance" if self.kind == UNIFORM_DISTANCE else "adaptive"
        return f"{name}:{format_number(self.c1)},{format_number(self.c2)}" + suffix

    # queries -----------------------------------------------------------
    @property
    def deterministic(self) -> bool:
        if self.kind == DETERMINISTIC_DISTANCE:
            return True
        if self.kind == UNIFORM_FIXED:
            return all(iv.degenerate for iv in self.intervals)
        return self.c2 == 0

    def symbolic_bounds(self, i: int) -> tuple[SymbolicTime, SymbolicTime]:
        """Range of ``Exp_i`` as expressions in delay variables."""
        if self.kind == UNIFORM_FIXED:
            iv = self.intervals[i - 1]
            return SymbolicTime.of(iv.lo), SymbolicTime.of(iv.hi)
        e = distance(i)
        if self.kind == DETERMINISTIC_DISTANCE:
            return e * self.c1, e * self.c1
        return e * self.c1, e * (self.c1 + self.c2)

    def bounds(self, i: int, D: Optional[DelayMatrix] = None) -> Interval:
        lo, hi = self.symbolic_bounds(i)
        if lo.is_constant() and hi.is_constant():
            return Interval(lo.constant, hi.constant)
        if D is None:
            raise ValueError("distance-based timers need a delay matrix")
        a = D.as_assignment()
        return Interval(lo.evaluate(a), hi.evaluate(a))

    def draw(self, i: int, D: DelayMatrix, rng: Optional[np.random.Generator], duplicates: int = 0) -> Fraction:
        """One timer duration; degenerate ranges consume no random draw."""
        iv = self.bounds(i, D)
        lo, hi = iv.lo, iv.hi
        if self.kind == ADAPTIVE_SIMPLIFIED and duplicates:
            lo = min(hi, lo * (1 + duplicates))
        if lo == hi:
            return lo
        if rng is None:
            raise ValueError("a random generator is required for non-degenerate timers")
        u = Fraction(int(rng.integers(0, _DRAW_SCALE)), _DRAW_SCALE)
        return lo + (hi - lo) * u

    def request_timer(self, D: DelayMatrix) -> Fraction:
        if self.exp_q is not None:
            return self.exp_q
        worst = max(D(REQUESTER, i) + self.bounds(i, D).hi + D(i, REQUESTER) for i in range(1, D.n))
        return 2 * worst


def make_rng(seed: int) -> np.random.Generator:
    """The simulator's generator: numpy PCG64 seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(seed))
