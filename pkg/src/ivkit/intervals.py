"""Finite unions of real intervals.

Used both for partial-identification bounds (a single closed interval) and
for test-inversion confidence sets, which can be empty, bounded, a union of
two rays, or the whole real line.  Infinite endpoints are represented by
``math.inf`` and are always open.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float
    lower_closed: bool = True
    upper_closed: bool = True

    def __post_init__(self):
        if math.isnan(self.lower) or math.isnan(self.upper):
            raise ValidationError("interval endpoints must not be NaN")
        if self.lower > self.upper:
            raise ValidationError(f"interval has lower {self.lower} > upper {self.upper}")
        if math.isinf(self.lower) and self.lower_closed:
            object.__setattr__(self, "lower_closed", False)
        if math.isinf(self.upper) and self.upper_closed:
            object.__setattr__(self, "upper_closed", False)
        if self.lower == self.upper and not (self.lower_closed and self.upper_closed):
            raise ValidationError("degenerate interval must be closed on both sides")

    def contains(self, x: float) -> bool:
        if x < self.lower or x > self.upper:
            return False
        if x == self.lower and not self.lower_closed:
            return False
        if x == self.upper and not self.upper_closed:
            return False
        return True

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def __str__(self) -> str:
        lo = "-inf" if math.isinf(self.lower) else format(self.lower, "g")
        hi = "inf" if math.isinf(self.upper) else format(self.upper, "g")
        left = "[" if self.lower_closed else "("
        right = "]" if self.upper_closed else ")"
        return f"{left}{lo}, {hi}{right}"


@dataclass(frozen=True)
class IntervalSet:
    """An ordered union of disjoint intervals (possibly empty)."""

    intervals: tuple[Interval, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(self.intervals))
        prev = None
        for iv in self.intervals:
            if prev is not None and iv.lower < prev.upper:
                raise ValidationError("intervals must be sorted and disjoint")
            if prev is not None and iv.lower == prev.upper and (iv.lower_closed and prev.upper_closed):
                raise ValidationError("intervals must be disjoint (touching closed endpoints)")
            prev = iv

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls(())

    @classmethod
    def whole_line(cls) -> "IntervalSet":
        return cls((Interval(-math.inf, math.inf, False, False),))

    @classmethod
    def of(cls, *intervals: Interval) -> "IntervalSet":
        """Build from arbitrary intervals, sorting and merging overlaps."""
        ivs = sorted(intervals, key=lambda iv: (iv.lower, iv.upper))
        merged: list[Interval] = []
        for iv in ivs:
            if merged:
                last = merged[-1]
                joins = iv.lower < last.upper or (
                    iv.lower == last.upper and (iv.lower_closed or last.upper_closed)
                )
                if joins:
                    if iv.upper > last.upper or (
                        iv.upper == last.upper and iv.upper_closed and not last.upper_closed
                    ):
                        merged[-1] = Interval(
                            last.lower, iv.upper, last.lower_closed, iv.upper_closed
                        )
                    continue
            merged.append(iv)
        return cls(tuple(merged))

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def is_bounded(self) -> bool:
        return all(
            not math.isinf(iv.lower) and not math.isinf(iv.upper) for iv in self.intervals
        )

    def contains(self, x: float) -> bool:
        return any(iv.contains(x) for iv in self.intervals)

    def endpoint_pairs(self) -> list[tuple[float, float]]:
        return [(iv.lower, iv.upper) for iv in self.intervals]

    def __str__(self) -> str:
        if self.is_empty:
            return "(empty)"
        return " ∪ ".join(str(iv) for iv in self.intervals)
