# Copyright 2024 The decmon developers
#
# This file is part of decmon.
#
# decmon is free software: you can redistribute it and/or modify it
# under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# decmon is distributed in the hope that it will be useful, but
# WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.
# See the GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with decmon. If not, see <https://www.gnu.org/licenses/>.

"""
Time values and sets of time intervals.

Times are integers on a microtick lattice (`decmon.constants.TICKS_PER_UNIT` ticks per time unit). An **IntervalSet**
is an immutable, canonical union of half-open intervals `[lo, hi)`; the last interval may be unbounded, which is
represented by `hi == INFINITY`. A single instant `t` is the interval `[t, t + 1)`.
"""

from __future__ import annotations

from decimal import Decimal, InvalidOperation, ROUND_HALF_EVEN
from typing import Callable, Iterable, Iterator, List, Optional, Tuple, Union

from .constants import INFINITY, TICKS_PER_UNIT, TIME_DIGITS

Time = int
Interval = Tuple[Time, Time]

_SENTINEL = INFINITY + 1


def to_ticks(value: Union[str, int, float, Decimal]) -> Time:
    """
    Convert a time given in units into microticks. Strings are parsed exactly, so "2.1" becomes 2_100_000.
    "inf" and "∞" map to `INFINITY`.

    :param value: Time in units
    :return: Time in microticks
    """
    if isinstance(value, str) and value.strip() in ("inf", "∞", "infinity"):
        return INFINITY
    try:
        units = Decimal(value.strip() if isinstance(value, str) else str(value))
    except InvalidOperation:
        raise ValueError("not a time value: " + repr(value)) from None
    if not units.is_finite():
        return INFINITY
    if units < 0:
        raise ValueError("negative time: " + str(value))
    return int((units * TICKS_PER_UNIT).to_integral_value(rounding=ROUND_HALF_EVEN))


def to_units(ticks: Time) -> float:
    return float("inf") if ticks >= INFINITY else ticks / TICKS_PER_UNIT


def format_time(ticks: Time) -> str:
    """
    Print a time in units with six fractional digits ("9.000000"). Unbounded times print as "∞".
    """
    if ticks >= INFINITY:
        return "∞"
    sign = "-" if ticks < 0 else ""
    whole, frac = divmod(abs(ticks), TICKS_PER_UNIT)
    return "{}{}.{:0{}d}".format(sign, whole, frac, TIME_DIGITS)


class IntervalSet:
    """
    A finite union of half-open time intervals in canonical form: sorted, pairwise disjoint and non-adjacent. Every
    operation returns a new set; instances are never modified and can be shared freely.
    """
    __slots__ = ("_intervals",)

    _intervals: Tuple[Interval, ...]

    def __init__(self, intervals: Iterable[Interval] = ()):
        """
        :param intervals: Any iterable of (lo, hi) pairs. Empty pairs are ignored, overlapping and adjacent pairs are
        merged. Use `INFINITY` as hi for an unbounded tail.
        """
        self._intervals = _normalize(intervals)

    @classmethod
    def _canonical(cls, intervals: Iterable[Interval]) -> IntervalSet:
        result = cls.__new__(cls)
        result._intervals = tuple(intervals)
        return result

    @classmethod
    def empty(cls) -> IntervalSet:
        return _EMPTY

    @classmethod
    def everything(cls) -> IntervalSet:
        """The whole time axis [0, ∞)."""
        return _EVERYTHING

    @classmethod
    def span(cls, lo: Time, hi: Time = INFINITY) -> IntervalSet:
        return cls([(lo, hi)])

    @classmethod
    def point(cls, t: Time) -> IntervalSet:
        return cls([(t, t + 1)])

    @property
    def intervals(self) -> Tuple[Interval, ...]:
        return self._intervals

    @property
    def is_empty(self) -> bool:
        return not self._intervals

    @property
    def is_bounded(self) -> bool:
        return not self._intervals or self._intervals[-1][1] < INFINITY

    def union(self, other: IntervalSet) -> IntervalSet:
        if not other._intervals:
            return self
        if not self._intervals:
            return other
        return IntervalSet._canonical(_combine(self._intervals, other._intervals, lambda a, b: a or b))

    def intersect(self, other: IntervalSet) -> IntervalSet:
        if not self._intervals or not other._intervals:
            return _EMPTY
        return IntervalSet._canonical(_combine(self._intervals, other._intervals, lambda a, b: a and b))

    def subtract(self, other: IntervalSet) -> IntervalSet:
        if not self._intervals or not other._intervals:
            return self
        return IntervalSet._canonical(_combine(self._intervals, other._intervals, lambda a, b: a and not b))

    def complement(self) -> IntervalSet:
        """Complement with respect to [0, ∞)."""
        return _EVERYTHING.subtract(self)

    def min_point(self) -> Optional[Time]:
        """Smallest instant in the set, or None for the empty set."""
        return self._intervals[0][0] if self._intervals else None

    def restrict_before(self, t: Time) -> IntervalSet:
        """The part of the set that lies in [0, t)."""
        if t <= 0:
            return _EMPTY
        return self.intersect(IntervalSet.span(0, t))

    def contains(self, t: Time) -> bool:
        for lo, hi in self._intervals:
            if t < lo:
                return False
            if t < hi:
                return True
        return False

    __contains__ = contains

    def __and__(self, other: IntervalSet) -> IntervalSet:
        return self.intersect(other)

    def __or__(self, other: IntervalSet) -> IntervalSet:
        return self.union(other)

    def __sub__(self, other: IntervalSet) -> IntervalSet:
        return self.subtract(other)

    def __iter__(self) -> Iterator[Interval]:
        return iter(self._intervals)

    def __len__(self) -> int:
        return len(self._intervals)

    def __bool__(self) -> bool:
        return bool(self._intervals)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IntervalSet):
            return NotImplemented
        return self._intervals == other._intervals

    def __hash__(self) -> int:
        return hash(self._intervals)

    def __str__(self) -> str:
        if not self._intervals:
            return "∅"
        return "∪".join("[{},{})".format(format_time(lo), format_time(hi)) for lo, hi in self._intervals)

    def __repr__(self) -> str:
        return "IntervalSet(" + str(self) + ")"


def _normalize(intervals: Iterable[Interval]) -> Tuple[Interval, ...]:
    merged: List[Interval] = []
    for lo, hi in sorted((int(lo), min(int(hi), INFINITY)) for lo, hi in intervals):
        if lo >= hi:
            continue
        if lo < 0:
            raise ValueError("negative time in interval [{}, {})".format(lo, hi))
        if merged and lo <= merged[-1][1]:
            if hi > merged[-1][1]:
                merged[-1] = (merged[-1][0], hi)
        else:
            merged.append((lo, hi))
    return tuple(merged)


def _combine(
        a: Tuple[Interval, ...],
        b: Tuple[Interval, ...],
        op: Callable[[bool, bool], bool]
) -> List[Interval]:
    # Sweep over the endpoints of both sets; an even endpoint index opens an interval, an odd one closes it.
    # op(False, False) must be False.
    a_points = [t for interval in a for t in interval] + [_SENTINEL]
    b_points = [t for interval in b for t in interval] + [_SENTINEL]

    a_idx = 0
    b_idx = 0
    edges: List[Time] = []

    scan = min(a_points[0], b_points[0])
    while scan < _SENTINEL:
        in_a = not ((scan < a_points[a_idx]) ^ (a_idx % 2))
        in_b = not ((scan < b_points[b_idx]) ^ (b_idx % 2))

        if op(in_a, in_b) ^ (len(edges) % 2):
            edges.append(scan)
        if scan == a_points[a_idx]:
            a_idx += 1
        if scan == b_points[b_idx]:
            b_idx += 1

        scan = min(a_points[a_idx], b_points[b_idx])

    if len(edges) % 2:
        edges.append(INFINITY)

    return [(edges[idx], edges[idx + 1]) for idx in range(0, len(edges), 2)]


_EMPTY = IntervalSet()
_EVERYTHING = IntervalSet([(0, INFINITY)])
