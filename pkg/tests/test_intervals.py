import numpy as np
import pytest

from decmon.constants import INFINITY, TICKS_PER_UNIT
from decmon.intervals import IntervalSet, format_time, to_ticks, to_units


def grid_membership(intervals, points):
    member = np.zeros(len(points), dtype=np.bool_)
    for lo, hi in intervals:
        member |= (points >= lo) & (points < hi)
    return member


def random_set(rng, limit):
    intervals = []
    for _ in range(int(rng.integers(0, 5))):
        lo = int(rng.integers(0, limit))
        hi = INFINITY if rng.random() < 0.1 else lo + int(rng.integers(0, limit // 4 + 1))
        intervals.append((lo, hi))
    return intervals


class TestTimes:
    @pytest.mark.parametrize("text,ticks", [
        ("2.1", 2_100_000),
        ("9", 9 * TICKS_PER_UNIT),
        ("0.000001", 1),
        ("16.5", 16_500_000),
        ("inf", INFINITY),
        ("∞", INFINITY),
    ])
    def test_to_ticks(self, text, ticks):
        assert to_ticks(text) == ticks

    def test_to_ticks_rejects_garbage_and_negative_values(self):
        with pytest.raises(ValueError):
            to_ticks("soon")
        with pytest.raises(ValueError):
            to_ticks("-1")

    def test_format_time(self):
        assert format_time(9 * TICKS_PER_UNIT) == "9.000000"
        assert format_time(2_100_000) == "2.100000"
        assert format_time(INFINITY) == "∞"
        assert to_units(16_500_000) == 16.5


class TestIntervalSet:
    def test_normalization_merges_overlapping_and_adjacent_intervals(self):
        s = IntervalSet([(5, 9), (0, 2), (2, 3), (8, 12), (20, 20)])
        assert s.intervals == ((0, 3), (5, 12))

    def test_negative_times_are_rejected(self):
        with pytest.raises(ValueError):
            IntervalSet([(-1, 3)])

    def test_operations(self):
        a = IntervalSet([(5, 9), (16, INFINITY)])
        b = IntervalSet([(8, 18)])
        assert (a | b).intervals == ((5, INFINITY),)
        assert (a & b).intervals == ((8, 9), (16, 18))
        assert (a - b).intervals == ((5, 8), (18, INFINITY))
        assert a.complement().intervals == ((0, 5), (9, 16))

    def test_queries(self):
        s = IntervalSet([(16, 18), (19, 21)])
        assert s.min_point() == 16
        assert IntervalSet.empty().min_point() is None
        assert 17 in s and 18 not in s and 19 in s
        assert s.is_bounded and not IntervalSet.span(3).is_bounded
        assert s.restrict_before(17).intervals == ((16, 17),)
        assert s.restrict_before(16).is_empty
        assert IntervalSet.point(4).intervals == ((4, 5),)

    def test_value_semantics(self):
        assert IntervalSet([(1, 2), (2, 4)]) == IntervalSet([(1, 4)])
        assert len({IntervalSet([(1, 4)]), IntervalSet([(1, 2), (2, 4)])}) == 1
        assert IntervalSet.everything().complement().is_empty
        assert IntervalSet.empty().complement() == IntervalSet.everything()

    def test_str(self):
        assert str(IntervalSet.empty()) == "∅"
        assert str(IntervalSet([(5, 9)])) == "[0.000005,0.000009)"

    def test_random_operation_sequences_agree_with_grid_membership(self):
        rng = np.random.default_rng(7)
        limit = 200
        points = np.arange(0, limit + 60, dtype=np.int64)
        ops = ["union", "intersect", "subtract", "complement"]

        for _ in range(500):
            current = IntervalSet(random_set(rng, limit))
            expected = grid_membership(current.intervals, points)
            for _ in range(int(rng.integers(1, 6))):
                op = ops[int(rng.integers(0, len(ops)))]
                other_intervals = random_set(rng, limit)
                other = IntervalSet(other_intervals)
                other_member = grid_membership(other_intervals, points)
                if op == "union":
                    current, expected = current | other, expected | other_member
                elif op == "intersect":
                    current, expected = current & other, expected & other_member
                elif op == "subtract":
                    current, expected = current - other, expected & ~other_member
                else:
                    current, expected = current.complement(), ~expected

                assert np.array_equal(grid_membership(current.intervals, points), expected)
                # canonical: sorted, disjoint, non-adjacent, non-empty
                for (lo1, hi1), (lo2, hi2) in zip(current.intervals, current.intervals[1:]):
                    assert lo1 < hi1 < lo2 < hi2
