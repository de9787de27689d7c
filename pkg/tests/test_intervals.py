import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ivkit import Interval, IntervalSet, ValidationError


class TestInterval:
    def test_ordering_enforced(self):
        with pytest.raises(ValidationError):
            Interval(2.0, 1.0)

    def test_infinite_endpoints_are_open(self):
        ray = Interval(-math.inf, 3.0)
        assert not ray.lower_closed
        assert ray.contains(-1e300)
        assert ray.contains(3.0)
        assert not ray.contains(3.1)

    def test_point_interval(self):
        point = Interval(1.5, 1.5)
        assert point.contains(1.5)
        assert point.width == 0.0

    def test_open_endpoint_excluded(self):
        iv = Interval(0.0, 1.0, lower_closed=False)
        assert not iv.contains(0.0)
        assert iv.contains(0.5)


class TestIntervalSet:
    def test_empty(self):
        s = IntervalSet.empty()
        assert s.is_empty
        assert not s.contains(0.0)

    def test_whole_line(self):
        s = IntervalSet.whole_line()
        assert s.contains(1e308)
        assert s.contains(-1e308)
        assert not s.is_bounded

    def test_disjointness_enforced(self):
        with pytest.raises(ValidationError):
            IntervalSet((Interval(0.0, 2.0), Interval(1.0, 3.0)))

    def test_of_merges_overlaps(self):
        s = IntervalSet.of(Interval(1.0, 3.0), Interval(2.0, 5.0), Interval(7.0, 8.0))
        assert s.endpoint_pairs() == [(1.0, 5.0), (7.0, 8.0)]

    def test_two_rays_rendering(self):
        s = IntervalSet((Interval(-math.inf, -1.0), Interval(2.0, math.inf)))
        assert str(s) == "(-inf, -1] ∪ [2, inf)"
        assert s.contains(-5.0) and s.contains(5.0) and not s.contains(0.0)


@given(
    st.lists(
        st.tuples(
            st.floats(-100, 100),
            st.floats(0, 50),
        ),
        min_size=1,
        max_size=5,
    ),
    st.floats(-200, 200),
)
def test_of_membership_matches_union(raw, probe):
    intervals = [Interval(lo, lo + width) for lo, width in raw]
    merged = IntervalSet.of(*intervals)
    assert merged.contains(probe) == any(iv.contains(probe) for iv in intervals)
