from datetime import datetime, timezone

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from webdrift.features import (NO_OK_REQUESTS, VARIABLES, FeatureVector, assign_sub_period,
                               compute_features, standardize, sub_period_of)
from webdrift.ingest import Navigation, RawRequest


def ts(*args):
    return int(datetime(*args, tzinfo=timezone.utc).timestamp())


def make_nav(times, resources=None, statuses=None, sizes=None, start=0, nav_id=1):
    n = len(times)
    resources = resources or [f"/{i}" for i in range(n)]
    statuses = statuses or [200] * n
    sizes = sizes or [100] * n
    reqs = tuple(RawRequest(start + t, "u", r, s, b)
                 for t, r, s, b in zip(times, resources, statuses, sizes))
    return Navigation(nav_id, "u", reqs)


def test_ok_percentage():
    nav = make_nav(list(range(10)), statuses=[200] * 8 + [404, 500])
    fv = compute_features(nav)
    assert fv["NbRequests_OK"] == 8
    assert fv["NbRequests_BAD"] == 2
    assert fv["PRequests_OK"] == 0.8
    assert fv.nb_requests == 10


def test_repetitions():
    resources = ["/a", "/b", "/c", "/d", "/e", "/f", "/g", "/a", "/b", "/a"]
    fv = compute_features(make_nav(list(range(10)), resources=resources))
    assert fv["NbRepetitions"] == 3
    assert fv["PRepetitions"] == 0.3


def test_durations_from_gaps():
    # gaps {30, 60, 0}: the last request lasts 0 s
    fv = compute_features(make_nav([0, 30, 90]))
    assert fv["TotalDuration"] == 90
    assert fv["AvDuration"] == 30
    assert fv["AvDuration_OK"] == 30
    assert fv["MaxDuration_OK"] == 60


def test_ok_only_durations_and_sizes():
    # durations 10, 20, 30, 0; the 20 s request failed
    nav = make_nav([0, 10, 30, 60], statuses=[200, 404, 200, 200], sizes=[100, 0, 300, 500])
    fv = compute_features(nav)
    assert fv["AvDuration_OK"] == pytest.approx((10 + 30 + 0) / 3)
    assert fv["MaxDuration_OK"] == 30
    assert fv["TotalSize"] == 900
    assert fv["AvTotalSize"] == 300


def test_semantic_patterns():
    nav = make_nav([0, 1, 2, 3], resources=["/staff/a.html", "/courses/x", "/img/a.gif", "/staff/b"])
    fv = compute_features(nav, ["/staff/*", "/courses/*"])
    assert fv["NbRequests_SEM"] == 3
    assert fv["PRequests_SEM"] == 0.75
    assert compute_features(nav)["NbRequests_SEM"] == 0


def test_no_successful_request_is_flagged():
    fv = compute_features(make_nav([0, 5, 9], statuses=[404, 404, 500]))
    assert fv["AvDuration_OK"] == 0 and fv["AvTotalSize"] == 0 and fv["MaxDuration_OK"] == 0
    assert NO_OK_REQUESTS in fv.flags


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 300), st.sampled_from([200, 200, 304, 404]),
                          st.sampled_from(["/a", "/b", "/c", "/d"]), st.integers(0, 5000)),
                min_size=1, max_size=40))
def test_table_formulas(rows):
    rows.sort(key=lambda r: r[0])
    times, statuses, resources, sizes = map(list, zip(*rows))
    fv = compute_features(make_nav(times, resources, statuses, sizes), ["/a"])
    n = len(rows)
    assert len(fv.values) == len(VARIABLES) == 13
    assert fv["NbRequests_OK"] + fv["NbRequests_BAD"] == n
    assert fv["PRequests_OK"] == fv["NbRequests_OK"] / n
    assert fv["PRepetitions"] == fv["NbRepetitions"] / n
    assert fv["PRequests_SEM"] == fv["NbRequests_SEM"] / n
    assert fv["AvDuration"] == fv["TotalDuration"] / n
    if fv["NbRequests_OK"]:
        assert fv["AvTotalSize"] == fv["TotalSize"] / fv["NbRequests_OK"]
    for name in ("PRequests_OK", "PRepetitions", "PRequests_SEM"):
        assert 0 <= fv[name] <= 1
    assert all(v >= 0 for v in fv.values)
    assert fv["MaxDuration_OK"] <= fv["TotalDuration"]


def test_equal_timestamps_reorder_only_moves_durations():
    a = make_nav([0, 10, 10, 40], resources=["/a", "/b", "/c", "/d"], statuses=[200, 200, 404, 200])
    b = make_nav([0, 10, 10, 40], resources=["/a", "/c", "/b", "/d"], statuses=[200, 404, 200, 200])
    fa, fb = compute_features(a), compute_features(b)
    same = [v for v in VARIABLES if v not in ("AvDuration_OK", "MaxDuration_OK")]
    assert all(fa[v] == fb[v] for v in same)


class TestSubPeriod:
    def test_month(self):
        nav = make_nav([0], start=ts(2002, 7, 15, 10, 0))
        assert assign_sub_period(nav, "month") == "2002-07"

    def test_day(self):
        assert sub_period_of(ts(2002, 7, 31, 23, 59), "day") == "2002-07-31"

    def test_same_month_same_label(self):
        assert sub_period_of(ts(2002, 7, 1), "month") == sub_period_of(ts(2002, 7, 31, 23, 59, 59), "month")

    def test_week_iso(self):
        assert sub_period_of(ts(2002, 12, 30), "week") == "2003-W01"

    @pytest.mark.parametrize("granularity", ["month", "week", "day"])
    def test_order_follows_time(self, granularity):
        stamps = np.sort(np.random.default_rng(1).integers(ts(2002, 7, 1), ts(2003, 5, 31), 500))
        labels = [sub_period_of(int(t), granularity) for t in stamps]
        assert labels == sorted(labels)

    def test_unknown(self):
        with pytest.raises(ValueError):
            sub_period_of(0, "year")


def fv(i, period, values):
    return FeatureVector(i, period, tuple(float(v) for v in values))


class TestStandardize:
    def test_two_points(self):
        out, stats = standardize([fv(1, "p", [0] * 13), fv(2, "p", [10] * 13)])
        assert out[0].values == (-1.0,) * 13 and out[1].values == (1.0,) * 13
        assert np.allclose(stats.groups["*"][1], 5.0)

    def test_constant_variable(self):
        vectors = [fv(i, "p", [5] + [i] * 12) for i in range(3)]
        out, stats = standardize(vectors)
        assert [v.values[0] for v in out] == [0.0, 0.0, 0.0]
        assert stats.constant("*")[0] and not stats.constant("*")[1:].any()
        assert "NbRequests_OK" in stats.to_dict()["groups"]["*"]["constant"]

    def test_moments_and_idempotence(self):
        rng = np.random.default_rng(0)
        vectors = [fv(i, "p", rng.lognormal(2, 1, 13)) for i in range(50)]
        once, _ = standardize(vectors)
        m = np.array([v.values for v in once])
        assert np.allclose(m.mean(axis=0), 0, atol=1e-9)
        assert np.allclose(m.std(axis=0), 1, atol=1e-9)
        twice, _ = standardize(once)
        assert np.max(np.abs(np.array([v.values for v in twice]) - m)) <= 1e-12

    def test_per_period_scope(self):
        vectors = [fv(1, "a", [0] * 13), fv(2, "a", [2] * 13), fv(3, "b", [10] * 13), fv(4, "b", [30] * 13)]
        out, stats = standardize(vectors, "per-sub-period")
        assert [v.values[0] for v in out] == [-1, 1, -1, 1]
        assert sorted(stats.groups) == ["a", "b"]

    def test_undersized_group_named(self):
        vectors = [fv(1, "a", [0] * 13), fv(2, "a", [1] * 13), fv(3, "b", [1] * 13)]
        with pytest.raises(ValueError, match="'b'"):
            standardize(vectors, "per-sub-period")

    def test_unknown_scope(self):
        with pytest.raises(ValueError):
            standardize([], "local")
