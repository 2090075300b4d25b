import io
import math
from datetime import datetime, timezone

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_ego
from oracles import brute_count
from egolink.events import Kind
from egolink.features import (
    F_MIN,
    WHOLE_TIMELINE,
    LocalClock,
    ScoreParams,
    ScoreTable,
    benchmark_scores,
    builtin_partitions,
    catalogue,
    compute_score_table,
    count_within,
    count_within_many,
    duration_score,
    elapsed_time_score,
    fano_factor,
    format_duration,
    parse_duration,
    parse_score_id,
    profile_score,
    regularity,
    regularity_score,
    score_ego,
)


def ts(year, month, day, hour, minute=0):
    return int(datetime(year, month, day, hour, minute, tzinfo=timezone.utc).timestamp())


class TestBenchmarks:
    def test_direct_formula(self):
        # W = 10 split over three legs: 2, 3, 5
        ego = make_ego({1: {"text": [1, 2]}, 2: {"call": [3], "text": [4, 5]}, 3: {"text": range(10, 15)}})
        assert benchmark_scores(ego, 1, 2) == (6.0, 5.0, 3.0, 2.0, 0.6)

    def test_minimal_ego(self):
        ego = make_ego({1: {"text": [0]}, 2: {"text": [1]}})
        assert benchmark_scores(ego, 1, 2)[4] == 0.5

    def test_equal_weights_tie(self):
        ego = make_ego({n: {"text": [n, n + 10]} for n in range(1, 5)})
        values = {benchmark_scores(ego, i, j) for i in range(1, 5) for j in range(i + 1, 5)}
        assert len(values) == 1


class TestDuration:
    def test_direct_formula(self):
        ego = make_ego(
            {1: {"call": [1]}, 2: {"call": [2]}, 3: {"call": [3, 4]}},
            durations={1: [60], 2: [40], 3: [50, 50]},
        )
        assert duration_score(ego, 1, 2) == pytest.approx(0.06)

    def test_zero_leg(self):
        ego = make_ego({1: {"text": [1]}, 2: {"call": [2]}}, durations={2: [30]})
        assert duration_score(ego, 1, 2) == 0

    def test_texts_only_is_undefined(self):
        ego = make_ego({1: {"text": [1]}, 2: {"text": [2]}})
        assert duration_score(ego, 1, 2) is None
        assert math.isnan(score_ego(ego, ["dur_call"])["dur_call"][0])

    def test_two_neighbors_peak_at_balance(self):
        def score(a, b):
            ego = make_ego({1: {"call": [1]}, 2: {"call": [2]}}, durations={1: [a], 2: [b]})
            return duration_score(ego, 1, 2)

        assert score(50, 50) == 0.25
        assert all(score(a, 100 - a) < 0.25 for a in (1, 20, 49, 51, 99))


class TestRegularity:
    def test_two_gaps(self):
        assert fano_factor(np.array([0, 2, 6])) == pytest.approx(1 / 3)
        ego = make_ego({1: {"text": [0, 2, 6]}, 2: {"text": [0]}})
        assert regularity(ego, 1, Kind.TEXT) == pytest.approx(9)

    def test_periodic_is_clamped(self):
        ego = make_ego({1: {"call": [0, 10, 20, 30]}, 2: {"call": [0, 5, 7]}})
        assert regularity(ego, 1, Kind.CALL) == 4 / F_MIN
        assert math.isfinite(regularity_score(ego, 1, 2, Kind.CALL))

    def test_short_leg_undefined(self):
        ego = make_ego({1: {"text": [0, 3, 9]}, 2: {"text": [0, 5]}, 3: {"text": [1, 2, 4]}})
        assert regularity_score(ego, 1, 2, Kind.TEXT) is None
        assert regularity_score(ego, 2, 3, Kind.TEXT) is None
        assert regularity_score(ego, 1, 3, Kind.TEXT) is not None
        values = score_ego(ego, ["reg_text"])["reg_text"]
        # pairs (1,2), (1,3), (2,3)
        assert [math.isnan(v) for v in values] == [True, False, True]

    def test_fano_needs_two_gaps(self):
        with pytest.raises(ValueError):
            fano_factor(np.array([0, 5]))

    def test_more_regular_scores_higher(self):
        steady = [0, 10, 20, 31, 40]
        bursty = [0, 1, 2, 3, 40]
        ego = make_ego({1: {"text": steady}, 2: {"text": bursty}})
        assert regularity(ego, 1, Kind.TEXT) > regularity(ego, 2, Kind.TEXT)


class TestPartitions:
    parts = builtin_partitions()
    clock = LocalClock()

    def sides(self, t):
        return tuple(self.parts[p].side(t, self.clock) for p in ("pr1", "pr2", "pr3"))

    def test_saturday_morning(self):
        assert self.sides(ts(2024, 1, 6, 10)) == ("B", "A", "A")

    def test_monday_evening(self):
        assert self.sides(ts(2024, 1, 8, 19)) == ("A", "B", "B")

    def test_six_pm_is_evening(self):
        assert self.sides(ts(2024, 1, 8, 18)) == ("A", "B", "B")
        assert self.sides(ts(2024, 1, 8, 17, 59)) == ("A", "A", "A")

    def test_week_boundaries(self):
        assert self.sides(ts(2024, 1, 6, 0))[0] == "B"
        assert self.sides(ts(2024, 1, 5, 23, 59))[0] == "A"
        assert self.sides(ts(2024, 1, 8, 0))[0] == "A"
        assert self.sides(ts(2024, 1, 8, 8)) == ("A", "A", "A")
        assert self.sides(ts(2024, 1, 8, 7, 59)) == ("A", "B", "A")

    def test_timezone_shifts_sides(self):
        # 17:30 UTC on a Friday is 18:30 in Paris (UTC+1 in winter)
        t = ts(2024, 1, 5, 17, 30)
        paris = LocalClock("Europe/Paris")
        assert self.parts["pr3"].side(t, self.clock) == "A"
        assert self.parts["pr3"].side(t, paris) == "B"

    def test_clock_matches_datetime(self):
        rng = np.random.default_rng(0)
        times = rng.integers(1_600_000_000, 1_700_000_000, size=200)
        clock = LocalClock("America/New_York")
        weekday, seconds = clock.local(times)
        from zoneinfo import ZoneInfo

        zone = ZoneInfo("America/New_York")
        for t, wd, sec in zip(times.tolist(), weekday.tolist(), seconds.tolist()):
            moment = datetime.fromtimestamp(t, tz=zone)
            assert wd == moment.weekday()
            assert sec == moment.hour * 3600 + moment.minute * 60 + moment.second


class TestProfile:
    def test_direct_formula(self):
        # weekday = A, weekend = B for pr1; W = 10
        mon, sat = ts(2024, 1, 8, 12), ts(2024, 1, 6, 12)
        ego = make_ego(
            {
                1: {"call": [mon, mon + 1, sat]},
                2: {"call": [mon + 2, sat + 1, sat + 2, sat + 3]},
                3: {"text": [0, 1, 2]},
            }
        )
        assert profile_score(ego, 1, 2, builtin_partitions()["pr1"], Kind.CALL) == 0.5

    def test_orthogonal_profiles(self):
        mon, sat = ts(2024, 1, 8, 12), ts(2024, 1, 6, 12)
        ego = make_ego({1: {"text": [mon, mon + 5]}, 2: {"text": [sat]}})
        assert profile_score(ego, 1, 2, builtin_partitions()["pr1"], Kind.TEXT) == 0

    def test_whole_timeline_is_s5(self):
        ego = make_ego({1: {"text": [1, 2, 3]}, 2: {"text": [5, 9]}, 3: {"text": [4]}})
        assert profile_score(ego, 1, 2, WHOLE_TIMELINE, Kind.TEXT) == benchmark_scores(ego, 1, 2)[4]


class TestElapsedTime:
    def test_direct_count(self):
        ego = make_ego({1: {"call": [0]}, 2: {"call": [1800, 7200]}, 3: {"text": range(100, 107)}})
        assert elapsed_time_score(ego, 1, 2, 3600, Kind.CALL) == 0.1

    def test_window_is_closed(self):
        assert count_within([0], [3600], 3600) == 1
        assert count_within([0], [3601], 3600) == 0

    def test_identical_series(self):
        series = [0, 5, 5, 17, 100]
        assert count_within(series, series, 10**9) == 25

    def test_rejects_nonpositive_d(self):
        ego = make_ego({1: {"call": [0]}, 2: {"call": [1]}})
        with pytest.raises(ValueError):
            elapsed_time_score(ego, 1, 2, 0, Kind.CALL)

    def test_empty_leg(self):
        assert count_within([], [1, 2], 5) == 0
        assert count_within_many(np.array([], dtype=np.int64), np.array([1]), np.array([5])).tolist() == [0]

    @settings(max_examples=300, deadline=None)
    @given(
        st.lists(st.integers(0, 200), max_size=30).map(sorted),
        st.lists(st.integers(0, 200), max_size=30).map(sorted),
        st.lists(st.integers(1, 250), min_size=1, max_size=5),
    )
    def test_matches_brute_force(self, a, b, ds):
        expected = [brute_count(a, b, d) for d in ds]
        assert [count_within(a, b, d) for d in ds] == expected
        assert count_within_many(np.array(a, dtype=np.int64), np.array(b, dtype=np.int64), np.array(ds)).tolist() == expected
        assert count_within(b, a, ds[0]) == expected[0]

    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(st.integers(0, 10_000), min_size=1, max_size=20).map(sorted),
        st.lists(st.integers(0, 10_000), min_size=1, max_size=20).map(sorted),
        st.lists(st.integers(1, 12_000), min_size=2, max_size=6).map(sorted),
    )
    def test_monotone_in_d_and_limit(self, a, b, ds):
        ego = make_ego({1: {"text": a}, 2: {"text": b}})
        values = [elapsed_time_score(ego, 1, 2, d, Kind.TEXT) for d in ds]
        assert values == sorted(values)
        limit = elapsed_time_score(ego, 1, 2, 10_000, Kind.TEXT)
        assert limit == len(a) * len(b) / (len(a) + len(b))


class TestScoreIds:
    def test_catalogue(self):
        ids = catalogue()
        assert len(ids) == 18 and len(set(ids)) == 18
        assert ids[:4] == ["s5", "dur_call", "reg_call", "reg_text"]
        assert "d168h_text" in ids and "pr3_call" in ids

    @pytest.mark.parametrize("text,seconds", [("1h", 3600), ("90m", 5400), ("45", 45), ("2d", 172800), ("1w", 604800)])
    def test_durations(self, text, seconds):
        assert parse_duration(text) == seconds

    def test_format_round_trip(self):
        for seconds in (3600, 5400, 45, 7 * 86400):
            assert parse_duration(format_duration(seconds)) == seconds

    @pytest.mark.parametrize("bad", ["s6", "dur_text", "pr4_call", "d1h_fax", "d0h_call", "x"])
    def test_unknown_ids(self, bad):
        with pytest.raises(ValueError):
            parse_score_id(bad)


def random_ego(rng, k, span=20 * 86400):
    legs = {}
    for nb in range(1, k + 1):
        legs[nb] = {
            kind: rng.integers(0, span, size=rng.integers(0, 12)).tolist() for kind in ("call", "text")
        }
        if not legs[nb]["call"] and not legs[nb]["text"]:
            legs[nb]["text"] = [int(rng.integers(0, span))]
    durations = {nb: rng.integers(0, 600, size=len(v["call"])).tolist() for nb, v in legs.items()}
    return make_ego(legs, durations)


class TestScoreEgo:
    def test_matches_scalar_functions(self):
        rng = np.random.default_rng(4)
        parts = builtin_partitions()
        for _ in range(20):
            ego = random_ego(rng, int(rng.integers(2, 7)))
            ids = catalogue() + ["s1", "s2", "s3", "s4"]
            out = score_ego(ego, ids)
            for n, (i, j) in enumerate((i, j) for a, i in enumerate(ego.neighbors) for j in ego.neighbors[a + 1 :]):
                bench = benchmark_scores(ego, i, j)
                for idx in range(5):
                    assert out[f"s{idx + 1}"][n] == bench[idx]
                dur = duration_score(ego, i, j)
                assert (math.isnan(out["dur_call"][n]) and dur is None) or out["dur_call"][n] == dur
                for kind in Kind:
                    reg = regularity_score(ego, i, j, kind)
                    got = out[f"reg_{kind.value}"][n]
                    assert (math.isnan(got) and reg is None) or got == reg
                    for p in ("pr1", "pr2", "pr3"):
                        assert out[f"{p}_{kind.value}"][n] == profile_score(ego, i, j, parts[p], kind)
                    for d in ("1h", "3h", "24h", "168h"):
                        assert out[f"d{d}_{kind.value}"][n] == elapsed_time_score(ego, i, j, parse_duration(d), kind)

    def test_symmetry(self):
        rng = np.random.default_rng(5)
        parts = builtin_partitions()
        for _ in range(20):
            ego = random_ego(rng, 4)
            for i, j in ((1, 2), (2, 4), (1, 3)):
                assert benchmark_scores(ego, i, j) == benchmark_scores(ego, j, i)
                assert duration_score(ego, i, j) == duration_score(ego, j, i)
                for kind in Kind:
                    assert regularity_score(ego, i, j, kind) == regularity_score(ego, j, i, kind)
                    assert elapsed_time_score(ego, i, j, 3600, kind) == elapsed_time_score(ego, j, i, 3600, kind)
                    for p in parts.values():
                        assert profile_score(ego, i, j, p, kind) == profile_score(ego, j, i, p, kind)

    def test_values_nonnegative_and_finite(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            out = score_ego(random_ego(rng, 5), catalogue())
            for values in out.values():
                present = [v for v in values if not math.isnan(v)]
                assert all(math.isfinite(v) and v >= 0 for v in present)

    def test_s1_s4_s5_order_agrees_within_ego(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            out = score_ego(random_ego(rng, 6), ["s1", "s4", "s5"])
            orders = [np.argsort(-np.array(out[s]), kind="stable").tolist() for s in ("s1", "s4", "s5")]
            assert orders[0] == orders[1] == orders[2]

    def test_timezone_param_reaches_profiles(self):
        t = ts(2024, 1, 5, 17, 30)
        ego = make_ego({1: {"call": [t]}, 2: {"call": [t + 60]}})
        utc = score_ego(ego, ["pr3_call"])["pr3_call"]
        paris = score_ego(ego, ["pr3_call"], ScoreParams(tz="Europe/Paris"))["pr3_call"]
        assert utc == paris == [0.5]
        ego = make_ego({1: {"call": [t]}, 2: {"call": [t + 3600]}})
        assert score_ego(ego, ["pr3_call"])["pr3_call"] == [0.0]
        assert score_ego(ego, ["pr3_call"], ScoreParams(tz="Europe/Paris"))["pr3_call"] == [0.5]


class TestScoreTable:
    def test_round_trip_wide(self):
        rng = np.random.default_rng(8)
        egos = [random_ego(rng, 4) for _ in range(3)]
        for n, ego in enumerate(egos):
            ego.ego = n
        table = compute_score_table(egos, catalogue())
        assert len(table) == 18
        buf = io.StringIO()
        table.write_wide(buf)
        buf.seek(0)
        again = ScoreTable.read_wide(buf)
        assert again.pairs == table.pairs
        for sid, col in table.values.items():
            np.testing.assert_array_equal(again.values[sid], col)

    def test_long_form_skips_undefined(self):
        ego = make_ego({1: {"text": [1]}, 2: {"text": [2]}})
        table = compute_score_table([ego], ["s5", "dur_call"])
        buf = io.StringIO()
        table.write_long(buf)
        lines = buf.getvalue().splitlines()
        assert lines == ["ego,i,j,label,score_id,value", "0,1,2,0,s5,0.5"]

    def test_unknown_score_rejected(self):
        with pytest.raises(ValueError):
            compute_score_table([], ["s9"])
