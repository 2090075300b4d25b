import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from egolink.ego import CandidatePair
from egolink.features import ScoreTable
from egolink.ranking import Ranking, build_ranking, spearman_matrix


def table(values, score_id="x"):
    pairs = [CandidatePair(0, n, n + 100, False) for n in range(len(values))]
    return ScoreTable(pairs, {score_id: np.array(values, dtype=np.float64)})


def brute_spearman(xs, ys):
    """Pearson correlation of average ranks, written out longhand."""

    def avg_ranks(values):
        ranks = []
        for v in values:
            below = sum(1 for u in values if u < v)
            equal = sum(1 for u in values if u == v)
            ranks.append(below + (equal + 1) / 2)
        return ranks

    rx, ry = avg_ranks(xs), avg_ranks(ys)
    n = len(xs)
    mx, my = sum(rx) / n, sum(ry) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    return cov / math.sqrt(vx * vy)


def ranking(id, keys):
    return Ranking(id, [(0, k, k + 100) for k in keys])


class TestBuildRanking:
    def test_tie_break_by_key(self):
        r = build_ranking(table([0.6, 0.1, 0.6]), "x")
        assert r.entries == [(0, 0, 100), (0, 2, 102), (0, 1, 101)]
        assert r.scores.tolist() == [0.6, 0.6, 0.1]

    def test_all_undefined(self):
        r = build_ranking(table([math.nan, math.nan]), "x")
        assert r.entries == [] and r.universe_size == 2

    def test_single_pair(self):
        assert len(build_ranking(table([3.0]), "x")) == 1

    def test_undefined_pairs_absent(self):
        r = build_ranking(table([1.0, math.nan, 2.0]), "x")
        assert r.entries == [(0, 2, 102), (0, 0, 100)]
        assert r.universe_size == 3

    def test_ego_breaks_ties_first(self):
        pairs = [CandidatePair(5, 1, 2, False), CandidatePair(3, 7, 8, False), CandidatePair(3, 1, 9, False)]
        r = build_ranking(ScoreTable(pairs, {"x": np.ones(3)}), "x")
        assert r.entries == [(3, 1, 9), (3, 7, 8), (5, 1, 2)]

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.one_of(st.floats(0, 10, allow_nan=False), st.just(math.nan), st.sampled_from([1.0, 2.0])), max_size=40))
    def test_invariants(self, values):
        r = build_ranking(table(values), "x")
        assert len(set(r.entries)) == len(r.entries) == sum(not math.isnan(v) for v in values)
        assert len(r) <= r.universe_size
        assert all(a >= b for a, b in zip(r.scores, r.scores[1:]))
        again = build_ranking(table(values), "x")
        assert again.entries == r.entries

    def test_csv_round_trip(self):
        r = build_ranking(table([0.25, 1 / 3, 0.1]), "x")
        buf = io.StringIO()
        r.write_csv(buf)
        assert buf.getvalue().splitlines()[1] == f"1,0,1,101,{1 / 3!r}"
        buf.seek(0)
        back = Ranking.read_csv(buf, "x", universe_size=3)
        assert back.entries == r.entries and back.scores.tolist() == r.scores.tolist()

    def test_duplicates_detected(self):
        with pytest.raises(ValueError):
            Ranking("x", [(0, 1, 2), (0, 1, 2)]).positions


class TestSpearman:
    def test_identical(self):
        m = spearman_matrix([ranking("a", [1, 2, 3, 4]), ranking("b", [1, 2, 3, 4])])
        assert m.rho[0, 1] == pytest.approx(1.0)

    def test_reversal(self):
        m = spearman_matrix([ranking("a", [1, 2, 3, 4, 5]), ranking("b", [5, 4, 3, 2, 1])])
        assert m.rho[0, 1] == pytest.approx(-1.0)

    def test_three_items(self):
        m = spearman_matrix([ranking("a", [1, 2, 3]), ranking("b", [1, 3, 2])])
        assert m.rho[0, 1] == pytest.approx(0.5)
        assert brute_spearman([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5)

    def test_unranked_pairs_share_bottom_rank(self):
        a, b = ranking("a", [1, 2, 3, 4]), ranking("b", [2, 1])
        m = spearman_matrix([a, b])
        # union order (1,2,3,4): ranks in b are 2,1,3,3
        assert m.rho[0, 1] == pytest.approx(brute_spearman([1, 2, 3, 4], [2, 1, 3, 3]))

    def test_short_ranking_is_missing(self):
        m = spearman_matrix([ranking("a", [1, 2, 3]), ranking("b", [1]), ranking("c", [3, 2, 1])])
        assert math.isnan(m.rho[1, 1]) and math.isnan(m.rho[0, 1]) and math.isnan(m.rho[1, 2])
        assert m.rho[0, 0] == 1.0 and m.rho[0, 2] == pytest.approx(-1.0)

    def test_needs_two(self):
        with pytest.raises(ValueError):
            spearman_matrix([ranking("a", [1, 2])])

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.permutations(range(8)).flatmap(lambda p: st.integers(2, 8).map(lambda n: p[:n])), min_size=2, max_size=4))
    def test_matrix_properties_and_oracle(self, perms):
        rankings = [ranking(f"r{n}", p) for n, p in enumerate(perms)]
        m = spearman_matrix(rankings)
        assert np.allclose(m.rho, m.rho.T, equal_nan=True)
        assert np.all(np.diag(m.rho) == 1.0)
        assert np.all(np.abs(m.rho[~np.isnan(m.rho)]) <= 1 + 1e-12)
        a, b = perms[0], perms[1]
        union = list(dict.fromkeys(list(a) + list(b)))
        ra = [a.index(x) + 1 if x in a else len(a) + 1 for x in union]
        rb = [b.index(x) + 1 if x in b else len(b) + 1 for x in union]
        if len(set(ra)) > 1 and len(set(rb)) > 1:
            assert m.rho[0, 1] == pytest.approx(brute_spearman(ra, rb))

    def test_csv(self):
        m = spearman_matrix([ranking("a", [1, 2, 3]), ranking("b", [1, 3, 2])])
        buf = io.StringIO()
        m.write_csv(buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "id,a,b"
        assert lines[1].startswith("a,1.0,0.5")
