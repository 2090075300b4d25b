import io
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from egolink.ego import (
    apply_split_manifest,
    build_ego_networks,
    class_label,
    enumerate_pairs,
    read_split_manifest,
    sample_egos,
    split_degree_classes,
    write_ego_dump,
    write_split_manifest,
)
from egolink.events import InteractionEvent, Kind, preprocess


def texts_for(edges):
    events = []
    for t, (u, v) in enumerate(edges):
        events.append(InteractionEvent(Kind.TEXT, u, v, 10 * t))
    return preprocess(events)


def star(center, leaves):
    return [(center, leaf) for leaf in leaves]


def test_triangle():
    egos = build_ego_networks(texts_for([(1, 2), (2, 3), (1, 3)]))
    assert [e.ego for e in egos] == [1, 2, 3]
    assert all(e.k == 2 for e in egos)
    truth = {e.ego: e.truth for e in egos}
    assert truth == {1: {(2, 3)}, 2: {(1, 3)}, 3: {(1, 2)}}


def test_star_discards_leaves():
    egos = build_ego_networks(texts_for(star(0, [1, 2, 3])))
    assert len(egos) == 1
    assert egos[0].ego == 0 and egos[0].k == 3 and egos[0].truth == set()


def test_path():
    egos = build_ego_networks(texts_for([(1, 2), (2, 3)]))
    assert [(e.ego, e.k, e.truth) for e in egos] == [(2, 2, set())]


def test_weights_and_series():
    events = [
        InteractionEvent(Kind.CALL, 0, 1, 5, 30),
        InteractionEvent(Kind.CALL, 1, 0, 9, 20),
        InteractionEvent(Kind.TEXT, 0, 1, 7),
        InteractionEvent(Kind.TEXT, 2, 0, 3),
    ]
    (ego,) = build_ego_networks(preprocess(events))
    assert ego.weight == {1: 3, 2: 1}
    assert ego.total_weight == 4 == sum(ego.weight.values())
    assert ego.series(1, Kind.CALL).tolist() == [5, 9]
    assert ego.call_duration(1) == 50 and ego.call_duration(2) == 0


def test_explicit_truth_overrides_clean_links():
    clean = texts_for(star(0, [1, 2, 3]))
    (ego,) = build_ego_networks(clean, truth_links=[(2, 1), (7, 8)])
    assert ego.truth == {(1, 2)}


class TestPairs:
    def test_k3(self):
        (ego,) = build_ego_networks(texts_for(star(0, [1, 2, 3])))
        assert len(enumerate_pairs([ego])) == 3

    def test_many_egos(self):
        edges = [e for c in range(1000) for e in star(c * 100, range(c * 100 + 1, c * 100 + 11))]
        egos = build_ego_networks(texts_for(edges))
        assert len(egos) == 1000
        assert len(enumerate_pairs(egos)) == 45_000

    def test_empty(self):
        assert enumerate_pairs([]) == []

    def test_same_pair_under_two_egos_is_distinct(self):
        egos = build_ego_networks(texts_for([(0, 1), (0, 2), (9, 1), (9, 2)]))
        keys = [p.key for p in enumerate_pairs(egos) if p.ego in (0, 9)]
        assert keys == [(0, 1, 2), (9, 1, 2)]


@settings(max_examples=50, deadline=None)
@given(st.sets(st.tuples(st.integers(0, 12), st.integers(0, 12)).filter(lambda p: p[0] != p[1]), max_size=40))
def test_pair_count_identity_and_labels(edges):
    egos = build_ego_networks(texts_for(sorted(edges)))
    pairs = enumerate_pairs(egos)
    assert len(pairs) == sum(math.comb(e.k, 2) for e in egos)
    for ego in egos:
        positives = sum(p.label for p in pairs if p.ego == ego.ego)
        assert positives == len(ego.truth) <= ego.k * (ego.k - 1) // 2
        assert all(i < j and i in ego.neighbors and j in ego.neighbors for i, j in ego.truth)


def _egos_of_degree(degree, count, start=0):
    edges = []
    for c in range(count):
        center = start + c * 1000
        edges += star(center, range(center + 1, center + 1 + degree))
    return build_ego_networks(texts_for(edges))


class TestSplits:
    def test_proportions(self):
        splits = split_degree_classes(_egos_of_degree(4, 10), seed=1)
        s = splits["4"]
        assert (len(s.learn), len(s.valid), len(s.test)) == (6, 2, 2)

    def test_floor_rounding_keeps_test_nonempty(self):
        s = split_degree_classes(_egos_of_degree(3, 7), seed=1)["3"]
        assert (len(s.learn), len(s.valid), len(s.test)) == (4, 1, 2)

    def test_pooled_high_degrees(self):
        egos = []
        for n, k in enumerate((15, 17, 20)):
            egos += _egos_of_degree(k, 2, start=n * 100_000)
        splits = split_degree_classes(egos, seed=0, min_class_size=1)
        assert list(splits) == ["15+"]
        assert splits["15+"].population == 6
        assert class_label(14) == "14"

    def test_deterministic_and_partitioning(self):
        egos = _egos_of_degree(5, 23)
        a = split_degree_classes(egos, seed=7)["5"]
        b = split_degree_classes(egos, seed=7)["5"]
        ids = lambda s: [[e.ego for e in s[n]] for n in ("learn", "valid", "test")]
        assert ids(a) == ids(b)
        flat = [x for part in ids(a) for x in part]
        assert sorted(flat) == sorted(e.ego for e in egos)
        assert ids(split_degree_classes(egos, seed=8)["5"]) != ids(a)

    def test_small_class_goes_to_learning(self, caplog):
        s = split_degree_classes(_egos_of_degree(2, 3), seed=0)["2"]
        assert len(s.learn) == 3 and not s.valid and not s.test
        assert "only 3" in caplog.text

    def test_bad_proportions(self):
        with pytest.raises(ValueError):
            split_degree_classes([], seed=0, proportions=(0.5, 0.2, 0.2))


def test_manifest_round_trip():
    egos = _egos_of_degree(3, 10) + _egos_of_degree(4, 10, start=10**6)
    splits = split_degree_classes(egos, seed=3)
    buf = io.StringIO()
    write_split_manifest(splits, buf)
    buf.seek(0)
    rebuilt = apply_split_manifest(egos, read_split_manifest(buf))
    for label, split in splits.items():
        for name in ("learn", "valid", "test"):
            assert sorted(e.ego for e in split[name]) == [e.ego for e in rebuilt[label][name]]


def test_ego_dump_format():
    (ego,) = build_ego_networks(texts_for(star(0, [1, 2]) + [(0, 1)]))
    buf = io.StringIO()
    write_ego_dump([ego], buf)
    assert buf.getvalue() == "0,2,1:2,2:1\n"


def test_sample_egos():
    egos = _egos_of_degree(3, 20)
    sample = sample_egos(egos, 5, seed=1)
    assert len(sample) == 5 and sample == sample_egos(egos, 5, seed=1)
    assert sample_egos(egos, 50, seed=1) == egos
