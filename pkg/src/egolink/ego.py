"""Ego-network construction, candidate pairs, and degree-class splits."""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, NamedTuple, TextIO

import numpy as np

from egolink.events import KINDS, CleanInteractionSet, Kind, Pair, undirected

log = logging.getLogger(__name__)

SPLIT_SETS = ("learn", "valid", "test")
DEFAULT_PROPORTIONS = (0.6, 0.2, 0.2)
POOL_DEGREE = 15


@dataclass
class EgoNetwork:
    """An ego, its neighbors, and the ego-neighbor interaction series.

    ``times[kind][i]`` is the sorted array of timestamps of ego-``i`` events
    of that kind; ``durations[i]`` is aligned with ``times[Kind.CALL][i]``.
    """

    ego: int
    neighbors: tuple[int, ...]
    times: dict[Kind, dict[int, np.ndarray]]
    durations: dict[int, np.ndarray]
    truth: set[Pair] = field(default_factory=set)

    def __post_init__(self) -> None:
        self.kind_weight = {
            kind: {i: len(self.times[kind].get(i, ())) for i in self.neighbors} for kind in KINDS
        }
        self.weight = {i: sum(self.kind_weight[kind][i] for kind in KINDS) for i in self.neighbors}
        self.total_weight = sum(self.weight.values())

    @property
    def k(self) -> int:
        return len(self.neighbors)

    def series(self, i: int, kind: Kind) -> np.ndarray:
        return self.times[kind].get(i, _EMPTY)

    def call_duration(self, i: int) -> int:
        d = self.durations.get(i)
        return int(d.sum()) if d is not None else 0


_EMPTY = np.empty(0, dtype=np.int64)


class CandidatePair(NamedTuple):
    ego: int
    i: int
    j: int
    label: bool

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.ego, self.i, self.j)


def build_ego_networks(
    clean: CleanInteractionSet,
    truth_links: Iterable[Pair] | None = None,
    min_degree: int = 2,
) -> list[EgoNetwork]:
    """One ego-network per node with at least ``min_degree`` neighbors.

    Ground truth defaults to the links of the clean network; an explicit
    ``truth_links`` collection (e.g. a planted truth file) replaces it.
    """
    links = clean.links if truth_links is None else {undirected(*p) for p in truth_links}
    n = len(clean.events)
    if n == 0:
        return []
    src = np.fromiter((e.source for e in clean.events), dtype=np.int64, count=n)
    dst = np.fromiter((e.destination for e in clean.events), dtype=np.int64, count=n)
    ts = np.fromiter((e.timestamp for e in clean.events), dtype=np.int64, count=n)
    is_call = np.fromiter((e.kind is Kind.CALL for e in clean.events), dtype=bool, count=n)
    dur = np.fromiter((e.duration or 0 for e in clean.events), dtype=np.int64, count=n)

    # every event seen from both endpoints
    node = np.concatenate([src, dst])
    other = np.concatenate([dst, src])
    ts, is_call, dur = np.tile(ts, 2), np.tile(is_call, 2), np.tile(dur, 2)
    order = np.lexsort((ts, ~is_call, other, node))
    node, other, ts, is_call, dur = node[order], other[order], ts[order], is_call[order], dur[order]

    # runs of identical (node, other, kind)
    change = np.flatnonzero(
        (node[1:] != node[:-1]) | (other[1:] != other[:-1]) | (is_call[1:] != is_call[:-1])
    ) + 1
    bounds = np.concatenate([[0], change, [len(node)]])
    node_starts = np.concatenate([[0], np.flatnonzero(node[bounds[1:-1]] != node[bounds[:-2]]) + 1, [len(bounds) - 1]])

    egos = []
    for a, b in zip(node_starts[:-1], node_starts[1:]):
        runs = bounds[a : b + 1]
        neighbors = tuple(sorted({int(other[r]) for r in runs[:-1]}))
        if len(neighbors) < min_degree:
            continue
        times: dict[Kind, dict[int, np.ndarray]] = {kind: {} for kind in KINDS}
        durations: dict[int, np.ndarray] = {}
        for lo, hi in zip(runs[:-1], runs[1:]):
            nb = int(other[lo])
            if is_call[lo]:
                times[Kind.CALL][nb] = ts[lo:hi]
                durations[nb] = dur[lo:hi]
            else:
                times[Kind.TEXT][nb] = ts[lo:hi]
        truth = {(i, j) for i, j in combinations(neighbors, 2) if (i, j) in links}
        egos.append(EgoNetwork(int(node[runs[0]]), neighbors, times, durations, truth))
    return egos


def enumerate_pairs(egos: Iterable[EgoNetwork]) -> list[CandidatePair]:
    """All neighbor pairs of every ego, keyed by (ego, i, j) with i < j."""
    return [
        CandidatePair(ego.ego, i, j, (i, j) in ego.truth)
        for ego in egos
        for i, j in combinations(ego.neighbors, 2)
    ]


def class_label(k: int, pool_degree: int = POOL_DEGREE) -> str:
    return f"{pool_degree}+" if k >= pool_degree else str(k)


def class_sort_key(label: str) -> int:
    return int(label.rstrip("+"))


@dataclass
class DegreeClassSplit:
    class_label: str
    learn: list[EgoNetwork]
    valid: list[EgoNetwork]
    test: list[EgoNetwork]

    def __getitem__(self, name: str) -> list[EgoNetwork]:
        if name not in SPLIT_SETS:
            raise KeyError(name)
        return getattr(self, name)

    @property
    def population(self) -> int:
        return len(self.learn) + len(self.valid) + len(self.test)


def split_degree_classes(
    egos: Iterable[EgoNetwork],
    seed: int,
    proportions: tuple[float, float, float] = DEFAULT_PROPORTIONS,
    pool_degree: int = POOL_DEGREE,
    min_class_size: int = 5,
) -> dict[str, DegreeClassSplit]:
    """Group egos by degree and split each class into learn/valid/test.

    Learning and validation sizes are floored; the remainder goes to test.
    Classes smaller than ``min_class_size`` go entirely to learning.
    """
    if not math.isclose(sum(proportions), 1.0):
        raise ValueError(f"split proportions must sum to 1, got {proportions}")

    by_class: dict[str, list[EgoNetwork]] = defaultdict(list)
    for ego in egos:
        by_class[class_label(ego.k, pool_degree)].append(ego)

    splits = {}
    for label in sorted(by_class, key=class_sort_key):
        members = sorted(by_class[label], key=lambda e: e.ego)
        n = len(members)
        if n < min_class_size:
            log.warning("degree class %s has only %d ego(s); all assigned to learning", label, n)
            splits[label] = DegreeClassSplit(label, members, [], [])
            continue
        rng = np.random.default_rng(np.random.SeedSequence([seed, class_sort_key(label)]))
        shuffled = [members[idx] for idx in rng.permutation(n)]
        n_learn = math.floor(proportions[0] * n)
        n_valid = math.floor(proportions[1] * n)
        splits[label] = DegreeClassSplit(
            label,
            shuffled[:n_learn],
            shuffled[n_learn : n_learn + n_valid],
            shuffled[n_learn + n_valid :],
        )
    return splits


def sample_egos(egos: list[EgoNetwork], n: int, seed: int) -> list[EgoNetwork]:
    """Uniform sample of at most ``n`` egos, returned in ego-id order."""
    if n >= len(egos):
        return list(egos)
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(egos), size=n, replace=False)
    return sorted((egos[idx] for idx in chosen), key=lambda e: e.ego)


def write_ego_dump(egos: Iterable[EgoNetwork], fh: TextIO) -> None:
    for ego in egos:
        legs = ",".join(f"{i}:{ego.weight[i]}" for i in ego.neighbors)
        fh.write(f"{ego.ego},{ego.k},{legs}\n")


def write_split_manifest(splits: Mapping[str, DegreeClassSplit], fh: TextIO) -> None:
    fh.write("ego,class,set\n")
    rows = [
        (ego.ego, label, name)
        for label, split in splits.items()
        for name in SPLIT_SETS
        for ego in split[name]
    ]
    for ego_id, label, name in sorted(rows):
        fh.write(f"{ego_id},{label},{name}\n")


def read_split_manifest(fh: TextIO) -> dict[int, tuple[str, str]]:
    header = fh.readline().strip()
    if header != "ego,class,set":
        raise ValueError(f"unexpected split manifest header {header!r}")
    out = {}
    for line in fh:
        if not line.strip():
            continue
        ego, label, name = line.strip().split(",")
        if name not in SPLIT_SETS:
            raise ValueError(f"unknown split set {name!r}")
        out[int(ego)] = (label, name)
    return out


def apply_split_manifest(
    egos: Iterable[EgoNetwork], manifest: Mapping[int, tuple[str, str]]
) -> dict[str, DegreeClassSplit]:
    """Rebuild splits from a manifest; egos absent from it are ignored."""
    splits: dict[str, DegreeClassSplit] = {}
    for ego in sorted(egos, key=lambda e: e.ego):
        if ego.ego not in manifest:
            continue
        label, name = manifest[ego.ego]
        split = splits.setdefault(label, DegreeClassSplit(label, [], [], []))
        split[name].append(ego)
    return dict(sorted(splits.items(), key=lambda kv: class_sort_key(kv[0])))
