"""Rank aggregation: Borda, Medrank, and the supervised greedy merge."""

from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Collection, Iterable, Sequence

import numpy as np

from egolink.evaluation import auc_pr, pr_curve
from egolink.ranking import PairKey, Ranking

MODEL_FORMAT_VERSION = 1
DEFAULT_G_GRID = (1, 2, 5, 10, 25, 50, 100)


def _check_inputs(rankings: Sequence[Ranking]) -> None:
    if not rankings:
        raise ValueError("no rankings to aggregate")


def borda(rankings: Sequence[Ranking], id: str = "borda") -> Ranking:
    """Borda consensus: each ranking awards ``len(r) - rank`` (1-based rank).

    Pairs a ranking does not contain get nothing from it.
    """
    _check_inputs(rankings)
    points: dict[PairKey, int] = defaultdict(int)
    for r in rankings:
        n = len(r)
        for pos, key in enumerate(r.entries):
            points[key] += n - 1 - pos
    order = sorted(points, key=lambda key: (-points[key], key))
    universe = max(r.universe_size for r in rankings)
    return Ranking(id, order, np.array([points[k] for k in order], dtype=np.float64), universe)


def medrank(rankings: Sequence[Ranking], id: str = "medrank") -> Ranking:
    """Median-rank consensus by a simultaneous top-down sweep.

    A pair is emitted at the first depth where it has been seen in at least
    half of the rankings that contain it. Pairs emitted at the same depth
    are ordered by seen-count (descending), then by pair key.
    """
    _check_inputs(rankings)
    alpha: Counter[PairKey] = Counter()
    for r in rankings:
        alpha.update(r.entries)
    need = {key: math.ceil(a / 2) for key, a in alpha.items()}

    seen: Counter[PairKey] = Counter()
    emitted: set[PairKey] = set()
    out: list[PairKey] = []
    depth_max = max(len(r) for r in rankings)
    for depth in range(depth_max):
        fresh = []
        for r in rankings:
            if depth >= len(r):
                continue
            key = r.entries[depth]
            seen[key] += 1
            if key not in emitted and seen[key] >= need[key]:
                emitted.add(key)
                fresh.append(key)
        fresh.sort(key=lambda key: (-seen[key], key))
        out.extend(fresh)
    universe = max(r.universe_size for r in rankings)
    return Ranking(id, out, None, universe)


@dataclass
class MergeModel:
    """Learned merge for one degree class.

    ``selection_sequence[n]`` is the id of the ranking that supplied the
    (n+1)-th merged pair on the learning set.
    """

    class_label: str
    g: int
    selection_sequence: list[str]
    ranking_ids: list[str]
    version: int = field(default=MODEL_FORMAT_VERSION)

    def counts_at(self, n: int | None = None) -> dict[str, int]:
        seq = self.selection_sequence if n is None else self.selection_sequence[:n]
        counts = Counter(seq)
        return {rid: counts.get(rid, 0) for rid in self.ranking_ids}

    def phi_at(self, n: int) -> dict[str, float]:
        """Fraction of the first ``n`` merged pairs drawn from each ranking."""
        if n <= 0:
            raise ValueError("prefix length must be positive")
        n = min(n, len(self.selection_sequence))
        return {rid: c / n for rid, c in self.counts_at(n).items()}

    @property
    def phi(self) -> dict[str, float]:
        return self.phi_at(len(self.selection_sequence)) if self.selection_sequence else {}

    def to_json(self) -> str:
        return json.dumps(
            {
                "version": self.version,
                "class_label": self.class_label,
                "g": self.g,
                "ranking_ids": self.ranking_ids,
                "selection_sequence": self.selection_sequence,
            },
            indent=None,
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, text: str) -> "MergeModel":
        data = json.loads(text)
        if data.get("version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {data.get('version')!r}")
        return cls(
            class_label=data["class_label"],
            g=int(data["g"]),
            selection_sequence=list(data["selection_sequence"]),
            ranking_ids=list(data["ranking_ids"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "MergeModel":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


class _Window:
    """Next ``g`` not-yet-merged entries of one ranking and their true positives."""

    __slots__ = ("entries", "labels", "g", "end", "size", "tp", "head")

    def __init__(self, entries: list[PairKey], labels: list[bool], g: int) -> None:
        self.entries = entries
        self.labels = labels
        self.g = g
        self.end = -1
        self.size = 0
        self.tp = 0
        self.head = 0

    def fill(self, merged: set[PairKey]) -> None:
        n = len(self.entries)
        while self.size < self.g and self.end + 1 < n:
            self.end += 1
            if self.entries[self.end] not in merged:
                self.size += 1
                self.tp += self.labels[self.end]

    def top(self, merged: set[PairKey]) -> PairKey:
        while self.entries[self.head] in merged:
            self.head += 1
        return self.entries[self.head]

    def drop(self, pos: int) -> None:
        if pos <= self.end:
            self.size -= 1
            self.tp -= self.labels[pos]


def rankmerge_learn(
    rankings: Sequence[Ranking],
    positives: Collection[PairKey],
    g: int,
    class_label: str = "",
    max_steps: int | None = None,
) -> MergeModel:
    """Greedy sliding-window merge on a labelled set.

    At each step, every ranking's window holds its next ``g`` unmerged
    entries; the ranking whose window has the most true positives (lowest
    index on ties) gives up its top unmerged pair. Runs until every ranked
    pair is merged or ``max_steps`` is reached.
    """
    _check_inputs(rankings)
    if g < 1:
        raise ValueError(f"g must be >= 1, got {g}")
    ids = [r.id for r in rankings]
    if len(set(ids)) != len(ids):
        raise ValueError("ranking ids must be unique")

    windows = [_Window(r.entries, [key in positives for key in r.entries], g) for r in rankings]
    occurrences: dict[PairKey, list[tuple[int, int]]] = defaultdict(list)
    for kappa, r in enumerate(rankings):
        for pos, key in enumerate(r.entries):
            occurrences[key].append((kappa, pos))

    total = len(occurrences) if max_steps is None else min(max_steps, len(occurrences))
    merged: set[PairKey] = set()
    sequence: list[str] = []
    for w in windows:
        w.fill(merged)

    for _ in range(total):
        best, best_tp = -1, -1
        for kappa, w in enumerate(windows):
            if w.size and w.tp > best_tp:
                best, best_tp = kappa, w.tp
        if best < 0:
            break
        key = windows[best].top(merged)
        merged.add(key)
        sequence.append(ids[best])
        for kappa, pos in occurrences[key]:
            w = windows[kappa]
            w.drop(pos)
            w.fill(merged)

    return MergeModel(class_label=class_label, g=g, selection_sequence=sequence, ranking_ids=ids)


def rankmerge_apply(model: MergeModel, rankings: Sequence[Ranking], id: str = "rankmerge") -> Ranking:
    """Replay a learned selection sequence on unseen rankings.

    When the ranking chosen at a step is exhausted, the next non-exhausted
    ranking later in the sequence is used; past the last such one, the
    ranking the model drew from most often. The output holds
    ``min(|union of pairs|, len(sequence))`` pairs.
    """
    by_id = {r.id: r for r in rankings}
    if set(by_id) != set(model.ranking_ids) or len(by_id) != len(rankings):
        raise ValueError(
            f"ranking ids {sorted(by_id)} do not match model ids {sorted(model.ranking_ids)}"
        )
    heads = dict.fromkeys(by_id, 0)
    merged: set[PairKey] = set()

    def exhausted(rid: str) -> bool:
        entries = by_id[rid].entries
        h = heads[rid]
        while h < len(entries) and entries[h] in merged:
            h += 1
        heads[rid] = h
        return h == len(entries)

    union = len({key for r in rankings for key in r.entries})
    seq = model.selection_sequence
    target = min(union, len(seq))
    counts = model.counts_at()
    fallback_order = sorted(model.ranking_ids, key=lambda rid: (-counts[rid], model.ranking_ids.index(rid)))

    out: list[PairKey] = []
    sources: list[str] = []
    ahead = 0
    for n in range(len(seq)):
        if len(out) == target:
            break
        rid = seq[n]
        if exhausted(rid):
            ahead = max(ahead, n + 1)
            while ahead < len(seq) and exhausted(seq[ahead]):
                ahead += 1
            if ahead < len(seq):
                rid = seq[ahead]
            else:
                rid = next(r for r in fallback_order if not exhausted(r))
        key = by_id[rid].entries[heads[rid]]
        merged.add(key)
        out.append(key)
        sources.append(rid)
    universe = max(r.universe_size for r in rankings)
    return Ranking(id, out, None, universe, sources=sources)


def g_grid_scores(
    rankings_learn: Sequence[Ranking],
    positives_learn: Collection[PairKey],
    rankings_valid: Sequence[Ranking],
    positives_valid: Collection[PairKey],
    grid: Iterable[int] = DEFAULT_G_GRID,
    n_positives_valid: int | None = None,
) -> dict[int, float]:
    """Validation AUC-PR of the merge learned with each g in ``grid``."""
    grid = sorted(set(grid))
    if not grid:
        raise ValueError("empty g grid")
    scores = {}
    for g in grid:
        model = rankmerge_learn(rankings_learn, positives_learn, g)
        merged = rankmerge_apply(model, rankings_valid)
        curve = pr_curve(merged, positives_valid, n_positives_valid)
        scores[g] = auc_pr(curve)
    return scores


def tune_g(
    rankings_learn: Sequence[Ranking],
    positives_learn: Collection[PairKey],
    rankings_valid: Sequence[Ranking],
    positives_valid: Collection[PairKey],
    grid: Iterable[int] = DEFAULT_G_GRID,
    n_positives_valid: int | None = None,
) -> int:
    """Grid value with the best validation AUC-PR; the smaller g wins ties."""
    scores = g_grid_scores(rankings_learn, positives_learn, rankings_valid, positives_valid, grid, n_positives_valid)
    best = max(scores.values())
    return min(g for g, s in scores.items() if s == best)
