"""Rankings over candidate pairs and Spearman correlation between them."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np
from scipy.stats import spearmanr

from egolink.features import ScoreTable

PairKey = tuple[int, int, int]


@dataclass
class Ranking:
    """Candidate pairs ordered best first. Pairs with undefined score are absent."""

    id: str
    entries: list[PairKey]
    scores: np.ndarray | None = None
    universe_size: int = 0
    # merge output only: which input ranking supplied each entry
    sources: list[str] | None = None
    _positions: dict[PairKey, int] | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.universe_size < len(self.entries):
            self.universe_size = len(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def positions(self) -> dict[PairKey, int]:
        """0-based position of every ranked pair."""
        if self._positions is None:
            self._positions = {key: pos for pos, key in enumerate(self.entries)}
            if len(self._positions) != len(self.entries):
                raise ValueError(f"ranking {self.id!r} has duplicate entries")
        return self._positions

    def write_csv(self, fh: TextIO) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["rank", "ego", "i", "j", "score"])
        for pos, (ego, i, j) in enumerate(self.entries):
            score = "" if self.scores is None else repr(float(self.scores[pos]))
            writer.writerow([pos + 1, ego, i, j, score])

    @classmethod
    def read_csv(cls, fh: TextIO, id: str, universe_size: int = 0) -> "Ranking":
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["rank", "ego", "i", "j", "score"]:
            raise ValueError(f"unexpected ranking header {header}")
        entries, scores = [], []
        for row in reader:
            entries.append((int(row[1]), int(row[2]), int(row[3])))
            scores.append(float(row[4]) if row[4] else math.nan)
        has_scores = bool(scores) and not all(math.isnan(s) for s in scores)
        return cls(id, entries, np.array(scores) if has_scores else None, universe_size)


def build_ranking(table: ScoreTable, score_id: str) -> Ranking:
    """Sort defined scores descending; ties broken by (ego, i, j)."""
    values = table.values[score_id]
    keep = ~np.isnan(values)
    if not keep.any():
        return Ranking(score_id, [], np.empty(0), len(table))
    idx = np.flatnonzero(keep)
    ego = np.array([table.pairs[k].ego for k in idx])
    i = np.array([table.pairs[k].i for k in idx])
    j = np.array([table.pairs[k].j for k in idx])
    v = values[idx]
    order = np.lexsort((j, i, ego, -v))
    entries = [table.pairs[idx[o]].key for o in order]
    return Ranking(score_id, entries, v[order], len(table))


@dataclass
class CorrelationMatrix:
    ids: list[str]
    rho: np.ndarray

    def write_csv(self, fh: TextIO) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", *self.ids])
        for rid, row in zip(self.ids, self.rho):
            writer.writerow([rid, *("" if math.isnan(x) else repr(float(x)) for x in row)])


def spearman_matrix(rankings: Sequence[Ranking]) -> CorrelationMatrix:
    """Pairwise Spearman rho over the union of the two rankings' pairs.

    A pair missing from one ranking takes the tied rank ``len(ranking) + 1``
    there. Rankings with fewer than two entries give NaN rows and columns.
    """
    if len(rankings) < 2:
        raise ValueError("need at least two rankings")
    universe: dict[PairKey, int] = {}
    for r in rankings:
        for key in r.entries:
            universe.setdefault(key, len(universe))
    n_univ = len(universe)

    ranks, present = [], []
    for r in rankings:
        rank = np.full(n_univ, len(r) + 1, dtype=np.float64)
        mask = np.zeros(n_univ, dtype=bool)
        idx = np.fromiter((universe[key] for key in r.entries), dtype=np.int64, count=len(r))
        rank[idx] = np.arange(1, len(r) + 1)
        mask[idx] = True
        ranks.append(rank)
        present.append(mask)

    m = len(rankings)
    rho = np.full((m, m), np.nan)
    for a in range(m):
        if len(rankings[a]) < 2:
            continue
        rho[a, a] = 1.0
        for b in range(a + 1, m):
            if len(rankings[b]) < 2:
                continue
            mask = present[a] | present[b]
            value = spearmanr(ranks[a][mask], ranks[b][mask]).statistic
            rho[a, b] = rho[b, a] = value
    return CorrelationMatrix([r.id for r in rankings], rho)
