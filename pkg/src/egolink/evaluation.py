"""Precision-recall evaluation of rankings and merge contribution traces."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Collection, Iterable, Mapping, Sequence, TextIO

import numpy as np

if TYPE_CHECKING:
    from egolink.aggregation import MergeModel
    from egolink.ranking import PairKey, Ranking


@dataclass
class PRCurve:
    """Prefix scan of a ranking; row ``n - 1`` describes the top ``n`` predictions."""

    n: np.ndarray
    tp: np.ndarray
    n_positives: int

    @property
    def precision(self) -> np.ndarray:
        return self.tp / self.n

    @property
    def recall(self) -> np.ndarray:
        return self.tp / self.n_positives

    @property
    def fscore(self) -> np.ndarray:
        pr, rc = self.precision, self.recall
        denom = pr + rc
        with np.errstate(invalid="ignore", divide="ignore"):
            f = np.where(denom > 0, 2 * pr * rc / np.where(denom > 0, denom, 1), 0.0)
        return f

    def __len__(self) -> int:
        return len(self.n)

    def rows(self) -> list[tuple[int, float, float, float]]:
        return list(zip(self.n.tolist(), self.precision.tolist(), self.recall.tolist(), self.fscore.tolist()))

    def write_csv(self, fh: TextIO) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "precision", "recall", "fscore"])
        for n, pr, rc, f in self.rows():
            writer.writerow([n, repr(pr), repr(rc), repr(f)])


def pr_curve(
    ranking: "Ranking", positives: Collection["PairKey"], n_positives: int | None = None
) -> PRCurve:
    """Precision, recall and F-score at every prefix length of ``ranking``.

    ``n_positives`` defaults to ``len(positives)``; pass it explicitly when
    ``positives`` is a lazy membership test rather than the full set.
    """
    P = len(positives) if n_positives is None else n_positives
    if P <= 0:
        raise ValueError("no positives: recall is undefined")
    hits = np.fromiter((key in positives for key in ranking.entries), dtype=np.int64, count=len(ranking))
    return PRCurve(np.arange(1, len(hits) + 1), np.cumsum(hits), P)


def auc_pr(curve: PRCurve) -> float:
    """Trapezoidal area under precision vs recall.

    The curve is extended to recall 0 at its first precision; it is not
    extrapolated beyond its last point.
    """
    if len(curve) == 0:
        raise ValueError("empty curve")
    rc = np.concatenate(([0.0], curve.recall))
    pr = curve.precision
    pr = np.concatenate(([pr[0]], pr))
    return float(np.sum(np.diff(rc) * (pr[1:] + pr[:-1]) / 2))


def improvement(auc: float, auc_benchmark: float) -> float:
    """Relative AUC-PR gain over the benchmark."""
    if auc_benchmark == 0:
        raise ValueError("benchmark AUC-PR is zero")
    return (auc - auc_benchmark) / auc_benchmark


def precision_improvement(curve: PRCurve, benchmark: PRCurve) -> np.ndarray:
    """Relative precision gain at each common prefix length (NaN where the benchmark is 0)."""
    n = min(len(curve), len(benchmark))
    a, b = curve.precision[:n], benchmark.precision[:n]
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(b > 0, (a - b) / np.where(b > 0, b, 1), np.nan)


def contribution_trace(
    model: "MergeModel | Sequence[str]", ranking_ids: Sequence[str] | None = None
) -> dict[str, np.ndarray]:
    """Cumulative number of pairs each ranking supplied, per merged prefix length.

    Accepts a model or a bare sequence of source ids (e.g. the ``sources``
    of an applied merge). Entry ``n - 1`` of each array is the count within
    the top ``n``.
    """
    if hasattr(model, "selection_sequence"):
        sequence = model.selection_sequence
        ranking_ids = ranking_ids or model.ranking_ids
    else:
        sequence = list(model)
        ranking_ids = ranking_ids or sorted(set(sequence))
    seq = np.asarray(sequence, dtype=object)
    return {rid: np.cumsum(seq == rid).astype(np.int64) for rid in ranking_ids}


def write_contributions(trace: Mapping[str, np.ndarray], fh: TextIO) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["n", "ranking_id", "cumulative"])
    length = max((len(v) for v in trace.values()), default=0)
    for n in range(length):
        for rid, counts in trace.items():
            writer.writerow([n + 1, rid, int(counts[n])])


@dataclass
class EvalReport:
    ranking_id: str
    class_label: str
    curve: PRCurve
    auc_pr: float
    improvement_vs_benchmark: float | None = None
    contributions: dict[str, np.ndarray] | None = field(default=None, repr=False)


def evaluate(
    ranking: "Ranking",
    positives: Collection["PairKey"],
    class_label: str = "",
    benchmark: EvalReport | None = None,
    n_positives: int | None = None,
) -> EvalReport:
    curve = pr_curve(ranking, positives, n_positives)
    auc = auc_pr(curve) if len(curve) else 0.0
    report = EvalReport(ranking.id, class_label, curve, auc)
    if benchmark is not None and benchmark.auc_pr > 0:
        report.improvement_vs_benchmark = improvement(auc, benchmark.auc_pr)
    if ranking.sources is not None:
        report.contributions = contribution_trace(ranking.sources)
    return report


def write_summary(reports: Iterable[tuple[str, EvalReport]], fh: TextIO) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["class", "set", "ranking_id", "n_ranked", "auc_pr", "improvement"])
    for set_name, r in reports:
        imp = "" if r.improvement_vs_benchmark is None else repr(r.improvement_vs_benchmark)
        writer.writerow([r.class_label, set_name, r.ranking_id, len(r.curve), repr(r.auc_pr), imp])
