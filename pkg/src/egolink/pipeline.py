"""Per-degree-class experiment: score, rank, aggregate, merge, evaluate."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from egolink.aggregation import DEFAULT_G_GRID, MergeModel, borda, g_grid_scores, medrank, rankmerge_apply, rankmerge_learn
from egolink.ego import SPLIT_SETS, DegreeClassSplit
from egolink.evaluation import EvalReport, evaluate
from egolink.features import ScoreParams, ScoreTable, catalogue, compute_score_table
from egolink.ranking import PairKey, Ranking, build_ranking

log = logging.getLogger(__name__)

AGGREGATORS = ("borda", "medrank", "rankmerge")
BENCHMARK = "s5"


@dataclass
class ExperimentConfig:
    scores: list[str] = field(default_factory=catalogue)
    # scored and evaluated, but not fed to the aggregators
    extra_scores: list[str] = field(default_factory=list)
    aggregators: list[str] = field(default_factory=lambda: list(AGGREGATORS))
    g_grid: list[int] = field(default_factory=lambda: list(DEFAULT_G_GRID))
    score_params: ScoreParams = field(default_factory=ScoreParams)

    def __post_init__(self) -> None:
        unknown = set(self.aggregators) - set(AGGREGATORS)
        if unknown:
            raise ValueError(f"unknown aggregators {sorted(unknown)}")

    @property
    def all_scores(self) -> list[str]:
        return self.scores + [s for s in self.extra_scores if s not in self.scores]

    @property
    def merge_inputs(self) -> list[str]:
        return self.scores + [a for a in ("borda", "medrank") if a in self.aggregators]


def positives(table: ScoreTable) -> set[PairKey]:
    return {p.key for p in table.pairs if p.label}


def score_split(split: DegreeClassSplit, cfg: ExperimentConfig) -> dict[str, ScoreTable]:
    return {name: compute_score_table(split[name], cfg.all_scores, cfg.score_params) for name in SPLIT_SETS}


def rank_table(table: ScoreTable, cfg: ExperimentConfig) -> dict[str, Ranking]:
    rankings = {sid: build_ranking(table, sid) for sid in cfg.all_scores}
    base = [rankings[sid] for sid in cfg.scores]
    if "borda" in cfg.aggregators:
        rankings["borda"] = borda(base)
    if "medrank" in cfg.aggregators:
        rankings["medrank"] = medrank(base)
    return rankings


@dataclass
class ClassRun:
    class_label: str
    tables: dict[str, ScoreTable]
    rankings: dict[str, dict[str, Ranking]]
    model: MergeModel | None = None
    g_scores: dict[int, float] = field(default_factory=dict)
    reports: dict[str, dict[str, EvalReport]] = field(default_factory=dict)


def learn_merge(
    rankings: dict[str, dict[str, Ranking]],
    labels: dict[str, set[PairKey]],
    cfg: ExperimentConfig,
    class_label: str,
) -> tuple[MergeModel, dict[int, float]]:
    """Tune g on validation, then learn the final model on the learning set."""
    ids = cfg.merge_inputs
    learn = [rankings["learn"][rid] for rid in ids]
    if rankings["valid"] and labels["valid"] and any(len(r) for r in rankings["valid"].values()):
        valid = [rankings["valid"][rid] for rid in ids]
        g_scores = g_grid_scores(learn, labels["learn"], valid, labels["valid"], cfg.g_grid)
        best = max(g_scores.values())
        g = min(g for g, s in g_scores.items() if s == best)
    else:
        log.warning("class %s: no usable validation set, using g=%d", class_label, min(cfg.g_grid))
        g_scores, g = {}, min(cfg.g_grid)
    return rankmerge_learn(learn, labels["learn"], g, class_label=class_label), g_scores


def evaluate_class(
    rankings: dict[str, dict[str, Ranking]],
    labels: dict[str, set[PairKey]],
    class_label: str,
) -> dict[str, dict[str, EvalReport]]:
    reports: dict[str, dict[str, EvalReport]] = {}
    for name, by_id in rankings.items():
        if not labels.get(name):
            continue
        bench = evaluate(by_id[BENCHMARK], labels[name], class_label) if BENCHMARK in by_id else None
        reports[name] = {rid: evaluate(r, labels[name], class_label, bench) for rid, r in by_id.items()}
    return reports


def run_class(split: DegreeClassSplit, cfg: ExperimentConfig | None = None) -> ClassRun:
    cfg = cfg or ExperimentConfig()
    tables = score_split(split, cfg)
    rankings = {name: rank_table(t, cfg) for name, t in tables.items()}
    labels = {name: positives(t) for name, t in tables.items()}
    run = ClassRun(split.class_label, tables, rankings)
    if "rankmerge" in cfg.aggregators and labels["learn"]:
        run.model, run.g_scores = learn_merge(rankings, labels, cfg, split.class_label)
        for name in SPLIT_SETS:
            if tables[name].pairs:
                rankings[name]["rankmerge"] = rankmerge_apply(
                    run.model, [rankings[name][rid] for rid in cfg.merge_inputs]
                )
    run.reports = evaluate_class(rankings, labels, split.class_label)
    return run


def auc_table(run: ClassRun, set_name: str) -> dict[str, float]:
    return {rid: rep.auc_pr for rid, rep in run.reports.get(set_name, {}).items()}

