"""Link prediction among the neighbors of ego nodes from interaction timing."""

from egolink.events import InteractionEvent, CleanInteractionSet, parse_events, preprocess
from egolink.ego import EgoNetwork, CandidatePair, build_ego_networks, enumerate_pairs, split_degree_classes
from egolink.ranking import Ranking, build_ranking, spearman_matrix
from egolink.aggregation import MergeModel, borda, medrank, rankmerge_learn, rankmerge_apply, tune_g
from egolink.evaluation import EvalReport, pr_curve, auc_pr, improvement, contribution_trace

__version__ = "0.1.0"

__all__ = [
    "InteractionEvent",
    "CleanInteractionSet",
    "parse_events",
    "preprocess",
    "EgoNetwork",
    "CandidatePair",
    "build_ego_networks",
    "enumerate_pairs",
    "split_degree_classes",
    "Ranking",
    "build_ranking",
    "spearman_matrix",
    "MergeModel",
    "borda",
    "medrank",
    "rankmerge_learn",
    "rankmerge_apply",
    "tune_g",
    "EvalReport",
    "pr_curve",
    "auc_pr",
    "improvement",
    "contribution_trace",
]
