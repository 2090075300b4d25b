"""Command-line entry point: ``egolink <command> [options]``.

Commands map onto workspace stages (ingest, split, score, rank, aggregate,
merge, eval); ``run`` chains them, ``synth`` writes a synthetic log and
``stats`` summarizes an ingested one.

Exit codes: 0 success, 1 usage error, 2 data error, 3 invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from collections import Counter
from dataclasses import fields
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from egolink.aggregation import MergeModel, borda, medrank, rankmerge_apply
from egolink.config import (
    SYNTH_HELP,
    ConfigError,
    PipelineConfig,
    build_pipeline_config,
    build_synth_config,
    read_config_file,
)
from egolink.ego import (
    SPLIT_SETS,
    DegreeClassSplit,
    EgoNetwork,
    apply_split_manifest,
    build_ego_networks,
    class_label,
    class_sort_key,
    read_split_manifest,
    sample_egos,
    split_degree_classes,
    write_ego_dump,
    write_split_manifest,
)
from egolink.evaluation import (
    EvalReport,
    contribution_trace,
    evaluate,
    precision_improvement,
    write_contributions,
    write_summary,
)
from egolink.events import KINDS, CleanInteractionSet, Kind, MalformedLineError, preprocess, read_events, write_events
from egolink.features import ScoreTable, compute_score_table
from egolink.pipeline import BENCHMARK, learn_merge
from egolink.ranking import PairKey, Ranking, build_ranking, spearman_matrix
from egolink.synth import SynthConfig, generate, read_truth
from egolink.workspace import StageError, Workspace, WorkspaceLocked, file_digest, fingerprint

log = logging.getLogger("egolink")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INVARIANT = 0, 1, 2, 3


class InvariantViolation(RuntimeError):
    """An internal consistency check failed; results cannot be trusted."""


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        raise UsageError(message)


# --------------------------------------------------------------------------
# loading helpers


def _csv_writer(path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    fh = open(path, "w", encoding="utf-8", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def read_truth_pairs(path: str | Path) -> list[tuple[int, int]]:
    """Truth links from ``ego,i,j`` or ``i,j`` CSV; the ego column is ignored."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
    if header == "ego,i,j":
        return sorted({(min(i, j), max(i, j)) for _, i, j in read_truth(path)})
    if header != "i,j":
        raise ValueError(f"truth file {path} needs an 'ego,i,j' or 'i,j' header, got {header!r}")
    pairs = set()
    with open(path, encoding="utf-8") as fh:
        next(fh)
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                i, j = (int(x) for x in line.split(","))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad truth row {line.strip()!r}") from None
            pairs.add((min(i, j), max(i, j)))
    return sorted(pairs)


def load_clean(ws: Workspace) -> CleanInteractionSet:
    info = json.loads(ws.clean_info.read_text(encoding="utf-8"))
    parsed = read_events(ws.clean_events, strict=True)
    return preprocess(parsed.events, tuple(info["window"]))


def load_egos(ws: Workspace, cfg: PipelineConfig) -> list[EgoNetwork]:
    truth = read_truth_pairs(ws.clean_truth) if ws.clean_truth.exists() else None
    return build_ego_networks(load_clean(ws), truth_links=truth)


def load_splits(ws: Workspace, egos: list[EgoNetwork]) -> dict[str, DegreeClassSplit]:
    with open(ws.split_manifest, encoding="utf-8") as fh:
        return apply_split_manifest(egos, read_split_manifest(fh))


def split_labels(ws: Workspace) -> list[str]:
    with open(ws.split_manifest, encoding="utf-8") as fh:
        manifest = read_split_manifest(fh)
    return sorted({label for label, _ in manifest.values()}, key=class_sort_key)


def load_table(ws: Workspace, label: str, set_name: str) -> ScoreTable:
    with open(ws.score_table(label, set_name), encoding="utf-8") as fh:
        return ScoreTable.read_wide(fh)


def load_ranking(ws: Workspace, label: str, set_name: str, rid: str, universe: int) -> Ranking:
    with open(ws.ranking(label, set_name, rid), encoding="utf-8") as fh:
        return Ranking.read_csv(fh, rid, universe)


def save_ranking(ws: Workspace, label: str, set_name: str, ranking: Ranking) -> Path:
    path = ws.ranking(label, set_name, ranking.id)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        ranking.write_csv(fh)
    return path


def positives_of(table: ScoreTable) -> set[PairKey]:
    return {p.key for p in table.pairs if p.label}


# --------------------------------------------------------------------------
# stats


def network_stats(clean: CleanInteractionSet) -> tuple[list[tuple[str, int]], list[tuple[str, str, int, int]]]:
    """Summary counts and degree/activity distributions per network."""
    summary = [
        ("nodes", len(clean.nodes)),
        ("links", len(clean.weights)),
        ("call_events", sum(clean.kind_weights[Kind.CALL].values())),
        ("text_events", sum(clean.kind_weights[Kind.TEXT].values())),
    ]
    networks = {"all": clean.weights, **{kind.value: clean.kind_weights[kind] for kind in KINDS}}
    rows = []
    for name, weights in networks.items():
        degree: Counter[int] = Counter()
        activity: Counter[int] = Counter()
        for (u, v), w in weights.items():
            for node in (u, v):
                degree[node] += 1
                activity[node] += w
        for measure, per_node in (("degree", degree), ("activity", activity)):
            hist = Counter(per_node.values())
            rows += [(name, measure, value, count) for value, count in sorted(hist.items())]
    all_degrees = Counter()
    for u, v in clean.weights:
        all_degrees[u] += 1
        all_degrees[v] += 1
    summary.append(("egos", sum(1 for d in all_degrees.values() if d >= 2)))
    return summary, rows


def write_stats(ws: Workspace, clean: CleanInteractionSet, extra: Sequence[tuple[str, int]] = ()) -> list[Path]:
    summary, rows = network_stats(clean)
    summary = list(extra) + summary
    paths = [ws.stats_dir / "summary.csv", ws.stats_dir / "distributions.csv"]
    fh, w = _csv_writer(paths[0])
    with fh:
        w.writerow(["metric", "value"])
        w.writerows(summary)
    fh, w = _csv_writer(paths[1])
    with fh:
        w.writerow(["network", "measure", "value", "count"])
        w.writerows(rows)
    for name, value in summary:
        print(f"{name:>14}: {value}")
    return paths


# --------------------------------------------------------------------------
# stages


def _skip(stage: str) -> None:
    print(f"[{stage}] up to date, skipped")


def stage_ingest(cfg: PipelineConfig, ws: Workspace, force: bool) -> str:
    if not cfg.input:
        raise ConfigError("ingest needs --input (or 'input' in the config file)")
    settings = cfg.as_strings(["window_start", "window_end", "strict"])
    settings["input_digest"] = file_digest(cfg.input)
    settings["truth_digest"] = file_digest(cfg.truth) if cfg.truth else ""
    fp = fingerprint("ingest", settings)
    if not force and ws.up_to_date("ingest", fp):
        _skip("ingest")
        return fp

    parsed = read_events(cfg.input, window=cfg.window, strict=cfg.strict)
    clean = preprocess(parsed.events, cfg.window)
    ws.clean_events.parent.mkdir(parents=True, exist_ok=True)
    with open(ws.clean_events, "w", encoding="utf-8") as fh:
        write_events(clean.events, fh)
    outputs = [ws.clean_events, ws.clean_info]
    if cfg.truth:
        pairs = read_truth_pairs(cfg.truth)
        with open(ws.clean_truth, "w", encoding="utf-8") as fh:
            fh.write("i,j\n")
            fh.writelines(f"{i},{j}\n" for i, j in pairs)
        outputs.append(ws.clean_truth)
    else:
        ws.clean_truth.unlink(missing_ok=True)
    info = {
        "window": list(clean.window),
        "raw_events": len(parsed.events),
        "rejected_lines": len(parsed.rejected),
        "out_of_window": parsed.out_of_window,
        "kept_events": len(clean.events),
    }
    ws.clean_info.write_text(json.dumps(info, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"[ingest] {cfg.input}")
    outputs += write_stats(
        ws,
        clean,
        [
            ("raw_events", len(parsed.events)),
            ("rejected_lines", len(parsed.rejected)),
            ("out_of_window", parsed.out_of_window),
            ("kept_events", len(clean.events)),
        ],
    )
    ws.complete("ingest", fp, outputs, info)
    return fp


def stage_split(cfg: PipelineConfig, ws: Workspace, force: bool) -> str:
    up = ws.require("ingest")["fingerprint"]
    fp = fingerprint(
        "split", cfg.as_strings(["seed", "min_class_size", "split", "pool_degree", "classes", "sample"]), up
    )
    if not force and ws.up_to_date("split", fp):
        _skip("split")
        return fp

    egos = load_egos(ws, cfg)
    if cfg.classes:
        wanted = set(cfg.classes)
        present = {class_label(e.k, cfg.pool_degree) for e in egos}
        for missing in sorted(wanted - present):
            log.warning("degree class %s has no egos", missing)
        egos = [e for e in egos if class_label(e.k, cfg.pool_degree) in wanted]
    if cfg.sample:
        by_class: dict[str, list[EgoNetwork]] = {}
        for e in egos:
            by_class.setdefault(class_label(e.k, cfg.pool_degree), []).append(e)
        egos = [
            e
            for label in sorted(by_class, key=class_sort_key)
            for e in sample_egos(by_class[label], cfg.sample, cfg.seed)
        ]
    splits = split_degree_classes(
        egos, cfg.seed, tuple(cfg.split), pool_degree=cfg.pool_degree, min_class_size=cfg.min_class_size
    )
    ws.split_manifest.parent.mkdir(parents=True, exist_ok=True)
    with open(ws.split_manifest, "w", encoding="utf-8") as fh:
        write_split_manifest(splits, fh)
    with open(ws.ego_dump, "w", encoding="utf-8") as fh:
        write_ego_dump(sorted((e for s in splits.values() for n in SPLIT_SETS for e in s[n]), key=lambda e: e.ego), fh)
    info = {label: [len(s[n]) for n in SPLIT_SETS] for label, s in splits.items()}
    print("[split] class  learn  valid  test")
    for label, sizes in info.items():
        print(f"        {label:>5}  {sizes[0]:>5}  {sizes[1]:>5}  {sizes[2]:>4}")
    ws.complete("split", fp, [ws.split_manifest, ws.ego_dump], info)
    return fp


def stage_score(cfg: PipelineConfig, ws: Workspace, force: bool) -> str:
    up = ws.require("split")["fingerprint"]
    fp = fingerprint("score", cfg.as_strings(["scores", "extra_scores", "d_grid", "tz", "f_min"]), up)
    if not force and ws.up_to_date("score", fp):
        _skip("score")
        return fp

    exp = cfg.experiment()
    splits = load_splits(ws, load_egos(ws, cfg))
    outputs = []
    for label, split in splits.items():
        for name in SPLIT_SETS:
            table = compute_score_table(split[name], exp.all_scores, exp.score_params)
            path = ws.score_table(label, name)
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8", newline="") as fh:
                table.write_wide(fh)
            outputs.append(path)
        print(f"[score] class {label}: {sum(len(split[n]) for n in SPLIT_SETS)} egos scored")
    ws.complete("score", fp, outputs)
    return fp


def stage_rank(cfg: PipelineConfig, ws: Workspace, force: bool) -> str:
    up = ws.require("score")["fingerprint"]
    fp = fingerprint("rank", cfg.as_strings(["output"]), up)
    if not force and ws.up_to_date("rank", fp):
        _skip("rank")
        return fp

    exp = cfg.experiment()
    outputs = []
    for label in split_labels(ws):
        for name in SPLIT_SETS:
            table = load_table(ws, label, name)
            rankings = [build_ranking(table, sid) for sid in exp.all_scores]
            outputs += [save_ranking(ws, label, name, r) for r in rankings]
            base = [r for r in rankings if r.id in exp.scores]
            if len(base) >= 2 and len(table) >= 2:
                path = ws.report_dir(label, name) / "spearman.csv"
                fh, _ = _csv_writer(path)
                with fh:
                    spearman_matrix(base).write_csv(fh)
                outputs.append(path)
        print(f"[rank] class {label}: {len(exp.all_scores)} rankings per set")
    ws.complete("rank", fp, outputs)
    return fp


def stage_aggregate(cfg: PipelineConfig, ws: Workspace, force: bool) -> str:
    up = ws.require("rank")["fingerprint"]
    fp = fingerprint("aggregate", cfg.as_strings(["aggregators"]), up)
    if not force and ws.up_to_date("aggregate", fp):
        _skip("aggregate")
        return fp

    exp = cfg.experiment()
    methods: list[tuple[str, Callable]] = [(m, f) for m, f in (("borda", borda), ("medrank", medrank)) if m in exp.aggregators]
    outputs = []
    for label in split_labels(ws):
        if not methods:
            break
        for name in SPLIT_SETS:
            universe = len(load_table(ws, label, name))
            base = [load_ranking(ws, label, name, sid, universe) for sid in exp.scores]
            for method, fn in methods:
                outputs.append(save_ranking(ws, label, name, fn(base)))
        print(f"[aggregate] class {label}: {', '.join(m for m, _ in methods)}")
    ws.complete("aggregate", fp, outputs)
    return fp


def stage_merge(cfg: PipelineConfig, ws: Workspace, force: bool) -> str:
    up = ws.require("aggregate")["fingerprint"]
    fp = fingerprint("merge", cfg.as_strings(["aggregators", "g_grid"]), up)
    if not force and ws.up_to_date("merge", fp):
        _skip("merge")
        return fp

    exp = cfg.experiment()
    outputs: list[Path] = []
    if "rankmerge" not in exp.aggregators:
        ws.complete("merge", fp, outputs)
        return fp
    for label in split_labels(ws):
        tables = {name: load_table(ws, label, name) for name in SPLIT_SETS}
        labels = {name: positives_of(t) for name, t in tables.items()}
        if not labels["learn"]:
            log.warning("class %s: no true links in the learning set, merge skipped", label)
            continue
        rankings = {
            name: {rid: load_ranking(ws, label, name, rid, len(tables[name])) for rid in exp.merge_inputs}
            for name in SPLIT_SETS
        }
        model, g_scores = learn_merge(rankings, labels, exp, label)
        ws.model(label).parent.mkdir(parents=True, exist_ok=True)
        model.save(ws.model(label))
        fh, w = _csv_writer(ws.g_scores(label))
        with fh:
            w.writerow(["g", "valid_auc_pr"])
            w.writerows((g, repr(s)) for g, s in sorted(g_scores.items()))
        outputs += [ws.model(label), ws.g_scores(label)]
        for name in SPLIT_SETS:
            if not tables[name].pairs:
                continue
            merged = rankmerge_apply(model, [rankings[name][rid] for rid in exp.merge_inputs])
            outputs.append(save_ranking(ws, label, name, merged))
            src = ws.ranking(label, name, "rankmerge_sources")
            fh, w = _csv_writer(src)
            with fh:
                w.writerow(["rank", "ranking_id"])
                w.writerows((n + 1, rid) for n, rid in enumerate(merged.sources))
            outputs.append(src)
        print(f"[merge] class {label}: g={model.g}, {len(model.selection_sequence)} learned steps")
    ws.complete("merge", fp, outputs)
    return fp


def _read_sources(path: Path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        return [row[1] for row in reader]


def check_report(report: EvalReport) -> None:
    curve = report.curve
    if len(curve) and np.any(np.diff(curve.recall) < 0):
        raise InvariantViolation(f"{report.ranking_id}: recall decreases along the curve")
    if not 0.0 <= report.auc_pr <= 1.0 + 1e-12:
        raise InvariantViolation(f"{report.ranking_id}: AUC-PR {report.auc_pr} outside [0, 1]")
    if report.contributions:
        total = sum(report.contributions.values())
        if total.tolist() != list(range(1, len(total) + 1)):
            raise InvariantViolation(f"{report.ranking_id}: contributions do not partition the merged prefix")


def stage_eval(cfg: PipelineConfig, ws: Workspace, force: bool) -> str:
    up = ws.require("merge")["fingerprint"]
    fp = fingerprint("eval", cfg.as_strings(["output"]), up)
    if not force and ws.up_to_date("eval", fp):
        _skip("eval")
        return fp

    exp = cfg.experiment()
    ids = exp.all_scores + [a for a in ("borda", "medrank", "rankmerge") if a in exp.aggregators]
    outputs: list[Path] = []
    summary: list[tuple[str, EvalReport]] = []
    for label in split_labels(ws):
        if ws.model(label).exists():
            trace = contribution_trace(MergeModel.load(ws.model(label)))
            path = ws.report_dir(label) / "model_contributions.csv"
            fh, _ = _csv_writer(path)
            with fh:
                write_contributions(trace, fh)
            outputs.append(path)
        for name in SPLIT_SETS:
            table = load_table(ws, label, name)
            positives = positives_of(table)
            if not positives:
                continue
            out_dir = ws.report_dir(label, name)
            reports: dict[str, EvalReport] = {}
            for rid in ids:
                if not ws.ranking(label, name, rid).exists():
                    continue
                ranking = load_ranking(ws, label, name, rid, len(table))
                if rid == "rankmerge":
                    ranking.sources = _read_sources(ws.ranking(label, name, "rankmerge_sources"))
                reports[rid] = evaluate(ranking, positives, label, reports.get(BENCHMARK))
                check_report(reports[rid])
                path = out_dir / f"curve_{rid}.csv"
                fh, _ = _csv_writer(path)
                with fh:
                    reports[rid].curve.write_csv(fh)
                outputs.append(path)
                summary.append((name, reports[rid]))
            if BENCHMARK in reports:
                path = out_dir / "precision_improvement.csv"
                fh, w = _csv_writer(path)
                with fh:
                    w.writerow(["n", "ranking_id", "value"])
                    bench = reports[BENCHMARK].curve
                    for rid, rep in reports.items():
                        if rid == BENCHMARK:
                            continue
                        for n, v in enumerate(precision_improvement(rep.curve, bench).tolist(), start=1):
                            w.writerow([n, rid, "" if np.isnan(v) else repr(v)])
                outputs.append(path)
            if "rankmerge" in reports and reports["rankmerge"].contributions:
                path = out_dir / "contributions.csv"
                fh, _ = _csv_writer(path)
                with fh:
                    write_contributions(reports["rankmerge"].contributions, fh)
                outputs.append(path)
    path = ws.reports / "summary.csv"
    fh, _ = _csv_writer(path)
    with fh:
        write_summary(summary, fh)
    outputs.append(path)
    _print_summary(summary)
    ws.complete("eval", fp, outputs)
    return fp


def _print_summary(summary: list[tuple[str, EvalReport]]) -> None:
    rows = [(r.class_label, r) for name, r in summary if name == "test"]
    if not rows:
        print("[eval] no test set with true links; see summary.csv")
        return
    print("[eval] test set AUC-PR (improvement vs s5)")
    for label in sorted({c for c, _ in rows}, key=class_sort_key):
        reps = {r.ranking_id: r for c, r in rows if c == label}
        shown = [BENCHMARK, "borda", "medrank", "rankmerge"]
        singles = [r for rid, r in reps.items() if rid not in shown]
        if singles:
            best = max(singles, key=lambda r: r.auc_pr)
            shown.insert(1, best.ranking_id)
        cells = []
        for rid in shown:
            if rid in reps:
                imp = reps[rid].improvement_vs_benchmark
                tail = "" if imp is None or rid == BENCHMARK else f" ({imp:+.1%})"
                cells.append(f"{rid}={reps[rid].auc_pr:.4f}{tail}")
        print(f"  class {label:>4}: " + "  ".join(cells))


STAGE_FUNCS = {
    "ingest": stage_ingest,
    "split": stage_split,
    "score": stage_score,
    "rank": stage_rank,
    "aggregate": stage_aggregate,
    "merge": stage_merge,
    "eval": stage_eval,
}


def cmd_stage(stage: str, cfg: PipelineConfig, force: bool) -> None:
    ws = Workspace(cfg.workspace, cfg.reports_dir)
    with ws.locked():
        STAGE_FUNCS[stage](cfg, ws, force)


def cmd_run(cfg: PipelineConfig, force: bool) -> None:
    ws = Workspace(cfg.workspace, cfg.reports_dir)
    with ws.locked():
        stages = list(STAGE_FUNCS)
        if not cfg.input:
            ws.require("ingest")
            stages.remove("ingest")
        for stage in stages:
            STAGE_FUNCS[stage](cfg, ws, force)


def cmd_stats(cfg: PipelineConfig) -> None:
    ws = Workspace(cfg.workspace, cfg.reports_dir)
    with ws.locked():
        ws.require("ingest")
        write_stats(ws, load_clean(ws))
        record = ws.stage_record("split")
        if record:
            print("class sizes (learn, valid, test):")
            for label, sizes in record["info"].items():
                print(f"  {label:>5}: {sizes}")


def cmd_synth(cfg: SynthConfig, out: Path) -> None:
    result = generate(cfg)
    result.write(out)
    print(f"[synth] {len(result.events)} events, {len(result.truth)} truth links -> {out}")


# --------------------------------------------------------------------------
# argument parsing

PIPELINE_COMMANDS = {
    "ingest": "parse and clean a raw log into the workspace",
    "split": "build ego-networks and split degree classes",
    "score": "score every candidate pair",
    "rank": "rank pairs by each score; Spearman matrices",
    "aggregate": "Borda and Medrank consensus rankings",
    "merge": "learn and apply the supervised merge",
    "eval": "precision-recall reports",
    "run": "every stage from ingest (or split) to eval",
    "stats": "summary statistics of the ingested log",
}


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="INI config file")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    parser = _Parser(prog="egolink", description="Link prediction in ego-networks from interaction timing.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for command, help in PIPELINE_COMMANDS.items():
        p = sub.add_parser(command, help=help, parents=[common])
        p.add_argument("--force", action="store_true", help="rerun stages even when up to date")
        for f in fields(PipelineConfig):
            if f.name == "strict":
                p.add_argument(_flag(f.name), dest=f"cfg_{f.name}", action="store_const", const="true",
                               default=argparse.SUPPRESS, help=f.metadata["help"])
            else:
                p.add_argument(_flag(f.name), dest=f"cfg_{f.name}", default=argparse.SUPPRESS,
                               metavar=f.name.upper(), help=f.metadata["help"])

    p = sub.add_parser("synth", help="generate a synthetic log with planted truth", parents=[common])
    p.add_argument("--out", required=True, help="output directory")
    for f in fields(SynthConfig):
        p.add_argument(_flag(f.name), dest=f"syn_{f.name}", default=argparse.SUPPRESS,
                       metavar=f.name.upper(), help=SYNTH_HELP.get(f.name))
    return parser


def _overrides(args: argparse.Namespace, prefix: str) -> dict[str, str]:
    return {k[len(prefix):]: v for k, v in vars(args).items() if k.startswith(prefix)}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"egolink: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        file_values = read_config_file(args.config) if args.config else {}
        if args.command == "synth":
            cfg = build_synth_config(file_values.get("synth", {}), _overrides(args, "syn_"))
            cmd_synth(cfg, Path(args.out))
            return EXIT_OK
        cfg = build_pipeline_config(file_values.get("pipeline", {}), _overrides(args, "cfg_"))
        if args.command == "run":
            cmd_run(cfg, args.force)
        elif args.command == "stats":
            cmd_stats(cfg)
        else:
            cmd_stage(args.command, cfg, args.force)
    except ConfigError as exc:
        print(f"egolink: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        print(f"egolink: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except StageError as exc:
        print(f"egolink: {exc}; run that stage first", file=sys.stderr)
        return EXIT_DATA
    except (MalformedLineError, WorkspaceLocked, OSError, ValueError) as exc:
        print(f"egolink: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
