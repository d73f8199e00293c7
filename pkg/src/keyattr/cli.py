"""Command-line surface: train, identify, evaluate, generate, discover.

Exit codes: 0 success, 1 usage error, 2 input error, 3 identification had to
fall back to stage-one probabilities. With --format json the report is a
single JSON document on stdout; everything else goes to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources
from pathlib import Path

from .classifier import ROLES, Hyperparams, RoleModel, train
from .discovery import MinerParams, build_traces, mine
from .evaluation import evaluate_corpus, format_text_report, write_report_files
from .ingest import load_csv, parse_timestamp_column
from .models import export_dot
from .pipeline import PipelineConfig, identify
from .synthgen import build_training_corpus, generate_corpus, read_corpus

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_FALLBACK = 3

_METRIC_CHOICES = ("fitness", "precision", "generalization", "simplicity",
                   "buijs", "buijs2014")


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad flags; our contract reserves 2 for input
    problems, so usage errors are remapped to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, "%s: error: %s\n" % (self.prog, message))


def _resolve_jobs(value: int | None) -> int:
    if value is None:
        raw = os.environ.get("KEYATTR_JOBS", "1")
        try:
            value = int(raw)
        except ValueError:
            raise ValueError("KEYATTR_JOBS must be an integer, got %r" % raw)
    if value < 1:
        raise ValueError("jobs must be at least 1")
    return value


def _load_model(path: str | None) -> RoleModel:
    if path is not None:
        return RoleModel.load(path)
    ref = resources.files("keyattr").joinpath("data/default_model.json")
    with resources.as_file(ref) as real_path:
        return RoleModel.load(str(real_path))


def _pipeline_config(args) -> PipelineConfig:
    metric = args.metric
    if metric == "buijs":
        metric = "buijs2014"
    return PipelineConfig(
        k=args.k,
        n_rows=args.rows,
        miner=args.miner,
        metric=metric,
        th_discovery=args.th_dis,
        th_evaluation=args.th_eval,
        seed=args.seed,
        jobs=_resolve_jobs(args.jobs),
    )


def _add_pipeline_flags(sub):
    sub.add_argument("--k", type=int, default=2,
                     help="candidate columns kept per role (default 2)")
    sub.add_argument("--miner", choices=("hm", "im"), default="hm")
    sub.add_argument("--metric", choices=_METRIC_CHOICES,
                     default="generalization")
    sub.add_argument("--rows", type=int, default=1000,
                     help="row cap before identification (default 1000)")
    sub.add_argument("--th-dis", type=float, default=5.0,
                     help="discovery timeout per combination, seconds")
    sub.add_argument("--th-eval", type=float, default=60.0,
                     help="evaluation timeout per combination, seconds")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--jobs", type=int, default=None,
                     help="parallel combination scoring"
                          " (default: KEYATTR_JOBS or 1)")


def cmd_train(args) -> int:
    pairs = read_corpus(args.corpus)
    corpus = build_training_corpus(pairs, n_rows=args.rows)
    hp = Hyperparams(n_trees=args.trees, max_depth=args.depth)
    model = train(corpus, seed=args.seed, hyperparams=hp)
    model.save(args.model)
    positives = {
        role: sum(1 for lab in corpus.labels if lab == role) for role in ROLES
    }
    if args.format == "json":
        doc = {
            "model_path": args.model,
            "n_logs": len(pairs),
            "n_columns_featurized": len(corpus.vectors),
            "positives": positives,
            "seed": args.seed,
            "hyperparameters": hp.to_dict(),
        }
        print(json.dumps(doc, indent=2))
    else:
        print("trained on %d logs (%d column vectors)"
              % (len(pairs), len(corpus.vectors)))
        for role in ROLES:
            print("  positives for %s: %d" % (role, positives[role]))
        print("model written to %s" % args.model)
    return EXIT_OK


def cmd_identify(args) -> int:
    log = load_csv(args.log)
    model = _load_model(args.model)
    report = identify(log, model, _pipeline_config(args))
    if args.format == "json":
        print(json.dumps(report.to_json_dict(), indent=2))
        for warning in report.warnings:
            print("warning: %s" % warning, file=sys.stderr)
    else:
        assignment = report.assignment()
        for role in ROLES:
            print("%-10s %s" % (role + ":", assignment[role]))
        print("stage: %s (miner %s, metric %s)"
              % (report.stage, report.miner, report.metric))
        print("combinations planned: %d, scored: %d"
              % (report.count_planned_evaluations,
                 sum(1 for c in report.combos_scored
                     if c.skipped_reason is None)))
        print("stage 1: %.4f s, stage 2: %.4f s"
              % (report.stage1_s, report.stage2_s))
        for warning in report.warnings:
            print("warning: %s" % warning, file=sys.stderr)
    return EXIT_FALLBACK if report.used_fallback else EXIT_OK


def cmd_evaluate(args) -> int:
    pairs = read_corpus(args.corpus)
    model = None if args.holdout else _load_model(args.model)

    def progress(i, total, outcome):
        marks = " ".join(
            "%s=%s" % (role, "ok" if outcome.correct(role) else "MISS")
            for role in ROLES)
        print("[%d/%d] %s: %s (%s)"
              % (i + 1, total, outcome.name, marks, outcome.stage),
              file=sys.stderr)

    result = evaluate_corpus(
        pairs,
        model=model,
        config=_pipeline_config(args),
        holdout=args.holdout,
        train_seed=args.train_seed,
        progress=progress,
    )
    if args.report_dir is not None:
        paths = write_report_files(result, Path(args.report_dir))
        for path in paths:
            print("wrote %s" % path, file=sys.stderr)
    if args.format == "json":
        print(json.dumps(result.to_json_dict(), indent=2))
    else:
        print(format_text_report(result), end="")
    return EXIT_OK


def cmd_generate(args) -> int:
    out_dir = Path(args.out)
    generate_corpus(
        args.count,
        base_seed=args.seed,
        out_dir=out_dir,
        n_distractors=args.distractors,
    )
    print("wrote %d labeled logs to %s" % (args.count, out_dir))
    return EXIT_OK


def cmd_discover(args) -> int:
    log = load_csv(args.log)
    for col in (args.case, args.activity, args.timestamp):
        if col not in log.column_names:
            raise ValueError("unknown column %r (log has: %s)"
                             % (col, ", ".join(log.column_names)))
    ts = parse_timestamp_column(log.column(args.timestamp))
    traces = build_traces(log, args.case, args.activity, ts)
    net = mine(traces, args.miner, MinerParams())
    dot = export_dot(net)
    with open(args.dot, "w", encoding="utf-8") as fh:
        fh.write(dot)
    print("discovered net: %d places, %d transitions (%d visible); DOT in %s"
          % (net.n_places, net.n_transitions, len(net.visible_indices()),
             args.dot))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="keyattr",
        description="Identify the case, activity, and timestamp columns of"
                    " an event log CSV.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a role classifier on a"
                                           " labeled corpus")
    p_train.add_argument("--corpus", required=True,
                         help="directory of log_<i>.csv + log_<i>.labels.json")
    p_train.add_argument("--model", required=True, help="output model JSON")
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--trees", type=int, default=100)
    p_train.add_argument("--depth", type=int, default=8)
    p_train.add_argument("--rows", type=int, default=1000)
    p_train.add_argument("--format", choices=("json", "text"), default="text")
    p_train.set_defaults(func=cmd_train)

    p_id = sub.add_parser("identify", help="identify key attribute columns"
                                           " in a CSV log")
    p_id.add_argument("--log", required=True, help="input CSV file")
    p_id.add_argument("--model", default=None,
                      help="model JSON (default: bundled model)")
    _add_pipeline_flags(p_id)
    p_id.add_argument("--format", choices=("json", "text"), default="text")
    p_id.set_defaults(func=cmd_identify)

    p_eval = sub.add_parser("evaluate", help="measure accuracy and timings"
                                             " over a labeled corpus")
    p_eval.add_argument("--corpus", required=True)
    p_eval.add_argument("--model", default=None,
                        help="model JSON (default: bundled model; ignored"
                             " with --holdout)")
    p_eval.add_argument("--holdout", action="store_true",
                        help="retrain excluding each log before identifying"
                             " it")
    p_eval.add_argument("--train-seed", type=int, default=0)
    p_eval.add_argument("--report-dir", default=None,
                        help="write per-log/summary CSVs and PNG figures"
                             " here")
    _add_pipeline_flags(p_eval)
    p_eval.add_argument("--format", choices=("json", "text"), default="text")
    p_eval.set_defaults(func=cmd_evaluate)

    p_gen = sub.add_parser("generate", help="generate a labeled synthetic"
                                            " corpus")
    p_gen.add_argument("--out", required=True, help="output directory")
    p_gen.add_argument("--count", type=int, default=20)
    p_gen.add_argument("--seed", type=int, default=42)
    p_gen.add_argument("--distractors", type=int, default=None,
                       help="distractor columns per log (default: varied)")
    p_gen.set_defaults(func=cmd_generate)

    p_disc = sub.add_parser("discover", help="discover a process model from"
                                             " labeled columns")
    p_disc.add_argument("--log", required=True)
    p_disc.add_argument("--case", required=True)
    p_disc.add_argument("--activity", required=True)
    p_disc.add_argument("--timestamp", required=True)
    p_disc.add_argument("--miner", choices=("hm", "im"), default="hm")
    p_disc.add_argument("--dot", required=True, help="output DOT file")
    p_disc.set_defaults(func=cmd_discover)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
