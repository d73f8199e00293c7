"""Corpus evaluation: per-role accuracy, stage timings, and report files.

Runs identification over a labeled corpus and compares each assignment with
the ground truth. Accuracy per role is the fraction of logs whose column was
identified exactly. Stage-two timing is averaged only over logs where stage
two actually ran; the short-circuit logs would drag the mean toward zero.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .classifier import ROLES, Hyperparams, RoleModel, train
from .ingest import EventLog
from .pipeline import REPORT_SCHEMA_VERSION, PipelineConfig, identify
from .synthgen import build_training_corpus


@dataclass
class LogOutcome:
    """Identification result for one corpus log, compared with its labels."""

    name: str
    expected: dict[str, str]
    assigned: dict[str, str]
    stage: str
    used_fallback: bool
    n_rows_used: int
    stage1_s: float
    stage2_s: float

    def correct(self, role: str) -> bool:
        return self.assigned[role] == self.expected[role]

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "expected": dict(self.expected),
            "assigned": dict(self.assigned),
            "correct": {role: self.correct(role) for role in ROLES},
            "stage": self.stage,
            "used_fallback": self.used_fallback,
            "n_rows_used": self.n_rows_used,
            "timings": {
                "stage1_s": round(self.stage1_s, 6),
                "stage2_s": round(self.stage2_s, 6),
            },
        }


@dataclass
class EvaluationResult:
    outcomes: list[LogOutcome]
    accuracy: dict[str, float]
    mean_stage1_s: float
    mean_stage2_s: float | None
    n_two_stage: int
    holdout: bool

    def to_json_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "n_logs": len(self.outcomes),
            "holdout": self.holdout,
            "accuracy": {role: self.accuracy[role] for role in ROLES},
            "timings": {
                "mean_stage1_s": round(self.mean_stage1_s, 6),
                "mean_stage2_s": (
                    None if self.mean_stage2_s is None
                    else round(self.mean_stage2_s, 6)),
                "n_two_stage": self.n_two_stage,
            },
            "logs": [o.to_json_dict() for o in self.outcomes],
        }


def evaluate_corpus(
    pairs: list[tuple[EventLog, dict[str, str]]],
    model: RoleModel | None = None,
    config: PipelineConfig | None = None,
    holdout: bool = False,
    hyperparams: Hyperparams | None = None,
    train_seed: int = 0,
    names: list[str] | None = None,
    progress: Callable[[int, int, LogOutcome], None] | None = None,
) -> EvaluationResult:
    """Identify every corpus log and score the assignments against labels.

    Without holdout, `model` is required and shared across logs. With
    holdout, each log is identified by a model freshly trained on all the
    other logs, so no log ever contributes to its own classifier.
    """
    if not pairs:
        raise ValueError("empty corpus")
    if not holdout and model is None:
        raise ValueError("a model is required unless holdout retraining is on")
    if holdout and len(pairs) < 2:
        raise ValueError("holdout needs at least 2 logs")
    config = config or PipelineConfig()
    if names is None:
        names = ["log_%d" % i for i in range(len(pairs))]
    if len(names) != len(pairs):
        raise ValueError("names and pairs differ in length")

    outcomes: list[LogOutcome] = []
    for i, (log, labels) in enumerate(pairs):
        if holdout:
            rest = [p for j, p in enumerate(pairs) if j != i]
            fold_model = train(
                build_training_corpus(rest, n_rows=config.n_rows),
                seed=train_seed,
                hyperparams=hyperparams,
            )
        else:
            fold_model = model
        report = identify(log, fold_model, config)
        outcome = LogOutcome(
            name=names[i],
            expected={role: labels[role] for role in ROLES},
            assigned=report.assignment(),
            stage=report.stage,
            used_fallback=report.used_fallback,
            n_rows_used=report.n_rows_used,
            stage1_s=report.stage1_s,
            stage2_s=report.stage2_s,
        )
        outcomes.append(outcome)
        if progress is not None:
            progress(i, len(pairs), outcome)

    n = len(outcomes)
    accuracy = {
        role: sum(1 for o in outcomes if o.correct(role)) / n for role in ROLES
    }
    two_stage = [o for o in outcomes if o.stage == "two-stage"]
    return EvaluationResult(
        outcomes=outcomes,
        accuracy=accuracy,
        mean_stage1_s=sum(o.stage1_s for o in outcomes) / n,
        mean_stage2_s=(
            sum(o.stage2_s for o in two_stage) / len(two_stage)
            if two_stage else None),
        n_two_stage=len(two_stage),
        holdout=holdout,
    )


def format_text_report(result: EvaluationResult) -> str:
    """Human-readable summary: accuracy per role plus a stage timing table."""
    lines = []
    lines.append("logs evaluated: %d%s" % (
        len(result.outcomes), " (holdout retraining)" if result.holdout else ""))
    lines.append("")
    lines.append("%-12s %8s" % ("role", "accuracy"))
    for role in ROLES:
        lines.append("%-12s %8.3f" % (role, result.accuracy[role]))
    lines.append("")
    lines.append("%-12s %12s %8s" % ("stage", "mean time", "logs"))
    lines.append("%-12s %10.4f s %8d" % (
        "stage 1", result.mean_stage1_s, len(result.outcomes)))
    if result.mean_stage2_s is None:
        lines.append("%-12s %12s %8d" % ("stage 2", "-", 0))
    else:
        lines.append("%-12s %10.4f s %8d" % (
            "stage 2", result.mean_stage2_s, result.n_two_stage))
    fallbacks = sum(1 for o in result.outcomes if o.used_fallback)
    if fallbacks:
        lines.append("")
        lines.append("fallback assignments: %d" % fallbacks)
    return "\n".join(lines) + "\n"


def write_report_files(result: EvaluationResult, out_dir: Path) -> list[Path]:
    """Write per-log and summary CSVs plus rendered figures; returns paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []

    per_log = out_dir / "per_log.csv"
    with open(per_log, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = ["log", "n_rows_used", "stage", "used_fallback",
                  "stage1_s", "stage2_s"]
        for role in ROLES:
            header += ["expected_%s" % role, "assigned_%s" % role,
                       "correct_%s" % role]
        writer.writerow(header)
        for o in result.outcomes:
            row = [o.name, o.n_rows_used, o.stage, int(o.used_fallback),
                   "%.6f" % o.stage1_s, "%.6f" % o.stage2_s]
            for role in ROLES:
                row += [o.expected[role], o.assigned[role],
                        int(o.correct(role))]
            writer.writerow(row)
    paths.append(per_log)

    summary = out_dir / "summary.csv"
    with open(summary, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        for role in ROLES:
            writer.writerow(["accuracy_%s" % role, "%.6f" % result.accuracy[role]])
        writer.writerow(["mean_stage1_s", "%.6f" % result.mean_stage1_s])
        writer.writerow(["mean_stage2_s",
                         "" if result.mean_stage2_s is None
                         else "%.6f" % result.mean_stage2_s])
        writer.writerow(["n_two_stage", result.n_two_stage])
        writer.writerow(["n_logs", len(result.outcomes)])
    paths.append(summary)

    from . import figures

    paths.extend(figures.render_evaluation_figures(result, out_dir))
    return paths
