"""Two-stage identification of case, activity, and timestamp columns.

Stage one scores every column against each role with the classifier and keeps
the top candidates. Stage two enumerates the candidate combinations, scores
each by discovering a model on half the cases and measuring it on the other
half (both directions), and picks the best. The cross product of candidates
replaces the cross product of all columns, so stage two stays small no matter
how wide the log is.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .classifier import ROLES, CandidateSet, RoleModel, select_candidates
from .conformance import ScoreReport, score_combo
from .discovery import MinerParams, build_traces
from .features import featurize_log
from .ingest import EventLog, parse_timestamp_column


REPORT_SCHEMA_VERSION = 1


class PipelineError(ValueError):
    """Raised when a log cannot be pushed through identification."""


@dataclass
class PipelineConfig:
    k: int = 2
    n_rows: int = 1000
    miner: str = "hm"
    metric: str = "generalization"
    th_discovery: float = 5.0
    th_evaluation: float = 60.0
    min_ts_parse_fraction: float = 0.9
    epsilon: float = 1e-9
    seed: int = 0
    jobs: int = 1
    miner_params: MinerParams = field(default_factory=MinerParams)


@dataclass
class ComboResult:
    """One enumerated (case, activity, timestamp) assignment and its score."""

    case_column: str
    activity_column: str
    timestamp_column: str
    index: int
    prob_product: float
    score: float = 0.0
    skipped_reason: str | None = None
    report: ScoreReport | None = None

    def to_json_dict(self) -> dict:
        d: dict = {
            "case": self.case_column,
            "activity": self.activity_column,
            "timestamp": self.timestamp_column,
            "index": self.index,
            "prob_product": self.prob_product,
            "score": self.score,
        }
        if self.skipped_reason is not None:
            d["skipped"] = self.skipped_reason
        if self.report is not None:
            d["report"] = self.report.to_json_dict()
        return d


@dataclass
class IdentificationReport:
    case_column: str
    activity_column: str
    timestamp_column: str
    stage: str
    miner: str
    metric: str
    probabilities: list[dict]
    candidates: dict[str, list[tuple[str, float]]]
    combos_scored: list[ComboResult]
    count_planned_evaluations: int
    used_fallback: bool
    warnings: list[str]
    n_rows_used: int
    n_columns: int
    stage1_s: float
    stage2_s: float

    def assignment(self) -> dict[str, str]:
        return {
            "case": self.case_column,
            "activity": self.activity_column,
            "timestamp": self.timestamp_column,
        }

    def to_json_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "assignment": self.assignment(),
            "stage": self.stage,
            "miner": self.miner,
            "metric": self.metric,
            "probabilities": self.probabilities,
            "candidates": {
                role: [[col, prob] for col, prob in pairs]
                for role, pairs in self.candidates.items()
            },
            "combos_scored": [c.to_json_dict() for c in self.combos_scored],
            "count_planned_evaluations": self.count_planned_evaluations,
            "used_fallback": self.used_fallback,
            "warnings": list(self.warnings),
            "n_rows_used": self.n_rows_used,
            "n_columns": self.n_columns,
            "timings": {
                "stage1_s": round(self.stage1_s, 6),
                "stage2_s": round(self.stage2_s, 6),
            },
        }


def enumerate_combos(candidates: CandidateSet) -> list[tuple[str, str, str, float]]:
    """Distinct-column (case, activity, timestamp) combos in rank order.

    Rank order nests case outermost and timestamp innermost, so earlier
    entries pair higher stage-one probabilities. Returns the columns plus the
    product of their role probabilities.
    """
    combos = []
    for case_col, p_case in candidates.per_role["case"]:
        for act_col, p_act in candidates.per_role["activity"]:
            if act_col == case_col:
                continue
            for ts_col, p_ts in candidates.per_role["timestamp"]:
                if ts_col == case_col or ts_col == act_col:
                    continue
                combos.append((case_col, act_col, ts_col, p_case * p_act * p_ts))
    return combos


def count_planned_evaluations(
    candidates: CandidateSet,
    ts_fractions: dict[str, float] | None = None,
    min_ts_parse_fraction: float = 0.9,
) -> int:
    """Number of combinations identify would send to the scorer.

    Zero when the stage-one short-circuit applies (singleton, pairwise
    distinct candidate lists). Combos whose timestamp candidate has a known
    parse fraction below the threshold are pruned without being counted,
    matching identify. With no ties the count is bounded by k cubed however
    many columns the log has.
    """
    per_role = candidates.per_role
    if all(len(per_role[role]) == 1 for role in ROLES):
        cols = [per_role[role][0][0] for role in ROLES]
        if len(set(cols)) == len(ROLES):
            return 0
    count = 0
    for _, _, ts_col, _ in enumerate_combos(candidates):
        if ts_fractions is not None and min_ts_parse_fraction > 0:
            if ts_fractions.get(ts_col, 1.0) < min_ts_parse_fraction:
                continue
        count += 1
    return count


def _score_one(log: EventLog, combo: ComboResult, config: PipelineConfig) -> ComboResult:
    """Worker for one combination; must stay module-level for process pools."""
    ts = parse_timestamp_column(log.column(combo.timestamp_column))
    try:
        traces = build_traces(log, combo.case_column, combo.activity_column, ts)
    except ValueError as exc:
        combo.score = 0.0
        combo.skipped_reason = str(exc)
        return combo
    report = score_combo(
        traces,
        miner=config.miner,
        metric=config.metric,
        params=config.miner_params,
        th_discovery=config.th_discovery,
        th_evaluation=config.th_evaluation,
    )
    combo.report = report
    combo.score = report.score
    if report.skipped_reason is not None:
        combo.skipped_reason = report.skipped_reason
    return combo


def _greedy_assignment(probabilities: list[dict]) -> dict[str, str]:
    """Highest-probability (role, column) pairs, greedily and without reuse."""
    triples = []
    for order, row in enumerate(probabilities):
        for role_index, role in enumerate(ROLES):
            triples.append((-row[role], role_index, order, role, row["column"]))
    assignment: dict[str, str] = {}
    used: set[str] = set()
    for _, _, _, role, column in sorted(triples):
        if role in assignment or column in used:
            continue
        assignment[role] = column
        used.add(column)
        if len(assignment) == len(ROLES):
            break
    return assignment


def identify(log: EventLog, model: RoleModel, config: PipelineConfig | None = None) -> IdentificationReport:
    """Assign the case, activity, and timestamp roles to columns of a log."""
    config = config or PipelineConfig()
    if len(log.columns) < len(ROLES):
        raise PipelineError(
            "need at least %d columns, got %d" % (len(ROLES), len(log.columns)))
    if config.k < 1:
        raise PipelineError("k must be at least 1")
    log = log.truncated(config.n_rows)
    warnings: list[str] = []

    t0 = time.monotonic()
    vectors = featurize_log(log)
    probabilities: list[dict] = []
    pairs = []
    for name, vector in zip(log.column_names, vectors):
        probs = model.predict(vector)
        row = {"column": name}
        row.update({role: probs[role] for role in ROLES})
        probabilities.append(row)
        pairs.append((name, probs))
    candidates = select_candidates(pairs, config.k, config.epsilon)
    stage1_s = time.monotonic() - t0

    single = all(len(candidates.per_role[role]) == 1 for role in ROLES)
    if single:
        cols = [candidates.per_role[role][0][0] for role in ROLES]
        if len(set(cols)) == len(ROLES):
            return IdentificationReport(
                case_column=cols[0],
                activity_column=cols[1],
                timestamp_column=cols[2],
                stage="stage1-only",
                miner="NA",
                metric=config.metric,
                probabilities=probabilities,
                candidates=candidates.per_role,
                combos_scored=[],
                count_planned_evaluations=0,
                used_fallback=False,
                warnings=warnings,
                n_rows_used=log.n_rows,
                n_columns=len(log.columns),
                stage1_s=stage1_s,
                stage2_s=0.0,
            )

    t1 = time.monotonic()
    enumerated = enumerate_combos(candidates)
    combos: list[ComboResult] = []
    ts_fractions: dict[str, float] = {}
    for index, (case_col, act_col, ts_col, prob_product) in enumerate(enumerated):
        combo = ComboResult(
            case_column=case_col,
            activity_column=act_col,
            timestamp_column=ts_col,
            index=index,
            prob_product=prob_product,
        )
        if ts_col not in ts_fractions:
            ts_fractions[ts_col] = parse_timestamp_column(log.column(ts_col)).parsed_fraction
        fraction = ts_fractions[ts_col]
        if config.min_ts_parse_fraction > 0 and fraction < config.min_ts_parse_fraction:
            combo.skipped_reason = (
                "timestamp parse fraction %.3f below %.3f"
                % (fraction, config.min_ts_parse_fraction))
        combos.append(combo)

    pending = [c for c in combos if c.skipped_reason is None]
    if config.jobs > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            futures = [pool.submit(_score_one, log, c, config) for c in pending]
            scored = [f.result() for f in futures]
    else:
        scored = [_score_one(log, c, config) for c in pending]
    by_index = {c.index: c for c in scored}
    combos = [by_index.get(c.index, c) for c in combos]
    count_planned = len(pending)

    best = None
    for combo in combos:
        key = (combo.score, combo.prob_product, -combo.index)
        if combo.score > 0 and (best is None or key > best[0]):
            best = (key, combo)
    stage2_s = time.monotonic() - t1

    if best is not None:
        combo = best[1]
        return IdentificationReport(
            case_column=combo.case_column,
            activity_column=combo.activity_column,
            timestamp_column=combo.timestamp_column,
            stage="two-stage",
            miner=config.miner,
            metric=config.metric,
            probabilities=probabilities,
            candidates=candidates.per_role,
            combos_scored=combos,
            count_planned_evaluations=count_planned,
            used_fallback=False,
            warnings=warnings,
            n_rows_used=log.n_rows,
            n_columns=len(log.columns),
            stage1_s=stage1_s,
            stage2_s=stage2_s,
        )

    warnings.append(
        "every candidate combination scored zero; falling back to the"
        " highest stage-one probabilities")
    assignment = _greedy_assignment(probabilities)
    return IdentificationReport(
        case_column=assignment["case"],
        activity_column=assignment["activity"],
        timestamp_column=assignment["timestamp"],
        stage="two-stage",
        miner=config.miner,
        metric=config.metric,
        probabilities=probabilities,
        candidates=candidates.per_role,
        combos_scored=combos,
        count_planned_evaluations=count_planned,
        used_fallback=True,
        warnings=warnings,
        n_rows_used=log.n_rows,
        n_columns=len(log.columns),
        stage1_s=stage1_s,
        stage2_s=stage2_s,
    )
