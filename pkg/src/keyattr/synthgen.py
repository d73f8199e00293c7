"""Synthetic labeled event logs for training and evaluating the classifier.

Each generated log comes from a random process tree played out into cases,
rendered into one of the supported timestamp formats, padded with distractor
columns, and shuffled. Everything is driven by one seed, so a (seed, shape)
pair always yields the same file bytes.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass
from pathlib import Path

from .classifier import ROLES, TrainingCorpus
from .features import column_features
from .ingest import TIMESTAMP_FORMAT_IDS, EventLog, load_csv, render_timestamp
from .models import LOOP, PAR, SEQ, XOR, ProcessTree, activity, operator

_VERBS = (
    "Review", "Approve", "Submit", "Check", "Create", "Update", "Close",
    "Open", "Assign", "Validate", "Reject", "Archive", "Send", "Receive",
    "Schedule", "Confirm", "Escalate", "Register", "Dispatch", "Verify",
)
_NOUNS = (
    "Order", "Request", "Invoice", "Claim", "Ticket", "Report", "Payment",
    "Document", "Account", "Form", "Contract", "Shipment", "Quote",
    "Record", "Application", "Refund", "Complaint", "Estimate", "Package",
)
_LOREM = (
    "lorem", "ipsum", "dolor", "amet", "consectetur", "adipiscing", "elit",
    "tempor", "incididunt", "labore", "dolore", "magna", "aliqua", "veniam",
    "quis", "nostrud", "exercitation", "ullamco", "laboris", "nisi",
)
_CATEGORY_WORDS = (
    "north", "south", "east", "west", "online", "retail", "phone", "mail",
    "gold", "silver", "bronze", "standard", "express", "internal", "external",
)
_CONSTANT_VALUES = ("yes", "active", "default", "none", "open")

_CASE_NAME_POOL = ("case_id", "case", "ticket", "order_id", "instance", "reference")
_ACT_NAME_POOL = ("activity", "event", "action", "task", "step", "operation")
_TS_NAME_POOL = ("timestamp", "time", "logged_at", "when", "created", "recorded")
_DISTRACTOR_NAME_POOL = (
    "note", "amount", "channel", "owner", "ref", "batch", "region", "detail",
    "misc", "extra", "source", "group", "kind", "tag", "scope", "origin",
    "status", "zone", "team", "label_col", "marker", "field_a", "field_b",
    "field_c", "field_d", "field_e", "field_f", "field_g", "field_h",
)

CASE_ID_FORMATS = ("numeric", "prefixed", "uuid")
DISTRACTOR_KINDS = ("constant", "int", "lorem", "uuid", "category", "date_only")
# random_ts renders valid timestamps drawn uniformly over the log's span, so
# per-column features cannot tell it from the real timestamp column; only the
# scrambled event order gives it away, which takes an order-sensitive metric
# (buijs2014) to catch. It is opt-in rather than part of the default menu.
ALL_DISTRACTOR_KINDS = DISTRACTOR_KINDS + ("random_ts",)

# Redo probability and cap for loop playout; keeps traces finite and short.
_LOOP_REDO_P = 0.4
_LOOP_REDO_CAP = 3


def _split_labels(rng: random.Random, labels: list[str], parts: int) -> list[list[str]]:
    cuts = sorted(rng.sample(range(1, len(labels)), parts - 1))
    groups = []
    prev = 0
    for cut in cuts + [len(labels)]:
        groups.append(labels[prev:cut])
        prev = cut
    return groups


def _subtree(rng: random.Random, labels: list[str], depth: int) -> ProcessTree:
    if len(labels) == 1:
        return activity(labels[0])
    if depth <= 0:
        return operator(SEQ, [activity(lab) for lab in labels])
    kind = rng.choice((SEQ, XOR, PAR, LOOP))
    parts = 2 if kind == LOOP else min(len(labels), rng.randint(2, 3))
    groups = _split_labels(rng, labels, parts)
    return ProcessTree(kind, children=[_subtree(rng, g, depth - 1) for g in groups])


def sample_tree(rng: random.Random, tree_depth: int = 3) -> ProcessTree:
    """Random process tree: a sequence of 2-4 blocks over 3-10 distinct activities.

    The sequence root guarantees at least two events per playout, so a case
    column never looks fully unique.
    """
    n_leaves = rng.randint(3, 10)
    pairs = rng.sample([(v, n) for v in _VERBS for n in _NOUNS], n_leaves)
    labels = ["%s %s" % (v, n) for v, n in pairs]
    parts = min(rng.randint(2, 4), n_leaves)
    groups = _split_labels(rng, labels, parts)
    children = [_subtree(rng, g, tree_depth - 1) for g in groups]
    return ProcessTree(SEQ, children=children)


def playout(tree: ProcessTree, rng: random.Random) -> list[str]:
    """One random walk through the tree, returning the activity sequence."""
    if tree.kind == "activity":
        return [tree.label]
    if tree.kind == "silent":
        return []
    if tree.kind == SEQ:
        out: list[str] = []
        for child in tree.children:
            out.extend(playout(child, rng))
        return out
    if tree.kind == XOR:
        return playout(rng.choice(tree.children), rng)
    if tree.kind == PAR:
        runs = [playout(child, rng) for child in tree.children]
        out = []
        while any(runs):
            pick = rng.choice([i for i, r in enumerate(runs) if r])
            out.append(runs[pick].pop(0))
        return out
    if tree.kind == LOOP:
        do, redos = tree.children[0], tree.children[1:]
        out = playout(do, rng)
        rounds = 0
        while rounds < _LOOP_REDO_CAP and rng.random() < _LOOP_REDO_P:
            out.extend(playout(rng.choice(redos), rng))
            out.extend(playout(do, rng))
            rounds += 1
        return out
    raise ValueError("unknown tree kind %r" % (tree.kind,))


def _case_ids(rng: random.Random, n: int, case_format: str) -> list[str]:
    if case_format == "numeric":
        start = rng.randint(1000, 90000)
        return [str(start + i) for i in range(n)]
    if case_format == "prefixed":
        prefix = rng.choice(("C", "CASE-", "T-", "INC"))
        start = rng.randint(10, 500)
        return ["%s%04d" % (prefix, start + i) for i in range(n)]
    if case_format == "uuid":
        ids = []
        for _ in range(n):
            h = "".join(rng.choice("0123456789abcdef") for _ in range(32))
            ids.append("%s-%s-%s-%s-%s" % (h[:8], h[8:12], h[12:16], h[16:20], h[20:]))
        return ids
    raise ValueError("unknown case id format %r" % (case_format,))


def _case_instants(rng: random.Random, n_events: int) -> list[int]:
    """Strictly increasing epoch-ms instants, all on one calendar date.

    Keeping a case inside a single date makes day/month order irrelevant to
    event order within the case, whatever the rendered format.
    """
    max_inc = 600
    if n_events > 1:
        max_inc = max(1, min(600, 86000 // (n_events - 1)))
    increments = [rng.randint(1, max_inc) for _ in range(n_events - 1)]
    span = sum(increments)
    day = rng.randint(17897, 19722)  # dates in 2019..2023
    start_second = rng.randint(0, 86399 - span - 1)
    instants = [(day * 86400 + start_second) * 1000]
    for inc in increments:
        instants.append(instants[-1] + inc * 1000)
    return instants


def _distractor_cells(rng: random.Random, kind: str, n: int,
                      span: tuple[int, int] | None = None,
                      ts_format: str | None = None) -> list[str]:
    if kind == "random_ts":
        lo, hi = span
        return [render_timestamp(ts_format, rng.randint(lo // 1000, hi // 1000) * 1000)
                for _ in range(n)]
    if kind == "constant":
        value = rng.choice(_CONSTANT_VALUES)
        return [value] * n
    if kind == "int":
        return [str(rng.randint(1, 1000)) for _ in range(n)]
    if kind == "lorem":
        return [" ".join(rng.choice(_LOREM) for _ in range(rng.randint(1, 5)))
                for _ in range(n)]
    if kind == "uuid":
        return ["".join(rng.choice("0123456789abcdef") for _ in range(32))
                for _ in range(n)]
    if kind == "category":
        values = rng.sample(_CATEGORY_WORDS, rng.randint(3, 5))
        return [rng.choice(values) for _ in range(n)]
    if kind == "date_only":
        cells = []
        for _ in range(n):
            day = rng.randint(17897, 19722)
            ymd = render_timestamp("iso8601", day * 86400000).split("T")[0]
            cells.append(ymd)
        return cells
    raise ValueError("unknown distractor kind %r" % (kind,))


@dataclass
class LabeledLog:
    """A synthetic log plus the true role assignment by column name."""

    log: EventLog
    labels: dict[str, str]
    timestamp_format: str
    tree: ProcessTree


def generate_log(seed: int, n_cases: int = 50, n_distractors: int = 5,
                 timestamp_format: str = "iso8601", case_format: str = "numeric",
                 tree_depth: int = 3,
                 distractor_kinds: tuple[str, ...] = DISTRACTOR_KINDS) -> LabeledLog:
    """One labeled synthetic log, fully determined by its arguments."""
    if timestamp_format not in TIMESTAMP_FORMAT_IDS:
        raise ValueError("unknown timestamp format %r" % (timestamp_format,))
    rng = random.Random(seed)
    tree = sample_tree(rng, tree_depth)
    ids = _case_ids(rng, n_cases, case_format)
    rows: list[tuple[int, str, str]] = []
    for case_id in ids:
        events = playout(tree, rng)
        instants = _case_instants(rng, len(events))
        for instant, act in zip(instants, events):
            rows.append((instant, case_id, act))
    rows.sort(key=lambda r: r[0])

    n = len(rows)
    case_cells = [r[1] for r in rows]
    act_cells = [r[2] for r in rows]
    ts_cells = [render_timestamp(timestamp_format, r[0]) for r in rows]

    names_used: set[str] = set()

    def pick_name(pool) -> str:
        base = rng.choice(pool)
        name = base
        while name in names_used:
            name = "%s_%d" % (base, rng.randint(2, 999))
        names_used.add(name)
        return name

    case_name = pick_name(_CASE_NAME_POOL)
    act_name = pick_name(_ACT_NAME_POOL)
    ts_name = pick_name(_TS_NAME_POOL)
    columns: list[tuple[str, list[str]]] = [
        (case_name, case_cells),
        (act_name, act_cells),
        (ts_name, ts_cells),
    ]
    span = (rows[0][0], rows[-1][0]) if rows else (0, 0)
    for j in range(n_distractors):
        kind = distractor_kinds[j % len(distractor_kinds)]
        cells = _distractor_cells(rng, kind, n, span=span, ts_format=timestamp_format)
        columns.append((pick_name(_DISTRACTOR_NAME_POOL), cells))
    rng.shuffle(columns)

    log = EventLog(columns=columns, source="synthetic:%d" % seed)
    labels = {"case": case_name, "activity": act_name, "timestamp": ts_name}
    return LabeledLog(log=log, labels=labels, timestamp_format=timestamp_format, tree=tree)


def write_labeled_log(labeled: LabeledLog, csv_path: Path) -> Path:
    """Write the log as CSV plus a .labels.json sidecar; returns the sidecar path."""
    csv_path = Path(csv_path)
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(labeled.log.column_names)
        cols = [cells for _, cells in labeled.log.columns]
        for i in range(labeled.log.n_rows):
            writer.writerow([col[i] for col in cols])
    if csv_path.name.endswith(".csv"):
        sidecar = Path(str(csv_path)[: -len(".csv")] + ".labels.json")
    else:
        sidecar = Path(str(csv_path) + ".labels.json")
    with open(sidecar, "w", encoding="utf-8") as fh:
        json.dump(labeled.labels, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return sidecar


_N_CASES_CYCLE = (25, 40, 60, 90, 140)
_N_DISTRACTORS_CYCLE = (2, 3, 4, 5, 6, 8)


def generate_corpus(n_logs: int, base_seed: int = 42, out_dir: Path | None = None,
                    n_distractors: int | None = None, n_cases: int | None = None,
                    tree_depth: int = 3,
                    distractor_kinds: tuple[str, ...] = DISTRACTOR_KINDS) -> list[LabeledLog]:
    """A batch of labeled logs with shapes and formats varied cyclically.

    Log i uses seed base_seed + i. When out_dir is given, each log is written
    as log_<i>.csv with a log_<i>.labels.json sidecar.
    """
    logs = []
    for i in range(n_logs):
        labeled = generate_log(
            seed=base_seed + i,
            n_cases=n_cases if n_cases is not None else _N_CASES_CYCLE[i % len(_N_CASES_CYCLE)],
            n_distractors=(n_distractors if n_distractors is not None
                           else _N_DISTRACTORS_CYCLE[i % len(_N_DISTRACTORS_CYCLE)]),
            timestamp_format=TIMESTAMP_FORMAT_IDS[i % len(TIMESTAMP_FORMAT_IDS)],
            case_format=CASE_ID_FORMATS[i % len(CASE_ID_FORMATS)],
            tree_depth=tree_depth,
            distractor_kinds=distractor_kinds,
        )
        logs.append(labeled)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for i, labeled in enumerate(logs):
            write_labeled_log(labeled, out_dir / ("log_%d.csv" % i))
    return logs


def read_corpus(corpus_dir: Path) -> list[tuple[EventLog, dict[str, str]]]:
    """Load every log_*.csv with its labels sidecar, ordered by index."""
    corpus_dir = Path(corpus_dir)
    pairs = []
    paths = sorted(corpus_dir.glob("log_*.csv"),
                   key=lambda p: int(p.stem.split("_")[1]))
    for path in paths:
        sidecar = path.with_name(path.stem + ".labels.json")
        with open(sidecar, encoding="utf-8") as fh:
            labels = json.load(fh)
        missing = [role for role in ROLES if role not in labels]
        if missing:
            raise ValueError("%s lacks roles %s" % (sidecar, ", ".join(missing)))
        pairs.append((load_csv(path), labels))
    if not pairs:
        raise ValueError("no log_*.csv files under %s" % corpus_dir)
    return pairs


def build_training_corpus(pairs: list[tuple[EventLog, dict[str, str]]],
                          n_rows: int = 1000) -> TrainingCorpus:
    """Featurize corpus columns under the same row cap identification uses."""
    vectors = []
    labels: list[str | None] = []
    provenance = []
    for log, role_map in pairs:
        truncated = log.truncated(n_rows)
        role_of = {col: role for role, col in role_map.items()}
        for name, cells in truncated.columns:
            vectors.append(column_features(cells))
            labels.append(role_of.get(name))
            provenance.append("%s:%s" % (log.source, name))
    return TrainingCorpus(vectors=vectors, labels=labels, provenance=provenance)
