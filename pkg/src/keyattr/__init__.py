"""Key-attribute identification for event logs.

Finds the case-id, activity, and timestamp columns of a raw CSV event log in
two stages: a per-column role classifier proposes a few candidates per role,
then process discovery plus model-quality scoring picks the combination that
yields the most coherent process model.
"""

from .classifier import (
    CandidateSet,
    Hyperparams,
    RoleModel,
    TrainingCorpus,
    select_candidates,
    train,
)
from .conformance import (
    METRICS,
    ScoreReport,
    combined_buijs,
    generalization,
    precision_escaping,
    replay_fitness,
    score_combo,
    simplicity,
    token_replay,
)
from .discovery import (
    Dfg,
    MinerParams,
    MiningError,
    TraceLog,
    build_dfg,
    build_traces,
    mine,
    mine_heuristics,
    mine_inductive,
)
from .evaluation import EvaluationResult, evaluate_corpus
from .features import (
    FEATURE_NAMES,
    FeatureVector,
    column_features,
    featurize_log,
    global_features,
    local_features,
)
from .ingest import EventLog, load_csv, parse_timestamp_column, render_timestamp
from .models import PetriNet, ProcessTree, export_dot, tree_to_net
from .pipeline import (
    IdentificationReport,
    PipelineConfig,
    PipelineError,
    count_planned_evaluations,
    identify,
)
from .synthgen import (
    LabeledLog,
    build_training_corpus,
    generate_corpus,
    generate_log,
    read_corpus,
)

__all__ = [
    "CandidateSet",
    "Dfg",
    "EvaluationResult",
    "EventLog",
    "FEATURE_NAMES",
    "FeatureVector",
    "Hyperparams",
    "IdentificationReport",
    "LabeledLog",
    "METRICS",
    "MinerParams",
    "MiningError",
    "PetriNet",
    "PipelineConfig",
    "PipelineError",
    "ProcessTree",
    "RoleModel",
    "ScoreReport",
    "TraceLog",
    "TrainingCorpus",
    "build_dfg",
    "build_traces",
    "build_training_corpus",
    "column_features",
    "combined_buijs",
    "count_planned_evaluations",
    "evaluate_corpus",
    "export_dot",
    "featurize_log",
    "generalization",
    "generate_corpus",
    "generate_log",
    "global_features",
    "identify",
    "load_csv",
    "local_features",
    "mine",
    "mine_heuristics",
    "mine_inductive",
    "parse_timestamp_column",
    "precision_escaping",
    "read_corpus",
    "render_timestamp",
    "replay_fitness",
    "score_combo",
    "select_candidates",
    "simplicity",
    "token_replay",
    "train",
    "tree_to_net",
]
