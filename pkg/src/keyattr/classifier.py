"""Per-role column classification.

Three independent binary random forests (case, activity, timestamp) over the
nine column features. Trees are grown from scratch so that models are fully
deterministic for a given corpus and seed, and serialize to a plain JSON
document that round-trips bit-for-bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .features import FEATURE_NAMES, FeatureVector

ROLES = ("case", "activity", "timestamp")

SCHEMA_VERSION = 1

# Flat node layout: [feature, threshold, left, right, leaf_fraction].
# Internal nodes have leaf_fraction None; leaves have feature -1 and child -1.
Node = list


class CorpusError(ValueError):
    """Raised when a training corpus cannot support all three forests."""


@dataclass
class Hyperparams:
    n_trees: int = 100
    max_depth: int = 8
    min_leaf: int = 2
    features_per_split: int = 3

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_leaf": self.min_leaf,
            "features_per_split": self.features_per_split,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Hyperparams":
        return cls(
            n_trees=int(d["n_trees"]),
            max_depth=int(d["max_depth"]),
            min_leaf=int(d["min_leaf"]),
            features_per_split=int(d["features_per_split"]),
        )


@dataclass
class TrainingCorpus:
    """Feature vectors with at most one role label each (None = distractor)."""

    vectors: list[FeatureVector]
    labels: list[str | None]
    provenance: list[str] = field(default_factory=list)

    def __post_init__(self):
        if len(self.vectors) != len(self.labels):
            raise CorpusError("vectors and labels differ in length")
        for label in self.labels:
            if label is not None and label not in ROLES:
                raise CorpusError("unknown role label %r" % (label,))
        if not self.provenance:
            self.provenance = [""] * len(self.vectors)

    def validate(self):
        for role in ROLES:
            pos = sum(1 for lab in self.labels if lab == role)
            if pos == 0:
                raise CorpusError("corpus has no positive examples for role %r" % role)
            if pos == len(self.labels):
                raise CorpusError("corpus has no negative examples for role %r" % role)


def _derive_seed(seed: int, role_index: int, tree_index: int) -> int:
    # Distinct streams per (seed, role, tree); schedule-independent by design.
    return (seed * 1000003 + role_index) * 1000003 + tree_index


def _grow_tree(X: np.ndarray, y: np.ndarray, rng: np.random.Generator, hp: Hyperparams) -> list[Node]:
    n, n_feats = X.shape
    bootstrap = rng.integers(0, n, size=n)
    nodes: list[Node] = []

    def build(idx: np.ndarray, depth: int) -> int:
        node_id = len(nodes)
        nodes.append(None)
        ys = y[idx]
        frac = float(ys.mean())
        if depth >= hp.max_depth or len(idx) < 2 * hp.min_leaf or frac in (0.0, 1.0):
            nodes[node_id] = [-1, None, -1, -1, frac]
            return node_id
        feats = sorted(rng.choice(n_feats, size=hp.features_per_split, replace=False).tolist())
        best = None  # (gini, feature, threshold)
        for f in feats:
            col = X[idx, f]
            order = np.argsort(col, kind="stable")
            sc = col[order]
            sy = ys[order].astype(np.float64)
            m = len(idx)
            pos_prefix = np.cumsum(sy)
            total_pos = pos_prefix[-1]
            cut = np.arange(1, m)  # left part size
            valid = (sc[:-1] < sc[1:]) & (cut >= hp.min_leaf) & ((m - cut) >= hp.min_leaf)
            if not valid.any():
                continue
            left_pos = pos_prefix[:-1]
            left_n = cut.astype(np.float64)
            right_n = (m - cut).astype(np.float64)
            right_pos = total_pos - left_pos
            pl = left_pos / left_n
            pr = right_pos / right_n
            gini = (left_n * 2 * pl * (1 - pl) + right_n * 2 * pr * (1 - pr)) / m
            gini = np.where(valid, gini, np.inf)
            i = int(np.argmin(gini))
            g = float(gini[i])
            thr = float((sc[i] + sc[i + 1]) / 2.0)
            if best is None or g < best[0]:
                best = (g, f, thr)
        if best is None:
            nodes[node_id] = [-1, None, -1, -1, frac]
            return node_id
        _, f, thr = best
        mask = X[idx, f] <= thr
        # The midpoint can round onto the upper value, leaving one side
        # empty; a split that separates nothing becomes a leaf.
        if mask.all() or not mask.any():
            nodes[node_id] = [-1, None, -1, -1, frac]
            return node_id
        left_id = build(idx[mask], depth + 1)
        right_id = build(idx[~mask], depth + 1)
        nodes[node_id] = [f, thr, left_id, right_id, None]
        return node_id

    build(bootstrap, 0)
    return nodes


def _tree_leaf_fraction(nodes: list[Node], x: list[float]) -> float:
    i = 0
    while True:
        feature, threshold, left, right, frac = nodes[i]
        if feature == -1:
            return frac
        i = left if x[feature] <= threshold else right


@dataclass
class RoleModel:
    """Three trained forests plus everything needed to reproduce them."""

    forests: dict[str, list[list[Node]]]
    seed: int
    hyperparams: Hyperparams
    feature_names: tuple[str, ...] = FEATURE_NAMES

    def predict(self, fv: FeatureVector) -> dict[str, float]:
        """Per-role probability: the fraction of trees voting positive.

        A tree votes positive when its leaf fraction exceeds 0.5.
        """
        x = fv.as_list()
        out = {}
        for role in ROLES:
            trees = self.forests[role]
            votes = sum(1 for nodes in trees if _tree_leaf_fraction(nodes, x) > 0.5)
            out[role] = votes / len(trees)
        return out

    def to_json_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "feature_names": list(self.feature_names),
            "seed": self.seed,
            "hyperparameters": self.hyperparams.to_dict(),
            "forests": {role: self.forests[role] for role in ROLES},
        }

    def save(self, path: str):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True, separators=(",", ":"))
            fh.write("\n")

    @classmethod
    def from_json_dict(cls, doc: dict) -> "RoleModel":
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ValueError("unsupported model schema_version %r" % (doc.get("schema_version"),))
        names = tuple(doc["feature_names"])
        if names != FEATURE_NAMES:
            raise ValueError("model feature names do not match this build")
        forests = {}
        for role in ROLES:
            if role not in doc["forests"]:
                raise ValueError("model is missing forest for role %r" % role)
            forests[role] = [
                [[node[0], node[1], node[2], node[3], node[4]] for node in tree]
                for tree in doc["forests"][role]
            ]
        return cls(
            forests=forests,
            seed=int(doc["seed"]),
            hyperparams=Hyperparams.from_dict(doc["hyperparameters"]),
            feature_names=names,
        )

    @classmethod
    def load(cls, path: str) -> "RoleModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


def train(corpus: TrainingCorpus, seed: int = 0, hyperparams: Hyperparams | None = None) -> RoleModel:
    """Train the three per-role forests.

    All randomness comes from generators seeded by (seed, role index, tree
    index), so training is reproducible and could be parallelized across
    trees without changing the result.
    """
    corpus.validate()
    hp = hyperparams or Hyperparams()
    X = np.array([fv.as_list() for fv in corpus.vectors], dtype=np.float64)
    forests: dict[str, list[list[Node]]] = {}
    for role_index, role in enumerate(ROLES):
        y = np.array([lab == role for lab in corpus.labels], dtype=bool)
        trees = []
        for tree_index in range(hp.n_trees):
            rng = np.random.default_rng(_derive_seed(seed, role_index, tree_index))
            trees.append(_grow_tree(X, y, rng, hp))
        forests[role] = trees
    return RoleModel(forests=forests, seed=seed, hyperparams=hp)


@dataclass
class CandidateSet:
    """Top-k columns per role, probability-descending, boundary ties kept."""

    per_role: dict[str, list[tuple[str, float]]]
    k: int

    def columns(self, role: str) -> list[str]:
        return [name for name, _ in self.per_role[role]]

    def probability(self, role: str, column: str) -> float:
        for name, prob in self.per_role[role]:
            if name == column:
                return prob
        raise KeyError(column)


def select_candidates(
    probabilities: list[tuple[str, dict[str, float]]],
    k: int,
    epsilon: float = 1e-9,
) -> CandidateSet:
    """Keep the top k positively-scored columns per role, plus boundary ties.

    probabilities is (column name, {role: probability}) in column order; the
    column order also breaks probability ties, so the result is deterministic.
    A zero-probability column (no tree voted for it) is never a candidate, so
    a role can end up with fewer than k candidates, or none. Columns beyond
    the k-th survive only while their probability is within epsilon of the
    k-th, which keeps genuine ties without voiding the top-k bound.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    per_role: dict[str, list[tuple[str, float]]] = {}
    for role in ROLES:
        ranked = sorted(
            [(name, probs[role]) for name, probs in probabilities if probs[role] > 0.0],
            key=lambda item: -item[1],
        )
        if not ranked:
            per_role[role] = []
            continue
        cutoff_index = min(k, len(ranked)) - 1
        cutoff = ranked[cutoff_index][1] - epsilon
        kept = ranked[: cutoff_index + 1]
        for name, prob in ranked[cutoff_index + 1:]:
            if prob >= cutoff:
                kept.append((name, prob))
            else:
                break
        per_role[role] = kept
    return CandidateSet(per_role=per_role, k=k)
