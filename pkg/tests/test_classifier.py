import json
import math
import random

import pytest

from keyattr.classifier import (
    CandidateSet,
    CorpusError,
    Hyperparams,
    ROLES,
    RoleModel,
    SCHEMA_VERSION,
    TrainingCorpus,
    select_candidates,
    train,
)
from keyattr.features import FeatureVector, column_features


def _toy_corpus(seed=0, n_per_role=12, n_distractors=24):
    """Small synthetic corpus with cleanly separable roles."""
    rng = random.Random(seed)
    vectors = []
    labels = []
    for _ in range(n_per_role):
        vectors.append(column_features(
            ["c%04d" % rng.randrange(5000) for _ in range(50)]))
        labels.append("case")
        vectors.append(column_features(
            [rng.choice(["Take Order", "Wrap Order", "Deliver"]) for _ in range(50)]))
        labels.append("activity")
        vectors.append(column_features(
            ["2020-04-%02dT%02d:%02d:00" % (rng.randrange(1, 29),
                                            rng.randrange(24),
                                            rng.randrange(60))
             for _ in range(50)]))
        labels.append("timestamp")
    for _ in range(n_distractors):
        vectors.append(column_features(
            [str(rng.randrange(100)) for _ in range(50)]))
        labels.append(None)
    return TrainingCorpus(vectors=vectors, labels=labels)


_HP = Hyperparams(n_trees=20, max_depth=6, min_leaf=2, features_per_split=3)


def test_corpus_validation():
    fv = column_features(["a"])
    with pytest.raises(CorpusError):
        TrainingCorpus(vectors=[fv], labels=["case", "case"])
    with pytest.raises(CorpusError):
        TrainingCorpus(vectors=[fv], labels=["resource"])
    # No positives for a role is unusable.
    corpus = TrainingCorpus(vectors=[fv, fv], labels=["case", None])
    with pytest.raises(CorpusError):
        corpus.validate()
    # No negatives either.
    corpus2 = TrainingCorpus(vectors=[fv], labels=["case"])
    with pytest.raises(CorpusError):
        corpus2.validate()


def test_train_separates_toy_roles():
    corpus = _toy_corpus()
    model = train(corpus, seed=3, hyperparams=_HP)
    case_fv = column_features(["c%04d" % i for i in range(50)])
    act_fv = column_features(["Take Order" if i % 2 else "Deliver" for i in range(50)])
    ts_fv = column_features(["2020-04-01T%02d:%02d:00" % (i % 24, i % 60) for i in range(50)])
    assert model.predict(case_fv)["case"] > 0.5
    assert model.predict(act_fv)["activity"] > 0.5
    assert model.predict(ts_fv)["timestamp"] > 0.5


def test_train_is_deterministic():
    corpus = _toy_corpus()
    a = train(corpus, seed=7, hyperparams=_HP)
    b = train(corpus, seed=7, hyperparams=_HP)
    assert a.to_json_dict() == b.to_json_dict()
    c = train(corpus, seed=8, hyperparams=_HP)
    assert c.to_json_dict() != a.to_json_dict()


def test_predictions_are_vote_fractions():
    model = train(_toy_corpus(), seed=1, hyperparams=_HP)
    fv = column_features(["c%04d" % i for i in range(50)])
    probs = model.predict(fv)
    for role in ROLES:
        assert 0.0 <= probs[role] <= 1.0
        # A fraction of 20 trees.
        assert abs(probs[role] * _HP.n_trees - round(probs[role] * _HP.n_trees)) < 1e-9


def test_no_nan_leaves_even_on_tiny_samples():
    # Midpoint thresholds can land on the larger value; degenerate splits
    # must turn into leaves instead of empty children.
    rng = random.Random(5)
    for trial in range(20):
        vectors = [column_features([str(rng.randrange(3)) for _ in range(4)])
                   for _ in range(6)]
        labels = ["case", "activity", "timestamp", None, None, None]
        model = train(TrainingCorpus(vectors=vectors, labels=labels),
                      seed=trial, hyperparams=Hyperparams(n_trees=10, max_depth=8, min_leaf=1))
        for role in ROLES:
            for tree in model.forests[role]:
                for node in tree:
                    if node[0] == -1:
                        assert not math.isnan(node[4])
                        assert 0.0 <= node[4] <= 1.0


def test_save_load_round_trip(tmp_path):
    model = train(_toy_corpus(), seed=2, hyperparams=_HP)
    path = str(tmp_path / "model.json")
    model.save(path)
    loaded = RoleModel.load(path)
    assert loaded.to_json_dict() == model.to_json_dict()
    fv = column_features(["c%04d" % i for i in range(30)])
    assert loaded.predict(fv) == model.predict(fv)


def test_load_rejects_bad_schema(tmp_path):
    model = train(_toy_corpus(), seed=2, hyperparams=_HP)
    doc = model.to_json_dict()
    doc["schema_version"] = SCHEMA_VERSION + 1
    with pytest.raises(ValueError):
        RoleModel.from_json_dict(doc)
    doc2 = model.to_json_dict()
    doc2["feature_names"] = ["x"]
    with pytest.raises(ValueError):
        RoleModel.from_json_dict(doc2)
    doc3 = model.to_json_dict()
    del doc3["forests"]["case"]
    with pytest.raises(ValueError):
        RoleModel.from_json_dict(doc3)


def test_saved_model_is_pure_json(tmp_path):
    path = str(tmp_path / "model.json")
    train(_toy_corpus(), seed=0, hyperparams=_HP).save(path)
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    assert doc["schema_version"] == SCHEMA_VERSION
    assert set(doc["forests"]) == set(ROLES)


def test_select_candidates_top_k():
    probs = [
        ("a", {"case": 0.9, "activity": 0.1, "timestamp": 0.0}),
        ("b", {"case": 0.8, "activity": 0.2, "timestamp": 0.0}),
        ("c", {"case": 0.7, "activity": 0.9, "timestamp": 0.0}),
        ("d", {"case": 0.0, "activity": 0.0, "timestamp": 1.0}),
    ]
    cands = select_candidates(probs, k=2)
    assert cands.columns("case") == ["a", "b"]
    assert cands.columns("activity") == ["c", "b"]
    assert cands.columns("timestamp") == ["d"]
    assert cands.probability("case", "a") == 0.9
    with pytest.raises(KeyError):
        cands.probability("case", "zz")


def test_select_candidates_zero_probability_never_kept():
    probs = [("a", {"case": 0.0, "activity": 0.0, "timestamp": 0.0}),
             ("b", {"case": 0.4, "activity": 0.0, "timestamp": 0.0})]
    cands = select_candidates(probs, k=3)
    assert cands.columns("case") == ["b"]
    assert cands.columns("activity") == []
    assert cands.columns("timestamp") == []


def test_select_candidates_boundary_ties_kept():
    probs = [
        ("a", {"case": 0.9, "activity": 0.0, "timestamp": 0.0}),
        ("b", {"case": 0.5, "activity": 0.0, "timestamp": 0.0}),
        ("c", {"case": 0.5, "activity": 0.0, "timestamp": 0.0}),
        ("d", {"case": 0.5, "activity": 0.0, "timestamp": 0.0}),
        ("e", {"case": 0.3, "activity": 0.0, "timestamp": 0.0}),
    ]
    cands = select_candidates(probs, k=2)
    # All columns tied with the k-th stay in; below the tie stays out.
    assert cands.columns("case") == ["a", "b", "c", "d"]


def test_select_candidates_tie_break_is_column_order():
    probs = [
        ("late", {"case": 0.5, "activity": 0.0, "timestamp": 0.0}),
        ("early", {"case": 0.5, "activity": 0.0, "timestamp": 0.0}),
    ]
    cands = select_candidates(probs, k=1)
    assert cands.columns("case") == ["late", "early"]
    with pytest.raises(ValueError):
        select_candidates(probs, k=0)
