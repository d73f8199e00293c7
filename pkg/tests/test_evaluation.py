import csv

import pytest

from keyattr.classifier import ROLES, Hyperparams
from keyattr.evaluation import evaluate_corpus, format_text_report, write_report_files
from keyattr.pipeline import PipelineConfig
from keyattr.synthgen import generate_corpus


def _pairs(n, base_seed, **kwargs):
    return [(l.log, l.labels) for l in generate_corpus(n, base_seed=base_seed, **kwargs)]


def test_evaluate_corpus_accuracy_and_timings(default_model):
    pairs = _pairs(5, base_seed=3000)
    result = evaluate_corpus(pairs, model=default_model)
    assert len(result.outcomes) == 5
    for role in ROLES:
        assert 0.0 <= result.accuracy[role] <= 1.0
        got = sum(1 for o in result.outcomes if o.correct(role)) / 5
        assert result.accuracy[role] == got
    assert result.mean_stage1_s > 0.0
    assert result.n_two_stage == sum(
        1 for o in result.outcomes if o.stage == "two-stage")
    if result.n_two_stage == 0:
        assert result.mean_stage2_s is None
    else:
        want = sum(o.stage2_s for o in result.outcomes
                   if o.stage == "two-stage") / result.n_two_stage
        assert result.mean_stage2_s == pytest.approx(want)


def test_evaluate_corpus_validations(default_model):
    pairs = _pairs(2, base_seed=3100)
    with pytest.raises(ValueError):
        evaluate_corpus([], model=default_model)
    with pytest.raises(ValueError):
        evaluate_corpus(pairs)  # no model, no holdout
    with pytest.raises(ValueError):
        evaluate_corpus(pairs[:1], holdout=True)
    with pytest.raises(ValueError):
        evaluate_corpus(pairs, model=default_model, names=["only-one"])


def test_evaluate_corpus_holdout_retrains():
    # Each log is judged by a model trained on the others only; tiny forests
    # keep the retraining loop fast.
    pairs = _pairs(3, base_seed=3200)
    hp = Hyperparams(n_trees=15, max_depth=6)
    result = evaluate_corpus(pairs, holdout=True, hyperparams=hp, train_seed=1)
    assert result.holdout
    assert len(result.outcomes) == 3


def test_evaluate_corpus_progress_and_names(default_model):
    pairs = _pairs(2, base_seed=3300)
    seen = []
    result = evaluate_corpus(
        pairs, model=default_model, names=["first", "second"],
        progress=lambda i, total, outcome: seen.append((i, total, outcome.name)))
    assert seen == [(0, 2, "first"), (1, 2, "second")]
    assert [o.name for o in result.outcomes] == ["first", "second"]


def test_evaluation_json_shape(default_model):
    pairs = _pairs(2, base_seed=3400)
    result = evaluate_corpus(pairs, model=default_model)
    doc = result.to_json_dict()
    assert doc["n_logs"] == 2
    assert doc["holdout"] is False
    assert set(doc["accuracy"]) == set(ROLES)
    assert set(doc["timings"]) == {"mean_stage1_s", "mean_stage2_s", "n_two_stage"}
    for entry in doc["logs"]:
        assert set(entry["correct"]) == set(ROLES)
        assert set(entry["timings"]) == {"stage1_s", "stage2_s"}


def test_format_text_report(default_model):
    pairs = _pairs(2, base_seed=3500)
    result = evaluate_corpus(pairs, model=default_model)
    text = format_text_report(result)
    for role in ROLES:
        assert role in text
    assert "logs evaluated: 2" in text
    assert "stage 1" in text and "stage 2" in text


def test_write_report_files(tmp_path, default_model):
    pairs = _pairs(3, base_seed=3600)
    result = evaluate_corpus(pairs, model=default_model)
    paths = write_report_files(result, tmp_path / "report")
    names = sorted(p.name for p in paths)
    assert names == ["accuracy.png", "per_log.csv", "summary.csv", "timings.png"]
    for p in paths:
        assert p.exists() and p.stat().st_size > 0

    with open(tmp_path / "report" / "per_log.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 1 + 3
    assert rows[0][:4] == ["log", "n_rows_used", "stage", "used_fallback"]
    for role in ROLES:
        assert ("correct_%s" % role) in rows[0]

    with open(tmp_path / "report" / "summary.csv", newline="") as fh:
        summary = {row[0]: row[1] for row in csv.reader(fh) if row}
    assert summary["n_logs"] == "3"
    for role in ROLES:
        assert ("accuracy_%s" % role) in summary

    for png in ("accuracy.png", "timings.png"):
        data = (tmp_path / "report" / png).read_bytes()
        assert data[:8] == b"\x89PNG\r\n\x1a\n"


def test_pipeline_config_reaches_identify(default_model):
    # A one-row cap is propagated into identification.
    pairs = _pairs(1, base_seed=3700)
    result = evaluate_corpus(pairs, model=default_model,
                             config=PipelineConfig(k=1, n_rows=50))
    assert result.outcomes[0].n_rows_used <= 50
