"""Command line surface: exit codes, output formats, artifact files.

Each test drives ``main(argv)`` in process so exit codes and streams are
under direct assertion; one subprocess test proves the installed script
wires up the same entry point.
"""

import csv
import json
import os
import subprocess

import pytest

from keyattr.cli import EXIT_FALLBACK, EXIT_INPUT, EXIT_OK, EXIT_USAGE, main
from keyattr.ingest import load_csv
from keyattr.classifier import RoleModel
from keyattr.synthgen import generate_log

from conftest import DATA_DIR, strip_timing_keys


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    """Two small labeled logs written by the generate subcommand."""
    out = tmp_path_factory.mktemp("corpus")
    code = main(["generate", "--out", str(out), "--count", "2", "--seed", "11"])
    assert code == EXIT_OK
    return out


@pytest.fixture(scope="module")
def log_csv(corpus_dir):
    return corpus_dir / "log_0.csv"


def test_generate_writes_corpus(tmp_path, capsys):
    code = main(["generate", "--out", str(tmp_path), "--count", "3",
                 "--seed", "9"])
    assert code == EXIT_OK
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["log_0.csv", "log_0.labels.json",
                     "log_1.csv", "log_1.labels.json",
                     "log_2.csv", "log_2.labels.json"]
    out = capsys.readouterr().out
    assert "wrote 3 labeled logs" in out


def test_generate_distractor_count(tmp_path):
    code = main(["generate", "--out", str(tmp_path), "--count", "1",
                 "--seed", "3", "--distractors", "12"])
    assert code == EXIT_OK
    log = load_csv(str(tmp_path / "log_0.csv"))
    assert len(log.column_names) == 15


def test_train_writes_model_and_is_deterministic(corpus_dir, tmp_path, capsys):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for path in paths:
        code = main(["train", "--corpus", str(corpus_dir),
                     "--model", str(path), "--trees", "20", "--depth", "6"])
        assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "trained on 2 logs" in out
    assert paths[0].read_bytes() == paths[1].read_bytes()
    model = RoleModel.load(str(paths[0]))
    assert set(model.forests) == {"case", "activity", "timestamp"}


def test_train_json_format(corpus_dir, tmp_path, capsys):
    path = tmp_path / "model.json"
    code = main(["train", "--corpus", str(corpus_dir), "--model", str(path),
                 "--trees", "20", "--depth", "6", "--format", "json"])
    assert code == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["model_path"] == str(path)
    assert doc["n_logs"] == 2
    assert set(doc["positives"]) == {"case", "activity", "timestamp"}


def test_identify_text_output(log_csv, capsys):
    code = main(["identify", "--log", str(log_csv)])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    for role in ("case", "activity", "timestamp"):
        assert role in out
    assert "combinations planned:" in out
    assert "stage:" in out


def test_identify_json_single_document(log_csv, capsys):
    code = main(["identify", "--log", str(log_csv), "--format", "json"])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    doc = json.loads(out)  # would raise if anything else shared stdout
    assert doc["schema_version"] == 1
    assert set(doc["assignment"]) == {"case", "activity", "timestamp"}


def test_identify_job_invariant(log_csv, capsys):
    docs = []
    for jobs in ("1", "4"):
        code = main(["identify", "--log", str(log_csv), "--format", "json",
                     "--jobs", jobs])
        assert code == EXIT_OK
        docs.append(strip_timing_keys(json.loads(capsys.readouterr().out)))
    assert docs[0] == docs[1]


def test_identify_missing_file_exits_2(tmp_path, capsys):
    code = main(["identify", "--log", str(tmp_path / "nope.csv")])
    assert code == EXIT_INPUT
    assert "error:" in capsys.readouterr().err


def test_usage_errors_exit_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["identify"])  # --log is required
    assert exc.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == EXIT_USAGE
    assert "error:" in capsys.readouterr().err


def test_identify_fallback_exits_3(tmp_path, capsys):
    # A log whose activity column is all empty strings defeats every
    # candidate combination, forcing the stage-one fallback.
    labeled = generate_log(2005, n_cases=20, n_distractors=2)
    act_col = labeled.labels["activity"]
    path = tmp_path / "broken.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(labeled.log.column_names)
        columns = [[""] * labeled.log.n_rows if name == act_col else cells
                   for name, cells in labeled.log.columns]
        writer.writerows(zip(*columns))
    code = main(["identify", "--log", str(path)])
    assert code == EXIT_FALLBACK
    err = capsys.readouterr().err
    assert "scored zero" in err


def test_jobs_env_fallback(log_csv, capsys, monkeypatch):
    monkeypatch.setenv("KEYATTR_JOBS", "4")
    assert main(["identify", "--log", str(log_csv)]) == EXIT_OK
    monkeypatch.setenv("KEYATTR_JOBS", "soon")
    code = main(["identify", "--log", str(log_csv)])
    assert code == EXIT_INPUT
    assert "KEYATTR_JOBS" in capsys.readouterr().err


def test_evaluate_writes_reports(corpus_dir, tmp_path, capsys):
    report_dir = tmp_path / "report"
    code = main(["evaluate", "--corpus", str(corpus_dir),
                 "--report-dir", str(report_dir)])
    assert code == EXIT_OK
    captured = capsys.readouterr()
    assert "logs evaluated: 2" in captured.out
    assert "[1/2]" in captured.err and "[2/2]" in captured.err
    names = sorted(p.name for p in report_dir.iterdir())
    assert names == ["accuracy.png", "per_log.csv", "summary.csv",
                     "timings.png"]


def test_evaluate_json_format(corpus_dir, capsys):
    code = main(["evaluate", "--corpus", str(corpus_dir), "--format", "json"])
    assert code == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert doc["n_logs"] == 2
    assert set(doc["accuracy"]) == {"case", "activity", "timestamp"}
    assert len(doc["logs"]) == 2


def test_discover_writes_dot(tmp_path, capsys):
    dot_path = tmp_path / "net.dot"
    code = main(["discover", "--log", str(DATA_DIR / "hamburger.csv"),
                 "--case", "ID", "--activity", "Activity",
                 "--timestamp", "Datetime", "--dot", str(dot_path)])
    assert code == EXIT_OK
    assert "discovered net:" in capsys.readouterr().out
    assert "Take Order" in dot_path.read_text()


def test_discover_unknown_column_exits_2(capsys):
    code = main(["discover", "--log", str(DATA_DIR / "hamburger.csv"),
                 "--case", "Bogus", "--activity", "Activity",
                 "--timestamp", "Datetime", "--dot", "unused.dot"])
    assert code == EXIT_INPUT
    assert "unknown column" in capsys.readouterr().err


def test_installed_script_entry_point(log_csv):
    env = dict(os.environ)
    proc = subprocess.run(
        ["keyattr", "identify", "--log", str(log_csv), "--format", "json"],
        capture_output=True, text=True, env=env)
    assert proc.returncode == EXIT_OK
    doc = json.loads(proc.stdout)
    assert doc["schema_version"] == 1
