import random
import time

import pytest

from keyattr.conformance import (
    METRICS,
    combined_buijs,
    generalization,
    precision_escaping,
    replay_fitness,
    score_combo,
    simplicity,
    token_replay,
)
from keyattr.discovery import TraceLog
from keyattr.models import (
    LOOP,
    PAR,
    SEQ,
    XOR,
    PetriNet,
    ProcessTree,
    activity,
    operator,
    silent,
    tree_to_net,
)


def _traces(seqs):
    return TraceLog(traces=[list(s) for s in seqs],
                    case_ids=[str(i) for i in range(len(seqs))])


def _seq_net(*labels):
    return tree_to_net(operator(SEQ, [activity(l) for l in labels]))


# --- token replay -----------------------------------------------------------------


def test_perfect_replay():
    net = _seq_net("a", "b")
    result = token_replay(net, _traces([["a", "b"], ["a", "b"]]))
    assert result.fitness == 1.0
    assert result.missing == 0 and result.remaining == 0
    assert result.fitting_traces == 2


def test_forced_replay_accounting():
    # Replaying [b, a] on a strict a->b sequence: one missing token to force
    # b, one token stranded afterwards. produced = consumed = 3, so
    # fitness = 0.5*(1 - 1/3) + 0.5*(1 - 1/3) = 2/3.
    net = _seq_net("a", "b")
    result = token_replay(net, _traces([["b", "a"]]))
    assert result.missing == 1 and result.remaining == 1
    assert result.produced == 3 and result.consumed == 3
    assert result.fitness == pytest.approx(2 / 3, abs=1e-12)
    assert result.fitting_traces == 0


def test_unknown_label_counts_phantom_tokens():
    net = tree_to_net(activity("a"))
    result = token_replay(net, _traces([["z"]]))
    # Phantom pair for z, then the final-place token is also missing.
    assert result.missing == 2
    assert result.remaining == 1
    assert result.fitness == pytest.approx(0.25, abs=1e-12)


def test_replay_fires_silent_transitions():
    net = tree_to_net(operator(PAR, [activity("a"), activity("b")]))
    traces = _traces([["a", "b"], ["b", "a"]])
    assert replay_fitness(net, traces) == 1.0


def test_replay_loop_repetitions():
    net = tree_to_net(ProcessTree(LOOP, children=[activity("a"), activity("b")]))
    assert replay_fitness(net, _traces([["a", "b", "a", "b", "a"]])) == 1.0
    assert replay_fitness(net, _traces([["a", "a"]])) < 1.0


def test_exec_counts_ignore_forced_firings():
    net = _seq_net("a", "b")
    result = token_replay(net, _traces([["b", "a"]]))
    # b fired by force only; a fired enabled once.
    label_of = {t: net.transition_labels[t] for t in net.visible_indices()}
    counts = {label_of[t]: c for t, c in result.exec_counts.items()}
    assert counts == {"a": 1, "b": 0}


# --- precision ----------------------------------------------------------------------


def test_precision_of_exact_sequence_is_one():
    net = _seq_net("a", "b")
    assert precision_escaping(net, _traces([["a", "b"]])) == 1.0


def test_precision_of_flower_is_one_third():
    flower = ProcessTree(LOOP, children=[
        operator(XOR, [activity("a"), activity("b"), activity("c")]), silent()])
    net = tree_to_net(flower)
    # One replay state (the empty prefix) with three enabled labels, one
    # observed: 1 - 2/3.
    assert precision_escaping(net, _traces([["a"]])) == pytest.approx(1 / 3, abs=1e-12)


def test_precision_counts_unobserved_branches():
    net = tree_to_net(operator(XOR, [activity("a"), activity("b")]))
    assert precision_escaping(net, _traces([["a"], ["b"]])) == 1.0
    assert precision_escaping(net, _traces([["a"]] * 5)) == pytest.approx(0.5)


# --- generalization -----------------------------------------------------------------


def test_generalization_increases_with_reuse():
    net = tree_to_net(activity("a"))
    assert generalization(net, _traces([["a"]] * 100)) == pytest.approx(0.9, abs=1e-12)
    assert generalization(net, _traces([["a"]])) == 0.0


def test_generalization_unfired_transition():
    net = tree_to_net(operator(XOR, [activity("a"), activity("b")]))
    # exec counts {a: 4, b: 0}: 1 - (1/sqrt(4) + 1)/2 = 0.25.
    assert generalization(net, _traces([["a"]] * 4)) == pytest.approx(0.25, abs=1e-12)


def test_generalization_no_visible_transitions():
    net = PetriNet(n_places=2, transition_labels=[None], t_inputs=[[0]],
                   t_outputs=[[1]], initial_place=0, final_place=1)
    assert generalization(net, _traces([["a"]])) == 0.0


# --- simplicity and combined score ----------------------------------------------------


def test_simplicity_of_plain_chain_is_one():
    assert simplicity(_seq_net("a", "b", "c")) == 1.0


def test_simplicity_penalizes_dense_nets():
    # 3 transitions on 2 shared places: 6 arcs over 5 nodes, mean degree 2.4.
    net = PetriNet(n_places=2, transition_labels=["a", "b", "c"],
                   t_inputs=[[0], [0], [0]], t_outputs=[[1], [1], [1]],
                   initial_place=0, final_place=1)
    assert simplicity(net) == pytest.approx(1.0 / 1.4, abs=1e-12)


def test_combined_score_weights_fitness_ten_to_one():
    assert combined_buijs(1.0, 0.0, 0.0, 0.0) == pytest.approx(10 / 13, abs=1e-12)
    assert combined_buijs(1.0, 1.0, 1.0, 1.0) == 1.0
    assert combined_buijs(0.0, 0.0, 0.0, 0.0) == 0.0


def test_combined_score_validates_inputs():
    with pytest.raises(ValueError) as err:
        combined_buijs(1.0, 1.5, 0.0, 0.0)
    assert "precision" in str(err.value)
    with pytest.raises(ValueError) as err:
        combined_buijs(-0.1, 0.0, 0.0, 0.0)
    assert "fitness" in str(err.value)


def test_combined_score_monotone():
    rng = random.Random(88)
    for _ in range(200):
        base = [rng.random() for _ in range(4)]
        bumped = list(base)
        i = rng.randrange(4)
        bumped[i] = min(1.0, base[i] + rng.random() * (1.0 - base[i]))
        assert combined_buijs(*bumped) >= combined_buijs(*base) - 1e-12


# --- combination scoring ---------------------------------------------------------------


def test_score_combo_perfect_sequence():
    traces = _traces([["a", "b", "c"]] * 6)
    report = score_combo(traces, miner="hm", metric="fitness")
    assert report.score == pytest.approx(1.0)
    assert report.fold_scores == [1.0, 1.0]
    assert report.metric_used == "fitness"
    assert not report.timed_out_discovery and not report.timed_out_evaluation


def test_score_combo_buijs_alias_and_metrics():
    traces = _traces([["a", "b"], ["a", "b"], ["a", "b"], ["a", "b"]])
    report = score_combo(traces, miner="hm", metric="buijs")
    assert report.metric_used == "buijs2014"
    for name in ("fitness", "precision", "generalization", "simplicity", "combined"):
        assert getattr(report, name) is not None
    assert report.combined == pytest.approx(
        (10 * report.fitness + report.precision + report.generalization
         + report.simplicity) / 13.0, abs=1e-9)


def test_score_combo_unknown_metric():
    with pytest.raises(ValueError):
        score_combo(_traces([["a"], ["a"]]), metric="accuracy")
    assert "accuracy" not in METRICS


def test_score_combo_single_case_skipped():
    report = score_combo(_traces([["a", "b"]]))
    assert report.score == 0.0
    assert report.skipped_reason is not None


def test_score_combo_discovery_timeout():
    # A deliberately large log with a 10ms discovery budget must come back
    # quickly with a zero score and the discovery flag set.
    rng = random.Random(13)
    acts = ["act_%03d" % i for i in range(120)]
    seqs = [[rng.choice(acts) for _ in range(150)] for _ in range(800)]
    t0 = time.monotonic()
    report = score_combo(_traces(seqs), miner="hm", th_discovery=0.01)
    elapsed = time.monotonic() - t0
    assert report.timed_out_discovery
    assert report.score == 0.0
    assert elapsed < 1.5


def test_score_combo_json_shape():
    report = score_combo(_traces([["a", "b"]] * 4), metric="generalization")
    doc = report.to_json_dict()
    assert set(doc["timed_out"]) == {"discovery", "evaluation"}
    assert set(doc["elapsed"]) == {"discovery_s", "evaluation_s"}
    assert doc["metric"] == "generalization"
    assert "fitness" in doc["metrics"] and "generalization" in doc["metrics"]
    assert doc["score"] == report.score


def test_score_combo_deterministic():
    rng = random.Random(5)
    seqs = [[rng.choice("abcd") for _ in range(rng.randrange(2, 7))] for _ in range(12)]
    a = score_combo(_traces(seqs), miner="im", metric="generalization")
    b = score_combo(_traces(seqs), miner="im", metric="generalization")
    assert a.score == b.score and a.fold_scores == b.fold_scores
