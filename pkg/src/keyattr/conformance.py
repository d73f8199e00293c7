"""Model quality metrics: token replay fitness, precision, generalization,
simplicity, and a weighted combination, plus the cross-validated combo scorer.

Replay is deterministic. Silent transitions are resolved by a breadth-first
lookahead bounded in depth and visited markings, so replay terminates even on
nets with silent cycles.
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field

from .discovery import MinerParams, MiningError, TraceLog, mine
from .models import PetriNet, ProcessTree, tree_to_net
from .timing import Deadline, PhaseTimeout

# Lookahead bounds: at most this many silent firings between two events, and
# at most this many distinct markings explored per search.
_MAX_SILENT_DEPTH = 8
_MAX_VISITED = 4096

METRICS = ("fitness", "precision", "generalization", "simplicity", "buijs2014")


def _fire(marking: list[int], net: PetriNet, t: int) -> list[int]:
    m = list(marking)
    for p in net.t_inputs[t]:
        m[p] -= 1
    for p in net.t_outputs[t]:
        m[p] += 1
    return m


def _enabled(marking: list[int], net: PetriNet, t: int) -> bool:
    return all(marking[p] >= 1 for p in net.t_inputs[t])


def _silent_indices(net: PetriNet) -> list[int]:
    return [t for t, lab in enumerate(net.transition_labels) if lab is None]


def _enabling_path(net: PetriNet, marking: list[int], targets: list[int],
                   silents: list[int]) -> list[int] | None:
    """Shortest silent-firing sequence after which some target is enabled.

    Returns [] when a target is already enabled, None when none is reachable
    within the lookahead bounds. Ties break on firing order (FIFO expansion,
    transitions in index order), so the result is deterministic.
    """
    start = tuple(marking)
    queue = deque([(start, [])])
    seen = {start}
    while queue:
        key, path = queue.popleft()
        m = list(key)
        if any(_enabled(m, net, t) for t in targets):
            return path
        if len(path) >= _MAX_SILENT_DEPTH:
            continue
        for s in silents:
            if _enabled(m, net, s):
                nxt = tuple(_fire(m, net, s))
                if nxt not in seen and len(seen) < _MAX_VISITED:
                    seen.add(nxt)
                    queue.append((nxt, path + [s]))
    return None


def _closure_labels(net: PetriNet, marking: list[int], silents: list[int]) -> frozenset[str]:
    """Visible labels enabled at the marking or after bounded silent firings."""
    labels: set[str] = set()
    visible = [(t, lab) for t, lab in enumerate(net.transition_labels) if lab is not None]
    start = tuple(marking)
    queue = deque([(start, 0)])
    seen = {start}
    while queue:
        key, depth = queue.popleft()
        m = list(key)
        for t, lab in visible:
            if lab not in labels and _enabled(m, net, t):
                labels.add(lab)
        if depth >= _MAX_SILENT_DEPTH:
            continue
        for s in silents:
            if _enabled(m, net, s):
                nxt = tuple(_fire(m, net, s))
                if nxt not in seen and len(seen) < _MAX_VISITED:
                    seen.add(nxt)
                    queue.append((nxt, depth + 1))
    return frozenset(labels)


def _final_path(net: PetriNet, marking: list[int], silents: list[int]) -> list[int] | None:
    """Shortest silent sequence putting at least one token on the final place."""
    start = tuple(marking)
    queue = deque([(start, [])])
    seen = {start}
    while queue:
        key, path = queue.popleft()
        if key[net.final_place] >= 1:
            return path
        if len(path) >= _MAX_SILENT_DEPTH:
            continue
        m = list(key)
        for s in silents:
            if _enabled(m, net, s):
                nxt = tuple(_fire(m, net, s))
                if nxt not in seen and len(seen) < _MAX_VISITED:
                    seen.add(nxt)
                    queue.append((nxt, path + [s]))
    return None


@dataclass
class _Step:
    """Outcome of advancing the marking by one labeled event."""

    marking: list[int]
    consumed: int
    produced: int
    missing: int
    fired: int | None
    forced: bool


def _step(net: PetriNet, marking: list[int], label: str, silents: list[int],
          label_targets: dict[str, list[int]]) -> _Step:
    targets = label_targets.get(label)
    if not targets:
        # Unknown label: account one phantom token on each side.
        return _Step(marking=marking, consumed=1, produced=1, missing=1, fired=None, forced=True)
    consumed = produced = missing = 0
    path = _enabling_path(net, marking, targets, silents)
    if path is not None:
        for s in path:
            consumed += len(net.t_inputs[s])
            produced += len(net.t_outputs[s])
            marking = _fire(marking, net, s)
        t = next(t for t in targets if _enabled(marking, net, t))
        consumed += len(net.t_inputs[t])
        produced += len(net.t_outputs[t])
        marking = _fire(marking, net, t)
        return _Step(marking, consumed, produced, missing, fired=t, forced=False)
    # Forced firing: insert the missing input tokens, then fire the first
    # transition carrying the label.
    t = targets[0]
    m = list(marking)
    for p in net.t_inputs[t]:
        if m[p] >= 1:
            m[p] -= 1
        else:
            missing += 1
    consumed += len(net.t_inputs[t])
    for p in net.t_outputs[t]:
        m[p] += 1
    produced += len(net.t_outputs[t])
    return _Step(m, consumed, produced, missing, fired=t, forced=True)


def _label_targets(net: PetriNet) -> dict[str, list[int]]:
    targets: dict[str, list[int]] = {}
    for t, lab in enumerate(net.transition_labels):
        if lab is not None:
            targets.setdefault(lab, []).append(t)
    return targets


@dataclass
class ReplayResult:
    fitness: float
    produced: int
    consumed: int
    missing: int
    remaining: int
    exec_counts: dict[int, int] = field(default_factory=dict)
    fitting_traces: int = 0


def token_replay(net: PetriNet, traces: TraceLog, deadline: Deadline | None = None) -> ReplayResult:
    """Replay every trace, forcing mismatched events, and aggregate the counts.

    exec_counts records how often each visible transition fired while actually
    enabled; forced firings do not count, so a model that only fits by force
    gets no execution credit.
    """
    silents = _silent_indices(net)
    targets = _label_targets(net)
    total_p = total_c = total_m = total_r = 0
    exec_counts: dict[int, int] = {t: 0 for t in net.visible_indices()}
    fitting = 0
    for ti, trace in enumerate(traces.traces):
        if deadline and ti % 8 == 0:
            deadline.check()
        marking = [0] * net.n_places
        marking[net.initial_place] = 1
        produced, consumed, missing = 1, 0, 0
        for ei, label in enumerate(trace):
            if deadline and ei % 32 == 31:
                deadline.check()
            step = _step(net, marking, label, silents, targets)
            marking = step.marking
            consumed += step.consumed
            produced += step.produced
            missing += step.missing
            if step.fired is not None and not step.forced:
                exec_counts[step.fired] += 1
        path = _final_path(net, marking, silents)
        if path is not None:
            for s in path:
                consumed += len(net.t_inputs[s])
                produced += len(net.t_outputs[s])
                marking = _fire(marking, net, s)
        consumed += 1
        if marking[net.final_place] >= 1:
            marking[net.final_place] -= 1
        else:
            missing += 1
        remaining = sum(marking)
        if missing == 0 and remaining == 0:
            fitting += 1
        total_p += produced
        total_c += consumed
        total_m += missing
        total_r += remaining
    if total_c == 0 or total_p == 0:
        fitness = 1.0
    else:
        fitness = 0.5 * (1.0 - total_m / total_c) + 0.5 * (1.0 - total_r / total_p)
    fitness = min(1.0, max(0.0, fitness))
    return ReplayResult(
        fitness=fitness,
        produced=total_p,
        consumed=total_c,
        missing=total_m,
        remaining=total_r,
        exec_counts=exec_counts,
        fitting_traces=fitting,
    )


def replay_fitness(net: PetriNet, traces: TraceLog, deadline: Deadline | None = None) -> float:
    return token_replay(net, traces, deadline).fitness


def precision_escaping(net: PetriNet, traces: TraceLog, deadline: Deadline | None = None) -> float:
    """Escaping-edges precision over prefix-keyed replay states.

    Each distinct event prefix is one state; its enabled set is the visible
    labels reachable through the bounded silent closure of the marking the
    prefix deterministically leads to. Events the model cannot enable there
    (forced moves) are excluded from the visit statistics.
    """
    silents = _silent_indices(net)
    targets = _label_targets(net)
    states: dict[tuple[str, ...], dict] = {}
    for ti, trace in enumerate(traces.traces):
        if deadline and ti % 8 == 0:
            deadline.check()
        marking = [0] * net.n_places
        marking[net.initial_place] = 1
        prefix: list[str] = []
        for ei, label in enumerate(trace):
            if deadline and ei % 32 == 31:
                deadline.check()
            key = tuple(prefix)
            state = states.get(key)
            if state is None:
                state = {
                    "enabled": _closure_labels(net, marking, silents),
                    "observed": set(),
                    "visits": 0,
                }
                states[key] = state
            if label in state["enabled"]:
                state["visits"] += 1
                state["observed"].add(label)
            marking = _step(net, marking, label, silents, targets).marking
            prefix.append(label)
    escaping = 0
    opportunities = 0
    for state in states.values():
        escaping += state["visits"] * len(state["enabled"] - state["observed"])
        opportunities += state["visits"] * len(state["enabled"])
    if opportunities == 0:
        return 1.0
    return 1.0 - escaping / opportunities


def generalization(net: PetriNet, traces: TraceLog, deadline: Deadline | None = None,
                   replay: ReplayResult | None = None) -> float:
    """1 minus the mean inverse-sqrt execution count over visible transitions.

    Transitions that never fired while enabled contribute a full unit, so
    models whose parts are exercised rarely (or only by force) score low.
    """
    visible = net.visible_indices()
    if not visible:
        return 0.0
    if replay is None:
        replay = token_replay(net, traces, deadline)
    total = 0.0
    for t in visible:
        n = replay.exec_counts.get(t, 0)
        total += 1.0 if n == 0 else 1.0 / math.sqrt(n)
    return 1.0 - total / len(visible)


def simplicity(net: PetriNet) -> float:
    """1 / (1 + max(0, mean node degree - 2)) over places and transitions."""
    arcs = sum(len(ins) for ins in net.t_inputs) + sum(len(outs) for outs in net.t_outputs)
    nodes = net.n_places + net.n_transitions
    if nodes == 0:
        return 1.0
    mean_degree = 2.0 * arcs / nodes
    return 1.0 / (1.0 + max(0.0, mean_degree - 2.0))


def combined_buijs(fitness: float, precision: float, generalization: float,
                   simplicity: float) -> float:
    """Weighted mean with fitness weighted ten times the other three."""
    for name, v in (("fitness", fitness), ("precision", precision),
                    ("generalization", generalization), ("simplicity", simplicity)):
        if not 0.0 <= v <= 1.0:
            raise ValueError("%s must be within [0, 1], got %r" % (name, v))
    return (10.0 * fitness + precision + generalization + simplicity) / 13.0


@dataclass
class ScoreReport:
    """Outcome of scoring one candidate combination."""

    score: float
    fold_scores: list[float]
    metric_used: str
    fitness: float | None = None
    precision: float | None = None
    generalization: float | None = None
    simplicity: float | None = None
    combined: float | None = None
    timed_out_discovery: bool = False
    timed_out_evaluation: bool = False
    discovery_s: float = 0.0
    evaluation_s: float = 0.0
    skipped_reason: str | None = None

    def to_json_dict(self) -> dict:
        d: dict = {
            "score": self.score,
            "fold_scores": list(self.fold_scores),
            "metric": self.metric_used,
            "timed_out": {
                "discovery": self.timed_out_discovery,
                "evaluation": self.timed_out_evaluation,
            },
            "elapsed": {
                "discovery_s": round(self.discovery_s, 6),
                "evaluation_s": round(self.evaluation_s, 6),
            },
        }
        metrics = {}
        for name in ("fitness", "precision", "generalization", "simplicity", "combined"):
            value = getattr(self, name)
            if value is not None:
                metrics[name] = value
        if metrics:
            d["metrics"] = metrics
        if self.skipped_reason is not None:
            d["skipped"] = self.skipped_reason
        return d


def _run_miner(miner, train: TraceLog, params: MinerParams | None,
               deadline: Deadline) -> PetriNet:
    if isinstance(miner, str):
        return mine(train, miner, params, deadline)
    model = miner(train, params, deadline)
    if isinstance(model, ProcessTree):
        model = tree_to_net(model)
    if not isinstance(model, PetriNet):
        raise TypeError("miner returned %r, expected a net or tree" % type(model).__name__)
    return model


def _evaluate_metric(net: PetriNet, fold: TraceLog, metric: str,
                     deadline: Deadline) -> dict[str, float]:
    values: dict[str, float] = {}
    if metric in ("fitness", "generalization", "buijs2014"):
        replay = token_replay(net, fold, deadline)
        values["fitness"] = replay.fitness
        values["generalization"] = generalization(net, fold, deadline, replay=replay)
    if metric in ("precision", "buijs2014"):
        values["precision"] = precision_escaping(net, fold, deadline)
    if metric in ("simplicity", "buijs2014"):
        values["simplicity"] = simplicity(net)
    if metric == "buijs2014":
        values["combined"] = combined_buijs(
            values["fitness"], values["precision"],
            values["generalization"], values["simplicity"])
    return values


def score_combo(traces: TraceLog, miner="hm", metric: str = "generalization",
                params: MinerParams | None = None, th_discovery: float = 5.0,
                th_evaluation: float = 60.0) -> ScoreReport:
    """Two-fold cross-validated quality score for one column combination.

    Cases are split in first-appearance order; each half is mined and scored
    against the other, and the fold scores are averaged. A discovery or
    evaluation phase that exceeds its budget zeroes that fold and sets the
    matching timeout flag. The elapsed time is re-checked after each phase so
    a miner that ignores its deadline still cannot smuggle in a late result.
    """
    if metric == "buijs":
        metric = "buijs2014"
    if metric not in METRICS:
        raise ValueError("unknown metric %r" % (metric,))
    report = ScoreReport(score=0.0, fold_scores=[0.0, 0.0], metric_used=metric)
    n = len(traces)
    half = math.ceil(n / 2)
    fold_a = TraceLog(traces.traces[:half], traces.case_ids[:half])
    fold_b = TraceLog(traces.traces[half:], traces.case_ids[half:])
    if len(fold_a) == 0 or len(fold_b) == 0:
        report.skipped_reason = "not enough cases for two folds"
        return report
    accumulated: dict[str, list[float]] = {}
    score_key = "combined" if metric == "buijs2014" else metric
    for direction, (train, fold) in enumerate(((fold_a, fold_b), (fold_b, fold_a))):
        t0 = time.monotonic()
        deadline = Deadline(th_discovery)
        net = None
        try:
            net = _run_miner(miner, train, params, deadline)
            if deadline.expired():
                net = None
                report.timed_out_discovery = True
        except PhaseTimeout:
            report.timed_out_discovery = True
        except MiningError:
            pass
        report.discovery_s += time.monotonic() - t0
        if net is None:
            continue
        t1 = time.monotonic()
        deadline = Deadline(th_evaluation)
        try:
            values = _evaluate_metric(net, fold, metric, deadline)
            if deadline.expired():
                raise PhaseTimeout()
        except PhaseTimeout:
            report.timed_out_evaluation = True
            report.evaluation_s += time.monotonic() - t1
            continue
        report.evaluation_s += time.monotonic() - t1
        report.fold_scores[direction] = values[score_key]
        for name, value in values.items():
            accumulated.setdefault(name, []).append(value)
    report.score = sum(report.fold_scores) / 2.0
    for name, vals in accumulated.items():
        setattr(report, name, sum(vals) / len(vals))
    return report
