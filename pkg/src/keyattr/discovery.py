"""Trace building and process discovery (heuristics and inductive miners).

Both miners are deterministic: identical traces and parameters yield
structurally identical models. They accept an optional Deadline that is
checked inside the expensive loops so a caller can cancel a discovery phase.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .ingest import EventLog, TimestampParse
from .models import (
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
from .timing import Deadline

# Sentinel activities framing every trace during heuristics mining. They
# become silent transitions, so exports and replay never see them.
_START = "\x00__start__"
_END = "\x00__end__"


class MiningError(ValueError):
    """Raised when no model can be built (e.g. every activity filtered out)."""


@dataclass
class TraceLog:
    """Ordered activity sequences, one per case, plus the case ids."""

    traces: list[list[str]]
    case_ids: list[str]

    def __post_init__(self):
        if len(self.traces) != len(self.case_ids):
            raise ValueError("traces and case_ids differ in length")

    def __len__(self):
        return len(self.traces)


@dataclass
class Dfg:
    """Directly-follows counts with start/end activity counts."""

    activity_counts: dict[str, int]
    edge_counts: dict[tuple[str, str], int]
    start_counts: dict[str, int]
    end_counts: dict[str, int]


def build_traces(log: EventLog, case_col: str, act_col: str, ts: TimestampParse) -> TraceLog:
    """Group rows by case and order each group by timestamp key.

    Rows with missing keys sort after parsed ones; the original row index
    breaks ties. Events with an empty activity cell are dropped, and cases
    left with no events are dropped entirely. Case groups keep first-seen
    order so downstream fold splits are stable.
    """
    cases = log.column(case_col)
    acts = log.column(act_col)
    if all(c == "" for c in cases):
        raise ValueError("case column %r is entirely empty" % case_col)
    if all(a == "" for a in acts):
        raise ValueError("activity column %r is entirely empty" % act_col)
    keys = ts.keys
    if len(keys) != log.n_rows:
        raise ValueError("timestamp parse does not match log row count")
    groups: dict[str, list[int]] = {}
    for i, case in enumerate(cases):
        groups.setdefault(case, []).append(i)
    traces: list[list[str]] = []
    case_ids: list[str] = []
    for case, rows in groups.items():
        rows = sorted(rows, key=lambda i: (keys[i] is None, keys[i] if keys[i] is not None else 0, i))
        events = [acts[i] for i in rows if acts[i] != ""]
        if events:
            traces.append(events)
            case_ids.append(case)
    return TraceLog(traces=traces, case_ids=case_ids)


def build_dfg(traces: TraceLog) -> Dfg:
    acts: Counter = Counter()
    edges: Counter = Counter()
    starts: Counter = Counter()
    ends: Counter = Counter()
    for trace in traces.traces:
        acts.update(trace)
        starts[trace[0]] += 1
        ends[trace[-1]] += 1
        for a, b in zip(trace, trace[1:]):
            edges[(a, b)] += 1
    return Dfg(
        activity_counts=dict(acts),
        edge_counts=dict(edges),
        start_counts=dict(starts),
        end_counts=dict(ends),
    )


@dataclass
class MinerParams:
    im_noise_threshold: float = 0.2
    hm_dependency_threshold: float = 0.5
    hm_and_threshold: float = 0.65
    hm_min_act_count: int = 1
    hm_min_dfg_count: int = 1
    hm_preclean_noise: float = 0.05
    hm_loop_two_threshold: int = 2


class _UnionFind:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        parent = self.parent
        if x not in parent:
            parent[x] = x
            return x
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


# --- heuristics miner ---------------------------------------------------------


def _and_clusters(edges: list[tuple[str, str]], counts: dict, anchor: int,
                  and_threshold: float) -> tuple[list[list[tuple[str, str]]], list[tuple[str, str]]]:
    """(AND clusters, XOR pool) for one activity's causal edges on one side.

    anchor is 0 for a split (shared source) and 1 for a join (shared target).
    Edge pairs whose AND measure clears the threshold are merged greedily,
    highest measure first; edges left unclustered form the XOR pool.
    """
    if len(edges) <= 1:
        return ([], list(edges))
    other = 1 - anchor
    pairs = []
    for i in range(len(edges)):
        for j in range(i + 1, len(edges)):
            b = edges[i][other]
            c = edges[j][other]
            denom = counts.get(edges[i], 0) + counts.get(edges[j], 0) + 1
            measure = (counts.get((b, c), 0) + counts.get((c, b), 0)) / denom
            if measure >= and_threshold:
                pairs.append((measure, i, j))
    uf = _UnionFind()
    for _, i, j in sorted(pairs, key=lambda p: (-p[0], p[1], p[2])):
        uf.union(i, j)
    clusters: dict = {}
    for i, edge in enumerate(edges):
        clusters.setdefault(uf.find(i), []).append(edge)
    and_groups = sorted((g for g in clusters.values() if len(g) > 1), key=lambda g: g[0])
    xor_pool = sorted(g[0] for g in clusters.values() if len(g) == 1)
    return (and_groups, xor_pool)


def mine_heuristics(traces: TraceLog, params: MinerParams | None = None,
                    deadline: Deadline | None = None) -> PetriNet:
    """Heuristics miner: dependency graph plus AND/XOR split classification.

    Traces are framed with artificial start/end activities that become silent
    transitions, so they never show up in exports or replay. Each XOR pool of
    causal edges shares one place, each AND cluster gets one place per edge,
    and groups sharing an edge are fused across activities. The construction
    can be unsound for mixed AND/XOR splits; token replay tolerates that.
    """
    params = params or MinerParams()
    act_counts: Counter = Counter()
    for trace in traces.traces:
        act_counts.update(trace)
    keep = {a for a, c in act_counts.items() if c >= params.hm_min_act_count}
    if not keep:
        raise MiningError("empty model: every activity filtered out")
    if deadline:
        deadline.check()

    counts: Counter = Counter()
    for trace in traces.traces:
        t = [_START] + [a for a in trace if a in keep] + [_END]
        for a, b in zip(t, t[1:]):
            counts[(a, b)] += 1
        if deadline:
            deadline.check()
    counts = Counter({e: c for e, c in counts.items() if c >= params.hm_min_dfg_count})

    max_out: dict[str, int] = {}
    for (a, _), c in counts.items():
        if c > max_out.get(a, 0):
            max_out[a] = c
    counts = {
        (a, b): c
        for (a, b), c in counts.items()
        if c >= params.hm_preclean_noise * max_out[a]
    }

    activities = sorted(keep)
    nodes = [_START] + activities + [_END]
    causal: set[tuple[str, str]] = set()
    targets_of: dict[str, set[str]] = {}
    for (a, b) in counts:
        targets_of.setdefault(a, set()).add(b)
        targets_of.setdefault(b, set()).add(a)
    for a in nodes:
        if deadline:
            deadline.check()
        for b in sorted(targets_of.get(a, ())):
            c_ab = counts.get((a, b), 0)
            if a == b:
                if c_ab and c_ab / (c_ab + 1) >= params.hm_dependency_threshold:
                    causal.add((a, a))
                continue
            c_ba = counts.get((b, a), 0)
            if c_ab == 0 and c_ba == 0:
                continue
            dep = (c_ab - c_ba) / (c_ab + c_ba + 1)
            if dep >= params.hm_dependency_threshold:
                causal.add((a, b))

    # Length-two loops: a.b.a patterns add the mutual causal pair.
    c2: Counter = Counter()
    for trace in traces.traces:
        for i in range(len(trace) - 2):
            a, b = trace[i], trace[i + 1]
            if a == trace[i + 2] and a != b and a in keep and b in keep:
                c2[(a, b)] += 1
        if deadline:
            deadline.check()
    for (a, b) in sorted(c2):
        if (a, b) in causal and (b, a) in causal:
            continue
        total = c2[(a, b)] + c2.get((b, a), 0)
        l2 = total / (total + 1)
        if total >= params.hm_loop_two_threshold and l2 >= params.hm_dependency_threshold:
            causal.add((a, b))
            causal.add((b, a))

    involved = {x for edge in causal for x in edge}
    survivors = [a for a in activities if a in involved]
    if not survivors:
        raise MiningError("empty model: no causal edges left")

    # Fuse edge groups into places: XOR pools merge their edges, AND clusters
    # keep one place per edge. Fusion propagates across activities so an edge
    # pooled on either side lands in one shared place.
    uf = _UnionFind()
    for edge in sorted(causal):
        uf.find(edge)
    for a in nodes:
        out_edges = sorted(e for e in causal if e[0] == a)
        in_edges = sorted(e for e in causal if e[1] == a)
        for side_edges, anchor in ((out_edges, 0), (in_edges, 1)):
            _, pool = _and_clusters(side_edges, counts, anchor, params.hm_and_threshold)
            for extra in pool[1:]:
                uf.union(pool[0], extra)
        if deadline:
            deadline.check()

    classes: dict = {}
    for edge in sorted(causal):
        classes.setdefault(uf.find(edge), []).append(edge)

    present = set(survivors) | {_START, _END}
    t_index: dict[str, int] = {}
    labels: list[str | None] = []
    t_in: list[list[int]] = []
    t_out: list[list[int]] = []
    for a in [_START] + survivors + [_END]:
        t_index[a] = len(labels)
        labels.append(None if a in (_START, _END) else a)
        t_in.append([])
        t_out.append([])

    n_places = 0
    for _, group in sorted(classes.items(), key=lambda kv: kv[1][0]):
        place = n_places
        n_places += 1
        sources = sorted({e[0] for e in group if e[0] in present})
        sinks = sorted({e[1] for e in group if e[1] in present})
        for a in sources:
            if place not in t_out[t_index[a]]:
                t_out[t_index[a]].append(place)
        for b in sinks:
            if place not in t_in[t_index[b]]:
                t_in[t_index[b]].append(place)

    initial = n_places
    final = n_places + 1
    n_places += 2
    t_in[t_index[_START]].append(initial)
    t_out[t_index[_END]].append(final)

    # Start/end sentinels always have causal edges; a real activity can end up
    # with arcs on one side only when its only causal edges point at dropped
    # partners. Give such transitions the missing side from the sentinels so
    # the net stays structurally valid.
    for a in survivors:
        t = t_index[a]
        if not t_in[t]:
            t_in[t].append(initial)
        if not t_out[t]:
            t_out[t].append(final)
    if not t_out[t_index[_START]]:
        t_out[t_index[_START]].append(final)
    if not t_in[t_index[_END]]:
        t_in[t_index[_END]].append(initial)

    return PetriNet(
        n_places=n_places,
        transition_labels=labels,
        t_inputs=t_in,
        t_outputs=t_out,
        initial_place=initial,
        final_place=final,
    )


# --- inductive miner -----------------------------------------------------------


def _noise_filter(dfg: Dfg, threshold: float) -> dict[tuple[str, str], int]:
    """Drop edge (a, b) when its count is below threshold times b's max inflow."""
    if threshold <= 0:
        return dict(dfg.edge_counts)
    max_in: dict[str, int] = {}
    for (_, b), c in dfg.edge_counts.items():
        if c > max_in.get(b, 0):
            max_in[b] = c
    return {
        (a, b): c
        for (a, b), c in dfg.edge_counts.items()
        if c >= threshold * max_in[b]
    }


def _undirected_components(acts: list[str], edges: dict) -> list[list[str]]:
    adjacency: dict[str, set[str]] = {a: set() for a in acts}
    for (a, b) in edges:
        if a != b:
            adjacency[a].add(b)
            adjacency[b].add(a)
    seen: set[str] = set()
    comps = []
    for a in acts:
        if a in seen:
            continue
        comp = []
        stack = [a]
        seen.add(a)
        while stack:
            v = stack.pop()
            comp.append(v)
            for w in sorted(adjacency[v]):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        comps.append(sorted(comp))
    return comps


def _sccs(acts: list[str], succ: dict[str, list[str]]) -> list[list[str]]:
    """Tarjan SCCs, iteratively; emitted in reverse topological order."""
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    comps: list[list[str]] = []
    counter = 0
    for root in acts:
        if root in index:
            continue
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        frames: list[list] = [[root, iter(succ.get(root, ()))]]
        while frames:
            v, it = frames[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    frames.append([w, iter(succ.get(w, ()))])
                    advanced = True
                    break
                if w in on_stack and index[w] < low[v]:
                    low[v] = index[w]
            if advanced:
                continue
            frames.pop()
            if frames and low[v] < low[frames[-1][0]]:
                low[frames[-1][0]] = low[v]
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
    return comps


def _project(group: set[str], edges: dict) -> dict:
    return {(a, b): c for (a, b), c in edges.items() if a in group and b in group}


def _restrict_counts(counts: dict[str, int], group: set[str]) -> dict[str, int]:
    return {a: c for a, c in counts.items() if a in group}


def _xor_cut(acts, edges, starts, ends):
    comps = _undirected_components(acts, edges)
    if len(comps) < 2:
        return None
    children = []
    for comp in comps:
        group = set(comp)
        children.append((comp, _project(group, edges),
                         _restrict_counts(starts, group), _restrict_counts(ends, group)))
    return (XOR, children)


def _seq_cut(acts, edges, starts, ends, deadline=None):
    succ: dict[str, list[str]] = {a: [] for a in acts}
    for (a, b) in sorted(edges):
        if a != b:
            succ[a].append(b)
    comps = _sccs(acts, succ)
    n = len(comps)
    if n < 2:
        return None
    scc_of = {}
    for i, comp in enumerate(comps):
        for a in comp:
            scc_of[a] = i
    # comps are in reverse topological order: i can only reach j < i.
    reach = [0] * n
    for i in range(n):
        mask = 1 << i
        for a in comps[i]:
            for b in succ[a]:
                j = scc_of[b]
                if j != i:
                    mask |= reach[j] | (1 << j)
        reach[i] = mask
        if deadline and i % 64 == 0:
            deadline.check()
    uf = _UnionFind()
    for i in range(n):
        uf.find(i)
    for i in range(n):
        for j in range(i + 1, n):
            if not (reach[i] >> j) & 1 and not (reach[j] >> i) & 1:
                uf.union(i, j)
        if deadline and i % 64 == 0:
            deadline.check()
    clusters: dict = {}
    for i in range(n):
        clusters.setdefault(uf.find(i), []).append(i)
    if len(clusters) < 2:
        return None
    # Reverse topological SCC order means sources carry high indices.
    ordered = sorted(clusters.values(), key=lambda idxs: -max(idxs))
    group_index: dict[str, int] = {}
    groups: list[list[str]] = []
    for gi, idxs in enumerate(ordered):
        members = sorted(a for i in idxs for a in comps[i])
        groups.append(members)
        for a in members:
            group_index[a] = gi
    for (a, b) in edges:
        if group_index[a] > group_index[b]:
            return None
    children = []
    for gi, members in enumerate(groups):
        group = set(members)
        child_starts = Counter(_restrict_counts(starts, group))
        child_ends = Counter(_restrict_counts(ends, group))
        for (a, b), c in edges.items():
            if b in group and group_index[a] < gi:
                child_starts[b] += c
            if a in group and group_index[b] > gi:
                child_ends[a] += c
        children.append((members, _project(group, edges), dict(child_starts), dict(child_ends)))
    return (SEQ, children)


def _par_cut(acts, edges, starts, ends):
    uf = _UnionFind()
    for a in acts:
        uf.find(a)
    for i, a in enumerate(acts):
        for b in acts[i + 1:]:
            if (a, b) not in edges or (b, a) not in edges:
                uf.union(a, b)
    clusters: dict = {}
    for a in acts:
        clusters.setdefault(uf.find(a), []).append(a)
    if len(clusters) < 2:
        return None
    groups = sorted((sorted(g) for g in clusters.values()), key=lambda g: g[0])
    for members in groups:
        group = set(members)
        if not any(a in starts for a in group) or not any(a in ends for a in group):
            return None
    children = []
    for members in groups:
        group = set(members)
        children.append((members, _project(group, edges),
                         _restrict_counts(starts, group), _restrict_counts(ends, group)))
    return (PAR, children)


def _loop_cut(acts, edges, starts, ends):
    body = set(starts) | set(ends)
    rest = [a for a in acts if a not in body]
    if not rest:
        return None
    comps = _undirected_components(rest, _project(set(rest), edges))
    redo_groups = []
    for comp in comps:
        group = set(comp)
        ok = True
        for (a, b) in edges:
            if a in body and b in group and a not in ends:
                ok = False
                break
            if a in group and b in body and b not in starts:
                ok = False
                break
        if ok:
            redo_groups.append(comp)
        else:
            body |= group
    if not redo_groups:
        return None
    do_group = set(acts) - {a for comp in redo_groups for a in comp}
    children = [(sorted(do_group), _project(do_group, edges),
                 _restrict_counts(starts, do_group), _restrict_counts(ends, do_group))]
    for comp in redo_groups:
        group = set(comp)
        redo_starts: Counter = Counter()
        redo_ends: Counter = Counter()
        for (a, b), c in edges.items():
            if a in ends and b in group:
                redo_starts[b] += c
            if a in group and b in starts:
                redo_ends[a] += c
        children.append((comp, _project(group, edges),
                         dict(redo_starts) or {comp[0]: 1},
                         dict(redo_ends) or {comp[-1]: 1}))
    return (LOOP, children)


def _flower(acts: list[str]) -> ProcessTree:
    leaves = [activity(a) for a in sorted(acts)]
    return ProcessTree(LOOP, children=[operator(XOR, leaves), silent()])


# The cut kinds in detection order. The fitness ladder in mine_inductive
# disables suffixes of this tuple, never reorders it.
_CUT_ORDER = ("xor", "seq", "par", "loop")


def _discover(acts: list[str], edges: dict, starts: dict, ends: dict,
              deadline: Deadline | None,
              enabled: frozenset = frozenset(_CUT_ORDER)) -> ProcessTree:
    if deadline:
        deadline.check()
    if not acts:
        return silent()
    if len(acts) == 1:
        a = acts[0]
        if (a, a) in edges:
            return ProcessTree(LOOP, children=[activity(a), silent()])
        return activity(a)
    for name in _CUT_ORDER:
        if name not in enabled:
            continue
        if name == "xor":
            cut = _xor_cut(acts, edges, starts, ends)
        elif name == "seq":
            cut = _seq_cut(acts, edges, starts, ends, deadline)
        elif name == "par":
            cut = _par_cut(acts, edges, starts, ends)
        else:
            cut = _loop_cut(acts, edges, starts, ends)
        if cut is None:
            continue
        kind, children = cut
        subtrees = [
            _discover(members, c_edges, c_starts, c_ends, deadline, enabled)
            for members, c_edges, c_starts, c_ends in children
        ]
        return ProcessTree(kind, children=subtrees)
    return _flower(acts)


def mine_inductive(traces: TraceLog, params: MinerParams | None = None,
                   deadline: Deadline | None = None) -> ProcessTree:
    """Single-pass inductive miner over the (noise-filtered) directly-follows graph.

    Cuts are tried in the order xor, sequence, parallel, loop; when none
    applies the fall-through is a flower model over the remaining activities.

    With im_noise_threshold = 0 the result is guaranteed to replay the
    training traces perfectly. The graph alone cannot always tell loop
    alternation from concurrency, so a cut may force behavior the log never
    shows; when replay detects that, the behavior-forcing cuts are disabled
    one at a time (parallel, then loop, then sequence) and discovery reruns.
    The exclusive-choice/flower floor fits any log, so the ladder terminates.
    A positive noise threshold drops rare edges on purpose, and the fitness
    guarantee is deliberately not enforced there.
    """
    params = params or MinerParams()
    if not traces.traces:
        raise MiningError("empty model: no traces")
    dfg = build_dfg(traces)
    edges = _noise_filter(dfg, params.im_noise_threshold)
    acts = sorted(dfg.activity_counts)
    starts = dict(dfg.start_counts)
    ends = dict(dfg.end_counts)
    tree = _discover(acts, edges, starts, ends, deadline)
    if params.im_noise_threshold > 0:
        return tree
    from .conformance import replay_fitness  # deferred: conformance imports this module

    for disabled in (("par",), ("par", "loop"), ("par", "loop", "seq")):
        if replay_fitness(tree_to_net(tree), traces, deadline) >= 1.0 - 1e-12:
            return tree
        enabled = frozenset(_CUT_ORDER) - frozenset(disabled)
        tree = _discover(acts, edges, starts, ends, deadline, enabled)
    return tree


def mine(traces: TraceLog, miner: str, params: MinerParams | None = None,
         deadline: Deadline | None = None) -> PetriNet:
    """Dispatch by miner name; inductive results are converted to a net."""
    if miner == "hm":
        return mine_heuristics(traces, params, deadline)
    if miner == "im":
        return tree_to_net(mine_inductive(traces, params, deadline))
    raise ValueError("unknown miner %r" % (miner,))
