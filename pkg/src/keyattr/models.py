"""Process model structures: process trees, Petri nets, DOT export.

Petri nets are stored index-based so token replay can run on plain ints.
Nets built here are workflow-shaped: one marked initial place, one final
place, and every transition has at least one input and one output arc.
"""

from __future__ import annotations

from dataclasses import dataclass, field

SEQ = "seq"
XOR = "xor"
PAR = "par"
LOOP = "loop"
ACTIVITY = "activity"
SILENT = "silent"

_OPERATORS = (SEQ, XOR, PAR, LOOP)


@dataclass
class ProcessTree:
    kind: str
    label: str | None = None
    children: list["ProcessTree"] = field(default_factory=list)

    def __post_init__(self):
        if self.kind == ACTIVITY:
            if not self.label:
                raise ValueError("activity leaf needs a label")
            if self.children:
                raise ValueError("leaves have no children")
        elif self.kind == SILENT:
            if self.label or self.children:
                raise ValueError("silent leaf has no label or children")
        elif self.kind in _OPERATORS:
            if len(self.children) < 2:
                raise ValueError("%s node needs at least 2 children" % self.kind)
        else:
            raise ValueError("unknown node kind %r" % (self.kind,))

    def leaves(self) -> list[str]:
        """Activity labels in left-to-right order."""
        if self.kind == ACTIVITY:
            return [self.label]
        if self.kind == SILENT:
            return []
        out = []
        for child in self.children:
            out.extend(child.leaves())
        return out

    def __repr__(self):
        if self.kind == ACTIVITY:
            return "'%s'" % self.label
        if self.kind == SILENT:
            return "tau"
        return "%s(%s)" % (self.kind, ", ".join(repr(c) for c in self.children))


def activity(label: str) -> ProcessTree:
    return ProcessTree(ACTIVITY, label=label)


def silent() -> ProcessTree:
    return ProcessTree(SILENT)


def operator(kind: str, children: list[ProcessTree]) -> ProcessTree:
    """Operator node; single-child operators collapse to the child."""
    if len(children) == 1 and kind != LOOP:
        return children[0]
    return ProcessTree(kind, children=children)


@dataclass
class PetriNet:
    """Arc-list Petri net with index-based places and transitions."""

    n_places: int
    transition_labels: list[str | None]
    t_inputs: list[list[int]]
    t_outputs: list[list[int]]
    initial_place: int
    final_place: int

    def __post_init__(self):
        for t, label in enumerate(self.transition_labels):
            if not self.t_inputs[t] or not self.t_outputs[t]:
                raise ValueError(
                    "transition %d (%r) lacks input or output arcs" % (t, label))

    @property
    def n_transitions(self) -> int:
        return len(self.transition_labels)

    def visible_indices(self) -> list[int]:
        return [t for t, lab in enumerate(self.transition_labels) if lab is not None]

    def label_map(self) -> dict[str, list[int]]:
        out: dict[str, list[int]] = {}
        for t, lab in enumerate(self.transition_labels):
            if lab is not None:
                out.setdefault(lab, []).append(t)
        return out


class _NetBuilder:
    def __init__(self):
        self.n_places = 0
        self.labels: list[str | None] = []
        self.t_in: list[list[int]] = []
        self.t_out: list[list[int]] = []

    def place(self) -> int:
        self.n_places += 1
        return self.n_places - 1

    def transition(self, label: str | None, inputs: list[int], outputs: list[int]) -> int:
        self.labels.append(label)
        self.t_in.append(list(inputs))
        self.t_out.append(list(outputs))
        return len(self.labels) - 1

    def finish(self, initial: int, final: int) -> PetriNet:
        return PetriNet(
            n_places=self.n_places,
            transition_labels=self.labels,
            t_inputs=self.t_in,
            t_outputs=self.t_out,
            initial_place=initial,
            final_place=final,
        )


def _build_subnet(node: ProcessTree, p_in: int, p_out: int, nb: _NetBuilder):
    if node.kind == ACTIVITY:
        nb.transition(node.label, [p_in], [p_out])
    elif node.kind == SILENT:
        nb.transition(None, [p_in], [p_out])
    elif node.kind == SEQ:
        bounds = [p_in] + [nb.place() for _ in node.children[:-1]] + [p_out]
        for i, child in enumerate(node.children):
            _build_subnet(child, bounds[i], bounds[i + 1], nb)
    elif node.kind == XOR:
        for child in node.children:
            _build_subnet(child, p_in, p_out, nb)
    elif node.kind == PAR:
        c_ins = [nb.place() for _ in node.children]
        c_outs = [nb.place() for _ in node.children]
        nb.transition(None, [p_in], c_ins)
        nb.transition(None, c_outs, [p_out])
        for child, ci, co in zip(node.children, c_ins, c_outs):
            _build_subnet(child, ci, co, nb)
    elif node.kind == LOOP:
        # Do-child runs forward; every redo child runs backward.
        _build_subnet(node.children[0], p_in, p_out, nb)
        for redo in node.children[1:]:
            _build_subnet(redo, p_out, p_in, nb)
    else:
        raise ValueError(node.kind)


def tree_to_net(tree: ProcessTree) -> PetriNet:
    nb = _NetBuilder()
    p_in = nb.place()
    p_out = nb.place()
    _build_subnet(tree, p_in, p_out, nb)
    return nb.finish(p_in, p_out)


# --- DOT export ---------------------------------------------------------------


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def net_to_dot(net: PetriNet) -> str:
    """Graphviz source: circles for places, boxes for transitions.

    Silent transitions render as small filled boxes without labels.
    """
    lines = ["digraph net {", "  rankdir=LR;", '  node [fontname="sans-serif"];']
    for p in range(net.n_places):
        attrs = 'shape=circle label="" width=0.3'
        if p == net.initial_place:
            attrs = 'shape=circle label="&#9679;" width=0.3'
        elif p == net.final_place:
            attrs = 'shape=doublecircle label="" width=0.25'
        lines.append("  p%d [%s];" % (p, attrs))
    for t, label in enumerate(net.transition_labels):
        if label is None:
            lines.append('  t%d [shape=box style=filled fillcolor=black label="" '
                         "width=0.12 height=0.35];" % t)
        else:
            lines.append('  t%d [shape=box label="%s"];' % (t, _dot_escape(label)))
    for t in range(net.n_transitions):
        for p in net.t_inputs[t]:
            lines.append("  p%d -> t%d;" % (p, t))
        for p in net.t_outputs[t]:
            lines.append("  t%d -> p%d;" % (t, p))
    lines.append("}")
    return "\n".join(lines) + "\n"


def dfg_to_dot(dfg) -> str:
    """Graphviz source for a directly-follows graph with counts on edges."""
    activities = sorted(dfg.activity_counts)
    index = {a: i for i, a in enumerate(activities)}
    lines = ["digraph dfg {", "  rankdir=LR;", '  node [shape=box fontname="sans-serif"];']
    for a in activities:
        lines.append('  n%d [label="%s (%d)"];' % (index[a], _dot_escape(a), dfg.activity_counts[a]))
    lines.append('  start [shape=circle style=filled fillcolor="#cceecc" label=""];')
    lines.append('  end [shape=doublecircle style=filled fillcolor="#eecccc" label=""];')
    for (a, b), count in sorted(dfg.edge_counts.items()):
        lines.append('  n%d -> n%d [label="%d"];' % (index[a], index[b], count))
    for a, count in sorted(dfg.start_counts.items()):
        lines.append('  start -> n%d [label="%d"];' % (index[a], count))
    for a, count in sorted(dfg.end_counts.items()):
        lines.append('  n%d -> end [label="%d"];' % (index[a], count))
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_dot(model) -> str:
    """DOT source for a PetriNet or a Dfg."""
    if isinstance(model, PetriNet):
        return net_to_dot(model)
    if hasattr(model, "edge_counts"):
        return dfg_to_dot(model)
    raise TypeError("cannot render %r as DOT" % (type(model).__name__,))
