"""Interpreted-mode CFGs: explore the abstract transition graph of a program,
quotient it by a projection, and print it as DOT."""
from collections import deque
from dataclasses import dataclass, field

from .abstraction import abs_step
from .am import AmState
from .languages import ProgramError, check_sorts
from .pam import Emp, frames_of, pretty_conf
from .terms import Conf, Node, iter_subterms, show

DEFAULT_MAX_STATES = 10000


@dataclass
class TransitionGraph:
    nodes: list
    edges: set
    start: object
    truncated: bool = False

    def succs(self):
        out = {n: [] for n in self.nodes}
        for a, b in sorted(self.edges, key=_edge_key):
            out[a].append(b)
        return out

    def preds(self):
        out = {n: [] for n in self.nodes}
        for a, b in sorted(self.edges, key=_edge_key):
            out[b].append(a)
        return out


@dataclass
class Cfg(TransitionGraph):
    labels: dict = field(default_factory=dict)
    members: dict = field(default_factory=dict)  # node -> preimage states


def _edge_key(e):
    return (show(e[0]), show(e[1]))


def initial_state(lang, program, state=None):
    errs = check_sorts(lang, program)
    if errs:
        raise ProgramError(errs[0])
    return AmState(Conf(program, lang.initial_state if state is None else state), Emp)


class TracedState(AmState):
    """A machine state that also tells apart the program positions of the
    terms it holds; equal abstract states from different code stay distinct."""
    __slots__ = ("sig",)

    def __init__(self, conf, ctx, sig):
        super().__init__(conf, ctx)
        self.sig = sig
        self._hd = ("am", sig)
        self._h = hash((self._hd, self._args))

    def plain(self):
        return AmState(self.conf, self.ctx)


def origin_signature(t):
    return tuple(x.origin for x in iter_subterms(t) if isinstance(x, Node))


def traced(s):
    return TracedState(s.conf, s.ctx, origin_signature(s))


def explore_graph(rules, abs_, start, max_states=DEFAULT_MAX_STATES, trace_origins=False):
    """Breadth-first abstract exploration. With trace_origins, states that
    differ only in where their terms come from are kept apart."""
    if max_states < 1:
        raise ValueError("max_states must be at least 1")
    s0 = abs_.alpha(start)
    if trace_origins:
        s0 = traced(s0)
    nodes = [s0]
    seen = {s0}
    edges = set()
    truncated = False
    work = deque([s0])
    while work:
        s = work.popleft()
        plain = s.plain() if trace_origins else s
        for t in abs_step(rules, abs_, plain, wrap=traced if trace_origins else None):
            if t not in seen:
                if len(nodes) >= max_states:
                    truncated = True
                    continue
                seen.add(t)
                nodes.append(t)
                work.append(t)
            edges.add((s, t))
    return TransitionGraph(nodes, edges, s0, truncated)


def project_graph(g, pi, self_loops="within", labels=None):
    """Quotient graph of g under pi. A class gets a self-loop iff every member
    has a successor inside the class ("within"); self_loops="literal" asks
    only for some successor anywhere."""
    image = {}
    nodes = []
    members = {}
    for n in g.nodes:
        a = pi(n)
        image[n] = a
        if a not in members:
            members[a] = []
            nodes.append(a)
        members[a].append(n)
    edges = set()
    for x, y in g.edges:
        a, b = image[x], image[y]
        if a != b:
            edges.add((a, b))
    succ = g.succs()
    for a, ms in members.items():
        if self_loops == "literal":
            ok = all(succ[m] for m in ms)
        else:
            ok = all(any(image[c] == a for c in succ[m]) for m in ms)
        if ok:
            edges.add((a, a))
    lab = {a: (labels(a) if labels else node_label(a)) for a in nodes}
    return Cfg(nodes, edges, image[g.start], g.truncated, lab, members)


def identity_projection(s):
    return s


def basic_block_projection(g):
    """Projection sending every node of a straight-line run (single successor
    into single predecessor) to the last node of the run."""
    succ, pred = g.succs(), g.preds()

    def chained(a):
        # a falls through into its unique successor, which has no other entry
        return len(succ[a]) == 1 and len(pred[succ[a][0]]) == 1 and succ[a][0] != g.start

    last = {}
    for n in g.nodes:
        x, seen = n, {n}
        while chained(x) and succ[x][0] not in seen:
            x = succ[x][0]
            seen.add(x)
        last[n] = x
    return lambda s: last.get(s, s)


def compose(*projections):
    def pi(s):
        for p in projections:
            s = p(s)
        return s
    return pi


# -- labels and DOT ---------------------------------------------------------

def node_label(s, verbose=False):
    if not isinstance(s, AmState):
        return show(s)
    if verbose:
        return "%s | %s" % (pretty_conf(s.conf), show(s.ctx))
    t = s.conf.term
    text = pretty_conf(Conf(t, s.conf.state)).split(", ")[0].lstrip("(")
    if isinstance(t, Node) and t.origin is not None:
        text += " @" + (".".join(map(str, t.origin)) or "root")
    return "%s  [depth %d]" % (text, len(frames_of(s.ctx)[0]))


def _esc(text):
    return text.replace("\\", "\\\\").replace('"', '\\"')


def emit_dot(g, name="cfg", verbose=False, transitive=()):
    """Deterministic DOT: nodes sorted by label, edges sorted by endpoint ids."""
    labels = getattr(g, "labels", None) or {}

    def lab(n):
        if verbose or n not in labels:
            return node_label(n, verbose) if isinstance(n, AmState) else labels.get(n, show(n))
        return labels[n]

    order = sorted(g.nodes, key=lambda n: (lab(n), show(n)))
    ids = {n: "n%d" % i for i, n in enumerate(order)}
    lines = []
    if g.truncated:
        lines.append("// truncated: state budget reached")
    lines.append("digraph %s {" % name)
    lines.append("  node [shape=box];")
    for n in order:
        extra = ", style=bold" if n == g.start else ""
        lines.append('  %s [label="%s"%s];' % (ids[n], _esc(lab(n)), extra))
    tset = set(transitive)
    for a, b in sorted(set(g.edges) | tset, key=lambda e: (int(ids[e[0]][1:]), int(ids[e[1]][1:]))):
        style = " [style=dashed]" if (a, b) in tset else ""
        lines.append("  %s -> %s%s;" % (ids[a], ids[b], style))
    lines.append("}")
    return "\n".join(lines) + "\n"


def adjacency_text(g):
    labels = getattr(g, "labels", None) or {}
    lab = lambda n: labels.get(n) or node_label(n)  # noqa: E731
    return "".join("%s -> %s\n" % (lab(a), lab(b)) for a, b in
                   sorted(g.edges, key=lambda e: (lab(e[0]), lab(e[1]))))
