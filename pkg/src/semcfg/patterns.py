"""Compiled mode, first half: graph patterns per node type, found by
narrowing from a generic instance of the node, and the finiteness check that
doubles as a termination proof for interpreted mode."""
from collections import deque
from dataclasses import dataclass, field

from .abstraction import abs_step, narrow_matcher
from .am import AmState, pretty_am_state
from .cfg import TransitionGraph, emit_dot
from .terms import (
    ALL, NONVAL, STAR_VAL, TOP, Conf, NonValNode, Var, canonical, fresh_tag,
    is_value_like, show,
)

DEFAULT_MAX_NODES = 500
TERMINATES, UNKNOWN = "Terminates", "Unknown"


class NotContextDiscarding(ValueError):
    pass


@dataclass
class GraphPattern:
    node_type: str
    arity: int
    child_vars: list  # Var per child position
    k: object  # the start state's context variable
    nodes: list  # index 0 is the start state
    edges: set = field(default_factory=set)  # (i, j) index pairs
    transitive: dict = field(default_factory=dict)  # (i, j) -> child index or None
    exits: set = field(default_factory=set)
    finite: bool = True

    @property
    def start(self):
        return self.nodes[0]

    def index(self, s):
        return self.nodes.index(s)

    def succs(self, with_transitive=True):
        out = {i: [] for i in range(len(self.nodes))}
        for a, b in sorted(self.edges):
            out[a].append(b)
        if with_transitive:
            for a, b in sorted(self.transitive):
                out[a].append(b)
        return out

    def preds(self, with_transitive=True):
        out = {i: [] for i in range(len(self.nodes))}
        for a, b in sorted(self.edges):
            out[b].append(a)
        if with_transitive:
            for a, b in sorted(self.transitive):
                out[b].append(a)
        return out

    def child_of(self, v):
        for i, x in enumerate(self.child_vars):
            if x.key == v.key:
                return i
        return None


def start_state(lang, sym, abs_):
    """alpha(<(N(x0..xn), T) | k>) with fresh variables; name positions get
    All-typed variables, the other children NonVal ones."""
    sig = lang.signatures[sym]
    xs = []
    for i in range(sig.arity):
        sort = sig.child_sorts[i] if sig.child_sorts else None
        mt = ALL if sort == "name" else NONVAL
        xs.append(Var("x%d" % i, mt, fresh_tag(), sort))
    k = Var("k", ALL, fresh_tag())
    return abs_.alpha(AmState(Conf(NonValNode(sym, xs), TOP), k)), xs, k


def narrow_step(rules, abs_, s):
    """Successors of a variable-bearing state: unify each rule's left side
    with s and instantiate the right side only."""
    return abs_step(rules, abs_, s, matcher=narrow_matcher)


def gen_graph_pattern(lang, rules, abs_, sym, max_nodes=DEFAULT_MAX_NODES):
    if not abs_.context_discarding:
        raise NotContextDiscarding("%s keeps context information; patterns need a "
                                   "context-discarding abstraction" % abs_.name)
    if max_nodes < 1:
        raise ValueError("max_nodes must be at least 1")
    start, xs, k = start_state(lang, sym, abs_)
    fixed = frozenset([k.key] + [x.key for x in xs])
    start = canonical(start, fixed)
    pat = GraphPattern(sym, len(xs), xs, k, [start])
    index = {start: 0}
    work = deque([0])

    def add(s):
        s = canonical(s, fixed)
        if s in index:
            return index[s]
        if len(pat.nodes) >= max_nodes:
            pat.finite = False
            return None
        index[s] = len(pat.nodes)
        pat.nodes.append(s)
        work.append(index[s])
        return index[s]

    while work:
        i = work.popleft()
        s = pat.nodes[i]
        focus = s.conf.term
        if isinstance(focus, Var) and focus.mt == NONVAL:
            j = add(AmState(Conf(STAR_VAL, TOP), s.ctx))
            if j is not None:
                pat.transitive[(i, j)] = pat.child_of(focus)
            continue
        if is_value_like(focus) and s.ctx == k:
            pat.exits.add(i)
            continue
        for t in narrow_step(rules, abs_, s):
            j = add(t)
            if j is not None:
                pat.edges.add((i, j))
        if not pat.finite:
            break
    return pat


def gen_all_patterns(lang, rules, abs_, max_nodes=DEFAULT_MAX_NODES):
    out = {}
    for sym, sig in sorted(lang.signatures.items()):
        if not sig.isval:
            out[sym] = gen_graph_pattern(lang, rules, abs_, sym, max_nodes)
    return out


def certify_termination(patterns):
    bad = sorted(sym for sym, p in patterns.items() if not p.finite)
    return (UNKNOWN, bad) if bad else (TERMINATES, [])


def pattern_label(p, i):
    tags = []
    if i == 0:
        tags.append("start")
    if i in p.exits:
        tags.append("exit")
    s = pretty_am_state(p.nodes[i], hide_calls=False)
    return s + (" {%s}" % ",".join(tags) if tags else "")


def pattern_dot(p):
    g = TransitionGraph(list(range(len(p.nodes))), set(p.edges), 0, not p.finite)
    g.labels = {i: pattern_label(p, i) for i in range(len(p.nodes))}
    return emit_dot(g, name='"pattern %s"' % p.node_type, transitive=set(p.transitive))


def pattern_dump(p):
    """Line-oriented dump: nodes, then edges (-> normal, ~> transitive)."""
    lines = ["pattern %s arity %d finite %s" % (p.node_type, p.arity, str(p.finite).lower())]
    for i, s in enumerate(p.nodes):
        lines.append("node %d %s%s" % (i, show(s), " exit" if i in p.exits else ""))
    for a, b in sorted(p.edges):
        lines.append("edge %d -> %d" % (a, b))
    for (a, b), c in sorted(p.transitive.items()):
        lines.append("edge %d ~> %d child %s" % (a, b, "?" if c is None else c))
    return "\n".join(lines) + "\n"
