"""Compiled mode, second half: group the nodes of a graph pattern into
entry/exit classes, turn the grouping into a syntax-directed CFG recipe, and
apply recipes to programs."""
import json
from collections import deque
from dataclasses import dataclass, field

import networkx as nx

from .cfg import Cfg, explore_graph, initial_state, project_graph
from .languages import subterm_at
from .pam import stacklen
from .terms import NonValNode, leq_witness, substitute

T_IN, T_OUT = "tIn", "tOut"


class MissingRecipe(KeyError):
    pass


class CodegenFailed(Exception):
    pass


def c_in(i):
    return "cIn:%d" % i


def c_out(i):
    return "cOut:%d" % i


def ref_child(ref):
    return int(ref.split(":")[1]) if ":" in ref else None


def ref_key(ref):
    if ref == T_IN:
        return (0, -1, 0)
    if ref == T_OUT:
        return (2, -1, 0)
    return (1, ref_child(ref), 0 if ref.startswith("cIn") else 1)


@dataclass
class Projection:
    """Node classes of a pattern; each class carries the refs naming it
    (more than one when child exits coincide)."""
    classes: list  # list of (refs tuple, frozenset of pattern node indices)

    def refs_of(self, i):
        for refs, members in self.classes:
            if i in members:
                return refs
        return ()

    def class_of(self, i):
        for n, (_, members) in enumerate(self.classes):
            if i in members:
                return n
        return None


@dataclass
class Recipe:
    node_type: str
    arity: int
    child_order: list
    connects: list
    ins: list = field(default_factory=lambda: [T_IN])
    outs: list = field(default_factory=list)

    def to_json(self):
        return {"nodeType": self.node_type, "arity": self.arity, "childOrder": list(self.child_order),
                "connects": [list(c) for c in self.connects], "ins": list(self.ins),
                "outs": list(self.outs)}

    @classmethod
    def from_json(cls, d):
        return cls(d["nodeType"], d["arity"], list(d["childOrder"]),
                   [tuple(c) for c in d["connects"]], list(d["ins"]), list(d["outs"]))

    def connect_set(self):
        return set(self.connects)

    def class_count(self):
        refs = {T_IN, T_OUT}
        for a, b in self.connects:
            refs.update((a, b))
        refs.update(self.outs)
        return len(refs)


# -- projection search ------------------------------------------------------

def find_projection(p):
    """Greedy grouping of pattern nodes into loop-free classes seeded by the
    recognizable states; None when no grouping is found."""
    if not p.finite:
        return None
    n = len(p.nodes)
    refs = {i: [] for i in range(n)}
    refs[0].append(T_IN)
    for (a, b), c in sorted(p.transitive.items()):
        if c is None:
            return None
        for node, r in ((a, c_in(c)), (b, c_out(c))):
            if r not in refs[node]:
                refs[node].append(r)
    for e in sorted(p.exits):
        if not refs[e]:
            refs[e].append(T_OUT)

    # seed classes; nodes sharing a ref share a class
    owner = {}
    cls = {}
    members = {}
    for i in range(n):
        if not refs[i]:
            continue
        cid = None
        for r in refs[i]:
            if r in owner:
                cid = owner[r]
        if cid is None:
            cid = len(members)
            members[cid] = set()
        members[cid].add(i)
        cls[i] = cid
        for r in refs[i]:
            owner[r] = cid

    g = nx.DiGraph()
    g.add_nodes_from(range(n))
    g.add_edges_from(p.edges)
    g.add_edges_from(p.transitive)
    idom = nx.immediate_dominators(g, 0)

    def dominates(a, b):
        while True:
            if a == b:
                return True
            if b not in idom or idom[b] == b:
                return False
            b = idom[b]

    succ = p.succs(with_transitive=False)
    pred = p.preds(with_transitive=False)
    order = list(nx.bfs_tree(g, 0, sort_neighbors=sorted))

    def acyclic_with(cid, i):
        sub = g.subgraph(members[cid] | {i}).copy()
        sub.remove_edges_from([e for e in p.transitive if sub.has_edge(*e)])
        return nx.is_directed_acyclic_graph(sub)

    # merge levels: 0 joins predecessors only, 1 also successors, 2 drops the
    # loop-header rule; a level is used only once the ones below stop helping
    pending = [i for i in order if i not in cls]
    level = 0
    while pending:
        progress = False
        for i in list(pending):
            latches = [u for u in pred[i] if dominates(i, u)]
            if latches and level < 2:
                # a loop header joins the class of its back-edge source
                cands = [cls[u] for u in latches if u in cls]
            else:
                cands = [cls[u] for u in pred[i] if u in cls and (dominates(u, i) or dominates(i, u))]
                if level >= 1:
                    cands += [cls[w] for w in succ[i] if w in cls and (dominates(i, w) or dominates(w, i))]
            for cid in dict.fromkeys(cands):
                if acyclic_with(cid, i):
                    members[cid].add(i)
                    cls[i] = cid
                    pending.remove(i)
                    progress = True
                    break
        if progress:
            level = 0
        elif level == 2:
            return None
        else:
            level += 1

    by_cid = {}
    for r, cid in owner.items():
        by_cid.setdefault(cid, []).append(r)
    classes = [(tuple(sorted(by_cid[cid], key=ref_key)), frozenset(members[cid]))
               for cid in sorted(members)]
    return Projection(classes)


def pattern_to_recipe(p, proj):
    connects = set()
    for a, b in p.edges:
        ca, cb = proj.class_of(a), proj.class_of(b)
        if ca == cb:
            continue
        dst = proj.classes[cb][0][0]
        for ra in proj.classes[ca][0]:
            connects.add((ra, dst))
    order = []
    seen = set()
    g = nx.DiGraph()
    g.add_nodes_from(range(len(p.nodes)))
    g.add_edges_from(p.edges)
    g.add_edges_from(p.transitive)
    for i in nx.bfs_tree(g, 0, sort_neighbors=sorted):
        for (a, _), c in sorted(p.transitive.items()):
            if a == i and c not in seen:
                seen.add(c)
                order.append(c)
    outs = []
    for e in sorted(p.exits):
        for r in proj.refs_of(e):
            if r not in outs:
                outs.append(r)
    outs.sort(key=ref_key)
    return Recipe(p.node_type, p.arity, order, sorted(connects, key=lambda c: (ref_key(c[0]), ref_key(c[1]))),
                  [T_IN], outs)


def gen_recipe(p):
    proj = find_projection(p)
    if proj is None:
        raise CodegenFailed("no valid projection for %s" % p.node_type)
    return pattern_to_recipe(p, proj), proj


def gen_all_recipes(patterns):
    out, projs, failed = {}, {}, []
    for sym, p in sorted(patterns.items()):
        proj = find_projection(p)
        if proj is None:
            failed.append(sym)
            continue
        out[sym] = pattern_to_recipe(p, proj)
        projs[sym] = proj
    return out, projs, failed


def recipes_to_json(recipes):
    return json.dumps([recipes[k].to_json() for k in sorted(recipes)], indent=2, sort_keys=True) + "\n"


def recipes_from_json(text):
    return {d["nodeType"]: Recipe.from_json(d) for d in json.loads(text)}


# -- pretty printing --------------------------------------------------------

def _letter(i):
    return "abcdefghijklmnopqrstuvwxyz"[i] if i < 26 else "c%d" % i


def _ref_name(ref):
    if ref in (T_IN, T_OUT):
        return ref
    i = ref_child(ref)
    return _letter(i) + ("In" if ref.startswith("cIn") else "Out")


def pretty_print_recipe(r):
    used = set(r.child_order)
    kids = ", ".join(_letter(i) if i in used else "_" for i in range(r.arity))
    head = 'genCfg t@(Node "%s" [%s]) = do' % (r.node_type, kids) if r.arity else \
        'genCfg t@(Node "%s" []) = do' % r.node_type
    lines = [head, "  (tIn, tOut) <- makeInOut t"]
    for i in r.child_order:
        lines.append("  (%sIn, %sOut) <- genCfg %s" % (_letter(i), _letter(i), _letter(i)))
    for a, b in r.connects:
        lines.append("  connect %s %s" % (_ref_name(a), _ref_name(b)))
    lines.append("  return (inNodes [%s], outNodes [%s])" % (
        ",".join(map(_ref_name, r.ins)), ",".join(map(_ref_name, r.outs))))
    return "\n".join(lines) + "\n"


# -- applying recipes -------------------------------------------------------

def point(path, ref):
    if ref == T_IN:
        return ("in", path)
    if ref == T_OUT:
        return ("out", path)
    i = ref_child(ref)
    return ("in" if ref.startswith("cIn") else "out", path + (i,))


def recipe_to_cfg(recipes, program, contract=True):
    """Syntax-directed CFG: fresh in/out nodes per AST node, wired by the
    node type's recipe. Value children pass control straight through."""
    edges = set()
    nodes = []

    def gen(t, path):
        if not isinstance(t, NonValNode):
            e = ("eps", path)
            return [e], [e]
        r = recipes.get(t.sym)
        if r is None:
            raise MissingRecipe(t.sym)
        env = {T_IN: [("in", path)], T_OUT: [("out", path)]}
        nodes.append(("in", path))
        for i in r.child_order:
            ins, outs = gen(t.children[i], path + (i,))
            env[c_in(i)] = ins
            env[c_out(i)] = outs
        for a, b in r.connects:
            for x in env[a]:
                for y in env[b]:
                    edges.add((x, y))
        ins = [x for ref in r.ins for x in env[ref]]
        outs = [x for ref in r.outs for x in env[ref]]
        return ins, outs

    ins, outs = gen(program, ())
    if not contract:
        return edges, ins, outs
    edges = contract_eps(edges)
    used = {x for e in edges for x in e} | {x for x in ins if x[0] != "eps"}
    node_list = sorted(used)
    labels = {x: "%s %s" % (x[0], ".".join(map(str, x[1])) or "root") for x in node_list}
    return Cfg(node_list, edges, ins[0], False, labels, {})


def contract_eps(edges):
    edges = set(edges)
    eps = sorted({x for e in edges for x in e if x[0] == "eps"})
    for e in eps:
        ins = [a for a, b in edges if b == e and a != e]
        outs = [b for a, b in edges if a == e and b != e]
        edges = {(a, b) for a, b in edges if a != e and b != e}
        edges |= {(a, b) for a in ins for b in outs}
    return edges


# -- compiled / interpreted agreement ---------------------------------------

class _UnionFind:
    def __init__(self):
        self.parent = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # a real point beats an eps point as representative
            keep, drop = sorted((ra, rb), key=lambda x: (x[0] == "eps", x))
            self.parent[drop] = keep


@dataclass
class Agreement:
    ok: bool
    interpreted: set
    compiled: set
    unattributed: list = field(default_factory=list)

    @property
    def missing(self):
        return self.interpreted - self.compiled

    @property
    def extra(self):
        return self.compiled - self.interpreted


def attribute_states(g, program, patterns, projections, abs_):
    """Canonical points ('in'|'out'|'eps', AST path) of every explored state,
    found by instantiating each AST node's pattern at the contexts where that
    node is entered."""
    points = {s: set() for s in g.nodes}
    by_len = {}
    for s in g.nodes:
        by_len.setdefault(stacklen(s.ctx), []).append(s)
    todo = deque([((), g.start.ctx)])
    done = set()
    eps = []
    while todo:
        path, K = todo.popleft()
        if (path, K) in done:
            continue
        done.add((path, K))
        t = subterm_at(program, path)
        if not isinstance(t, NonValNode):
            continue
        p, proj = patterns[t.sym], projections[t.sym]
        # erase the node as a whole so name children stay names
        kids = abs_.alpha_term(t).children
        sigma = {x.key: c for x, c in zip(p.child_vars, kids)}
        sigma[p.k.key] = K
        for i, n in enumerate(p.nodes):
            refs = proj.refs_of(i)
            if not refs:
                continue
            target = substitute(sigma, n)
            for s in by_len.get(stacklen(target.ctx), ()):
                if leq_witness(s, target) is None:
                    continue
                for r in refs:
                    pt = point(path, r)
                    c = ref_child(r)
                    if c is not None and not isinstance(t.children[c], NonValNode):
                        eps.append((s, ("eps", pt[1]), path))
                        continue
                    points[s].add(pt)
                    if r.startswith("cIn"):
                        todo.append((path + (c,), s.ctx))
    # a value child's point can coincide with an unrelated state after
    # abstraction; keep it only where its parent's own states lead to it
    pred = g.preds()
    changed = True
    while changed:
        changed = False
        for s, pt, path in eps:
            if pt in points[s]:
                continue
            if any(x[1] == path or x[1][:-1] == path
                   for u in pred[s] for x in points[u]):
                points[s].add(pt)
                changed = True
    return points


def check_agreement(lang, rules, abs_, patterns, projections, recipes, program, state=None,
                    max_states=10000):
    g = explore_graph(rules, abs_, initial_state(lang, program, state), max_states)
    points = attribute_states(g, program, patterns, projections, abs_)
    uf = _UnionFind()
    rep = {}
    missing = []
    for s in g.nodes:
        pts = sorted(points[s])
        if not pts:
            missing.append(s)
            continue
        for x in pts[1:]:
            uf.union(pts[0], x)
        rep[s] = pts[0]
    if missing:
        return Agreement(False, set(), set(), missing)
    proj = project_graph(g, lambda s: uf.find(rep[s]))
    interp = contract_eps({(a, b) for a, b in proj.edges if not (a == b and a[0] == "eps")})
    # value children only survive where some state stands for them
    comp_edges, _, _ = recipe_to_cfg(recipes, program, contract=False)
    comp = contract_eps({(uf.find(a), uf.find(b)) for a, b in comp_edges})
    return Agreement(interp == comp, interp, comp)
