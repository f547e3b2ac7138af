"""Two small analyses over generated CFGs: constant propagation on an
expression-level graph and parenthesis balancing on a path-sensitive one.
Both read the program through the AST positions carried by focus terms."""
from collections import deque
from dataclasses import dataclass, field

from .languages import iter_nodes, subterm_at
from .terms import ConstInt, ConstStr, Node, NonValNode, State, ValNode


# -- constant propagation ---------------------------------------------------

class _Bot:
    def __repr__(self):
        return "⊥"


class _Top:
    def __repr__(self):
        return "⊤"


BOT, TOP = _Bot(), _Top()


@dataclass(frozen=True)
class Const:
    n: int

    def __repr__(self):
        return str(self.n)


class ConstLattice:
    """Flat lattice BOT < Const(n) < TOP, lifted pointwise to environments
    (dicts; a missing variable is BOT)."""

    @staticmethod
    def join(a, b):
        if a is BOT:
            return b
        if b is BOT or a == b:
            return a
        return TOP

    @staticmethod
    def leq(a, b):
        return a is BOT or b is TOP or a == b

    @classmethod
    def join_env(cls, e1, e2):
        out = dict(e1)
        for k, v in e2.items():
            out[k] = cls.join(out.get(k, BOT), v)
        return out


def eval_const(e, env):
    if isinstance(e, ConstInt):
        return Const(e.n)
    if isinstance(e, NonValNode) and e.sym == "var" and isinstance(e.children[0], ConstStr):
        return env.get(e.children[0].s, BOT)
    if isinstance(e, NonValNode) and e.sym == "+":
        a, b = (eval_const(c, env) for c in e.children)
        if a is BOT or b is BOT:
            return BOT
        if isinstance(a, Const) and isinstance(b, Const):
            return Const(a.n + b.n)
        return TOP
    return TOP


def _assigned(s, program):
    """(name, value-expression or None) when state s is about to run an
    assignment; the expression comes from the program text when known."""
    t = s.conf.term
    if not (isinstance(t, NonValNode) and t.sym == ":=" and isinstance(t.children[0], ConstStr)):
        return None
    name = t.children[0].s
    if program is not None and t.origin is not None:
        src = subterm_at(program, t.origin)
        if isinstance(src, NonValNode) and src.sym == ":=":
            return name, src.children[1]
    # built by a rule (desugaring): the right side is not in the program
    return name, None


def _members(cfg, n):
    return cfg.members.get(n) or [n]


def transfer(cfg, n, env, program):
    env = dict(env)
    for s in _members(cfg, n):
        a = _assigned(s, program)
        if a is not None:
            name, e = a
            env[name] = TOP if e is None else eval_const(e, env)
    return env


def entry_env(start):
    """Variables bound in the start state are unknown inputs."""
    st = start.conf.state if hasattr(start, "conf") else None
    env = {}
    if isinstance(st, State):
        for k, _ in st.bindings:
            if isinstance(k, ConstStr) and not k.s.startswith("__"):
                env[k.s] = TOP
    return env


@dataclass
class ConstResult:
    env_in: dict
    env_out: dict

    def exit_nodes(self, cfg):
        succ = cfg.succs()
        return [n for n in cfg.nodes if not succ[n]]

    def at_exit(self, cfg):
        out = {}
        for n in self.exit_nodes(cfg):
            out = ConstLattice.join_env(out, self.env_out[n])
        return out


def constant_propagation(cfg, program, entry=None):
    """Worklist fixpoint; reports the environment before and after each node."""
    first = _members(cfg, cfg.start)[0]
    start_env = entry_env(first) if entry is None else dict(entry)
    pred, succ = cfg.preds(), cfg.succs()
    env_in = {n: {} for n in cfg.nodes}
    env_out = {n: {} for n in cfg.nodes}
    work = deque(cfg.nodes)
    queued = set(cfg.nodes)
    while work:
        n = work.popleft()
        queued.discard(n)
        e = dict(start_env) if n == cfg.start else {}
        for p in pred[n]:
            e = ConstLattice.join_env(e, env_out[p])
        env_in[n] = e
        out = transfer(cfg, n, e, program)
        if out != env_out[n]:
            env_out[n] = out
            for m in succ[n]:
                if m not in queued:
                    queued.add(m)
                    work.append(m)
    return ConstResult(env_in, env_out)


def show_env(env):
    return ", ".join("%s=%r" % (k, v) for k, v in sorted(env.items()) if v is not BOT) or "-"


# -- parenthesis balance ----------------------------------------------------

@dataclass
class Balanced:
    def __str__(self):
        return "Balanced"


@dataclass
class Unbalanced:
    witness: list = field(default_factory=list)  # CFG nodes from the start
    reason: str = ""

    def __str__(self):
        return "Unbalanced (%s)" % self.reason


@dataclass
class Unknown:
    reason: str = ""

    def __str__(self):
        return "Unknown (%s)" % self.reason


class _Unresolved(Exception):
    pass


def string_assignments(program):
    """name -> list of right-hand sides assigned anywhere in the program."""
    out = {}
    for _, t in iter_nodes(program):
        if isinstance(t, NonValNode) and t.sym == ":=" and isinstance(t.children[0], ConstStr):
            out.setdefault(t.children[0].s, []).append(t.children[1])
    return out


def _deltas(text, open_tok, close_tok):
    out = []
    i = 0
    while i < len(text):
        if text.startswith(open_tok, i):
            out.append(1)
            i += len(open_tok)
        elif text.startswith(close_tok, i):
            out.append(-1)
            i += len(close_tok)
        else:
            i += 1
    return out


def print_effect(arg, assigns, open_tok, close_tok):
    """Counter deltas of printing arg; raises _Unresolved when the printed
    text is not known statically."""
    if isinstance(arg, ConstStr):
        return _deltas(arg.s, open_tok, close_tok)
    if isinstance(arg, (ConstInt, ValNode)):
        return []
    if isinstance(arg, NonValNode) and arg.sym == "var" and isinstance(arg.children[0], ConstStr):
        name = arg.children[0].s
        rhss = assigns.get(name)
        if not rhss:
            raise _Unresolved("%s is never assigned" % name)
        effects = set()
        for e in rhss:
            if isinstance(e, (ConstStr, ConstInt)):
                effects.add(tuple(print_effect(e, assigns, open_tok, close_tok)))
            else:
                raise _Unresolved("%s is assigned a computed value" % name)
        if len(effects) > 1:
            raise _Unresolved("%s holds differently bracketed strings" % name)
        return list(effects.pop())
    raise _Unresolved("cannot tell what print prints")


def node_effects(cfg, program, open_tok="(", close_tok=")"):
    assigns = string_assignments(program)
    out = {}
    for n in cfg.nodes:
        ds, seen = [], set()
        for s in _members(cfg, n):
            t = s.conf.term if hasattr(s, "conf") else None
            if not (isinstance(t, NonValNode) and t.sym == "print" and t.origin is not None):
                continue
            if t.origin in seen:
                continue
            seen.add(t.origin)
            src = subterm_at(program, t.origin)
            ds.extend(print_effect(src.children[0], assigns, open_tok, close_tok))
        out[n] = ds
    return out


def paren_balance(cfg, program, open_tok="(", close_tok=")", k=8):
    """Track an open-bracket counter in 0..k along all CFG paths. The search
    is breadth first, so an offending path is a shortest one."""
    try:
        eff = node_effects(cfg, program, open_tok, close_tok)
    except _Unresolved as e:
        return Unknown(str(e))
    succ = cfg.succs()

    def run(n, c):
        for d in eff[n]:
            c += d
            if c < 0:
                return c
            if c > k:
                return None
        return c

    c0 = run(cfg.start, 0)
    parent = {}
    overflow = False
    start = (cfg.start, c0)
    parent[start] = None
    work = deque([start])
    while work:
        n, c = work.popleft()
        bad = None
        if c is None:
            overflow = True
            continue
        if c < 0:
            bad = "a closing bracket with none open"
        elif not succ[n] and c != 0:
            bad = "%d bracket(s) left open at exit" % c
        if bad:
            path = []
            x = (n, c)
            while x is not None:
                path.append(x[0])
                x = parent[x]
            return Unbalanced(path[::-1], bad)
        for m in succ[n]:
            y = (m, run(m, c))
            if y not in parent:
                parent[y] = (n, c)
                work.append(y)
    if overflow:
        return Unknown("more than %d brackets open" % k)
    return Balanced()


def is_print_free(program):
    return not any(isinstance(t, Node) and t.sym == "print" for _, t in iter_nodes(program))
