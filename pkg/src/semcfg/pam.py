"""Phased abstract machine: frames, contexts, machine states, the translation
from straightened SOS rules, execution and pretty printing."""
from dataclasses import dataclass, field

from .semantics import Build, LetCall, LetStep, rhs_used_vars, show_rhs
from .terms import (
    ALL, NONVAL, Conf, ConstInt, ConstStr, Node, State, Star, Term, Var,
    abstract_match, fresh_tag, match, show, substitute, vars_of,
)

DOWN, UP = "down", "up"


class DeterminismViolation(Exception):
    pass


@dataclass(eq=False)
class FrameTemplate:
    """The suspended remainder of a rule: result pattern (binder), the rest of
    the chain, and the variables it needs from earlier in the rule."""
    rule: str
    index: int
    kind: str  # "step" or "call"
    binder: object
    body: object
    captured: tuple

    @property
    def ident(self):
        return (self.rule, self.index)

    def __hash__(self):
        return hash(self.ident)

    def __eq__(self, other):
        return isinstance(other, FrameTemplate) and self.ident == other.ident


class Frame(Term):
    __slots__ = ("tmpl", "values", "_hd", "_args")

    def __init__(self, tmpl, values):
        self.tmpl = tmpl
        self.values = tuple(values)
        self._hd = ("frame",) + tmpl.ident
        self._args = self.values
        self._h = hash((self._hd, self._args))

    def _mk(self, args):
        return Frame(self.tmpl, args)

    def env(self):
        return {v.key: x for v, x in zip(self.tmpl.captured, self.values)}

    def show(self):
        return "[%s:%d %s]" % (self.tmpl.rule, self.tmpl.index, " ".join(show(v) for v in self.values))


class _Emp(Term):
    __slots__ = ("_hd",)

    def __init__(self):
        self._hd = "emp"
        self._h = hash("emp")

    def show(self):
        return "emp"


Emp = _Emp()


class Push(Term):
    __slots__ = ("rest", "frame", "_hd", "_args")

    def __init__(self, rest, frame):
        self.rest = rest
        self.frame = frame
        self._hd = "push"
        self._args = (rest, frame)
        self._h = hash((self._hd, self._args))

    def _mk(self, args):
        return Push(args[0], args[1])

    def show(self):
        return "%s . %s" % (show(self.rest), show(self.frame))


def KVar(name="k", tag=None):
    return Var(name, ALL, fresh_tag() if tag is None else tag)


def frames_of(ctx):
    out = []
    while isinstance(ctx, Push):
        out.append(ctx.frame)
        ctx = ctx.rest
    return list(reversed(out)), ctx


def stacklen(ctx):
    return len(frames_of(ctx)[0])


def top_frame(ctx):
    return ctx.frame if isinstance(ctx, Push) else None


def push_all(base, frames):
    for f in frames:
        base = Push(base, f)
    return base


class PamState(Term):
    __slots__ = ("conf", "ctx", "phase", "_hd", "_args")

    def __init__(self, conf, ctx, phase):
        self.conf = conf
        self.ctx = ctx
        self.phase = phase
        self._hd = ("pam", phase)
        self._args = (conf, ctx)
        self._h = hash((self._hd, self._args))

    def _mk(self, args):
        return PamState(args[0], args[1], self.phase)

    def show(self):
        return "<%s | %s> %s" % (show(self.conf), show(self.ctx), self.phase)


@dataclass
class PamRule:
    name: str
    lhs: object
    chain: tuple
    rhs: object

    def map_terms(self, f):
        return PamRule(self.name, f(self.lhs),
                       tuple((f(r), fn, tuple(f(a) for a in args)) for r, fn, args in self.chain),
                       f(self.rhs))

    def all_vars(self):
        out = dict(vars_of(self.lhs))
        for r, _, args in self.chain:
            out.update(vars_of(r))
            for a in args:
                out.update(vars_of(a))
        out.update(vars_of(self.rhs))
        return out

    @property
    def kind(self):
        return _kind(self.lhs.phase, self.rhs.phase)

    def show(self):
        return "%s: %s" % (self.name, show_rule(self))


def _kind(a, b):
    return {(DOWN, DOWN): "downDown", (DOWN, UP): "downUp",
            (UP, UP): "upUp", (UP, DOWN): "upDown"}[(a, b)]


class RuleSet(list):
    """A list of machine rules that also carries the language's semantic
    functions."""

    def __init__(self, rules=(), semfuns=None, lang=None):
        super().__init__(rules)
        self.semfuns = semfuns or {}
        self.lang = lang

    def like(self, rules):
        return RuleSet(rules, self.semfuns, self.lang)

    def by_name(self, name):
        for r in self:
            if r.name == name:
                return r
        raise KeyError(name)


# -- SOS to PAM -------------------------------------------------------------

RESET = "Reset"


def sos_to_pam(lang):
    rules = []
    for r in lang.rules:
        k = Var("k", ALL, fresh_tag())
        start = PamState(r.lhs, k, DOWN)
        _rhs_to_pam(r.name, start, k, r.rhs, set(vars_of(r.lhs)), rules, [0])
    t = Var("t", NONVAL, fresh_tag())
    s = Var("s", ALL, fresh_tag())
    rules.append(PamRule(RESET, PamState(Conf(t, s), Emp, UP), (), PamState(Conf(t, s), Emp, DOWN)))
    return RuleSet(rules, lang.semfuns, lang)


def _rhs_to_pam(name, s, k, rhs, bound, out, counter):
    idx = counter[0]
    counter[0] += 1
    rname = "%s.%d" % (name, idx) if idx or not isinstance(rhs, Build) else name
    if isinstance(rhs, Build):
        out.append(PamRule(rname, s, (), PamState(rhs.conf, k, UP)))
        return
    frame = _make_frame(name, idx, rhs, bound)
    k2 = Push(k, frame)
    after = bound | set(vars_of(rhs.result))
    if isinstance(rhs, LetStep):
        out.append(PamRule(rname, s, (), PamState(rhs.arg, k2, DOWN)))
        _rhs_to_pam(name, PamState(rhs.result, k2, UP), k, rhs.rest, after, out, counter)
    else:
        chain = ((rhs.result, rhs.fun, rhs.args),)
        out.append(PamRule(rname, s, chain, PamState(rhs.result, k2, DOWN)))
        _rhs_to_pam(name, PamState(rhs.result, k2, DOWN), k, rhs.rest, after, out, counter)


def _make_frame(name, idx, rhs, bound):
    used = dict(rhs_used_vars(rhs.rest))
    used.update(vars_of(rhs.result))
    captured = tuple(v for key, v in sorted(used.items()) if key in bound)
    tmpl = FrameTemplate(name, idx, "step" if isinstance(rhs, LetStep) else "call",
                         rhs.result, rhs.rest, captured)
    return Frame(tmpl, captured)


def classify_rules(rules):
    out = {"downDown": [], "downUp": [], "upUp": [], "upDown": []}
    for r in rules:
        out[r.kind].append(r)
    return out


# -- execution --------------------------------------------------------------

def fire(rule, state, call, matcher=match):
    """All results of applying one rule; call(fun, args) gives the candidate
    semantic-function results."""
    s = matcher(rule.lhs, state)
    if s is None:
        return []
    envs = [s]
    for res, fun, args in rule.chain:
        nxt = []
        for e in envs:
            for r in call(fun, [substitute(e, a, True) for a in args]):
                e2 = matcher(substitute(e, res, True), r) if matcher is not match else match(res, r, e)
                if e2 is None:
                    continue
                if matcher is not match:
                    merged = dict(e)
                    merged.update(e2)
                    e2 = merged
                nxt.append(e2)
        envs = nxt
    return [substitute(e, rule.rhs, True) for e in envs]


def concrete_call(semfuns):
    def call(fun, args):
        return semfuns[fun](args)
    return call


def pam_step(rules, s):
    call = concrete_call(rules.semfuns)
    out = []
    for r in rules:
        for x in fire(r, s, call):
            if x not in out:
                out.append(x)
    return out


def pam_run(rules, s, fuel):
    trace = [s]
    for _ in range(fuel):
        nxt = pam_step(rules, trace[-1])
        if not nxt:
            break
        if len(nxt) > 1:
            raise DeterminismViolation("%d successors from %s" % (len(nxt), show(trace[-1])))
        trace.append(nxt[0])
    return trace


def pam_step_rules(rules, s):
    """(rule name, successor) pairs."""
    call = concrete_call(rules.semfuns)
    return [(r.name, x) for r in rules for x in fire(r, s, call)]


# -- pretty printing ---------------------------------------------------

INFIX = {"+": "+", "<": "<", "<=": "<=", ":=": ":="}


def pretty_term(t, holes=None, top=True):
    holes = holes or {}
    if isinstance(t, Var):
        if t.key in holes:
            return holes[t.key]
        return t.name + ("" if t.mt == ALL else "_" + t.mt)
    if isinstance(t, ConstInt):
        return str(t.n)
    if isinstance(t, ConstStr):
        return '"%s"' % t.s
    if isinstance(t, Star):
        return "⋆" if t.mt == "Val" else "⋆" + t.mt
    if isinstance(t, Node):
        c = t.children
        if t.sym == "var" and len(c) == 1 and isinstance(c[0], ConstStr):
            return c[0].s
        if t.sym == ":=" and len(c) == 2:
            lhs = c[0].s if isinstance(c[0], ConstStr) else pretty_term(c[0], holes, False)
            s = "%s:=%s" % (lhs, pretty_term(c[1], holes, True))
            return s if top else "(%s)" % s
        if t.sym in INFIX and len(c) == 2:
            s = "%s%s%s" % (pretty_term(c[0], holes, False), INFIX[t.sym], pretty_term(c[1], holes, False))
            return s if top else "(%s)" % s
        if t.sym == "seq" and len(c) == 2:
            s = "%s; %s" % (pretty_term(c[0], holes, False), pretty_term(c[1], holes, True))
            return s if top else "(%s)" % s
        if t.sym == "if" and len(c) == 3:
            s = "if %s then %s else %s" % tuple(pretty_term(x, holes, False) for x in c)
            return s if top else "(%s)" % s
        if t.sym == "while" and len(c) == 2:
            s = "while %s do %s" % tuple(pretty_term(x, holes, False) for x in c)
            return s if top else "(%s)" % s
        if not c:
            return t.sym
        return "%s(%s)" % (t.sym, ", ".join(pretty_term(x, holes, True) for x in c))
    if isinstance(t, State):
        return pretty_state(t, holes)
    if isinstance(t, Conf):
        return pretty_conf(t, holes)
    return show(t)


def pretty_state(st, holes=None):
    holes = holes or {}
    if isinstance(st, Var):
        return holes.get(st.key, st.name)
    if isinstance(st, Star):
        return "⊤"
    if not st.bindings and st.tail is None:
        return "∅"
    if not st.bindings and isinstance(st.tail, Star):
        return "⊤"
    items = ["%s↦%s" % (k.s if isinstance(k, ConstStr) else pretty_term(k, holes),
                        pretty_term(v, holes)) for k, v in st.bindings]
    s = ", ".join(items)
    if st.tail is not None:
        s += " | " + (pretty_term(st.tail, holes) if not isinstance(st.tail, Star) else "⋆")
    return "[%s]" % s


def pretty_conf(c, holes=None):
    return "(%s, %s)" % (pretty_term(c.term, holes), pretty_state(c.state, holes))


def pretty_frame(f):
    tmpl = f.tmpl
    env = f.env()
    b = tmpl.binder
    body = tmpl.body
    if (isinstance(body, Build) and isinstance(b, Conf) and isinstance(b.term, Var)
            and isinstance(b.state, Var) and b.term.key not in env and b.state.key not in env):
        holes = {b.term.key: "□t", b.state.key: "□μ"}
        return "[%s]" % pretty_conf(substitute(env, body.conf), holes)
    return "[%s → %s]" % (pretty_conf(substitute(env, b)) if isinstance(b, Conf) else show(b),
                          show_rhs(body.map_terms(lambda t: substitute(env, t))))


def pretty_ctx(ctx, hide_calls=True):
    frames, base = frames_of(ctx)
    out = "emp" if base is Emp else pretty_term(base)
    for f in frames:
        if hide_calls and isinstance(f, Frame) and f.tmpl.kind == "call":
            continue
        out += "∘" + (pretty_frame(f) if isinstance(f, Frame) else pretty_term(f))
    return out


def pretty_pam_state(s, hide_calls=True):
    arrow = "↓" if s.phase == DOWN else "↑"
    return "⟨%s | %s⟩%s" % (pretty_conf(s.conf), pretty_ctx(s.ctx, hide_calls), arrow)


def show_rule(r, hide_calls=False):
    def st(x):
        if isinstance(x, PamState):
            return pretty_pam_state(x, hide_calls)
        return "⟨%s | %s⟩" % (pretty_conf(x.conf), pretty_ctx(x.ctx, hide_calls))
    chain = "".join("let %s = %s(%s) in " % (pretty_conf(res), fn, ", ".join(pretty_conf(a) for a in args))
                    for res, fn, args in r.chain)
    arrow = "↪" if isinstance(r.lhs, PamState) else "→"
    return "%s %s %s%s" % (st(r.lhs), arrow, chain, st(r.rhs))


def dump_rules(rules, hide_calls=False):
    return "\n".join("%-22s %s" % (r.name, show_rule(r, hide_calls)) for r in rules) + "\n"
