"""Straightened small-step semantics: rule right-hand-side chains, semantic
functions, language definitions and a reference SOS interpreter."""
from dataclasses import dataclass, field

from .terms import (
    ALL, EMPTY_STATE, STAR_VAL, VAL, Conf, ConstInt, ConstStr, KeyNotGround,
    Node, NonValNode, State, TermParser, TermSyntaxError, ValNode, Var,
    fresh_rename, is_concrete, is_value, match, show, substitute, unify, vars_of,
)


class StuckStep(Exception):
    pass


# -- semantic functions -----------------------------------------------------

@dataclass
class SemFun:
    name: str
    concrete: object
    abstract: object = None
    boolean: bool = False

    def __call__(self, args):
        return self.concrete(args)

    def over(self, args):
        """Over-approximating result set for possibly abstract arguments."""
        if self.abstract is not None:
            return self.abstract(args)
        if all(is_concrete(a) for a in args):
            return self.concrete(args)
        if self.boolean:
            return [Conf(ValNode("true"), EMPTY_STATE), Conf(ValNode("false"), EMPTY_STATE)]
        return [Conf(STAR_VAL, EMPTY_STATE)]


def _ints(args):
    out = []
    for a in args:
        t = a.term if isinstance(a, Conf) else a
        if not isinstance(t, ConstInt):
            return None
        out.append(t.n)
    return out


def _bool(b):
    return ValNode("true" if b else "false")


def _arith(name, fn):
    def concrete(args):
        ns = _ints(args)
        if ns is None:
            return []
        return [Conf(fn(*ns), EMPTY_STATE)]
    return concrete


def _write(args):
    out, val = args[0].term, args[1].term
    return [Conf(ValNode("cons", (val, out)), EMPTY_STATE)]


BUILTIN_SEMFUNS = {
    "add": SemFun("add", _arith("add", lambda a, b: ConstInt(a + b))),
    "sub": SemFun("sub", _arith("sub", lambda a, b: ConstInt(a - b))),
    "lt": SemFun("lt", _arith("lt", lambda a, b: _bool(a < b)), boolean=True),
    "le": SemFun("le", _arith("le", lambda a, b: _bool(a <= b)), boolean=True),
    "write": SemFun("write", _write),
}


# -- right-hand sides -------------------------------------------------------

@dataclass(frozen=True)
class Build:
    conf: object

    def map_terms(self, f):
        return Build(f(self.conf))


@dataclass(frozen=True)
class LetStep:
    result: object
    arg: object
    rest: object

    def map_terms(self, f):
        return LetStep(f(self.result), f(self.arg), self.rest.map_terms(f))


@dataclass(frozen=True)
class LetCall:
    result: object
    fun: str
    args: tuple
    rest: object

    def map_terms(self, f):
        return LetCall(f(self.result), self.fun, tuple(f(a) for a in self.args), self.rest.map_terms(f))


def rhs_used_vars(rhs):
    """Variables read by the chain (not counting those it binds itself)."""
    used, bound = {}, set()

    def take(t, into):
        for k, v in vars_of(t).items():
            if k not in bound:
                into.setdefault(k, v)

    r = rhs
    while True:
        if isinstance(r, Build):
            take(r.conf, used)
            return used
        if isinstance(r, LetStep):
            take(r.arg, used)
            bound |= set(vars_of(r.result))
        else:
            for a in r.args:
                take(a, used)
            bound |= set(vars_of(r.result))
        r = r.rest


def rhs_bound_vars(rhs):
    out = {}
    r = rhs
    while not isinstance(r, Build):
        out.update(vars_of(r.result))
        r = r.rest
    return out


def show_rhs(rhs):
    if isinstance(rhs, Build):
        return "build %s" % show(rhs.conf)
    if isinstance(rhs, LetStep):
        return "let %s = step %s in %s" % (show(rhs.result), show(rhs.arg), show_rhs(rhs.rest))
    return "let %s = call %s(%s) in %s" % (
        show(rhs.result), rhs.fun, ", ".join(show(a) for a in rhs.args), show_rhs(rhs.rest))


@dataclass(frozen=True)
class SosRule:
    name: str
    lhs: object
    rhs: object

    def map_terms(self, f):
        return SosRule(self.name, f(self.lhs), self.rhs.map_terms(f))

    def show(self):
        return "rule %s: %s ~> %s" % (self.name, show(self.lhs), show_rhs(self.rhs))


# -- languages --------------------------------------------------------------

@dataclass
class Sig:
    arity: int
    isval: bool
    sort: str = None
    child_sorts: tuple = ()


@dataclass
class Language:
    name: str
    signatures: dict = field(default_factory=dict)
    rules: list = field(default_factory=list)
    semfuns: dict = field(default_factory=dict)
    initial_state: object = EMPTY_STATE

    @property
    def value_syms(self):
        return frozenset(s for s, g in self.signatures.items() if g.isval)

    @property
    def has_sorts(self):
        return any(g.sort for g in self.signatures.values())

    def sort_of(self, t):
        if isinstance(t, Node):
            g = self.signatures.get(t.sym)
            return g.sort if g else None
        if isinstance(t, Var):
            return t.sort
        if isinstance(t, (ConstInt, ConstStr)):
            return "expr"
        return None

    def name_positions(self, sym):
        g = self.signatures.get(sym)
        if not g:
            return ()
        return tuple(i for i, s in enumerate(g.child_sorts) if s == "name")

    def mk(self, sym, *children):
        g = self.signatures[sym]
        return (ValNode if g.isval else NonValNode)(sym, children)

    def rule(self, name):
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)


def validate_language(lang):
    """Diagnostics as strings; warnings are prefixed with 'warning:'."""
    out = []
    for r in lang.rules:
        out.extend("%s: %s" % (r.name, d) for d in _check_rule(lang, r))
    for i, a in enumerate(lang.rules):
        for b in lang.rules[i + 1:]:
            if _overlap(a.lhs, b.lhs):
                out.append("warning: %s and %s have overlapping left-hand sides" % (a.name, b.name))
    return out


def _check_rule(lang, r):
    out = []
    if not isinstance(r.lhs, Conf):
        return ["left-hand side is not a configuration"]
    t = r.lhs.term
    if is_value(t) or (isinstance(t, Var) and t.mt == VAL):
        out.append("value LHS")
    pieces = [r.lhs]
    x = r.rhs
    while not isinstance(x, Build):
        pieces.append(x.result)
        pieces.extend([x.arg] if isinstance(x, LetStep) else list(x.args))
        if isinstance(x, LetCall) and x.fun not in lang.semfuns:
            out.append("unknown semantic function %s" % x.fun)
        x = x.rest
    pieces.append(x.conf)
    for p in pieces:
        out.extend(_check_sig(lang, p))
    bound = set(vars_of(r.lhs))
    x = r.rhs
    while True:
        used = [x.conf] if isinstance(x, Build) else ([x.arg] if isinstance(x, LetStep) else list(x.args))
        for u in used:
            for k, v in vars_of(u).items():
                if k not in bound:
                    out.append("unbound variable %s" % show(v))
        if isinstance(x, Build):
            break
        bound |= set(vars_of(x.result))
        x = x.rest
    return out


def _check_sig(lang, t):
    out = []
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, Node):
            g = lang.signatures.get(x.sym)
            if g is None:
                out.append("undeclared node %s" % x.sym)
            else:
                if g.arity != len(x.children):
                    out.append("arity mismatch for %s: %d vs %d" % (x.sym, len(x.children), g.arity))
                if g.isval != x.isval:
                    out.append("valueness mismatch for %s" % x.sym)
        if isinstance(x, State):
            stack.extend(k for k, _ in x.bindings)
        stack.extend(x._args)
    return out


def _overlap(a, b):
    try:
        return unify(a, fresh_rename(b)) is not None
    except KeyNotGround:
        return True


# -- SOS interpretation -----------------------------------------------------

def sos_step(lang, c):
    matched = False
    for r in lang.rules:
        s = match(r.lhs, c)
        if s is None:
            continue
        matched = True
        out = _eval_rhs(lang, r.rhs, s)
        if out is not None:
            return out
    if matched:
        raise StuckStep(show(c))
    return None


def _eval_rhs(lang, rhs, s):
    while True:
        if isinstance(rhs, Build):
            return substitute(s, rhs.conf)
        if isinstance(rhs, LetStep):
            try:
                r = sos_step(lang, substitute(s, rhs.arg))
            except StuckStep:
                return None
            if r is None:
                return None
            s = match(rhs.result, r, s)
        else:
            args = [substitute(s, a) for a in rhs.args]
            s2 = None
            for r in lang.semfuns[rhs.fun](args):
                s2 = match(rhs.result, r, s)
                if s2 is not None:
                    break
            s = s2
        if s is None:
            return None
        rhs = rhs.rest


def sos_run(lang, c, fuel):
    """Trace from c. Stops at a value, a stuck configuration or when fuel runs
    out; a stuck step ends the trace with the StuckStep exception object."""
    trace = [c]
    for _ in range(fuel):
        try:
            n = sos_step(lang, trace[-1])
        except StuckStep as e:
            trace.append(e)
            break
        if n is None:
            break
        trace.append(n)
    return trace


# -- language text format ---------------------------------------------------

def normalize_call(result, args):
    """Term-only semantic function calls take and return configurations with
    a dummy empty state; a bare variable result is a value variable."""
    if not isinstance(result, Conf):
        if isinstance(result, Var) and result.mt == ALL:
            result = result.with_mt(VAL)
        result = Conf(result, EMPTY_STATE)
    args = tuple(a if isinstance(a, Conf) else Conf(a, EMPTY_STATE) for a in args)
    return result, args


class LangSyntaxError(TermSyntaxError):
    pass


def parse_language(text, semfuns=None):
    semfuns = dict(BUILTIN_SEMFUNS if semfuns is None else semfuns)
    lang = None
    chunks = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split(";;", 1)[0].rstrip()
        if not line.strip():
            continue
        if raw[:1].isspace() and chunks:
            chunks[-1][1] += " " + line.strip()
        else:
            chunks.append([lineno, line.strip()])
    used_funs = set()
    for lineno, line in chunks:
        head, _, rest = line.partition(" ")
        if head == "language":
            lang = Language(rest.strip())
            continue
        if lang is None:
            raise LangSyntaxError("expected 'language <name>' header", lineno)
        if head == "node":
            parts = rest.split()
            if len(parts) < 3 or parts[2] not in ("val", "nonval"):
                raise LangSyntaxError("node <sym> <arity> <val|nonval> [sort child-sorts...]", lineno)
            sym, arity = parts[0], int(parts[1])
            sort = parts[3] if len(parts) > 3 else None
            kids = tuple(parts[4:])
            if kids and len(kids) != arity:
                raise LangSyntaxError("child sorts do not match arity of %s" % sym, lineno)
            lang.signatures[sym] = Sig(arity, parts[2] == "val", sort, kids)
        elif head == "init":
            lang.initial_state = _parse_with(lang, rest, lineno).term()
        elif head == "rule":
            name, _, body = rest.partition(":")
            p = _parse_with(lang, body, lineno)
            lhs = p.term()
            tok = p.next()
            if tok[1] != "~>":
                p.i -= 1
                p.error("expected '~>'")
            rhs = _parse_rhs(p, used_funs)
            if not p.done():
                p.error("trailing input in rule")
            lang.rules.append(harmonize(SosRule(name.strip(), lhs, rhs)))
        else:
            raise LangSyntaxError("unknown directive %r" % head, lineno)
    if lang is None:
        raise LangSyntaxError("empty language file")
    for f in sorted(used_funs):
        if f not in semfuns:
            raise LangSyntaxError("unknown semantic function %s" % f)
        lang.semfuns[f] = semfuns[f]
    return lang


def harmonize(rule):
    """Give every occurrence of a variable the match type it is annotated
    with anywhere in the rule."""
    mts = {}
    pieces = [rule.lhs]
    x = rule.rhs
    while not isinstance(x, Build):
        pieces.append(x.result)
        pieces.extend([x.arg] if isinstance(x, LetStep) else list(x.args))
        x = x.rest
    pieces.append(x.conf)
    for p in pieces:
        for t in _all_vars(p):
            if t.mt != ALL:
                if mts.get(t.key, t.mt) != t.mt:
                    raise LangSyntaxError("%s: conflicting match types for ?%s" % (rule.name, t.name))
                mts[t.key] = t.mt
    ren = {k: Var(k[0], m, k[1]) for k, m in mts.items()}
    return rule.map_terms(lambda t: substitute(ren, t))


def _all_vars(t):
    from .terms import iter_subterms
    return [x for x in iter_subterms(t) if isinstance(x, Var)]


def _parse_with(lang, text, lineno):
    p = TermParser(text, lang.value_syms)
    for i, t in enumerate(p.toks):
        p.toks[i] = (t[0], t[1], lineno, t[3])
    return p


def _parse_rhs(p, used_funs):
    tok = p.next()
    if tok[1] == "build":
        return Build(p.term())
    if tok[1] != "let":
        p.i -= 1
        p.error("expected 'let' or 'build'")
    result = p.term()
    p.expect("=")
    kind = p.next()[1]
    if kind == "step":
        arg = p.term()
        p.expect("in")
        return LetStep(result, arg, _parse_rhs(p, used_funs))
    if kind == "call":
        fun = p.next()[1]
        used_funs.add(fun)
        p.expect("(")
        args = []
        while not p.at(")"):
            args.append(p.term())
            if p.at(","):
                p.i += 1
        p.expect(")")
        p.expect("in")
        result, args = normalize_call(result, args)
        return LetCall(result, fun, args, _parse_rhs(p, used_funs))
    p.i -= 1
    p.error("expected 'step' or 'call'")


def show_language(lang):
    lines = ["language %s" % lang.name]
    for sym, g in lang.signatures.items():
        extra = ""
        if g.sort:
            extra = " " + " ".join((g.sort,) + g.child_sorts)
        lines.append("node %s %d %s%s" % (sym, g.arity, "val" if g.isval else "nonval", extra))
    lines.append("init %s" % show(lang.initial_state))
    for r in lang.rules:
        lines.append(r.show())
    return "\n".join(lines) + "\n"
