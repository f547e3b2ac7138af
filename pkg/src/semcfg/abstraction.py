"""Machine abstractions: a state map alpha (an upper closure on machine states)
paired with an over-approximation of each semantic function, and abstract
rewriting under such a pair."""
from dataclasses import dataclass, field

from .am import AmState
from .pam import Frame, fire
from .terms import (
    EMPTY_STATE, STAR_VAL, TOP, Conf, ConstInt, ConstStr, NonValNode, Star,
    State, Term, ValNode, Var, abstract_match, is_concrete, unify,
)

BOOLS = ("true", "false")


class MissingSortTable(Exception):
    pass


class UnknownAbstraction(ValueError):
    pass


@dataclass(eq=False)
class Abstraction:
    name: str
    kind: str  # identity | value | expr | bool
    lang: object = None
    skip_calls: bool = False
    tracked: frozenset = frozenset()
    call_syms: frozenset = frozenset({"call"})
    context_discarding: bool = False
    _names: dict = field(default_factory=dict, repr=False)

    # -- alpha --------------------------------------------------------------

    def alpha(self, s):
        if self.kind == "identity":
            return s
        if isinstance(s, AmState):
            return AmState(self.alpha_conf(s.conf), self.erase(s.ctx))
        if isinstance(s, Conf):
            return self.alpha_conf(s)
        return self.erase(s)

    def alpha_conf(self, c):
        if self.kind == "identity":
            return c
        if self.kind == "bool":
            term = self.erase(c.term, keep_bool=True)
            state = self._erase_state(c.state, tracked=self.tracked)
        else:
            term = self.erase(c.term)
            state = self.erase(c.state)
        if self.skip_calls and isinstance(c.term, NonValNode) and c.term.sym in self.call_syms:
            return Conf(STAR_VAL, TOP)
        if self.kind == "expr" and self._is_expr(term):
            return Conf(STAR_VAL, TOP)
        return Conf(term, state)

    def alpha_term(self, t):
        """The term part of alpha, for subterms outside the focus."""
        return t if self.kind == "identity" else self.erase(t)

    def erase(self, t, keep_bool=False):
        if isinstance(t, (ConstInt, ConstStr)):
            return STAR_VAL
        if isinstance(t, ValNode):
            if keep_bool and t.sym in BOOLS:
                return t
            return STAR_VAL
        if isinstance(t, NonValNode):
            names = self._name_positions(t.sym)
            kids = []
            for i, c in enumerate(t.children):
                if isinstance(c, ConstStr) and (names is None or i in names):
                    kids.append(c)
                else:
                    kids.append(self.erase(c, keep_bool))
            kids = tuple(kids)
            if all(a is b for a, b in zip(kids, t.children)):
                return t
            return t._mk(kids)
        if isinstance(t, State):
            return self._erase_state(t)
        if isinstance(t, Frame):
            names = self._frame_names(t.tmpl)
            vals = tuple(v if isinstance(v, ConstStr) and (names is None or i in names)
                         else self.erase(v, keep_bool) for i, v in enumerate(t.values))
            if all(a is b for a, b in zip(vals, t.values)):
                return t
            return Frame(t.tmpl, vals)
        if isinstance(t, (Var, Star)) or not isinstance(t, Term) or not t._args:
            return t
        args = tuple(self.erase(a, keep_bool) for a in t._args)
        if all(a is b for a, b in zip(args, t._args)):
            return t
        return t._mk(args)

    def _erase_state(self, st, tracked=()):
        out = []
        for k, v in st.bindings:
            if isinstance(k, ConstStr) and k.s in tracked and isinstance(v, ValNode) and v.sym in BOOLS:
                out.append((k, v))
            else:
                out.append((k, self.erase(v)))
        if isinstance(st.tail, Star):
            # under an open tail a starred binding says nothing the tail doesn't
            out = [(k, v) for k, v in out if v != STAR_VAL]
        return State(out, st.tail)

    def _name_positions(self, sym):
        # None means "no sort table": keep every string constant as a name
        if self.lang is None or not self.lang.has_sorts:
            return None
        if sym not in self._names:
            self._names[sym] = frozenset(self.lang.name_positions(sym))
        return self._names[sym]

    def _frame_names(self, tmpl):
        if self.lang is None or not self.lang.has_sorts:
            return None
        key = ("frame",) + tmpl.ident
        if key not in self._names:
            try:
                lhs = self.lang.rule(tmpl.rule).lhs
            except KeyError:
                lhs = None
            keys = name_vars(self.lang, lhs) if lhs is not None else set()
            self._names[key] = frozenset(i for i, v in enumerate(tmpl.captured) if v.key in keys)
        return self._names[key]

    def _is_expr(self, t):
        if isinstance(t, NonValNode):
            return self.lang.sort_of(t) == "expr"
        if isinstance(t, Var):
            return t.sort == "expr" and t.mt != "Val"
        return False

    # -- beta ---------------------------------------------------------------

    def beta(self, semfun, args):
        if self.kind == "identity":
            return semfun.over(args)
        if self.kind == "bool" and semfun.boolean:
            if all(is_concrete(a) for a in args):
                return semfun(args)
            return [Conf(ValNode("true"), EMPTY_STATE), Conf(ValNode("false"), EMPTY_STATE)]
        return [Conf(STAR_VAL, EMPTY_STATE)]

    def call(self, semfuns):
        def call(fun, args):
            return self.beta(semfuns[fun], args)
        return call


def name_vars(lang, t):
    """Keys of variables standing in name positions of t."""
    out = set()
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, NonValNode):
            names = lang.name_positions(x.sym)
            for i, c in enumerate(x.children):
                if i in names and isinstance(c, Var):
                    out.add(c.key)
        if isinstance(x, Term):
            stack.extend(x._args)
    return out


def identity():
    return Abstraction("identity", "identity")


def value_irrelevance(lang=None, skip_calls=False):
    return Abstraction("value-irrel-skipcalls" if skip_calls else "value-irrel", "value",
                       lang, skip_calls=skip_calls, context_discarding=True)


def expression_irrelevance(lang):
    if lang is None or not lang.has_sorts:
        raise MissingSortTable("language %s has no expression/statement sorts"
                               % (lang.name if lang else "?"))
    return Abstraction("expr-irrel", "expr", lang, context_discarding=True)


def boolean_tracking(lang=None, tracked=()):
    return Abstraction("bool-track:" + ",".join(sorted(tracked)), "bool", lang,
                       tracked=frozenset(tracked))


def by_name(name, lang=None):
    """Parse a CLI abstraction name."""
    if name == "identity":
        return identity()
    if name == "value-irrel":
        return value_irrelevance(lang)
    if name == "value-irrel-skipcalls":
        return value_irrelevance(lang, skip_calls=True)
    if name == "expr-irrel":
        return expression_irrelevance(lang)
    if name == "bool-track" or name.startswith("bool-track:"):
        vs = name.partition(":")[2]
        return boolean_tracking(lang, [v for v in vs.split(",") if v])
    raise UnknownAbstraction("unknown abstraction %r" % name)


# -- abstract rewriting -----------------------------------------------------

def abs_step(rules, abs_, s, matcher=abstract_match, wrap=None):
    """Successors of s under abstract rewriting followed by alpha; wrap, when
    given, is applied before duplicates are dropped."""
    call = abs_.call(rules.semfuns)
    out = []
    for r in rules:
        for x in fire(r, s, call, matcher):
            x = abs_.alpha(x)
            if wrap is not None:
                x = wrap(x)
            if x not in out:
                out.append(x)
    return out


def abs_step_rules(rules, abs_, s, matcher=abstract_match):
    call = abs_.call(rules.semfuns)
    return [(r, abs_.alpha(x)) for r in rules for x in fire(r, s, call, matcher)]


def narrow_matcher(p, s):
    return unify(p, s)
