"""Term universe: nodes, constants, variables, stars, reduction states and
configurations, plus matching, unification, substitution, the abstraction
order and its join."""
import itertools
import re

VAL, NONVAL, ALL = "Val", "NonVal", "All"
MATCH_TYPES = (VAL, NONVAL, ALL)


def mt_leq(a, b):
    return a == b or b == ALL


def mt_meet(a, b):
    if mt_leq(a, b):
        return a
    if mt_leq(b, a):
        return b
    return None


def mt_join(a, b):
    if a == b:
        return a
    return ALL


class KeyNotGround(Exception):
    pass


class TermSyntaxError(ValueError):
    def __init__(self, msg, line=1, col=1):
        super().__init__("%d:%d: %s" % (line, col, msg))
        self.line = line
        self.col = col


class Term:
    """Base class. Subclasses define _hd (head), _args (children) and _mk."""
    __slots__ = ("_h",)
    _args = ()

    def _mk(self, args):
        return self

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Term) or self._h != other._h:
            return False
        return self._hd == other._hd and self._args == other._args

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return self._h

    def __repr__(self):
        return show(self)

    def __lt__(self, other):
        return show(self) < show(other)


class Node(Term):
    __slots__ = ("sym", "children", "origin", "_hd", "_args")
    isval = False

    def __init__(self, sym, children=(), origin=None):
        self.sym = sym
        self.children = tuple(children)
        self.origin = origin
        self._hd = (self.isval, sym)
        self._args = self.children
        self._h = hash((self._hd, self.children))

    def _mk(self, args):
        return type(self)(self.sym, args, self.origin)

    def with_origin(self, origin):
        return type(self)(self.sym, self.children, origin)


class ValNode(Node):
    __slots__ = ()
    isval = True


class NonValNode(Node):
    __slots__ = ()
    isval = False


class ConstInt(Term):
    __slots__ = ("n", "_hd")

    def __init__(self, n):
        self.n = int(n)
        self._hd = ("int", self.n)
        self._h = hash(self._hd)


class ConstStr(Term):
    __slots__ = ("s", "_hd")

    def __init__(self, s):
        self.s = s
        self._hd = ("str", s)
        self._h = hash(self._hd)


class Var(Term):
    # sort is metadata (expr / stmt / name) and does not take part in equality
    __slots__ = ("name", "mt", "tag", "sort", "_hd")

    def __init__(self, name, mt=ALL, tag=0, sort=None):
        assert mt in MATCH_TYPES, mt
        self.name = name
        self.mt = mt
        self.tag = tag
        self.sort = sort
        self._hd = ("var", name, tag, mt)
        self._h = hash(self._hd)

    @property
    def key(self):
        return (self.name, self.tag)

    def retag(self, tag, name=None):
        return Var(self.name if name is None else name, self.mt, tag, self.sort)

    def with_mt(self, mt):
        return Var(self.name, mt, self.tag, self.sort)


class Star(Term):
    __slots__ = ("mt", "_hd")

    def __init__(self, mt=ALL):
        assert mt in MATCH_TYPES, mt
        self.mt = mt
        self._hd = ("star", mt)
        self._h = hash(self._hd)


STAR_VAL = Star(VAL)
STAR_NONVAL = Star(NONVAL)
STAR_ALL = Star(ALL)


def key_order(k):
    return show(k)


class State(Term):
    """Reduction state: explicit bindings plus an optional tail (Var or Star).
    Bindings are kept sorted by printed key so equal states are equal tuples."""
    __slots__ = ("bindings", "tail", "_hd", "_args")

    def __init__(self, bindings=(), tail=None):
        if isinstance(bindings, dict):
            bindings = bindings.items()
        d = {}
        for k, v in bindings:
            d[k] = v  # right-biased
        self.bindings = tuple(sorted(d.items(), key=lambda kv: key_order(kv[0])))
        self.tail = tail
        self._hd = ("state", tuple(k for k, _ in self.bindings), tail is None)
        self._args = tuple(v for _, v in self.bindings) + ((tail,) if tail is not None else ())
        self._h = hash((self._hd, self._args))

    def _mk(self, args):
        n = len(self.bindings)
        tail = args[n] if self.tail is not None else None
        return State(tuple(zip((k for k, _ in self.bindings), args[:n])), tail)

    def get(self, key, default=None):
        for k, v in self.bindings:
            if k == key:
                return v
        return default

    def as_dict(self):
        return dict(self.bindings)

    def keys(self):
        return [k for k, _ in self.bindings]

    def extend(self, key, value):
        return State(self.bindings + ((key, value),), self.tail)

    @property
    def is_top(self):
        return isinstance(self.tail, Star)


TOP = State((), STAR_ALL)
EMPTY_STATE = State()


class Conf(Term):
    __slots__ = ("term", "state", "_hd", "_args")

    def __init__(self, term, state=EMPTY_STATE):
        self.term = term
        self.state = state
        self._hd = "conf"
        self._args = (term, state)
        self._h = hash((self._hd, self._args))

    def _mk(self, args):
        return Conf(args[0], args[1])


# -- classification ---------------------------------------------------------

def category(t):
    """VAL / NONVAL / ALL for term-like things, None for structural pieces."""
    if isinstance(t, Node):
        return VAL if t.isval else NONVAL
    if isinstance(t, (ConstInt, ConstStr)):
        return VAL
    if isinstance(t, (Star, Var)):
        return t.mt
    return None


def is_value(t):
    return category(t) == VAL and not isinstance(t, Var)


def is_value_like(t):
    return category(t) == VAL


def fits(t, mt):
    """May t stand where a variable of match type mt is expected?"""
    if mt == ALL:
        return True
    c = category(t)
    return c is not None and mt_leq(c, mt)


def iter_subterms(t):
    stack = [t]
    while stack:
        x = stack.pop()
        yield x
        if isinstance(x, State):
            stack.extend(k for k, _ in x.bindings)
        stack.extend(x._args)


def vars_of(t):
    out = {}
    for x in iter_subterms(t):
        if isinstance(x, Var):
            out.setdefault(x.key, x)
    return out


def has_var(t):
    return any(isinstance(x, Var) for x in iter_subterms(t))


def has_star(t):
    return any(isinstance(x, Star) for x in iter_subterms(t))


def is_ground(t):
    return not has_var(t)


def is_concrete(t):
    return not any(isinstance(x, (Var, Star)) for x in iter_subterms(t))


def term_size(t):
    return sum(1 for _ in iter_subterms(t))


# -- substitution -----------------------------------------------------------

def substitute(sigma, t, deep=False):
    """Replace variables bound in sigma (keyed by Var.key). With deep=True the
    replacement terms are substituted again (for triangular unifiers)."""
    if not sigma:
        return t
    return _subst(t, sigma, deep)


def _subst(t, s, deep):
    if isinstance(t, Var):
        r = s.get(t.key)
        if r is None:
            return t
        return _subst(r, s, deep) if deep else r
    if isinstance(t, State):
        return _subst_state(t, s, deep)
    if not t._args:
        return t
    new = tuple(_subst(a, s, deep) for a in t._args)
    if all(a is b for a, b in zip(new, t._args)):
        return t
    return t._mk(new)


def _subst_state(st, s, deep):
    bindings = []
    tail = st.tail
    if isinstance(tail, Var):
        r = s.get(tail.key)
        if r is not None:
            if deep:
                r = _subst(r, s, deep)
            if isinstance(r, State):
                bindings.extend(r.bindings)
                tail = r.tail
            elif isinstance(r, (Var, Star)):
                tail = r
            else:
                raise TypeError("state tail bound to non-state %s" % show(r))
    late = []
    for k, v in st.bindings:
        k2 = _subst(k, s, deep)
        v2 = _subst(v, s, deep)
        if k2 is k:
            bindings.append((k2, v2))
        else:
            late.append((k2, v2))
    # keys that only became concrete now win over existing ones
    return State(bindings + late, tail)


# -- matching ---------------------------------------------------------------

def match(pattern, subject, sigma=None):
    """One-way matching. Variables in the subject are treated as rigid
    constants (a pattern var of type m matches a subject var of type m' <= m)."""
    s = dict(sigma) if sigma else {}
    deferred = []
    if not _match(pattern, subject, s, deferred):
        return None
    while deferred:
        p, t = deferred.pop(0)
        if not _match_state(p, t, s, deferred):
            return None
    return s


def _match(p, t, s, deferred):
    if isinstance(p, Var):
        b = s.get(p.key)
        if b is not None:
            return b == t
        if not fits(t, p.mt):
            return False
        s[p.key] = t
        return True
    if isinstance(p, State):
        if not isinstance(t, State):
            return False
        deferred.append((p, t))
        return True
    if not isinstance(t, Term) or p._hd != t._hd:
        return False
    pa, ta = p._args, t._args
    if len(pa) != len(ta):
        return False
    for x, y in zip(pa, ta):
        if not _match(x, y, s, deferred):
            return False
    return True


def match_state(pattern, subject, partial=None):
    s = dict(partial) if partial else {}
    deferred = []
    if not _match_state(pattern, subject, s, deferred):
        return None
    while deferred:
        p, t = deferred.pop(0)
        if not _match_state(p, t, s, deferred):
            return None
    return s


def _match_state(p, t, s, deferred):
    if not isinstance(t, State):
        return False
    rest = dict(t.bindings)
    for k, v in p.bindings:
        k2 = _subst(k, s, False)
        if has_var(k2):
            raise KeyNotGround(show(k2))
        if k2 not in rest:
            return False
        if not _match(v, rest.pop(k2), s, deferred):
            return False
    if p.tail is None:
        return not rest and t.tail is None
    if isinstance(p.tail, Var):
        val = State(rest.items(), t.tail)
        return _match(p.tail, val, s, deferred)
    return p.tail == t.tail and not rest


# -- unification ------------------------------------------------------------

_fresh = itertools.count(1)


def fresh_tag():
    return next(_fresh)


def unify(a, b, sigma=None):
    """Most general unifier of two terms that may both carry variables and
    stars. A star unified with a fragment yields the meet; variables under
    a star are bound to stars of their match type. Returns a fully resolved
    substitution or None."""
    u = _Unifier(sigma)
    try:
        r = u.unify(a, b)
    except _Fail:
        return None
    if r is None:
        return None
    return u.resolved()


def unify_term(a, b, sigma=None):
    """Like unify, but also returns the unified (meet) term."""
    u = _Unifier(sigma)
    try:
        r = u.unify(a, b)
    except _Fail:
        return None
    return u.resolved(), _subst(r, u.s, True)


def abstract_match(pattern, subject, sigma=None):
    """Match a var-bearing pattern against a star-bearing subject, returning
    the witness (join of the witnesses of all concretizations)."""
    if sigma is None and not has_star(subject):
        return match(pattern, subject)
    s = unify(pattern, subject, sigma)
    if s is None:
        return None
    return s


class _Fail(Exception):
    pass


class _Unifier:
    def __init__(self, sigma=None):
        self.s = dict(sigma) if sigma else {}
        self.deferred = []

    def resolved(self):
        # "_st" vars are internal placeholders for deferred state pairs
        return {k: _subst(v, self.s, True) for k, v in self.s.items() if k[0] != "_st"}

    def unify(self, a, b):
        r = self._u(a, b)
        while self.deferred:
            ph, x, y = self.deferred.pop(0)
            st = self._ustate(_subst(x, self.s, True), _subst(y, self.s, True))
            self._bindvar(ph, st)
        return r

    def _walk(self, t):
        while isinstance(t, Var):
            r = self.s.get(t.key)
            if r is None:
                return t
            if isinstance(r, Var):
                t = r
                continue
            return t
        return t

    def _bindvar(self, v, t):
        self.s[v.key] = t

    def _u(self, a, b):
        a = self._walk(a)
        b = self._walk(b)
        if a is b or a == b:
            return a
        if isinstance(a, Var):
            return self._var(a, b)
        if isinstance(b, Var):
            return self._var(b, a)
        if isinstance(a, Star):
            return self._star(a, b)
        if isinstance(b, Star):
            return self._star(b, a)
        if isinstance(a, State) or isinstance(b, State):
            if not (isinstance(a, State) and isinstance(b, State)):
                raise _Fail()
            ph = Var("_st", ALL, fresh_tag())
            self.deferred.append((ph, a, b))
            return ph
        if a._hd != b._hd or len(a._args) != len(b._args):
            raise _Fail()
        args = tuple(self._u(x, y) for x, y in zip(a._args, b._args))
        return a._mk(args)

    def _var(self, v, t):
        bound = self.s.get(v.key)
        if bound is not None:
            r = self._u(bound, t)
            self.s[v.key] = r if not self._occurs(v, r) else bound
            return r
        if isinstance(t, Var):
            m = mt_meet(v.mt, t.mt)
            if m is None:
                raise _Fail()
            if m == t.mt:
                self._bindvar(v, t)
                return t
            if m == v.mt:
                self._bindvar(t, v)
                return v
        if not fits(t, v.mt):
            if isinstance(t, Star) and mt_meet(t.mt, v.mt) is not None:
                t = Star(mt_meet(t.mt, v.mt))
            else:
                raise _Fail()
        if self._occurs(v, t):
            raise _Fail()
        self._bindvar(v, t)
        return t

    def _occurs(self, v, t):
        for x in iter_subterms(_subst(t, self.s, True)):
            if isinstance(x, Var) and x.key == v.key:
                return True
        return False

    def _star(self, st, t):
        if isinstance(t, Star):
            m = mt_meet(st.mt, t.mt)
            if m is None:
                raise _Fail()
            return Star(m)
        c = category(t)
        if st.mt != ALL and (c is None or not mt_leq(c, st.mt)):
            raise _Fail()
        if isinstance(t, State):
            vals = [(k, self._u(STAR_ALL, v)) for k, v in t.bindings]
            tail = t.tail
            if tail is not None:
                tail = self._u(STAR_ALL, tail)
            return State(vals, STAR_ALL if tail is None else tail)
        if not t._args:
            return t
        return t._mk(tuple(self._u(STAR_ALL, x) for x in t._args))

    def _ustate(self, a, b):
        ka = dict(a.bindings)
        kb = dict(b.bindings)
        for d, other in ((ka, kb), (kb, ka)):
            for k in d:
                if has_var(k) and k not in other and other:
                    raise KeyNotGround(show(k))
        out = {}
        only_a, only_b = {}, {}
        for k, v in ka.items():
            if k in kb:
                out[k] = self._u(v, kb[k])
            else:
                only_a[k] = v
        for k, v in kb.items():
            if k not in ka:
                only_b[k] = v
        ta, tb = a.tail, b.tail
        # entries present on one side only must be absorbed by the other tail
        for only, tail in ((only_a, tb), (only_b, ta)):
            if only and tail is None:
                raise _Fail()
            if isinstance(tail, Star):
                for k, v in only.items():
                    out[k] = self._u(v, STAR_ALL)
            else:
                out.update(only)
        if ta is None and tb is None:
            return State(out.items())
        if ta is None or tb is None:
            t = tb if ta is None else ta
            only = only_a if ta is None else only_b
            if isinstance(t, Var):
                self._u(t, State(only.items()))
                return State(out.items())
            return State(out.items())  # star tail meets closed state
        if isinstance(ta, Star) and isinstance(tb, Star):
            return State(out.items(), self._u(ta, tb))
        if isinstance(ta, Var) and isinstance(tb, Var):
            if ta.key == tb.key:
                if only_a or only_b:
                    raise _Fail()
                return State(out.items(), ta)
            r = Var("_r", ALL, fresh_tag())
            self._u(ta, State(only_b.items(), r))
            self._u(tb, State(only_a.items(), r))
            return State(out.items(), r)
        v, st = (ta, tb) if isinstance(ta, Var) else (tb, ta)
        only = only_b if v is ta else only_a
        self._u(v, State(only.items(), st))
        return State(out.items(), st)


# -- abstraction order and join ---------------------------------------------

def prec_leq(t1, t2):
    """t1 is below t2: stars absorb per match type, a variable absorbs any
    compatible instance (consistently)."""
    return _leq(t1, t2, {})


def _leq(a, b, s):
    if isinstance(b, Var):
        bound = s.get(b.key)
        if bound is not None:
            return bound == a
        if not fits(a, b.mt):
            return False
        s[b.key] = a
        return True
    if isinstance(b, Star):
        if b.mt == ALL:
            return True
        c = category(a)
        return c is not None and mt_leq(c, b.mt)
    if a == b and not has_var(b):
        return True
    if isinstance(b, State):
        return isinstance(a, State) and _leq_state(a, b, s)
    if not isinstance(a, Term) or isinstance(a, (Var, Star)):
        return False
    if a._hd != b._hd or len(a._args) != len(b._args):
        return False
    return all(_leq(x, y, s) for x, y in zip(a._args, b._args))


def _leq_state(a, b, s):
    ka = dict(a.bindings)
    extra = {}
    for k, v in b.bindings:
        if k in ka:
            if not _leq(ka.pop(k), v, s):
                return False
        else:
            return False
    extra = ka
    if b.tail is None:
        return not extra and a.tail is None
    if isinstance(b.tail, Star):
        return True
    return _leq(State(extra.items(), a.tail), b.tail, s)


def leq_witness(t1, t2):
    """Like prec_leq but returns the binding of t2's variables (or None)."""
    s = {}
    return s if _leq(t1, t2, s) else None


def join(t1, t2):
    if t1 == t2:
        return t1
    if isinstance(t1, Star) or isinstance(t2, Star):
        c1, c2 = category(t1), category(t2)
        if c1 is None or c2 is None:
            return STAR_ALL
        return Star(mt_join(c1, c2))
    if isinstance(t1, State) and isinstance(t2, State):
        d1, d2 = dict(t1.bindings), dict(t2.bindings)
        common = [(k, join(d1[k], d2[k])) for k in d1 if k in d2]
        open_ = len(common) != len(d1) or len(common) != len(d2) or t1.tail is not None or t2.tail is not None
        return State(common, STAR_ALL if open_ else None)
    if (isinstance(t1, Term) and isinstance(t2, Term) and t1._hd == t2._hd
            and len(t1._args) == len(t2._args) and t1._args):
        return t1._mk(tuple(join(x, y) for x, y in zip(t1._args, t2._args)))
    c1, c2 = category(t1), category(t2)
    if c1 is None or c2 is None:
        return STAR_ALL
    return Star(mt_join(c1, c2))


def meet(t1, t2):
    r = unify_term(t1, t2)
    return None if r is None else r[1]


# -- renaming ---------------------------------------------------------------

def fresh_rename(item, counter=None):
    """Rename every variable (consistently) to a globally fresh tag."""
    nxt = (lambda: next(counter)) if counter is not None else fresh_tag
    ren = {}
    for k, v in sorted(vars_of(item).items(), key=lambda kv: (kv[0][0], kv[0][1])):
        ren[k] = v.retag(nxt())
    return rename(item, ren)


def rename(item, ren):
    """Apply a var-key -> Var renaming to a term or to anything exposing
    map_terms (rules, frames)."""
    if hasattr(item, "map_terms"):
        return item.map_terms(lambda t: rename(t, ren))
    return substitute(ren, item)


def canonical(t, fixed=frozenset()):
    """Rename variables to positional names in traversal order, so that two
    terms equal up to renaming become structurally equal. Keys in fixed keep
    their names."""
    # state bindings are ordered by printed key, so renaming keys can reorder
    # the traversal; iterate to a fixed point
    for _ in range(4):
        r = _canonical_once(t, fixed)
        if r == t:
            break
        t = r
    return t


def _canonical_once(t, fixed=frozenset()):
    order = []
    seen = set(fixed)

    def walk(x):
        if isinstance(x, Var):
            if x.key not in seen:
                seen.add(x.key)
                order.append(x)
            return
        if isinstance(x, State):
            for k, v in x.bindings:
                walk(k)
                walk(v)
            if x.tail is not None:
                walk(x.tail)
            return
        for a in x._args:
            walk(a)

    walk(t)
    if not order:
        return t
    tmp = {v.key: Var("_t%d" % i, v.mt, 0, v.sort) for i, v in enumerate(order)}
    fin = {("_t%d" % i, 0): Var("_%d" % i, v.mt, 0, v.sort) for i, v in enumerate(order)}
    return substitute(fin, substitute(tmp, t))


def alpha_equiv(a, b):
    return canonical(a) == canonical(b)


# -- printing ---------------------------------------------------------------

def show(t):
    if isinstance(t, Node):
        if not t.children:
            return t.sym
        return "(%s %s)" % (t.sym, " ".join(show(c) for c in t.children))
    if isinstance(t, ConstInt):
        return str(t.n)
    if isinstance(t, ConstStr):
        return '"%s"' % t.s.replace("\\", "\\\\").replace('"', '\\"')
    if isinstance(t, Var):
        s = "?" + t.name
        if t.tag:
            s += "#%d" % t.tag
        if t.mt != ALL:
            s += ":" + t.mt
        return s
    if isinstance(t, Star):
        return "*" + t.mt
    if isinstance(t, State):
        items = ", ".join("%s -> %s" % (show(k), show(v)) for k, v in t.bindings)
        if t.tail is not None:
            items = (items + " | " if items else "| ") + show(t.tail)
        return "[%s]" % items
    if isinstance(t, Conf):
        return "(%s, %s)" % (show(t.term), show(t.state))
    if hasattr(t, "show"):
        return t.show()
    return repr(t)


# -- parsing ----------------------------------------------------------------

DEFAULT_VALUE_SYMS = frozenset({"true", "false", "skip", "nil", "cons"})

_TOKEN = re.compile(r"""
    (?P<ws>\s+|;;[^\n]*)
  | (?P<str>"(?:[^"\\]|\\.)*")
  | (?P<punct>->|[()\[\],|])
  | (?P<var>\?[A-Za-z_][A-Za-z0-9_']*(?:\#\d+)?(?::(?:Val|NonVal|All))?)
  | (?P<star>\*(?:Val|NonVal|All)?(?![^\s()\[\],|]))
  | (?P<int>-?\d+(?![^\s()\[\],|]))
  | (?P<atom>[^\s()\[\],|"]+)
""", re.VERBOSE)


def tokenize(text):
    pos, line, col = 0, 1, 1
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise TermSyntaxError("unexpected character %r" % text[pos], line, col)
        kind = m.lastgroup
        val = m.group(kind)
        if kind != "ws":
            out.append((kind, val, line, col))
        nl = val.count("\n")
        if nl:
            line += nl
            col = len(val) - val.rfind("\n")
        else:
            col += len(val)
        pos = m.end()
    return out


class TermParser:
    def __init__(self, text, value_syms=None, origins=False):
        self.toks = tokenize(text)
        self.i = 0
        self.value_syms = DEFAULT_VALUE_SYMS if value_syms is None else value_syms
        self.origins = origins

    def peek(self, off=0):
        j = self.i + off
        return self.toks[j] if j < len(self.toks) else None

    def error(self, msg):
        t = self.peek()
        if t is None:
            last = self.toks[-1] if self.toks else (None, "", 1, 1)
            raise TermSyntaxError(msg + " at end of input", last[2], last[3] + len(last[1]))
        raise TermSyntaxError(msg + " near %r" % t[1], t[2], t[3])

    def next(self):
        t = self.peek()
        if t is None:
            self.error("unexpected end")
        self.i += 1
        return t

    def expect(self, val):
        t = self.peek()
        if t is None or t[1] != val:
            self.error("expected %r" % val)
        self.i += 1
        return t

    def at(self, val):
        t = self.peek()
        return t is not None and t[1] == val and t[0] == "punct"

    def done(self):
        return self.i >= len(self.toks)

    def node(self, sym, children):
        cls = ValNode if sym in self.value_syms else NonValNode
        return cls(sym, children)

    def term(self):
        t = self.peek()
        if t is None:
            self.error("expected a term")
        kind, val = t[0], t[1]
        if kind == "str":
            self.i += 1
            return ConstStr(_unescape(val[1:-1]))
        if kind == "int":
            self.i += 1
            return ConstInt(int(val))
        if kind == "var":
            self.i += 1
            return _parse_var(val)
        if kind == "star":
            self.i += 1
            return Star(val[1:] or ALL)
        if kind == "atom":
            self.i += 1
            return self.node(val, ())
        if val == "[":
            return self.state()
        if val == "(":
            nxt = self.peek(1)
            if nxt is not None and nxt[0] == "atom":
                after = self.peek(2)
                if not (after is not None and after[1] == ","):
                    self.i += 2
                    kids = []
                    while not self.at(")"):
                        kids.append(self.term())
                    self.expect(")")
                    return self.node(nxt[1], kids)
            self.i += 1
            tm = self.term()
            self.expect(",")
            st = self.term()
            self.expect(")")
            return Conf(tm, st)
        self.error("expected a term")

    def state(self):
        self.expect("[")
        items = []
        tail = None
        while not self.at("]"):
            if self.at("|"):
                self.i += 1
                tail = self.term()
                break
            k = self.term()
            self.expect("->")
            v = self.term()
            items.append((k, v))
            if self.at(","):
                self.i += 1
        self.expect("]")
        return State(items, tail)


def _unescape(s):
    return re.sub(r"\\(.)", lambda m: {"n": "\n", "t": "\t"}.get(m.group(1), m.group(1)), s)


def _parse_var(tok):
    m = re.match(r"\?([A-Za-z_][A-Za-z0-9_']*)(?:#(\d+))?(?::(Val|NonVal|All))?$", tok)
    return Var(m.group(1), m.group(3) or ALL, int(m.group(2) or 0))


def parse_term(text, value_syms=None):
    p = TermParser(text, value_syms)
    t = p.term()
    if not p.done():
        p.error("trailing input")
    return t
