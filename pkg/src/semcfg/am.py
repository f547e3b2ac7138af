"""From the phased machine to the abstract machine: invertibility and up-down
checks, phase erasure with value specialization, rule fusion, execution."""
from collections import deque
from dataclasses import dataclass, field

from .pam import (
    DOWN, RESET, UP, DeterminismViolation, Frame, PamState, Push, RuleSet,
    classify_rules, concrete_call, fire, pretty_conf, pretty_ctx, show_rule,
)
from .terms import (
    ALL, NONVAL, VAL, Conf, KeyNotGround, Term, Var, fresh_tag, rename,
    show, substitute, unify, vars_of,
)

INVERTIBLE, NOT_INVERTIBLE, UNKNOWN = "Invertible", "NotInvertible", "Unknown"


class PreconditionFailed(Exception):
    def __init__(self, msg, verdicts=None):
        super().__init__(msg)
        self.verdicts = verdicts or {}


class FusionDiverged(Exception):
    pass


class AmState(Term):
    __slots__ = ("conf", "ctx", "_hd", "_args")

    def __init__(self, conf, ctx):
        self.conf = conf
        self.ctx = ctx
        self._hd = "am"
        self._args = (conf, ctx)
        self._h = hash((self._hd, self._args))

    def _mk(self, args):
        return AmState(args[0], args[1])

    def show(self):
        return "<%s | %s>" % (show(self.conf), show(self.ctx))


@dataclass
class AmRule:
    name: str
    lhs: object
    chain: tuple
    rhs: object
    provenance: list = field(default_factory=list)
    up_origin: bool = False

    def map_terms(self, f):
        return AmRule(self.name, f(self.lhs),
                      tuple((f(r), fn, tuple(f(a) for a in args)) for r, fn, args in self.chain),
                      f(self.rhs), list(self.provenance), self.up_origin)

    def all_vars(self):
        out = dict(vars_of(self.lhs))
        for r, _, args in self.chain:
            out.update(vars_of(r))
            for a in args:
                out.update(vars_of(a))
        out.update(vars_of(self.rhs))
        return out

    def show(self):
        return "%s: %s" % (self.name, show_rule(self))


def rename_apart(rule):
    ren = {k: v.retag(fresh_tag()) for k, v in rule.all_vars().items()}
    return rename(rule, ren)


# -- checks -----------------------------------------------------------------

@dataclass
class Verdict:
    rule: str
    verdict: str
    reason: str = ""

    def __str__(self):
        return "%s: %s%s" % (self.rule, self.verdict, " (%s)" % self.reason if self.reason else "")


def check_up_rules_invertible(pam_rules, depth_bound=32):
    """For each up-up rule <c1|K1>^ -> <c2|K2>^, search the down rules for a
    path <c2|K2>v ->* <c1|K1>v with c1 a nonvalue, treating the rule's own
    variables as unknown constants."""
    down = [r for r in pam_rules if r.lhs.phase == DOWN and r.rhs.phase == DOWN]
    out = {}
    for r in pam_rules:
        if r.kind != "upUp":
            continue
        if r.chain:
            out[r.name] = Verdict(r.name, UNKNOWN, "rule invokes a semantic function")
            continue
        out[r.name] = _invert(r, down, depth_bound)
    return out


def _invert(r, down, bound):
    c1 = r.lhs.conf
    t = c1.term
    if isinstance(t, Var):
        if t.mt == VAL:
            return Verdict(r.name, INVERTIBLE, "applies to values only")
        spec = {t.key: t.with_mt(NONVAL)}
    elif getattr(t, "isval", False) or not isinstance(t, Term):
        return Verdict(r.name, INVERTIBLE, "applies to values only")
    else:
        spec = {}
    goal = substitute(spec, PamState(c1, r.lhs.ctx, DOWN))
    start = substitute(spec, PamState(r.rhs.conf, r.rhs.ctx, DOWN))
    seen = {start}
    frontier = deque([(start, 0)])
    semfun_blocked = False
    hit_bound = False
    while frontier:
        s, d = frontier.popleft()
        if s == goal:
            return Verdict(r.name, INVERTIBLE, "%d down steps" % d)
        if d >= bound:
            hit_bound = True
            continue
        for g in down:
            if g.chain:
                try:
                    if _rigid_match(g.lhs, s) is not None:
                        semfun_blocked = True
                except KeyNotGround:
                    semfun_blocked = True
                continue
            try:
                m = _rigid_match(g.lhs, s)
            except KeyNotGround:
                semfun_blocked = True
                continue
            if m is None:
                continue
            n = substitute(m, g.rhs)
            if n not in seen:
                seen.add(n)
                frontier.append((n, d + 1))
    if semfun_blocked:
        return Verdict(r.name, UNKNOWN, "inverse path needs a semantic function")
    if hit_bound:
        return Verdict(r.name, UNKNOWN, "depth bound %d reached" % bound)
    return Verdict(r.name, NOT_INVERTIBLE, "no down path back to the rule's left-hand side")


def _rigid_match(p, s):
    from .terms import match
    return match(p, s)


def check_no_up_down(pam_rules):
    """Names of offending up-down rules (everything except the reset rule)."""
    return [r.name for r in classify_rules(pam_rules)["upDown"] if r.name != RESET]


# -- PAM to unfused AM ------------------------------------------------------

def pam_to_unfused_am(pam_rules, assume_invertible=(), depth_bound=32):
    verdicts = check_up_rules_invertible(pam_rules, depth_bound)
    bad = {n: v for n, v in verdicts.items() if v.verdict != INVERTIBLE and n not in assume_invertible}
    if bad:
        raise PreconditionFailed("up-rules not shown invertible: " + ", ".join(sorted(bad)), bad)
    updown = check_no_up_down(pam_rules)
    if updown:
        raise PreconditionFailed("up-down rules present: " + ", ".join(updown))
    out = []
    for r in pam_rules:
        if r.name == RESET:
            continue
        if r.lhs.phase == UP:
            v = Var("v", VAL, fresh_tag())
            s = unify(r.lhs.conf.term, v)
            if s is None:
                continue
            r = r.map_terms(lambda t: substitute(s, t, True))
        if (not r.chain and r.lhs.phase == DOWN and r.rhs.phase == UP
                and r.lhs.conf == r.rhs.conf and r.lhs.ctx == r.rhs.ctx):
            continue
        out.append(AmRule(r.name, AmState(r.lhs.conf, r.lhs.ctx), r.chain,
                          AmState(r.rhs.conf, r.rhs.ctx), [r.name], r.lhs.phase == UP))
    return pam_rules.like(out)


# -- fusion -----------------------------------------------------------------

def fuse_pair(f, g):
    """The fused rule F+G, or None when F's right side cannot meet G's left."""
    g = rename_apart(g)
    try:
        s = unify(f.rhs, g.lhs)
    except KeyNotGround as e:
        raise FusionDiverged("cannot decide fusion of %s with %s: key %s" % (f.name, g.name, e))
    if s is None:
        return None
    sub = lambda t: substitute(s, t, True)  # noqa: E731
    chain = tuple((sub(r), fn, tuple(sub(a) for a in args)) for r, fn, args in f.chain + g.chain)
    return AmRule("%s+%s" % (f.name, g.name), sub(f.lhs), chain, sub(g.rhs),
                  f.provenance + g.provenance, False)


def successors(rule, rules):
    out = []
    for g in rules:
        fg = fuse_pair(rule, g)
        if fg is not None:
            out.append((g, fg))
    return out


def _call_frame_on_top(state):
    ctx = state.ctx
    return isinstance(ctx, Push) and isinstance(ctx.frame, Frame) and ctx.frame.tmpl.kind == "call"


def fuse(am_rules, max_passes=8, semfun_step=True, up_step=True):
    rules = list(am_rules)
    # (a) a rule whose right side sits on a freshly pushed call frame has
    # exactly one successor: the rule that pops it
    if semfun_step:
        for _ in range(max_passes):
            changed = False
            for f in list(rules):
                if f not in rules or not _call_frame_on_top(f.rhs):
                    continue
                succ = successors(f, rules)
                if len(succ) != 1:
                    continue
                g, fg = succ[0]
                rules[rules.index(f)] = fg
                changed = True
                _drop_orphan(g, rules)
            if not changed:
                break
        else:
            raise FusionDiverged("semantic-function fusion did not settle in %d passes" % max_passes)
    # (b) every up-origin rule is replaced by its fusions with all successors
    if up_step:
        originals = [r for r in rules if r.up_origin]
        if len(originals) > max_passes * max(1, len(rules)):
            raise FusionDiverged("too many up-rules")
        for f in originals:
            succ = successors(f, rules)
            if not succ:
                continue
            i = rules.index(f)
            rules[i:i + 1] = [fg for _, fg in succ]
            for g, _ in succ:
                _drop_orphan(g, rules)
    return am_rules.like(rules)


def _drop_orphan(g, rules):
    # Frames only come into existence by an explicit push, and nothing can be
    # pushed above a call frame before it is popped, so a pop rule for a call
    # frame is dead once no remaining rule pushes that frame.
    if g not in rules or not _call_frame_on_top(g.lhs):
        return
    tmpl = g.lhs.ctx.frame.tmpl
    for r in rules:
        ctx = r.rhs.ctx
        if (r is not g and isinstance(ctx, Push) and isinstance(ctx.frame, Frame)
                and ctx.frame.tmpl == tmpl and fuse_pair(r, g) is not None):
            return
    rules.remove(g)


def convert(lang, assume_invertible=(), fused=True, depth_bound=32):
    """Language -> (pam rules, am rules)."""
    from .pam import sos_to_pam
    pam = sos_to_pam(lang)
    am = pam_to_unfused_am(pam, assume_invertible, depth_bound)
    if fused:
        am = fuse(am)
    return pam, am


# -- execution --------------------------------------------------------------

def am_step(rules, s):
    call = concrete_call(rules.semfuns)
    out = []
    for r in rules:
        for x in fire(r, s, call):
            if x not in out:
                out.append(x)
    return out


def am_step_rules(rules, s):
    call = concrete_call(rules.semfuns)
    return [(r, x) for r in rules for x in fire(r, s, call)]


def am_run(rules, s, fuel):
    trace = [s]
    for _ in range(fuel):
        nxt = am_step(rules, trace[-1])
        if not nxt:
            break
        if len(nxt) > 1:
            raise DeterminismViolation("%d successors from %s" % (len(nxt), show(trace[-1])))
        trace.append(nxt[0])
    return trace


def pretty_am_state(s, hide_calls=True):
    return "⟨%s | %s⟩" % (pretty_conf(s.conf), pretty_ctx(s.ctx, hide_calls))


def dump_am(rules, hide_calls=False):
    return "\n".join("%-40s %s" % (r.name, show_rule(r, hide_calls)) for r in rules) + "\n"
