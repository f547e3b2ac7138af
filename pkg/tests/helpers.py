"""Shared fixtures-as-functions and a random IMP program generator."""
import os
import random
from functools import lru_cache

from semcfg.abstraction import by_name
from semcfg.am import AmState, convert, pam_to_unfused_am
from semcfg.codegen import gen_all_recipes
from semcfg.languages import bundled_programs, load_language, load_program
from semcfg.pam import Emp, sos_to_pam
from semcfg.patterns import gen_all_patterns
from semcfg.terms import Conf

VARS = ("x", "y", "z")
SEED_DEFAULT = int(os.environ.get("MANDATE_SEED", "0"))


@lru_cache(maxsize=None)
def machines(lang_name):
    lang = load_language(lang_name)
    pam, am = convert(lang)
    return lang, pam, am


@lru_cache(maxsize=None)
def unfused(lang_name):
    return pam_to_unfused_am(sos_to_pam(load_language(lang_name)))


@lru_cache(maxsize=None)
def compiled(lang_name, abs_name):
    lang, _, am = machines(lang_name)
    abs_ = by_name(abs_name, lang)
    ps = gen_all_patterns(lang, am, abs_)
    recipes, projs, failed = gen_all_recipes(ps)
    return abs_, ps, recipes, projs, failed


def bundled(lang_name=None):
    """[(name, lang, term, state)] for the bundled programs."""
    out = []
    for name, (ln, text) in sorted(bundled_programs().items()):
        if lang_name and ln != lang_name:
            continue
        lang = load_language(ln)
        t, st = load_program(text, lang)
        out.append((name, ln, t, st))
    return out


# -- random programs ----------------------------------------------------------

def _int_expr(rng, d):
    r = rng.random()
    if d <= 0 or r < 0.35:
        return str(rng.randint(0, 3))
    if r < 0.7:
        return rng.choice(VARS)
    return "(%s + %s)" % (_int_expr(rng, d - 1), _int_expr(rng, d - 1))


def _cond(rng, d):
    r = rng.random()
    if r < 0.15:
        return rng.choice(("true", "false"))
    return "(%s < %s)" % (_int_expr(rng, d - 1), _int_expr(rng, d - 1))


def _stmt(rng, d, loops):
    r = rng.random()
    if d <= 0 or r < 0.4:
        if rng.random() < 0.1:
            return "skip"
        return "%s := %s" % (rng.choice(VARS), _int_expr(rng, 2))
    if r < 0.65:
        return "%s; %s" % (_stmt(rng, d - 1, loops), _stmt(rng, d - 1, loops))
    if r < 0.85 or not loops:
        return "if %s then { %s } else { %s }" % (_cond(rng, 2), _stmt(rng, d - 1, loops),
                                                 _stmt(rng, d - 1, loops))
    # counter-bounded loop: the body never writes the counter
    c = "i%d" % loops[0]
    loops[0] += 1
    return "%s := 0; while %s < %d do { %s; %s := %s + 1 }" % (
        c, c, rng.randint(1, 2), _stmt(rng, d - 1, loops), c, c)


def random_program_text(rng, depth=3, loops=True):
    init = ", ".join('"%s" -> %d' % (v, rng.randint(0, 3)) for v in VARS)
    return "@state [%s]\n%s" % (init, _stmt(rng, depth, [0] if loops else None))


def random_program(rng, depth=3, loops=True, lang_name="imp"):
    lang = load_language(lang_name)
    return load_program(random_program_text(rng, depth, loops), lang)


def am_start(term, state):
    return AmState(Conf(term, state), Emp)


def sample_programs(seed, n, **kw):
    rng = random.Random(seed)
    return [random_program(rng, **kw) for _ in range(n)]


def pam_conf_sequence(rules, c, steps, fuel_per_step=2000, base=Emp):
    """Configurations the PAM passes through at context base on the way up:
    the SOS-visible steps. A value turning around is not a step. Under a
    non-empty base the walk ends once c is a value, as control then leaves."""
    from semcfg.pam import DOWN, UP, PamState, pam_step
    from semcfg.terms import is_value_like
    s = PamState(c, base, DOWN)
    seq = [c]
    fuel = fuel_per_step * (steps + 1)
    while len(seq) <= steps and fuel > 0:
        if base != Emp and is_value_like(seq[-1].term):
            break
        fuel -= 1
        nxt = pam_step(rules, s)
        if not nxt:
            break
        assert len(nxt) == 1, "PAM must be deterministic here"
        prev, s = s, nxt[0]
        if s.ctx == base and s.phase == UP and not (prev.phase == DOWN and prev.conf == s.conf):
            seq.append(s.conf)
    return seq


def reachable_pam_down_states(rng, n, lang_name="imp", max_run=80):
    """n down-phase PAM states with a non-empty context, met on random runs."""
    from semcfg.pam import DOWN, PamState, pam_step
    _, pam, _ = machines(lang_name)
    out = []
    while len(out) < n:
        t, st = random_program(rng, lang_name=lang_name)
        s = PamState(Conf(t, st), Emp, DOWN)
        seen = []
        for _ in range(max_run):
            nxt = pam_step(pam, s)
            if not nxt:
                break
            s = nxt[0]
            if s.phase == DOWN and s.ctx != Emp:
                seen.append(s)
        if seen:
            out.append(rng.choice(seen))
    return out


def sos_conf_sequence(lang, c, steps):
    from semcfg.semantics import sos_run
    return [x for x in sos_run(lang, c, steps) if isinstance(x, Conf)]


def reachable_am_states(rng, n, lang_name="imp", max_run=60):
    """n states met while running random programs on the unfused and fused
    machines."""
    from semcfg.am import am_step
    _, _, am = machines(lang_name)
    un = unfused(lang_name)
    out = []
    while len(out) < n:
        t, st = random_program(rng, lang_name=lang_name)
        for rules in (un, am):
            s = am_start(t, st)
            for _ in range(rng.randint(1, max_run)):
                nxt = am_step(rules, s)
                if not nxt:
                    break
                s = nxt[0]
            out.append(s)
    return out[:n]


def check_fusion_at(lang_name, s):
    """Property: firing a fused rule equals firing its unfused parts in
    sequence. Returns the number of fused rules that applied."""
    from semcfg.pam import concrete_call, fire
    _, _, am = machines(lang_name)
    un = unfused(lang_name)
    call = concrete_call(am.semfuns)
    fired = 0
    for r in am:
        fused = set(fire(r, s, call))
        chain = {s}
        for name in r.provenance:
            g = un.by_name(name)
            chain = {y for x in chain for y in fire(g, x, call)}
        assert fused == chain, (r.name, s)
        fired += bool(fused)
    return fired


def _vf_expr(rng, d):
    if d == 0 or rng.random() < 0.4:
        return rng.choice(VARS)
    return "(%s + %s)" % (_vf_expr(rng, d - 1), _vf_expr(rng, d - 1))


def value_free_program_text(rng, depth=3):
    """A program without value leaves under any node: only variable reads.
    Never run concretely; it only feeds abstract exploration."""
    return '@state ["x" -> 0, "y" -> 0, "z" -> 0]\n' + _vf_stmt(rng, depth)


def _vf_stmt(rng, depth):
    k = rng.random()
    if depth == 0 or k < 0.35:
        return "%s := %s" % (rng.choice(VARS), _vf_expr(rng, 2))
    sub = lambda: _vf_stmt(rng, depth - 1)  # noqa: E731
    if k < 0.6:
        return "%s; %s" % (sub(), sub())
    cond = "%s < %s" % (_vf_expr(rng, 1), _vf_expr(rng, 1))
    if k < 0.8:
        return "if %s then { %s } else { %s }" % (cond, sub(), sub())
    return "while %s do { %s }" % (cond, sub())
