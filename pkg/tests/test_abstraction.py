import random

import pytest

from semcfg.abstraction import (
    MissingSortTable, UnknownAbstraction, abs_step, boolean_tracking, by_name,
    expression_irrelevance, identity, value_irrelevance,
)
from semcfg.am import am_step
from semcfg.languages import load_language
from semcfg.pam import concrete_call, fire
from semcfg.semantics import parse_language
from semcfg.terms import (
    STAR_VAL, TOP, Conf, ConstInt, ConstStr, NonValNode, State, ValNode, abstract_match,
    is_concrete, prec_leq,
)

from helpers import SEED_DEFAULT, machines, reachable_am_states

ABS = ["value-irrel", "expr-irrel", "bool-track:x,y", "identity"]


def _abs(name, lang_name="imp"):
    return by_name(name, machines(lang_name)[0])


@pytest.fixture(scope="module")
def states():
    return reachable_am_states(random.Random(SEED_DEFAULT + 10), 80)


@pytest.mark.parametrize("name", ABS)
def test_alpha_idempotent(name, states):
    a = _abs(name)
    for s in states:
        assert a.alpha(a.alpha(s)) == a.alpha(s)


@pytest.mark.parametrize("name", ["value-irrel", "bool-track:x,y", "identity"])
def test_alpha_extensive(name, states):
    a = _abs(name)
    for s in states:
        assert prec_leq(s, a.alpha(s))


def test_expr_irrel_is_not_extensive_on_expressions():
    a = _abs("expr-irrel")
    c = Conf(NonValNode("+", (ConstInt(1), ConstInt(2))), State([(ConstStr("x"), ConstInt(1))]))
    assert a.alpha(c) == Conf(STAR_VAL, TOP)
    assert not prec_leq(c, a.alpha(c))


def test_value_irrel_keeps_names():
    a = _abs("value-irrel")
    t = NonValNode(":=", (ConstStr("x"), ConstInt(3)))
    assert a.alpha_term(t) == NonValNode(":=", (ConstStr("x"), STAR_VAL))


def test_bool_tracking_keeps_tracked_booleans():
    a = boolean_tracking(load_language("imp"), ["b"])
    st = State([(ConstStr("b"), ValNode("true")), (ConstStr("c"), ValNode("false"))])
    out = a.alpha(Conf(ValNode("skip"), st))
    assert out.state.get(ConstStr("b")) == ValNode("true")
    assert out.state.get(ConstStr("c")) == STAR_VAL


def test_context_discarding_flags():
    imp = load_language("imp")
    assert value_irrelevance(imp).context_discarding
    assert expression_irrelevance(imp).context_discarding
    assert not boolean_tracking(imp, ["x"]).context_discarding
    assert not identity().context_discarding


def test_expr_irrel_needs_sorts():
    bare = parse_language("language bare\nnode skip 0 val\n")
    with pytest.raises(MissingSortTable):
        expression_irrelevance(bare)


def test_unknown_name():
    with pytest.raises(UnknownAbstraction):
        by_name("sign")


@pytest.mark.parametrize("name", ["value-irrel", "bool-track:x"])
def test_beta_over_approximates(name):
    lang, _, am = machines("imp")
    a = _abs(name)
    rng = random.Random(SEED_DEFAULT + 11)
    for fun in am.semfuns.values():
        for _ in range(20):
            args = [ConstInt(rng.randint(-5, 5)) for _ in range(2)]
            try:
                concrete = fun(args)
            except Exception:
                continue
            abstract_args = [a.erase(x, keep_bool=True) for x in args]
            outs = a.beta(fun, abstract_args)
            for c in concrete:
                assert any(prec_leq(c, o) for o in outs), (fun, args)


def _abstract_fire_covers(am, a, s, s_hat):
    """Every concrete successor of s sits below some successor of s_hat
    reached by abstract matching (before alpha)."""
    call, acall = concrete_call(am.semfuns), a.call(am.semfuns)
    for r in am:
        for t in fire(r, s, call):
            outs = fire(r, s_hat, acall, abstract_match)
            assert any(prec_leq(t, o) for o in outs), (r.name, s)


@pytest.mark.parametrize("name", ["value-irrel", "bool-track:x,y"])
def test_abstract_rewriting_lifts_steps(name, states):
    lang, _, am = machines("imp")
    a = _abs(name)
    for s in states:
        _abstract_fire_covers(am, a, s, a.alpha(s))


def test_abstract_rewriting_lifts_steps_expr_irrel(states):
    # expr-irrel is not extensive, so lift from a value-erased state above s
    lang, _, am = machines("imp")
    a, v = _abs("expr-irrel"), _abs("value-irrel")
    for s in states:
        _abstract_fire_covers(am, a, s, v.alpha(s))


@pytest.mark.parametrize("name", ["value-irrel", "expr-irrel", "bool-track:x,y"])
def test_abs_step_covers_alpha_of_successor(name, states):
    lang, _, am = machines("imp")
    a, v = _abs(name), _abs("value-irrel")
    for s in states:
        start = a.alpha(s) if prec_leq(s, a.alpha(s)) else v.alpha(s)
        succ = abs_step(am, a, start)
        for t in am_step(am, s):
            assert any(prec_leq(a.alpha(t), x) for x in succ), s


def test_identity_step_is_concrete(states):
    _, _, am = machines("imp")
    for s in states[:20]:
        assert abs_step(am, identity(), s) == am_step(am, s)
        assert all(is_concrete(x) for x in am_step(am, s))


@pytest.mark.parametrize("name", ABS)
def test_alpha_monotone_and_keeps_depth(name, states):
    from semcfg.pam import stacklen
    a, v = _abs(name), _abs("value-irrel")
    for s in states:
        above = v.alpha(s)
        assert prec_leq(a.alpha(s), a.alpha(above))
        assert stacklen(a.alpha(s).ctx) >= stacklen(s.ctx)


def test_generalized_lifting_pointwise_betas(states):
    # the identity beta is pointwise below the value-irrelevance beta
    _, _, am = machines("imp")
    v = _abs("value-irrel")
    b1, b2 = identity().call(am.semfuns), v.call(am.semfuns)
    for s in states:
        hat = v.alpha(s)
        for r in am:
            outs2 = fire(r, hat, b2, abstract_match)
            for o in fire(r, hat, b1, abstract_match):
                assert any(prec_leq(o, x) for x in outs2), r.name


def _inside_skipped(t, s):
    """t sits in a subcomputation of s, which jumped straight to a value."""
    from semcfg.pam import frames_of, push_all
    if s.conf != Conf(STAR_VAL, TOP):
        return False
    ft, base = frames_of(t.ctx)
    fs, _ = frames_of(s.ctx)
    return len(ft) > len(fs) and prec_leq(push_all(base, ft[:len(fs)]), s.ctx)


@pytest.mark.parametrize("name", ["value-irrel", "expr-irrel", "bool-track:x,y"])
def test_abstract_transition(name, states):
    # each concrete step either stays below alpha(a), runs inside an
    # expression alpha(a) has already skipped, or is matched by an abstract
    # successor of alpha(a)
    _, _, am = machines("imp")
    a = _abs(name)
    for s in states:
        for t in am_step(am, s):
            if prec_leq(a.alpha(t), a.alpha(s)) or _inside_skipped(a.alpha(t), a.alpha(s)):
                continue
            assert any(prec_leq(a.alpha(t), g) for g in abs_step(am, a, a.alpha(s))), s
