import random
import re
from collections import deque

import pytest

from semcfg.abstraction import by_name
from semcfg.cfg import explore_graph, initial_state
from semcfg.languages import load_program
from semcfg.patterns import (
    TERMINATES, UNKNOWN, NotContextDiscarding, certify_termination, gen_all_patterns,
    gen_graph_pattern, pattern_dot, pattern_dump, start_state,
)
from semcfg.pam import stacklen
from semcfg.terms import Conf, NonValNode, STAR_VAL, TOP, is_value_like, leq_witness, substitute

from helpers import SEED_DEFAULT, compiled, machines, random_program, value_free_program_text

CD = ["value-irrel", "expr-irrel"]


def while_pattern():
    lang, _, am = machines("imp")
    return gen_graph_pattern(lang, am, by_name("value-irrel", lang), "while")


def test_while_pattern_golden():
    p = while_pattern()
    assert len(p.nodes) == 8 and p.finite
    assert p.edges == {(0, 1), (1, 2), (3, 4), (3, 5), (4, 6), (7, 0)}
    assert p.transitive == {(2, 3): 0, (6, 7): 1}
    assert p.exits == {5}


def test_while_pattern_shapes():
    p = while_pattern()
    x0, x1 = p.child_vars
    assert p.nodes[2].conf.term == x0 and p.nodes[6].conf.term == x1
    for j in (3, 7):
        assert p.nodes[j].conf == Conf(STAR_VAL, TOP)
    assert p.nodes[5].ctx == p.k


@pytest.mark.parametrize("lang", ["imp", "imp-ext"])
@pytest.mark.parametrize("abs_name", CD)
def test_all_patterns_finite(lang, abs_name):
    _, ps, _, _, _ = compiled(lang, abs_name)
    assert ps and all(p.finite for p in ps.values())
    assert certify_termination(ps) == (TERMINATES, [])


def test_every_nonvalue_type_has_a_pattern():
    lang, _, _ = machines("imp-ext")
    _, ps, _, _, _ = compiled("imp-ext", "value-irrel")
    assert set(ps) == {s for s, sig in lang.signatures.items() if not sig.isval}


def test_node_budget_gives_unknown():
    lang, _, am = machines("imp")
    ps = gen_all_patterns(lang, am, by_name("value-irrel", lang), max_nodes=3)
    verdict, bad = certify_termination(ps)
    assert verdict == UNKNOWN and "while" in bad
    assert not ps["while"].finite and len(ps["while"].nodes) == 3


def test_certify_empty():
    assert certify_termination({}) == (TERMINATES, [])


def test_requires_context_discarding():
    lang, _, am = machines("imp")
    with pytest.raises(NotContextDiscarding):
        gen_graph_pattern(lang, am, by_name("bool-track:x", lang), "while")
    with pytest.raises(NotContextDiscarding):
        gen_graph_pattern(lang, am, by_name("identity", lang), "while")


def test_start_states_are_fresh():
    lang, _, _ = machines("imp")
    a = by_name("value-irrel", lang)
    _, xs1, k1 = start_state(lang, "+", a)
    _, xs2, k2 = start_state(lang, "+", a)
    keys1 = {v.key for v in xs1} | {k1.key}
    keys2 = {v.key for v in xs2} | {k2.key}
    assert not keys1 & keys2


def test_name_children_are_general_variables():
    lang, _, _ = machines("imp")
    s, xs, _ = start_state(lang, ":=", by_name("value-irrel", lang))
    assert xs[0].mt == "All" and xs[1].mt == "NonVal"


def test_dump_and_dot_are_stable():
    p, q = while_pattern(), while_pattern()
    # variable tags differ between runs; structure must not
    strip = lambda text: re.sub(r"#\d+", "", text)  # noqa: E731
    assert strip(pattern_dump(p)) == strip(pattern_dump(q))
    assert strip(pattern_dot(p)) == strip(pattern_dot(q))
    assert pattern_dot(p).count("style=dashed") == 2


def _covered(ps, a, b):
    pair = Conf(a, b)
    return any(leq_witness(pair, Conf(p.nodes[i], p.nodes[j])) is not None
               for p in ps.values() for i, j in p.edges)


@pytest.mark.parametrize("abs_name", CD)
def test_pattern_soundness_on_value_free_programs(abs_name):
    # patterns start from non-value children, so programs are drawn without
    # value leaves under any node
    lang, _, am = machines("imp")
    a, ps, _, _, _ = compiled("imp", abs_name)
    rng = random.Random(SEED_DEFAULT + 30)
    for _ in range(25):
        t, st = load_program(value_free_program_text(rng), lang)
        g = explore_graph(am, a, initial_state(lang, t, st))
        for x, y in g.edges:
            assert _covered(ps, x, y), (x, y)


@pytest.mark.parametrize("abs_name", CD)
def test_finite_patterns_give_finite_exploration(abs_name):
    lang, _, am = machines("imp")
    a, ps, _, _, _ = compiled("imp", abs_name)
    assert all(p.finite for p in ps.values())
    rng = random.Random(SEED_DEFAULT + 31)
    for _ in range(30):
        t, st = random_program(rng, depth=4)
        assert not explore_graph(am, a, initial_state(lang, t, st), max_states=5000).truncated


# -- per-node fragments -----------------------------------------------------------
# A node's fragment runs from its start state S to the first state that is
# done with it: a value at S's depth or anything shallower. The fragments of
# its non-value children are cut out.

def _is_exit(S, u):
    d, e = stacklen(S.ctx), stacklen(u.ctx)
    return u != S and (e < d or (e == d and is_value_like(u.conf.term)))


def hammock(succ, S):
    edges, seen, work = set(), {S}, deque([S])
    while work:
        u = work.popleft()
        if _is_exit(S, u):
            continue
        for v in succ[u]:
            edges.add((u, v))
            if v not in seen:
                seen.add(v)
                work.append(v)
    return edges


def fragment(succ, S, p, sigma):
    frag = hammock(succ, S)
    states = {x for e in frag for x in e}
    for i, _ in p.transitive:
        src = substitute(sigma, p.nodes[i])
        for a in states:
            if isinstance(a.conf.term, NonValNode) and leq_witness(a, src) is not None:
                frag -= hammock(succ, a)
    return frag


@pytest.mark.parametrize("abs_name", CD)
def test_fragments_lie_below_instantiated_patterns(abs_name):
    lang, _, am = machines("imp")
    a, ps, _, _, _ = compiled("imp", abs_name)
    rng = random.Random(SEED_DEFAULT + 32)
    roots = edges = 0
    for _ in range(25):
        t, st = load_program(value_free_program_text(rng), lang)
        g = explore_graph(am, a, initial_state(lang, t, st))
        succ = g.succs()
        for S in g.nodes:
            if not isinstance(S.conf.term, NonValNode):
                continue
            p = ps[S.conf.term.sym]
            sigma = leq_witness(S, p.start)
            if sigma is None:
                continue  # a value child, as in a desugared loop
            roots += 1
            inst = [(substitute(sigma, p.nodes[i]), substitute(sigma, p.nodes[j])) for i, j in p.edges]
            for x, y in fragment(succ, S, p, sigma):
                edges += 1
                assert any(leq_witness(Conf(x, y), Conf(u, v)) is not None for u, v in inst), (x, y)
    assert roots > 50 and edges > roots


def test_start_state_vars_absent_from_rules():
    from semcfg.terms import Var, iter_subterms
    lang, _, am = machines("imp-ext")
    rule_keys = {x.key for r in am for side in (r.lhs, r.rhs)
                 for x in iter_subterms(side) if isinstance(x, Var)}
    assert rule_keys
    for sym, sig in lang.signatures.items():
        if sig.isval:
            continue
        s, xs, k = start_state(lang, sym, by_name("value-irrel", lang))
        assert not ({v.key for v in xs} | {k.key}) & rule_keys
