import networkx as nx
import pytest

from semcfg.codegen import (
    T_IN, T_OUT, MissingRecipe, Recipe, check_agreement, find_projection, pretty_print_recipe,
    recipe_to_cfg, recipes_from_json, recipes_to_json,
)
from semcfg.languages import load_program

from helpers import bundled, compiled, machines

CD = ["value-irrel", "expr-irrel"]


def edges_of(r):
    return r.connect_set()


def test_for_recipe_golden():
    _, _, recipes, _, failed = compiled("imp-ext", "value-irrel")
    assert not failed
    r = recipes["for"]
    assert edges_of(r) == {(T_IN, "cIn:1"), ("cOut:1", "cIn:2"), ("cOut:2", "cOut:3"),
                           ("cOut:3", "cIn:3"), ("cOut:3", T_OUT)}
    assert r.outs == [T_OUT] and r.ins == [T_IN]


def test_if_recipe_value_irrel():
    r = compiled("imp", "value-irrel")[2]["if"]
    assert edges_of(r) == {(T_IN, "cIn:0"), ("cOut:0", "cIn:1"), ("cOut:0", "cIn:2")}
    assert r.outs == ["cOut:1", "cOut:2"]


def test_if_recipe_expr_irrel_drops_condition():
    r = compiled("imp", "expr-irrel")[2]["if"]
    assert edges_of(r) == {(T_IN, "cIn:1"), (T_IN, "cIn:2")}
    assert r.outs == ["cOut:1", "cOut:2"] and 0 not in r.child_order


def test_while_recipe():
    r = compiled("imp", "value-irrel")[2]["while"]
    assert edges_of(r) == {(T_IN, "cIn:0"), ("cOut:0", "cIn:1"), ("cOut:0", T_OUT),
                           ("cOut:1", T_IN)}


def test_if_pretty_print():
    text = pretty_print_recipe(compiled("imp", "value-irrel")[2]["if"])
    assert text.splitlines()[0] == 'genCfg t@(Node "if" [a, b, c]) = do'
    assert text.rstrip().endswith("return (inNodes [tIn], outNodes [bOut,cOut])")


def test_unused_child_printed_as_hole():
    text = pretty_print_recipe(compiled("imp", "value-irrel")[2][":="])
    assert text.startswith('genCfg t@(Node ":=" [_, b]) = do')


@pytest.mark.parametrize("lang", ["imp", "imp-ext"])
@pytest.mark.parametrize("abs_name", CD)
def test_every_pattern_compiles(lang, abs_name):
    _, ps, recipes, projs, failed = compiled(lang, abs_name)
    assert failed == [] and set(recipes) == set(ps)


@pytest.mark.parametrize("lang", ["imp", "imp-ext"])
@pytest.mark.parametrize("abs_name", CD)
def test_class_count_bound(lang, abs_name):
    _, _, recipes, _, _ = compiled(lang, abs_name)
    for r in recipes.values():
        assert r.class_count() <= 2 * r.arity + 2


@pytest.mark.parametrize("lang", ["imp", "imp-ext"])
@pytest.mark.parametrize("abs_name", CD)
def test_classes_are_loop_free_and_cover(lang, abs_name):
    _, ps, _, projs, _ = compiled(lang, abs_name)
    for sym, p in ps.items():
        proj = projs[sym]
        covered = set()
        for _, members in proj.classes:
            assert not covered & members
            covered |= members
            g = nx.DiGraph()
            g.add_nodes_from(members)
            g.add_edges_from((a, b) for a, b in p.edges if a in members and b in members)
            assert nx.is_directed_acyclic_graph(g), sym
        assert covered == set(range(len(p.nodes)))


def test_truncated_pattern_has_no_projection():
    from semcfg.abstraction import by_name
    from semcfg.patterns import gen_graph_pattern
    lang, _, am = machines("imp")
    p = gen_graph_pattern(lang, am, by_name("value-irrel", lang), "while", max_nodes=3)
    assert find_projection(p) is None


def test_json_roundtrip():
    recipes = compiled("imp-ext", "value-irrel")[2]
    text = recipes_to_json(recipes)
    back = recipes_from_json(text)
    assert back == recipes
    assert recipes_to_json(back) == text


def test_recipe_json_fields():
    d = compiled("imp", "value-irrel")[2]["seq"].to_json()
    assert set(d) == {"nodeType", "arity", "childOrder", "connects", "ins", "outs"}
    assert Recipe.from_json(d).to_json() == d


def test_assignment_of_literal_is_two_node_chain():
    lang, _, _ = machines("imp")
    recipes = compiled("imp", "value-irrel")[2]
    t, _ = load_program("x := 1", lang)
    c = recipe_to_cfg(recipes, t)
    assert c.nodes == [("in", ()), ("out", ())]
    assert c.edges == {(("in", ()), ("out", ()))}


def test_seq_wires_children():
    lang, _, _ = machines("imp")
    recipes = compiled("imp", "value-irrel")[2]
    t, _ = load_program("x := y; z := x", lang)
    c = recipe_to_cfg(recipes, t)
    i, o = (lambda *p: ("in", p)), (lambda *p: ("out", p))
    assert c.edges == {
        (i(), i(0)), (i(0), i(0, 1)), (i(0, 1), o(0, 1)), (o(0, 1), o(0)),
        (o(0), i(1)), (i(1), i(1, 1)), (i(1, 1), o(1, 1)), (o(1, 1), o(1)),
    }
    assert c.start == ("in", ())


def test_missing_recipe():
    lang, _, _ = machines("imp")
    recipes = dict(compiled("imp", "value-irrel")[2])
    del recipes["while"]
    t, _ = load_program("while x < 1 do x := 1", lang)
    with pytest.raises(MissingRecipe):
        recipe_to_cfg(recipes, t)


@pytest.mark.parametrize("abs_name", CD)
@pytest.mark.parametrize("name,lang,term,state", bundled(), ids=lambda x: x if isinstance(x, str) else "")
def test_compiled_agrees_with_interpreted(abs_name, name, lang, term, state):
    abs_, ps, recipes, projs, _ = compiled(lang, abs_name)
    ln, _, am = machines(lang)
    res = check_agreement(ln, am, abs_, ps, projs, recipes, term, state)
    assert not res.unattributed
    assert res.ok, (sorted(res.missing), sorted(res.extra))
