import random

import pytest

from semcfg.languages import load_language
from semcfg.semantics import parse_language
from semcfg.pam import (
    DOWN, RESET, UP, DeterminismViolation, Emp, PamState, classify_rules, dump_rules,
    frames_of, pretty_pam_state, pam_run, pam_step, sos_to_pam, stacklen,
)
from semcfg.terms import EMPTY_STATE, Conf, parse_term

from helpers import SEED_DEFAULT, machines, pam_conf_sequence, random_program, sos_conf_sequence

GOLDEN_TRACE = """\
⟨((1+(1+1))+1, ∅) | emp⟩↓
⟨(1+(1+1), ∅) | emp∘[(□t+1, □μ)]⟩↓
⟨(1+1, ∅) | emp∘[(□t+1, □μ)]∘[(1+□t, □μ)]⟩↓
⟨(2, ∅) | emp∘[(□t+1, □μ)]∘[(1+□t, □μ)]⟩↓
⟨(2, ∅) | emp∘[(□t+1, □μ)]∘[(1+□t, □μ)]⟩↑
⟨(1+2, ∅) | emp∘[(□t+1, □μ)]⟩↑
⟨((1+2)+1, ∅) | emp⟩↑
⟨((1+2)+1, ∅) | emp⟩↓
⟨(1+2, ∅) | emp∘[(□t+1, □μ)]⟩↓
⟨(3, ∅) | emp∘[(□t+1, □μ)]⟩↓
⟨(3, ∅) | emp∘[(□t+1, □μ)]⟩↑
⟨(3+1, ∅) | emp⟩↑
⟨(3+1, ∅) | emp⟩↓
⟨(4, ∅) | emp⟩↓
⟨(4, ∅) | emp⟩↑"""


def golden_trace():
    _, pam, _ = machines("imp")
    start = PamState(Conf(parse_term("(+ (+ 1 (+ 1 1)) 1)"), EMPTY_STATE), Emp, DOWN)
    return pam_run(pam, start, 100)


def test_golden_trace():
    trace = golden_trace()
    assert "\n".join(pretty_pam_state(s) for s in trace) == GOLDEN_TRACE


def test_golden_stops_at_value_up_root():
    trace = golden_trace()
    _, pam, _ = machines("imp")
    assert pam_step(pam, trace[-1]) == []


def test_one_reset_rule_and_no_up_down_for_imp():
    _, pam, _ = machines("imp")
    kinds = classify_rules(pam)
    assert [r.name for r in kinds["upDown"]] == [RESET]
    assert sum(r.name == RESET for r in pam) == 1


def test_congruence_splits_into_two_rules():
    _, pam, _ = machines("imp")
    names = [r.name for r in pam]
    assert "AssnCong.0" in names and "AssnCong.1" in names
    cong0 = next(r for r in pam if r.name == "AssnCong.0")
    assert cong0.lhs.phase == DOWN and cong0.rhs.phase == DOWN
    assert stacklen(cong0.rhs.ctx) == stacklen(cong0.lhs.ctx) + 1


def test_lockstep_rule_is_up_down():
    pam = sos_to_pam(load_language("lockstep-demo"))
    bad = [r.name for r in classify_rules(pam)["upDown"] if r.name != RESET]
    assert bad and all(n.startswith("LockstepComp") for n in bad)


def test_frames_of_lists_bottom_first():
    trace = golden_trace()
    frames, base = frames_of(trace[2].ctx)
    assert base == Emp and len(frames) == 2


def test_dump_is_deterministic():
    a = dump_rules(sos_to_pam(load_language("imp")))
    b = dump_rules(sos_to_pam(load_language("imp")))
    assert a == b and "Reset" in a


def test_pam_run_detects_nondeterminism():
    lang = parse_language("language amb\nnode a 0 nonval\n"
                          "rule One: (a, ?mu) ~> build (1, ?mu)\n"
                          "rule Two: (a, ?mu) ~> build (2, ?mu)\n")
    start = PamState(Conf(parse_term("a", set()), EMPTY_STATE), Emp, DOWN)
    with pytest.raises(DeterminismViolation):
        pam_run(sos_to_pam(lang), start, 10)


def test_sos_pam_bisimulation_sample():
    lang, pam, _ = machines("imp")
    rng = random.Random(SEED_DEFAULT)
    for _ in range(40):
        t, st = random_program(rng)
        c = Conf(t, st)
        assert pam_conf_sequence(pam, c, 20) == sos_conf_sequence(lang, c, 20)


def test_sanity_of_phase():
    # pushes happen going down, pops land in the up phase
    _, pam, _ = machines("imp")
    rng = random.Random(SEED_DEFAULT + 51)
    pushes = pops = 0
    for _ in range(30):
        t, st = random_program(rng)
        trace = pam_run(pam, PamState(Conf(t, st), Emp, DOWN), 3000)
        for a, b in zip(trace, trace[1:]):
            da, db = stacklen(a.ctx), stacklen(b.ctx)
            if db > da:
                pushes += 1
                assert a.phase == DOWN and b.phase == DOWN
            elif db < da:
                pops += 1
                assert b.phase == UP
    assert pushes and pops


def test_bisimulation_under_other_contexts():
    from helpers import reachable_pam_down_states
    lang, pam, _ = machines("imp")
    for s in reachable_pam_down_states(random.Random(SEED_DEFAULT + 52), 40):
        assert pam_conf_sequence(pam, s.conf, 20, base=s.ctx) == sos_conf_sequence(lang, s.conf, 20)
