import random

import pytest

from tracelab import observe
from tracelab.lang import Command, Put, Skip
from tracelab.observe import (alpha_osch, alpha_rho_sc, alpha_sc, osch, out,
                              out_equiv_check, sc, sc_equiv_check, st)
from tracelab.semantics import State, Store, run
from tracelab.textio import parse_program
from tests.conftest import command_at


def _state(bindings, label="L", action=None, succ="M"):
    return State(Store(bindings), Command(label, action or Skip(), succ))


def test_sc_collapses_consecutive_stores(loop_program, loop_run):
    seq = sc(loop_run.states[:2])
    assert seq == (Store(), Store({"x": 0}))


def test_sc_all_skip_trace():
    states = [_state({"a": 1}) for _ in range(5)]
    assert sc(states) == (Store({"a": 1}),)
    assert sc([]) == ()


def test_sc_is_subsequence_of_st(loop_run):
    full = st(loop_run.states)
    changes = sc(loop_run.states)
    assert len(changes) <= len(full)
    it = iter(full)
    assert all(any(x == y for y in it) for x in changes)  # subsequence check


def test_sc_stuttering_idempotent(loop_run):
    rng = random.Random(3)
    states = list(loop_run.states[:20])
    stuttered = []
    for s in states:
        stuttered.append(s)
        if rng.random() < 0.4:
            stuttered.append(State(s.store, Command("pad", Skip(), "pad")))
    assert sc(stuttered) == sc(states)


def test_out_filters_put_states():
    xs = frozenset({"x"})
    s1 = _state({"x": 1, "y": 9})
    s2 = _state({"x": 2, "y": 9}, action=Put(xs))
    s3 = _state({"x": 3})
    assert out([s1, s2, s3], xs) == (Store({"x": 2}),)
    assert out([s1, s3], xs) == ()
    # only exact put sets for this observation record
    assert out([_state({"x": 1}, action=Put(frozenset({"x", "y"})))], xs) == ()


def test_osch_cases():
    xs = frozenset({"x"})
    assert osch([], xs) == ()
    assert osch([_state({"x": 1}, action=Put(xs))], xs) == (Store({"x": 1}),)
    assert osch([_state({"x": 1})], xs) == ()


def _osch_oracle(states, xs):
    """Case-by-case recursive fold, straight off the definition."""
    xs = frozenset(xs)

    def is_put(s):
        return isinstance(s.command.action, Put) and s.command.action.vars == xs

    def go(seq):
        if not seq:
            return ()
        if len(seq) == 1:
            s = seq[0]
            return (s.store.restrict(xs),) if is_put(s) else ()
        s0, s1 = seq[0], seq[1]
        if s0.store == s1.store:
            if is_put(s0):
                marked = State(s1.store, Command(s1.command.label, Put(xs), s1.command.succ))
                return go((marked,) + tuple(seq[2:]))
            return go(tuple(seq[1:]))
        head = (s0.store.restrict(xs),) if is_put(s0) else ()
        return head + go(tuple(seq[1:]))

    return go(tuple(states))


def test_osch_matches_recursive_oracle():
    rng = random.Random(9)
    xs = frozenset({"x"})
    for _ in range(120):
        states = []
        store = {"x": 0, "y": 0}
        for _ in range(rng.randrange(0, 12)):
            if rng.random() < 0.3:
                store = dict(store)
                store[rng.choice("xy")] = rng.randrange(3)
            action = Put(xs) if rng.random() < 0.35 else Skip()
            states.append(_state(store, action=action))
        assert osch(states, xs) == _osch_oracle(states, xs)


def test_osch_no_put_trace_empty(loop_run):
    assert osch(loop_run.states, frozenset({"x"})) == ()


def test_alpha_maps():
    assert alpha_sc([]) == frozenset()
    t1 = [_state({"a": 1}), _state({"a": 2})]
    t2 = [_state({"a": 1}, label="Q"), _state({"a": 2}, label="Q")]
    assert alpha_sc([t1, t2]) == frozenset({(Store({"a": 1}), Store({"a": 2}))})


def test_alpha_rho_sc_filters_by_initial_store():
    t1 = [_state({"a": 1}), _state({"a": 2})]
    t2 = [_state({"a": 5})]
    got = alpha_rho_sc([t1, t2], Store({"a": 1}))
    assert got == frozenset({(Store({"a": 1}), Store({"a": 2}))})
    assert alpha_rho_sc([t1, t2], Store({"a": 9})) == frozenset()


def test_alpha_sc_equal_implies_alpha_rho_sc_equal():
    rng = random.Random(4)
    for _ in range(40):
        base = [_state({"a": rng.randrange(2)}) for _ in range(3)]
        pads = [State(s.store, Command("P", Skip(), "P")) for s in base]
        t_sets = ([tuple(base)], [tuple(pads)])  # same sc by construction
        assert alpha_sc(t_sets[0]) == alpha_sc(t_sets[1])
        for rho in (Store({"a": 0}), Store({"a": 1})):
            assert alpha_rho_sc(t_sets[0], rho) == alpha_rho_sc(t_sets[1], rho)


def test_sc_equiv_check_self(loop_program):
    rep = sc_equiv_check(loop_program, loop_program, [Store(), Store({"x": 3})], 500)
    assert rep.passed
    assert all(v.divergence is None for v in rep.verdicts)
    assert rep.tap().startswith("ok 1")


def test_sc_equiv_check_detects_change(loop_program):
    c4 = command_at(loop_program, "L4")
    from tracelab.lang import Add, Assign, Lit, Var
    mutated = loop_program.replace(
        remove=[c4], add=[Command("L4", Assign("x", Add(Var("x"), Lit(4))), "L1")])
    rep = sc_equiv_check(loop_program, mutated, [Store()], 500)
    assert not rep.passed
    v = rep.verdicts[0]
    assert v.divergence is not None
    assert "not ok" in rep.tap()


def test_sc_equiv_prefix_rule_under_truncation(loop_program):
    rep = sc_equiv_check(loop_program, loop_program, [Store()], 5)
    assert rep.passed  # equal prefixes, both truncated


def test_sc_equiv_requires_equality_on_termination():
    p1 = parse_program("#entry L0\nL0: x := 1 -> L1\nL1: skip -> .\n")
    p2 = parse_program("#entry L0\nL0: x := 1 -> L1\nL1: x := 2 -> L2\nL2: skip -> .\n")
    rep = sc_equiv_check(p1, p2, [Store()], 100)
    assert not rep.passed  # both terminated, one sc is a strict prefix


def test_out_equiv_check(dse_program):
    rep = out_equiv_check(dse_program, dse_program, [Store({"x": -3})], 200, {"x", "z"})
    assert rep.passed
