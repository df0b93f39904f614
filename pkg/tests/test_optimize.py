import pytest

from tracelab.domains import CPConst, CP_TOP, cp_domain, type_domain
from tracelab.extract import extract
from tracelab.hotpath import HotPath, hot_n
from tracelab.lang import (Add, AddTyped, Assign, Command, Lit, Skip, Var,
                           rename_equal, well_formed)
from tracelab.observe import out_equiv_check, sc_equiv_check
from tracelab.optimize import (OptimizeError, const_fold, dead_store_eliminate,
                               free_vars, identity_opt, optimize_full,
                               type_specialize)
from tracelab.semantics import Store, run
from tracelab.textio import parse_program
from tracelab.values import INT, TOP_T, TT
from tests.conftest import command_at


# ---------------------------------------------------------------------------
# type specialization
# ---------------------------------------------------------------------------

def _sieve_stitch(sieve_program, sieve_store):
    r = run(sieve_program, sieve_store, 5000)
    hp1 = hot_n(r.states, 2, "type", sieve_program)[0]
    return extract(sieve_program, hp1)


def test_sieve_specializes_the_addition(sieve_program, sieve_store):
    st = _sieve_stitch(sieve_program, sieve_store)
    new = type_specialize(st)
    changed = new - st.stitched
    (h5,) = changed
    assert h5.action == Assign("k", AddTyped(Var("k"), Var("i"), "Int"))
    assert h5.succ == "L4"
    assert h5.label == st.ell[2]
    assert len(st.stitched - new) == 1


def test_specialization_leaves_top_typed_adds_alone():
    src = """
#entry L0
L0: x := 0 -> L1
L1: (x <= 5) -> L2
L1: !(x <= 5) -> L3
L2: x := x + y -> L1
L3: skip -> .
"""
    p = parse_program(src)
    r = run(p, Store({"y": 1}), 200)
    hp = hot_n(r.states, 2, "onepoint", p)[0]
    # rebuild the same path with type guards mapping y to Top
    pairs = tuple((type_domain.make({"x": INT, "y": TOP_T}), c) for _, c in hp.pairs)
    hp_t = HotPath(pairs, "type")
    st = extract(p, hp_t)
    assert type_specialize(st) == st.stitched  # x + y stays generic under Top


def test_specialization_string_case():
    src = """
#entry L0
L0: a := "x" -> L1
L1: (n <= 3) -> L2
L1: !(n <= 3) -> L4
L2: y := a + b -> L3
L3: n := n + 1 -> L1
L4: skip -> .
"""
    p = parse_program(src)
    r = run(p, Store({"n": 0, "b": "q"}), 200)
    hp = hot_n(r.states, 2, "type", p)[0]
    st = extract(p, hp)
    new = type_specialize(st)
    specialized = {str(c.action) for c in new - st.stitched}
    assert "y := (a +Str b)" in specialized
    assert "n := (n +Int 1)" in specialized


def test_type_specialize_requires_type_guards(loop_program):
    r = run(loop_program, Store(), 500)
    hp = hot_n(r.states, 2, "onepoint", loop_program)[0]
    st = extract(loop_program, hp)
    with pytest.raises(OptimizeError):
        type_specialize(st)


def test_specialized_additions_agree_under_their_guards(sieve_program, sieve_store):
    """Instrumented run: whenever a specialized assignment executes, the
    generic addition would have produced the same value."""
    from tracelab.semantics import eval_expr
    st = _sieve_stitch(sieve_program, sieve_store)
    p1 = optimize_full(sieve_program, st.hp, type_specialize)
    r = run(p1, sieve_store, 8000)
    seen = 0
    for s in r.states:
        a = s.command.action
        if isinstance(a, Assign) and isinstance(a.expr, AddTyped):
            generic = Add(a.expr.left, a.expr.right)
            assert eval_expr(generic, s.store) == eval_expr(a.expr, s.store)
            seen += 1
    assert seen > 50


# ---------------------------------------------------------------------------
# constant folding
# ---------------------------------------------------------------------------

def _cf_hot_path(cf_program):
    """The constant-a fast-branch path, with its published cp guards."""
    a = cp_domain.make({"x": CP_TOP, "a": CPConst(2)})
    c2 = command_at(cf_program, "L2", lambda c: not str(c.action).startswith("!"))
    c3 = command_at(cf_program, "L3", lambda c: not str(c.action).startswith("!"))
    c4 = command_at(cf_program, "L4")
    return HotPath(((a, c2), (a, c3), (a, c4)), "cp")


def test_cf_golden(cf_program):
    hp = _cf_hot_path(cf_program)
    st = extract(cf_program, hp)
    new = const_fold(st)
    (folded,) = new - st.stitched
    assert folded.action == Assign("x", Add(Var("x"), Lit(2)))
    assert folded.label == st.ell[2]
    assert folded.succ == "L2"


def test_cf_never_touches_assigned_variables(cf_program):
    hp = _cf_hot_path(cf_program)
    st = extract(cf_program, hp)
    fv = free_vars(st.stitched)
    assert "a" in fv and "x" not in fv
    new = const_fold(st)
    for c in new:
        if isinstance(c.action, Assign):
            assert "x" not in {str(e) for e in [c.action.expr] if isinstance(e, Lit)}


def test_cf_substitutes_all_constant_frees():
    src = """
#entry L0
L0: x := 0 -> L1
L1: (x <= 9) -> L2
L1: !(x <= 9) -> L3
L2: x := x + a + b -> L1
L3: skip -> .
"""
    p = parse_program(src)
    a = cp_domain.make({"x": CP_TOP, "a": CPConst(2), "b": CPConst(3)})
    c1 = command_at(p, "L1", lambda c: not str(c.action).startswith("!"))
    c2 = command_at(p, "L2")
    hp = HotPath(((a, c1), (a, c2)), "cp")
    st = extract(p, hp)
    (folded,) = const_fold(st) - st.stitched
    # both constant frees substituted simultaneously (substitution oracle)
    from tracelab.lang import subst_expr
    assert folded.action.expr == subst_expr(c2.action.expr, {"a": 2, "b": 3})


def test_cf_requires_cp_guards(loop_program):
    r = run(loop_program, Store(), 500)
    hp = hot_n(r.states, 2, "onepoint", loop_program)[0]
    with pytest.raises(OptimizeError):
        const_fold(extract(loop_program, hp))


def test_cf_full_correct(cf_program):
    hp = _cf_hot_path(cf_program)
    p1 = optimize_full(cf_program, hp, const_fold)
    assert well_formed(p1) == []
    initials = [Store()] + [Store({"x": v}) for v in (-2, 1, 5, 6, 16)] \
        + [Store({"a": v}) for v in (0, 7)] + [Store({"x": 3, "a": 9}), Store({"x": "s"})]
    rep = sc_equiv_check(cf_program, p1, initials, 2000)
    assert rep.passed


def test_free_vars_basics():
    c = Command("L", Assign("x", Add(Var("y"), Lit(1))), "M")
    assert free_vars([c]) == {"y"}
    assert free_vars([]) == frozenset()


# ---------------------------------------------------------------------------
# dead store elimination
# ---------------------------------------------------------------------------

def _dse_stitch(dse_program):
    r = run(dse_program, Store({"x": -4, "z": 7}), 400)
    hp = hot_n(r.states, 2, "onepoint", dse_program)[0]
    assert [str(c.action) for c in hp.commands] == \
        ["(x <= 0)", "z := 0", "x := (x + 1)", "z := 1"]
    return extract(dse_program, hp)


def test_dse_removes_the_dead_store(dse_program):
    st = _dse_stitch(dse_program)
    new = dead_store_eliminate(st)
    removed = st.stitched - new
    gone_actions = {str(c.action) for c in removed if not str(c.action).startswith("guard")}
    assert "z := 0" in gone_actions
    kept = {str(c.action) for c in new}
    assert "z := 1" in kept
    # predecessor rewired past the dead assignment
    dead = next(c for c in removed if str(c.action) == "z := 0")
    rewired = [c for c in new if c.succ == dead.succ and c.label != dead.label]
    assert rewired


def test_dse_blocked_by_read():
    src = """
#entry L1
L1: (x <= 0) -> L2
L1: !(x <= 0) -> L5
L2: z := 0 -> L3
L3: x := x + z -> L4
L4: z := 1 -> L1
L5: put {x, z} -> L6
L6: skip -> .
"""
    p = parse_program(src)
    r = run(p, Store({"x": -4, "z": 0}), 400)
    hp = hot_n(r.states, 2, "onepoint", p)[0]
    st = extract(p, hp)
    assert dead_store_eliminate(st) == st.stitched


def test_dse_blocked_by_exit_before_reassignment(dse_program):
    # drop the trailing z := 1 from the loop: now z escapes through the exit
    src = """
#entry L1
L1: (x <= 0) -> L2
L1: !(x <= 0) -> L5
L2: z := 0 -> L3
L3: x := x + 1 -> L1
L5: put {x, z} -> L6
L6: skip -> .
"""
    p = parse_program(src)
    r = run(p, Store({"x": -4}), 400)
    hp = hot_n(r.states, 2, "onepoint", p)[0]
    st = extract(p, hp)
    assert dead_store_eliminate(st) == st.stitched


def test_dse_is_out_sound_but_not_sc_sound(dse_program):
    st = _dse_stitch(dse_program)
    p1 = optimize_full(dse_program, st.hp, dead_store_eliminate)
    assert well_formed(p1) == []
    initials = [Store({"x": -4, "z": 7}), Store({"x": -9, "z": 0}), Store({"x": 1, "z": 2})]
    assert not sc_equiv_check(dse_program, p1, initials, 2000).passed
    assert out_equiv_check(dse_program, p1, initials, 2000, {"x", "z"}).passed


# ---------------------------------------------------------------------------
# optimize_full composition
# ---------------------------------------------------------------------------

def test_identity_optimization_equals_extraction(loop_program):
    r = run(loop_program, Store(), 500)
    hp = hot_n(r.states, 2, "onepoint", loop_program)[0]
    assert optimize_full(loop_program, hp, identity_opt) == \
        extract(loop_program, hp).transformed


def test_boundary_violations_are_rejected(loop_program):
    r = run(loop_program, Store(), 500)
    hp = hot_n(r.states, 2, "onepoint", loop_program)[0]

    def drops_entry(st):
        return frozenset(c for c in st.stitched if c.label != st.entry_label)

    def invents_exit(st):
        c = next(iter(st.body.values()))
        return (st.stitched - {c}) | {Command(c.label, c.action, "ELSEWHERE")}

    with pytest.raises(OptimizeError):
        optimize_full(loop_program, hp, drops_entry)
    with pytest.raises(OptimizeError):
        optimize_full(loop_program, hp, invents_exit)


def test_sieve_full_specialization_correct(sieve_program, sieve_store):
    st = _sieve_stitch(sieve_program, sieve_store)
    p1 = optimize_full(sieve_program, st.hp, type_specialize)
    expected_h5 = Command(st.ell[2], Assign("k", AddTyped(Var("k"), Var("i"), "Int")), "L4")
    assert expected_h5 in p1.commands
    rep = sc_equiv_check(sieve_program, p1, [sieve_store], 8000)
    assert rep.passed
