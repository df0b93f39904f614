import pytest

from tracelab import hotpath
from tracelab.domains import onepoint_domain
from tracelab.extract import extract
from tracelab.hotpath import (HotPath, HotPathError, count, hot_n, hotcut,
                              outerhot_n, sloop, sloop_gp, topo_order)
from tracelab.lang import Command, Skip
from tracelab.semantics import State, Store, run
from tracelab.textio import parse_program
from tests.conftest import command_at


def _cmds(p, labels_actions):
    return [command_at(p, l, lambda c, s=s: str(c.action) == s) for l, s in labels_actions]


# ---------------------------------------------------------------------------
# topological order
# ---------------------------------------------------------------------------

def test_topo_order_loop(loop_program):
    ord_ = topo_order(loop_program)
    c1 = command_at(loop_program, "L1", lambda c: not str(c.action).startswith("!"))
    c3c = command_at(loop_program, "L3", lambda c: str(c.action).startswith("!"))
    assert ord_.lessdot(c1, c3c)
    assert not ord_.lessdot(c3c, c1)


def test_topo_order_self_loop():
    p = parse_program("#entry L\nL: skip -> L\n")
    ord_ = topo_order(p)
    c = command_at(p, "L")
    assert ord_.rank[c] == 0
    assert ord_.lessdot(c, c)


def test_topo_order_straight_line_matches_dfs_oracle():
    src = "#entry L0\n" + "\n".join(f"L{i}: skip -> L{i+1}" for i in range(5)) \
        + "\nL5: skip -> .\n"
    p = parse_program(src)
    ord_ = topo_order(p)
    ranks = {c.label: r for c, r in ord_.rank.items()}
    assert ranks == {f"L{i}": i for i in range(6)}


def _dfs_oracle_rank(p):
    """Recursive reverse-postorder with the same branch ordering."""
    post = []
    seen = set()

    def go(c):
        seen.add(c)
        if c.succ != ".":
            for nxt in sorted(p.at(c.succ), key=hotpath._branch_key):
                if nxt not in seen:
                    go(nxt)
        post.append(c)

    for c in p.at(p.entry):
        if c not in seen:
            go(c)
    for c in p.sorted_commands:
        if c not in seen:
            go(c)
    return {c: i for i, c in enumerate(reversed(post))}


def test_topo_matches_recursive_oracle(loop_program, cf_program, sieve_program):
    for p in (loop_program, cf_program, sieve_program):
        assert topo_order(p).rank == _dfs_oracle_rank(p)


def test_topo_covers_unreachable():
    p = parse_program("#entry L0\nL0: skip -> .\nU0: skip -> U1\nU1: skip -> .\n")
    ord_ = topo_order(p)
    assert len(ord_.rank) == 3


# ---------------------------------------------------------------------------
# sloop and count
# ---------------------------------------------------------------------------

def test_sloop_single_state_empty(loop_program, loop_run):
    ord_ = topo_order(loop_program)
    assert sloop(loop_run.states[:1], ord_, loop_program) == []


def test_sloop_contains_first_loop_segment(loop_program, loop_run):
    ord_ = topo_order(loop_program)
    segs = sloop(loop_run.states, ord_, loop_program)
    mats = [tuple(s.command.label for s in loop_run.states[i:j + 1]) for i, j in segs]
    assert ("L1", "L2", "L3") in mats
    # the segment carries the stores of its occurrence
    i, j = next((i, j) for i, j in segs
                if tuple(s.command.label for s in loop_run.states[i:j + 1]) == ("L1", "L2", "L3"))
    assert [s.store for s in loop_run.states[i:j + 1]] == \
        [Store({"x": 0}), Store({"x": 0}), Store({"x": 1})]


def test_sloop_brute_force_nested():
    # two nested counting loops; check conditions (1)-(3) exhaustively
    src = """
#entry L0
L0: i := 0 -> L1
L1: (i <= 2) -> L2
L1: !(i <= 2) -> L7
L2: j := 0 -> L3
L3: (j <= 1) -> L4
L3: !(j <= 1) -> L6
L4: j := j + 1 -> L3
L6: i := i + 1 -> L1
L7: skip -> .
"""
    p = parse_program(src)
    r = run(p, Store(), 500)
    ord_ = topo_order(p)
    segs = set(sloop(r.states, ord_, p))

    from tracelab.lang import find_cmpl
    states = r.states
    brute = set()
    for i in range(len(states) - 1):
        for j in range(i, len(states) - 1):
            ci, cj = states[i].command, states[j].command
            interior = [states[k].command for k in range(i + 1, j + 1)]
            blockers = {ci, find_cmpl(ci, p)} - {None}
            if cj.succ == ci.label and ord_.rank[ci] <= ord_.rank[cj] \
                    and not any(c in blockers for c in interior):
                brute.add((i, j))
    assert segs == brute
    # an outer segment contains repeated inner commands
    outer = [(i, j) for i, j in segs if states[i].command.label == "L1" and j - i > 4]
    assert outer
    i, j = outer[0]
    labels = [s.command.label for s in states[i:j + 1]]
    assert labels.count("L3") >= 2


def test_count_golden(loop_program, loop_run):
    abs_tr = hotpath.abstract_trace(loop_run.states, "onepoint")
    hps = hot_n(loop_run.states, 2, "onepoint", loop_program)
    assert count(abs_tr, hps[0].pairs) == 8
    assert count(abs_tr, hps[1].pairs) == 4


def test_count_too_long_pattern(loop_run):
    abs_tr = hotpath.abstract_trace(loop_run.states[:3], "onepoint")
    long_path = hotpath.abstract_trace(loop_run.states[:5], "onepoint")
    assert count(abs_tr, long_path) == 0


def test_count_overlapping():
    c = Command("L", Skip(), "L")
    a = onepoint_domain.top()
    seq = [(a, c)] * 4
    assert count(seq, [(a, c)] * 2) == 3  # overlapping occurrences


# ---------------------------------------------------------------------------
# hot_n
# ---------------------------------------------------------------------------

def test_hot2_exact_set(loop_program, loop_run):
    hps = hot_n(loop_run.states, 2, "onepoint", loop_program, with_counts=True)
    assert len(hps) == 2
    (hp1, c1), (hp2, c2) = hps
    assert (c1, c2) == (8, 4)
    assert [c.label for c in hp1.commands] == ["L1", "L2", "L3"]
    assert str(hp1.commands[2].action) == "!((x % 3) = 0)"
    assert [c.label for c in hp2.commands] == ["L1", "L2", "L3", "L4"]
    assert hp2.commands[2].succ == "L4"


def test_hot_threshold_antitone(loop_program, loop_run):
    for n in (2, 3, 4, 5, 9):
        lo = {hp.pairs for hp in hot_n(loop_run.states, n, "onepoint", loop_program)}
        hi = {hp.pairs for hp in hot_n(loop_run.states, n + 1, "onepoint", loop_program)}
        assert hi <= lo


def test_hot_high_threshold_empty(loop_program, loop_run):
    assert hot_n(loop_run.states, 100, "onepoint", loop_program) == []


def test_hot_invariants(loop_program, loop_run):
    for hp in hot_n(loop_run.states, 2, "onepoint", loop_program):
        cmds = hp.commands
        assert cmds[-1].succ == cmds[0].label
        assert all(c.label != cmds[0].label for c in cmds[1:])
        assert hp.next(len(hp) - 1) == 0
        assert hp.next(0) == (1 if len(hp) > 1 else 0)


def test_hotpath_validation():
    c = Command("L", Skip(), "M")
    a = onepoint_domain.top()
    with pytest.raises(HotPathError):
        HotPath(((a, c),), "onepoint")  # no loop back
    with pytest.raises(HotPathError):
        HotPath((), "onepoint")


def test_sieve_first_hot_path(sieve_program, sieve_store):
    r = run(sieve_program, sieve_store, 5000)
    hps = hot_n(r.states, 2, "type", sieve_program)
    hp1 = hps[0]
    assert [c.label for c in hp1.commands] == ["L4", "L5", "L6"]
    a = hp1.pairs[0][0]
    assert str(a) == "{i: Int, k: Int, primes: Bool[100]}"
    assert all(p[0] == a for p in hp1.pairs)


# ---------------------------------------------------------------------------
# hotcut / outerhot / sloop_gp
# ---------------------------------------------------------------------------

def test_hotcut_identity_inside_original(loop_program, loop_run):
    assert hotcut(loop_run.states, loop_program) == loop_run.states


def test_hotcut_drops_middle_of_foreign_runs(loop_program):
    foreign = Command("F", Skip(), "F")
    keep = command_at(loop_program, "L0")
    states = [State(Store({"n": i}), foreign) for i in range(4)]
    states.append(State(Store({"n": 9}), keep))
    cut = hotcut(states, loop_program)
    assert [s.store.get("n") for s in cut] == [0, 3, 9]


def test_hotcut_golden_after_extraction(loop_program, loop_run):
    hp1 = hot_n(loop_run.states, 2, "onepoint", loop_program)[0]
    p1 = extract(loop_program, hp1).transformed
    r1 = run(p1, Store(), 2000)
    cut = hotcut(r1.states, loop_program)
    head = [(s.store.get("x"), s.command.label) for s in cut[:7]]
    st_ = extract(loop_program, hp1)
    entry_pos = st_.entry_label
    h5c_label = st_.ell[2]
    from tracelab.values import UNDEF
    assert head[0] == (UNDEF, "L0")
    assert head[1] == (0, entry_pos)
    assert head[2] == (3, h5c_label)
    assert head[3] == (3, "L4")
    assert head[4] == (6, entry_pos)
    assert head[5] == (9, h5c_label)
    assert head[6] == (9, "L4")
    # stores never change through the cut
    assert all(s.store.get("x") in (UNDEF, 0, 3, 6, 9, 12, 15, 18, 21, 24) for s in cut)


def test_outerhot_reduces_to_hot_on_same_program(loop_program, loop_run):
    a = outerhot_n(loop_run.states, loop_program, 2, "onepoint", loop_program)
    b = hot_n(loop_run.states, 2, "onepoint", loop_program)
    assert [hp.pairs for hp in a] == [hp.pairs for hp in b]


def test_outerhot_finds_nested_path(loop_program, loop_run):
    hp1 = hot_n(loop_run.states, 2, "onepoint", loop_program)[0]
    st_ = extract(loop_program, hp1)
    r1 = run(st_.transformed, Store(), 2000)
    outer = outerhot_n(r1.states, loop_program, 2, "onepoint", st_.transformed)
    labels = [tuple(c.label for c in hp.commands) for hp in outer]
    assert (st_.entry_label, st_.ell[2], "L4") in labels


def test_hotcut_never_changes_stores(loop_program, loop_run):
    hp1 = hot_n(loop_run.states, 2, "onepoint", loop_program)[0]
    p1 = extract(loop_program, hp1).transformed
    r1 = run(p1, Store(), 2000)
    cut = hotcut(r1.states, loop_program)
    # the cut is a subsequence of the input, states untouched
    it = iter(r1.states)
    assert all(any(s == t for t in it) for s in cut)
    from tracelab.observe import sc
    sc_cut, sc_full = sc(cut), sc(r1.states)
    it = iter(sc_full)
    assert all(any(x == y for y in it) for x in sc_cut)  # subsequence collapse


def test_hotcut_sc_equal_when_dropped_states_preserve_stores(loop_program):
    # a foreign run that never writes: sc survives the cut exactly
    foreign = Command("F", Skip(), "F")
    keep = command_at(loop_program, "L0")
    rho = Store({"n": 1})
    states = [State(rho, foreign) for _ in range(5)] + [State(rho, keep)]
    from tracelab.observe import sc
    assert sc(hotcut(states, loop_program)) == sc(states)


def test_sloop_gp_projects_commands(loop_program, loop_run):
    ord_ = topo_order(loop_program)
    proj = sloop_gp(loop_run.states, ord_, loop_program)
    segs = sloop(loop_run.states, ord_, loop_program)
    want = []
    for i, j in segs:
        cmds = tuple(s.command for s in loop_run.states[i:j + 1])
        if cmds not in want:
            want.append(cmds)
    assert proj == want
    assert sloop_gp(loop_run.states[:1], ord_, loop_program) == []
