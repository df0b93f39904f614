"""Optimizations confined to stitched hot paths, and their composition scheme.

Each optimization maps the stitch's command set to a new command set; the full
transform splices that back next to the untouched remainder.  Boundary
preservation (entry label kept, exit successors kept) is verified structurally
rather than trusted.
"""

from __future__ import annotations

from typing import Callable, Iterable, Optional

from .domains import CPConst, INT, STRING, eval_type, get_domain
from .extract import StitchResult, extract_nested
from .hotpath import HotPath
from .lang import (Add, AddTyped, Assign, Command, Cond, Guard, Program, Put,
                   action_vars, bexpr_vars, expr_vars, is_branching, subst_expr)
from .values import UNDEF

Optimization = Callable[[StitchResult], frozenset[Command]]


class OptimizeError(Exception):
    pass


def identity_opt(st: StitchResult) -> frozenset[Command]:
    return st.stitched


# ---------------------------------------------------------------------------
# Type specialization
# ---------------------------------------------------------------------------

def type_specialize(st: StitchResult) -> frozenset[Command]:
    """Replace generic additions in stitched assignments by the type-specific
    form whenever the governing typed guard decides the operand types."""
    if st.hp.domain != "type":
        raise OptimizeError("type specialization needs type-domain guards")
    out = set(st.stitched)
    for i, cmd in st.body.items():
        act = cmd.action
        if not (isinstance(act, Assign) and isinstance(act.expr, Add)):
            continue
        t = eval_type(act.expr, st.hp.pairs[i][0])
        if t == INT:
            new_expr = AddTyped(act.expr.left, act.expr.right, "Int")
        elif t == STRING:
            new_expr = AddTyped(act.expr.left, act.expr.right, "Str")
        else:
            continue
        out.discard(cmd)
        out.add(Command(cmd.label, Assign(act.var, new_expr), cmd.succ))
    return frozenset(out)


# ---------------------------------------------------------------------------
# Constant folding
# ---------------------------------------------------------------------------

def free_vars(commands: Iterable[Command]) -> frozenset[str]:
    """Variables occurring in the commands that are never an assignment target."""
    occurring: set[str] = set()
    assigned: set[str] = set()
    for c in commands:
        a = c.action
        if isinstance(a, Guard):
            continue  # guard keys are metadata, not occurrences
        occurring |= action_vars(a)
        if isinstance(a, Assign):
            assigned.add(a.var)
    return frozenset(occurring - assigned)


def const_fold(st: StitchResult) -> frozenset[Command]:
    """Substitute constants recorded by the cp guards for free variables in
    stitched assignment right-hand sides."""
    if st.hp.domain != "cp":
        raise OptimizeError("constant folding needs cp-domain guards")
    fv = free_vars(st.stitched)
    out = set(st.stitched)
    for i, cmd in st.body.items():
        act = cmd.action
        if not isinstance(act, Assign):
            continue
        guard_store = st.hp.pairs[i][0]
        binding = {}
        for y in expr_vars(act.expr) & fv:
            slot = guard_store.get(y)
            if isinstance(slot, CPConst) and slot.value is not UNDEF:
                binding[y] = slot.value
        if not binding:
            continue
        out.discard(cmd)
        out.add(Command(cmd.label, Assign(act.var, subst_expr(act.expr, binding)), cmd.succ))
    return frozenset(out)


# ---------------------------------------------------------------------------
# Dead store elimination (demo of a non-sc-preserving optimization)
# ---------------------------------------------------------------------------

def _action_reads(cmd: Command) -> frozenset[str]:
    a = cmd.action
    if isinstance(a, Assign):
        return expr_vars(a.expr)
    if isinstance(a, Cond):
        return bexpr_vars(a.test)
    if isinstance(a, Put):
        return a.vars
    return action_vars(a)


def _chain_successor(st: StitchResult, cmd: Command) -> Optional[Command]:
    """The unique stitched command the chain continues with; None at an exit
    edge or a branching label (conditional pairs stop the walk)."""
    if cmd.succ not in st.stitch_labels():
        return None
    nexts = [c for c in st.stitched if c.label == cmd.succ]
    live = [c for c in nexts if not (isinstance(c.action, Guard) and not c.action.positive)]
    return live[0] if len(live) == 1 else None


def dead_store_eliminate(st: StitchResult) -> frozenset[Command]:
    """Remove stitched assignments whose value is overwritten before any read,
    output, or possible exit from the stitch.

    The safety walk is conservative and syntactic: a guard that can actually
    fail, a conditional pair (either branch may leave), an output or read of
    the variable, or an edge leaving the stitch all block elimination; only a
    reassignment reached first makes the store dead.
    """
    candidates: list[Command] = []
    for cmd in sorted(st.body.values(), key=lambda c: str(c)):
        act = cmd.action
        if not isinstance(act, Assign):
            continue
        z = act.var
        cur = _chain_successor(st, cmd)
        safe = False
        visited: set[Command] = set()
        while cur is not None and cur not in visited:
            visited.add(cur)
            a = cur.action
            if isinstance(a, Guard):
                if not get_domain(a.domain).is_universal(a.store):
                    break  # the negative twin is a live exit
                cur = _chain_successor(st, cur)
                continue
            if z in _action_reads(cur):
                break
            if is_branching(a):
                break
            if isinstance(a, Assign) and a.var == z:
                safe = True
                break
            if cur.succ not in st.stitch_labels():
                break
            cur = _chain_successor(st, cur)
        if safe:
            candidates.append(cmd)

    out = set(st.stitched)
    for dead in candidates:
        out.discard(dead)
        rewired = {c for c in out if c.succ == dead.label}
        for c in rewired:
            out.discard(c)
            out.add(Command(c.label, c.action, dead.succ))
    return frozenset(out)


# ---------------------------------------------------------------------------
# Full composition
# ---------------------------------------------------------------------------

def _exit_successors(cmds: Iterable[Command], stitch_labels: frozenset[str]) -> frozenset[str]:
    return frozenset(c.succ for c in cmds if c.succ not in stitch_labels)


def optimize_full(p: Program, hp: HotPath, opt: Optimization,
                  original: Optional[Program] = None) -> Program:
    """Extract then optimize in place: remainder union optimized stitch."""
    st = extract_nested(p, hp, original if original is not None else p)
    new = opt(st)

    old_labels = st.stitch_labels()
    new_labels = frozenset(c.label for c in new)
    if not new_labels <= old_labels | ({st.entry_label} - {None}):
        raise OptimizeError("optimization invented labels outside the stitch")
    if st.entry_label is not None and st.entry_label not in new_labels:
        raise OptimizeError("optimization dropped the stitch entry")
    if not _exit_successors(new, new_labels) <= _exit_successors(st.stitched, old_labels):
        raise OptimizeError("optimization changed the stitch exits")

    transformed = Program(
        (st.transformed.commands - st.stitched) | new,
        st.transformed.entry,
        st.transformed.arrays,
    )
    return transformed


PASSES: dict[str, Optimization] = {
    "ts": type_specialize,
    "cf": const_fold,
    "dse": dead_store_eliminate,
}
