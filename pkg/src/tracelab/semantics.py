"""Concrete semantics: expression/action evaluation, transitions, bounded runs.

Evaluation is total with ``undef`` as the error value; actions map a store to a
new store or to bottom (None here), and bottom is what makes states stick.
Array reads resolve their index concretely against the variable family
``name_<i>``; an array write to an unbound member is an error (out of bounds).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from . import lang
from .domains import get_domain
from .lang import (Add, AddTyped, ArrayAssign, Assign, BExpr, Command, Cond,
                   Expr, Guard, HALT, Index, Lit, Mod, Not, And, Leq, Eq, Tt,
                   Ff, Program, Put, Skip, Var, command_key)
from .values import Bool, UNDEF, UValue, Value, is_value, value_str


class SemanticsError(Exception):
    pass


# ---------------------------------------------------------------------------
# Stores and states
# ---------------------------------------------------------------------------

class Store:
    """Immutable finite map from variables to values; absence reads as undef."""

    __slots__ = ("_m", "_hash")

    def __init__(self, bindings: Mapping[str, Value] | Iterable[tuple[str, Value]] = ()):
        m = dict(bindings)
        for k, v in m.items():
            if not is_value(v):
                raise SemanticsError(f"not a storable value for {k}: {v!r}")
        self._m = m
        self._hash: Optional[int] = None

    def get(self, var: str) -> UValue:
        return self._m.get(var, UNDEF)

    def set(self, var: str, value: Value) -> "Store":
        if not is_value(value):
            raise SemanticsError(f"not a storable value for {var}: {value!r}")
        m = dict(self._m)
        m[var] = value
        return Store(m)

    def keys(self):
        return self._m.keys()

    def items(self):
        return self._m.items()

    def restrict(self, vars: Iterable[str]) -> "Store":
        xs = set(vars)
        return Store({k: v for k, v in self._m.items() if k in xs})

    def __eq__(self, other):
        return isinstance(other, Store) and self._m == other._m

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._m.items()))
        return self._hash

    def __str__(self):
        inner = ", ".join(f"{k}/{value_str(v)}" for k, v in sorted(self._m.items()))
        return f"[{inner}]"

    def __repr__(self):
        return str(self)

    def __len__(self):
        return len(self._m)


@dataclass(frozen=True)
class State:
    store: Store
    command: Command

    def __str__(self):
        return f"<{self.store}, {self.command}>"


Trace = tuple[State, ...]


@dataclass(frozen=True)
class Run:
    """A bounded maximal trace; truncated means the budget ran out first."""

    states: Trace
    truncated: bool

    def __len__(self):
        return len(self.states)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def eval_expr(e: Expr, store: Store) -> UValue:
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, Var):
        return store.get(e.name)
    if isinstance(e, Add):
        v1, v2 = eval_expr(e.left, store), eval_expr(e.right, store)
        if _is_int(v1) and _is_int(v2):
            return v1 + v2
        if isinstance(v1, str) and isinstance(v2, str):
            return v1 + v2
        return UNDEF
    if isinstance(e, AddTyped):
        v1, v2 = eval_expr(e.left, store), eval_expr(e.right, store)
        if e.tag == "Int":
            return v1 + v2 if _is_int(v1) and _is_int(v2) else UNDEF
        if e.tag == "Str":
            return v1 + v2 if isinstance(v1, str) and isinstance(v2, str) else UNDEF
        raise SemanticsError(f"unknown addition tag {e.tag}")
    if isinstance(e, Mod):
        v1, v2 = eval_expr(e.left, store), eval_expr(e.right, store)
        if _is_int(v1) and _is_int(v2) and v2 != 0:
            return v1 % v2
        return UNDEF
    if isinstance(e, Index):
        idx = eval_expr(e.index, store)
        if not _is_int(idx):
            return UNDEF
        return store.get(f"{e.array}_{idx}")
    raise SemanticsError(f"not an expression: {e!r}")


def eval_bexpr(b: BExpr, store: Store) -> UValue:
    """Three-valued: Bool(True), Bool(False), or undef."""
    if isinstance(b, Tt):
        return Bool(True)
    if isinstance(b, Ff):
        return Bool(False)
    if isinstance(b, Leq):
        v1, v2 = eval_expr(b.left, store), eval_expr(b.right, store)
        if _is_int(v1) and _is_int(v2):
            return Bool(v1 <= v2)
        if isinstance(v1, str) and isinstance(v2, str):
            return Bool(v2.startswith(v1))  # prefix order, not lexicographic
        return UNDEF
    if isinstance(b, Eq):
        v1, v2 = eval_expr(b.left, store), eval_expr(b.right, store)
        if _is_int(v1) and _is_int(v2):
            return Bool(v1 == v2)
        if isinstance(v1, str) and isinstance(v2, str):
            return Bool(v1 == v2)
        if isinstance(v1, Bool) and isinstance(v2, Bool):
            return Bool(v1 == v2)
        return UNDEF
    if isinstance(b, Not):
        v = eval_bexpr(b.arg, store)
        return UNDEF if v is UNDEF else Bool(not v.value)
    if isinstance(b, And):
        v1, v2 = eval_bexpr(b.left, store), eval_bexpr(b.right, store)
        if v1 is UNDEF or v2 is UNDEF:
            return UNDEF
        return Bool(v1.value and v2.value)
    raise SemanticsError(f"not a boolean expression: {b!r}")


def apply_action(a: lang.Action, store: Store) -> Optional[Store]:
    """New store, or None for bottom (failed test, error, guard miss)."""
    if isinstance(a, (Skip, Put)):
        return store
    if isinstance(a, Assign):
        v = eval_expr(a.expr, store)
        return None if v is UNDEF else store.set(a.var, v)
    if isinstance(a, ArrayAssign):
        idx = eval_expr(a.index, store)
        if not _is_int(idx):
            return None
        member = f"{a.array}_{idx}"
        if store.get(member) is UNDEF:
            return None  # out of bounds: only initialized members are writable
        v = eval_expr(a.expr, store)
        return None if v is UNDEF else store.set(member, v)
    if isinstance(a, Cond):
        v = eval_bexpr(a.test, store)
        return store if v == Bool(True) else None
    if isinstance(a, Guard):
        inside = get_domain(a.domain).contains(a.store, store)
        return store if inside == a.positive else None
    raise SemanticsError(f"not an action: {a!r}")


# ---------------------------------------------------------------------------
# Collecting versions
# ---------------------------------------------------------------------------

def collecting_eval(e: Expr, stores: Iterable[Store]) -> set[UValue]:
    return {eval_expr(e, s) for s in stores}


def collecting_bexpr(b: BExpr, stores: Iterable[Store]) -> set[Store]:
    return {s for s in stores if eval_bexpr(b, s) == Bool(True)}


def collecting_action(a: lang.Action, stores: Iterable[Store]) -> set[Store]:
    out = set()
    for s in stores:
        r = apply_action(a, s)
        if r is not None:
            out.add(r)
    return out


# ---------------------------------------------------------------------------
# Transitions and bounded runs
# ---------------------------------------------------------------------------

def step(p: Program, s: State) -> tuple[State, ...]:
    """All program successors of a state; empty means stuck."""
    rho = apply_action(s.command.action, s.store)
    if rho is None or s.command.succ == HALT:
        return ()
    nexts = p.at(s.command.succ)
    return tuple(State(rho, c) for c in nexts)


def _viable(s: State) -> bool:
    """Whether the state's own action can fire; used to resolve branch pairs."""
    a = s.command.action
    if isinstance(a, Cond):
        return eval_bexpr(a.test, s.store) == Bool(True)
    if isinstance(a, Guard):
        return get_domain(a.domain).contains(a.store, s.store) == a.positive
    return True


def _resolve(cands: Sequence[State]) -> Optional[State]:
    if not cands:
        return None
    if len(cands) == 1:
        return cands[0]
    if len(cands) == 2:
        c0, c1 = cands
        if lang.is_branching(c0.command.action) and \
                c1.command.action == lang.negate_action(c0.command.action):
            live = [s for s in cands if _viable(s)]
            if len(live) == 1:
                return live[0]
            if not live:
                # both stick (undef test): either extension is maximal after
                # one more state; pick deterministically
                return min(cands, key=lambda s: command_key(s.command))
    raise SemanticsError(
        "nondeterministic choice at label "
        f"{cands[0].command.label}: {[str(s.command) for s in cands]}"
    )


def initial_states(p: Program, rho0: Store) -> tuple[State, ...]:
    return tuple(State(rho0, c) for c in p.at(p.entry))


def run(p: Program, rho0: Store, budget: int) -> Run:
    """The unique maximal trace from the entry, truncated at ``budget`` states."""
    if budget < 1:
        raise SemanticsError("budget must be at least 1")
    entry = initial_states(p, rho0)
    if not entry:
        raise SemanticsError(f"no command at entry label {p.entry}")
    cur = _resolve(entry)
    states = [cur]
    while len(states) < budget:
        nxt = _resolve(step(p, cur))
        if nxt is None:
            return Run(tuple(states), truncated=False)
        states.append(nxt)
        cur = nxt
    # truncated iff one more state would have been possible
    more = _resolve(step(p, cur)) is not None
    return Run(tuple(states), truncated=more)


def trace_linked(p: Program, states: Sequence[State]) -> bool:
    """Checks the partial-trace linkage: each state is a step-successor of the last."""
    for a, b in zip(states, states[1:]):
        if b not in step(p, a):
            return False
    return all(s.command in p.commands for s in states)


def suffixes(states: Sequence[State]):
    """All nonempty suffixes: the bounded stand-in for traces not starting at entry."""
    for k in range(len(states)):
        yield tuple(states[k:])


def x_history(states: Sequence[State], var: str) -> list[UValue]:
    """Distinct consecutive values of one variable along a trace."""
    out: list[UValue] = []
    for s in states:
        v = s.store.get(var)
        if v is UNDEF:
            continue
        if not out or out[-1] != v:
            out.append(v)
    return out
