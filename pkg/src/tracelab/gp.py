"""The while/bail comparison language: baseline semantics, recording tracer,
compilation into labeled commands, and the cross-model checks.

Statements are command sequences in continuation style; ``bail B to S`` jumps
out of an extracted trace into residual code S, discarding the continuation.
The recorder follows the published rules: recording starts at a true loop
guard, ifs record as bails, inner whiles record a skip and unfold, a bail
aborts recording, and re-reaching the subject loop stitches ``while B do t``
in place (with the identity optimization).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

from . import hotpath
from .lang import (BExpr, Command, Expr, HALT, Program, Skip as CoreSkip,
                   Assign as CoreAssign, Cond, negate_bexpr)
from .semantics import State, Store, Run, eval_bexpr, eval_expr, run
from .observe import sc, st
from .values import Bool, UNDEF


class GPError(Exception):
    pass


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GSkip:
    def __str__(self):
        return "skip;"


@dataclass(frozen=True)
class GAssign:
    var: str
    expr: Expr

    def __str__(self):
        return f"{self.var} := {self.expr};"


@dataclass(frozen=True)
class GIf:
    test: BExpr
    body: "Stm"

    def __str__(self):
        return f"if {self.test} then {{ {stm_str(self.body)} }}"


@dataclass(frozen=True)
class GWhile:
    test: BExpr
    body: "Stm"

    def __str__(self):
        return f"while {self.test} do {{ {stm_str(self.body)} }}"


@dataclass(frozen=True)
class GBail:
    test: BExpr
    target: "Stm"

    def __str__(self):
        return f"bail {self.test} to {{ {stm_str(self.target)} }}"


GCmd = Union[GSkip, GAssign, GIf, GWhile, GBail]
Stm = tuple[GCmd, ...]
EMPTY: Stm = ()


def stm_str(s: Stm) -> str:
    return " ".join(str(c) for c in s) if s else ""


def stm_vars(s: Stm) -> frozenset[str]:
    from .lang import bexpr_vars, expr_vars
    out: set[str] = set()
    for c in s:
        if isinstance(c, GAssign):
            out |= {c.var} | expr_vars(c.expr)
        elif isinstance(c, (GIf, GWhile)):
            out |= bexpr_vars(c.test) | stm_vars(c.body)
        elif isinstance(c, GBail):
            out |= bexpr_vars(c.test) | stm_vars(c.target)
    return frozenset(out)


def _unfolded_if(w: GWhile, k: Stm) -> Stm:
    return (GIf(w.test, w.body + (w,)),) + k


# ---------------------------------------------------------------------------
# Baseline small-step semantics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GPState:
    store: Store
    stm: Stm

    def __str__(self):
        return f"<{self.store}, {stm_str(self.stm)}>"


def gp_step(s: GPState) -> Optional[GPState]:
    """One baseline step, or None when stuck (empty program, undefined test
    or assignment; undefined values stick like in the core language)."""
    rho, stm = s.store, s.stm
    if not stm:
        return None
    head, k = stm[0], stm[1:]
    if isinstance(head, GSkip):
        return GPState(rho, k)
    if isinstance(head, GAssign):
        v = eval_expr(head.expr, rho)
        if v is UNDEF:
            return None
        return GPState(rho.set(head.var, v), k)
    if isinstance(head, GIf):
        b = eval_bexpr(head.test, rho)
        if b == Bool(True):
            return GPState(rho, head.body + k)
        if b == Bool(False):
            return GPState(rho, k)
        return None
    if isinstance(head, GWhile):
        return GPState(rho, _unfolded_if(head, k))
    if isinstance(head, GBail):
        b = eval_bexpr(head.test, rho)
        if b == Bool(True):
            return GPState(rho, head.target)
        if b == Bool(False):
            return GPState(rho, k)
        return None
    raise GPError(f"not a statement head: {head!r}")


@dataclass(frozen=True)
class GPRun:
    states: tuple[GPState, ...]
    truncated: bool


def gp_run(stm: Stm, rho0: Store, budget: int) -> GPRun:
    cur = GPState(rho0, stm)
    states = [cur]
    while len(states) < budget:
        nxt = gp_step(cur)
        if nxt is None:
            return GPRun(tuple(states), truncated=False)
        states.append(nxt)
        cur = nxt
    return GPRun(tuple(states), truncated=gp_step(cur) is not None)


# ---------------------------------------------------------------------------
# Compilation into the core language
# ---------------------------------------------------------------------------

class GPCompiler:
    """Injective statement labeling plus the compilation functions.

    Labels are handed out per distinct statement in first-encounter order, so
    a shared continuation compiles to the same label wherever it occurs.
    """

    def __init__(self, prefix: str = "s"):
        self._labels: dict[Stm, str] = {}
        self._prefix = prefix

    def label(self, s: Stm) -> str:
        got = self._labels.get(s)
        if got is None:
            got = f"{self._prefix}{len(self._labels)}"
            self._labels[s] = got
        return got

    def first_commands(self, s: Stm) -> frozenset[Command]:
        l = self.label
        if not s:
            return frozenset({Command(l(s), CoreSkip(), HALT)})
        head, k = s[0], s[1:]
        if isinstance(head, GSkip):
            return frozenset({Command(l(s), CoreSkip(), l(k))})
        if isinstance(head, GAssign):
            return frozenset({Command(l(s), CoreAssign(head.var, head.expr), l(k))})
        if isinstance(head, GIf):
            return frozenset({
                Command(l(s), Cond(head.test), l(head.body + k)),
                Command(l(s), Cond(negate_bexpr(head.test)), l(k)),
            })
        if isinstance(head, GWhile):
            return frozenset({Command(l(s), CoreSkip(), l(_unfolded_if(head, k)))})
        if isinstance(head, GBail):
            return frozenset({
                Command(l(s), Cond(head.test), l(head.target)),
                Command(l(s), Cond(negate_bexpr(head.test)), l(k)),
            })
        raise GPError(f"not a statement head: {head!r}")

    def compile(self, s: Stm) -> Program:
        cmds: set[Command] = set()
        worklist = [s]
        done: set[Stm] = set()
        while worklist:
            cur = worklist.pop()
            if cur in done:
                continue
            done.add(cur)
            cmds |= self.first_commands(cur)
            head, k = (cur[0], cur[1:]) if cur else (None, EMPTY)
            if head is None:
                continue
            if isinstance(head, (GSkip, GAssign)):
                worklist.append(k)
            elif isinstance(head, GIf):
                worklist.append(head.body + k)
                worklist.append(k)
            elif isinstance(head, GWhile):
                worklist.append(_unfolded_if(head, k))
            elif isinstance(head, GBail):
                worklist.append(head.target)
                worklist.append(k)
        return Program(frozenset(cmds), self.label(s))

    def compile_state(self, s: GPState) -> State:
        """The command the statement is about to run; branch-dependent for
        if/bail heads, an error when their test is undefined."""
        rho, stm = s.store, s.stm
        cands = self.first_commands(stm)
        if not stm:
            (c,) = cands
            return State(rho, c)
        head = stm[0]
        if isinstance(head, (GIf, GBail)):
            b = eval_bexpr(head.test, rho)
            if b is UNDEF:
                raise GPError(f"undefined test at state {s}")
            want_neg = (b == Bool(False))
            for c in cands:
                is_neg = c.action.test == negate_bexpr(head.test)
                if is_neg == want_neg:
                    return State(rho, c)
            raise GPError("branch command missing")
        (c,) = cands
        return State(rho, c)

    def compile_trace(self, states: Sequence[GPState]) -> tuple[State, ...]:
        return tuple(self.compile_state(s) for s in states)

    def decompile_trace(self, states: Sequence[State], s0: Stm) -> tuple[GPState, ...]:
        """Reconstructs the unique statement sequence behind a compiled trace."""
        if not states:
            return ()
        if states[0].command.label != self.label(s0):
            raise GPError("trace is not anchored at the program entry")
        cur = GPState(states[0].store, s0)
        out = [cur]
        for st_ in states[1:]:
            nxt = gp_step(cur)
            if nxt is None:
                raise GPError("compiled trace continues past a stuck state")
            if self.compile_state(nxt) != st_:
                raise GPError(f"trace diverges from the statement semantics at {st_}")
            out.append(nxt)
            cur = nxt
        return tuple(out)


# ---------------------------------------------------------------------------
# Tracing relation (recording mode)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GPTState:
    """Recording state: entry loop, trace so far, current program."""

    store: Store
    kw: Stm  # always while-headed
    trace: Stm
    stm: Stm

    def __str__(self):
        return f"<{self.store}, recording {stm_str(self.trace)!r}, at {stm_str(self.stm)}>"


GPAnyState = Union[GPState, GPTState]


def _t1_pattern(s: GPState) -> Optional[tuple[Stm, Stm]]:
    """Matches the unfolded-if of a while loop: returns (kw, body-continuation)."""
    if not s.stm:
        return None
    head, k = s.stm[0], s.stm[1:]
    if not isinstance(head, GIf) or not head.body:
        return None
    w = head.body[-1]
    if isinstance(w, GWhile) and head.body[:-1] == w.body and w.test == head.test:
        return ((w,) + k, w.body + (w,) + k)
    return None


def gp_trace_step(s: GPAnyState, record_on: Optional[Stm] = None) -> Optional[GPAnyState]:
    """One step of the combined baseline/tracing relation.

    From a plain state, recording starts when the state is the unfolded if of
    ``record_on`` (or of any loop when unset) with a true test; otherwise the
    baseline applies.  In recording mode skips and assignments append to the
    trace, ifs append bails, an inner while appends a skip and unfolds, the
    subject loop stitches, and anything else (a bail) aborts recording.
    """
    if isinstance(s, GPState):
        m = _t1_pattern(s)
        if m is not None:
            kw, cont = m
            if (record_on is None or kw == record_on) and \
                    eval_bexpr(s.stm[0].test, s.store) == Bool(True):
                return GPTState(s.store, kw, EMPTY, cont)
        return gp_step(s)

    rho, kw, t, stm = s.store, s.kw, s.trace, s.stm
    if stm and isinstance(stm[0], GSkip):
        return GPTState(rho, kw, t + (GSkip(),), stm[1:])
    if stm and isinstance(stm[0], GAssign):
        head = stm[0]
        v = eval_expr(head.expr, rho)
        if v is UNDEF:
            return None
        return GPTState(rho.set(head.var, v), kw, t + (head,), stm[1:])
    if stm and isinstance(stm[0], GIf):
        head, k = stm[0], stm[1:]
        b = eval_bexpr(head.test, rho)
        if b == Bool(True):
            return GPTState(rho, kw, t + (GBail(negate_bexpr(head.test), k),), head.body + k)
        if b == Bool(False):
            return GPTState(rho, kw, t + (GBail(head.test, head.body + k),), k)
        return None
    if stm and isinstance(stm[0], GWhile):
        if stm == kw:
            # stitch rule; the optimization is the identity
            return GPState(rho, (GWhile(stm[0].test, t),) + stm[1:])
        return GPTState(rho, kw, t + (GSkip(),), _unfolded_if(stm[0], stm[1:]))
    if stm != kw:
        base = gp_step(GPState(rho, stm))
        if base is not None:
            return base  # recording aborted
    return None


# ---------------------------------------------------------------------------
# Hot-path recording and the equivalence check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RecordResult:
    trace_stm: Stm            # the recorded trace t
    stitched: Stm             # (while B do t) K, the post-stitch program
    hot_path: tuple[Command, ...]
    compiler: GPCompiler
    compiled_program: Program
    extended: tuple[GPAnyState, ...]  # recording run, without the post-stitch state


def gp_record_hot_path(stm: Stm, rho0: Store, budget: int) -> RecordResult:
    """Drive the tracing relation on a while-headed program until the stitch
    rule fires; returns the recorded trace and its hot path in the compiled
    program, mined by the storeless loop selector."""
    if not stm or not isinstance(stm[0], GWhile):
        raise GPError("recording needs a while-headed program")
    comp = GPCompiler()
    program = comp.compile(stm)

    cur: GPAnyState = GPState(rho0, stm)
    states: list[GPAnyState] = [cur]
    stitched: Optional[Stm] = None
    for _ in range(budget):
        was_recording = isinstance(cur, GPTState)
        nxt = gp_trace_step(cur, record_on=stm)
        if nxt is None:
            raise GPError(f"stuck before any stitch: {cur}")
        if was_recording and isinstance(nxt, GPState):
            if nxt.stm and isinstance(nxt.stm[0], GWhile) and cur.stm == cur.kw:
                stitched = nxt.stm
                break
            raise GPError("recording aborted at a bail command")
        states.append(nxt)
        cur = nxt
    if stitched is None:
        raise GPError("budget exhausted before the stitch rule fired")

    t = states[-1].trace
    compiled = _compile_extended(comp, states)
    ord_ = hotpath.topo_order(program)
    hp = tuple(s.command for s in compiled[:-1])
    mined = hotpath.sloop_gp(compiled, ord_, program)
    if hp not in mined:
        raise GPError("recorded path was not mined back from the compiled trace")
    return RecordResult(t, stitched, hp, comp, program, tuple(states))


def _compile_extended(comp: GPCompiler, states: Sequence[GPAnyState]) -> tuple[State, ...]:
    """Recording states compile through their current program component."""
    out = []
    for s in states:
        if isinstance(s, GPTState):
            out.append(comp.compile_state(GPState(s.store, s.stm)))
        else:
            out.append(comp.compile_state(s))
    return tuple(out)


def alpha_hot_gp(traces, p: Program) -> list[tuple[Command, ...]]:
    ord_ = hotpath.topo_order(p)
    out: list[tuple[Command, ...]] = []
    for tr in traces:
        for cmds in hotpath.sloop_gp(tr, ord_, p):
            if cmds not in out:
                out.append(cmds)
    return out


@dataclass(frozen=True)
class GPEquivResult:
    passed: bool
    renaming: Optional[dict[str, str]]
    sc_agree: bool
    record: RecordResult


def gp_equivalence_check(stm: Stm, rho0: Store, budget: int) -> GPEquivResult:
    """Records a hot path, then checks that compiling the stitched program
    agrees with the guardless extraction of the compiled original (equality up
    to renaming), and that both programs have the same store-change behavior
    from rho0 at this budget."""
    from .extract import extract_gp

    rec = gp_record_hot_path(stm, rho0, budget)
    left = GPCompiler().compile(rec.stitched)
    right = extract_gp(rec.compiled_program, rec.hot_path)
    from .lang import rename_equal
    renaming = rename_equal(left, right)

    r1 = gp_run(stm, rho0, budget)
    r2 = gp_run(rec.stitched, rho0, budget)
    s1 = frozenset({sc(r1.states)})
    s2 = frozenset({sc(r2.states)})
    if r1.truncated or r2.truncated:
        a, b = sc(r1.states), sc(r2.states)
        k = min(len(a), len(b))
        agree = a[:k] == b[:k]
    else:
        agree = s1 == s2
    return GPEquivResult(renaming is not None and agree, renaming, agree, rec)
