"""Seeded random generation of loop-bearing programs and initial stores.

Programs are built as structured while-language statements (no bails) and
compiled down, which makes well-formedness and determinism true by
construction; every program carries at least one counter-driven loop that
terminates from any initial store because its counter is (re)initialized in a
prologue.
"""

from __future__ import annotations

import random
from typing import Optional

from .gp import EMPTY, GAssign, GIf, GSkip, GWhile, GPCompiler, Stm
from .lang import Add, Eq, Leq, Lit, Mod, Var
from .semantics import Store
from .values import Value

_INT_POOL = (-3, -1, 0, 1, 2, 3, 5, 10)
_STR_POOL = ("", "a", "ab", "foo")
_INT_VARS = ("x", "y", "z", "w")


def _body_stmt(rng: random.Random, counter: str, depth: int) -> Stm:
    roll = rng.random()
    if roll < 0.30:
        v = rng.choice(_INT_VARS)
        return (GAssign(v, Add(Var(v), Lit(rng.choice((1, 2, 3))))),)
    if roll < 0.45:
        v, w = rng.choice(_INT_VARS), rng.choice(_INT_VARS)
        return (GAssign(v, Add(Var(w), Lit(rng.choice(_INT_POOL)))),)
    if roll < 0.55:
        return (GAssign("s", Add(Var("s"), Lit(rng.choice(("a", "b"))))),)
    if roll < 0.65:
        return (GSkip(),)
    if roll < 0.85:
        m = rng.choice((2, 3, 4))
        test = Eq(Mod(Var(counter), Lit(m)), Lit(rng.randrange(m)))
        inner = _body_stmt(rng, counter, depth + 1)
        return (GIf(test, inner),)
    if depth == 0:
        return _loop(rng, depth + 1)
    return (GAssign(rng.choice(_INT_VARS), Lit(rng.choice(_INT_POOL))),)


def _loop(rng: random.Random, depth: int) -> Stm:
    counter = "i" if depth == 0 else "j"
    bound = rng.randrange(4, 16)
    step = rng.choice((1, 1, 2))
    body: Stm = EMPTY
    for _ in range(rng.randrange(1, 3 if depth else 4)):
        body = body + _body_stmt(rng, counter, depth)
    body = body + (GAssign(counter, Add(Var(counter), Lit(step))),)
    loop = GWhile(Leq(Var(counter), Lit(bound)), body)
    return (GAssign(counter, Lit(0)), loop)


def gen_statement(seed: int, min_cmds: int = 4, max_cmds: int = 40) -> Stm:
    """Deterministic loop-bearing statement; sizes are best-effort bounds on
    the compiled command count."""
    rng = random.Random(seed)
    for _ in range(64):
        stm = _loop(rng, 0)
        if rng.random() < 0.4:
            stm = (GAssign(rng.choice(_INT_VARS), Lit(rng.choice(_INT_POOL))),) + stm
        size = len(GPCompiler().compile(stm).commands)
        if min_cmds <= size <= max_cmds:
            return stm
    return stm


def gen_program(seed: int, min_cmds: int = 4, max_cmds: int = 40):
    return GPCompiler().compile(gen_statement(seed, min_cmds, max_cmds))


def gen_while_program(seed: int) -> Stm:
    """A while-headed statement (no prologue), as the recorder expects."""
    rng = random.Random(seed)
    stm = _loop(rng, 0)
    return stm[1:]  # drop the counter init; callers bind it in the store


def gen_stores(seed: int, variables, count: int,
               int_pool: tuple[int, ...] = _INT_POOL) -> list[Store]:
    """Seeded initial stores over the given variables; some slots stay unbound
    and string-typed slots show up occasionally."""
    rng = random.Random(seed)
    variables = sorted(variables)
    out = []
    for _ in range(count):
        bindings: dict[str, Value] = {}
        for v in variables:
            roll = rng.random()
            if roll < 0.05:
                continue  # unbound
            if v == "s":
                bindings[v] = rng.choice(_STR_POOL)
            else:
                bindings[v] = rng.choice(int_pool)
        bindings["i"] = 0
        bindings["j"] = 0
        bindings.setdefault("s", rng.choice(_STR_POOL))
        out.append(Store(bindings))
    return out
