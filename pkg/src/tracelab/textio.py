"""Program text format.

Line-oriented, UTF-8::

    #entry L0
    #array primes 100
    L0: x := 0 -> L1          ; comment
    L1: (x <= 20) -> L2
    L1: !(x <= 20) -> L5
    L4: guard type {i: Int, primes: Bool[100]} -> L5
    L4: !guard type {i: Int, primes: Bool[100]} -> L7
    L5: put {x, y} -> L6
    L6: skip -> .

Comments start with ``;``.  ``.`` is the final successor.  Typed additions
print as ``+Int`` / ``+Str``.  Array guards may use ``name: Bool[]`` when the
family size was declared with ``#array``.
"""

from __future__ import annotations

import json
import re
from typing import Optional

from . import lang
from .domains import AbstractStore, get_domain
from .lang import (Add, AddTyped, And, ArrayAssign, Assign, Command, Cond, Eq,
                   Ff, Guard, HALT, Index, Leq, Lit, Mod, Not, Program, Put,
                   Skip, Tt, Var, command_key)
from .semantics import Store
from .values import Bool, UNDEF, value_str


class ParseError(Exception):
    def __init__(self, msg: str, line: Optional[int] = None):
        self.line = line
        super().__init__(msg if line is None else f"line {line}: {msg}")


_TOKEN_RE = re.compile(
    r"""\s*(?:
        (?P<string>"(?:[^"\\]|\\.)*") |
        (?P<int>-?\d+) |
        (?P<name>[A-Za-z_][A-Za-z0-9_#]*) |
        (?P<op>:=|->|<=|&&|\+Int|\+Str|[():{},=%+!\[\].])
    )""",
    re.X,
)


def tokenize(text: str, line_no: Optional[int] = None) -> list[str]:
    toks = []
    pos = 0
    while pos < len(text):
        if text[pos] == ";":
            break
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos:
            rest = text[pos:].strip()
            if not rest:
                break
            raise ParseError(f"cannot tokenize at: {rest[:20]!r}", line_no)
        toks.append(m.group(0).strip())
        pos = m.end()
    return toks


class _Cursor:
    def __init__(self, toks: list[str], line_no: Optional[int] = None):
        self.toks = toks
        self.i = 0
        self.line_no = line_no

    def peek(self) -> Optional[str]:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self) -> str:
        t = self.peek()
        if t is None:
            raise ParseError("unexpected end of line", self.line_no)
        self.i += 1
        return t

    def expect(self, tok: str) -> None:
        t = self.next()
        if t != tok:
            raise ParseError(f"expected {tok!r}, got {t!r}", self.line_no)

    def save(self) -> int:
        return self.i

    def restore(self, mark: int) -> None:
        self.i = mark

    def fail(self, msg: str):
        raise ParseError(msg, self.line_no)


_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_#]*$")


def _is_name(tok: Optional[str]) -> bool:
    return tok is not None and bool(_NAME_RE.match(tok)) and tok not in ("tt", "ff", "skip", "guard", "put", "undef")


def _unquote(tok: str) -> str:
    return json.loads(tok)  # the literal syntax matches JSON strings


# ---------------------------------------------------------------------------
# Expression / boolean grammar
# ---------------------------------------------------------------------------

def _parse_term(c: _Cursor, typed: bool):
    t = c.peek()
    if t is None:
        c.fail("expected expression")
    if t == "(":
        c.next()
        e = _parse_expr(c, typed)
        c.expect(")")
        return e
    if t == "tt":
        c.next()
        return Lit(Bool(True))
    if t == "ff":
        c.next()
        return Lit(Bool(False))
    if t.startswith('"'):
        c.next()
        return Lit(_unquote(t))
    if re.fullmatch(r"-?\d+", t):
        c.next()
        return Lit(int(t))
    if _is_name(t):
        c.next()
        if c.peek() == "[":
            c.next()
            idx = _parse_expr(c, typed)
            c.expect("]")
            return Index(t, idx)
        return Var(t)
    c.fail(f"expected expression, got {t!r}")


def _parse_expr(c: _Cursor, typed: bool):
    e = _parse_term(c, typed)
    while c.peek() in ("+", "+Int", "+Str", "%"):
        op = c.next()
        rhs = _parse_term(c, typed)
        if op == "+":
            e = Add(e, rhs)
        elif op == "%":
            e = Mod(e, rhs)
        else:
            if not typed:
                c.fail(f"typed addition {op} not allowed without the typed-syntax flag")
            e = AddTyped(e, rhs, op[1:])
    return e


def _parse_bexpr(c: _Cursor, typed: bool):
    b = _parse_bterm(c, typed)
    while c.peek() == "&&":
        c.next()
        b = And(b, _parse_bterm(c, typed))
    return b


def _parse_bterm(c: _Cursor, typed: bool):
    t = c.peek()
    if t == "!":
        c.next()
        return lang.negate_bexpr(_parse_bterm(c, typed))
    if t == "tt":
        nxt = c.save()
        c.next()
        if c.peek() in ("<=", "="):  # boolean literal inside a comparison
            c.restore(nxt)
        else:
            return Tt()
    if t == "ff":
        nxt = c.save()
        c.next()
        if c.peek() in ("<=", "="):
            c.restore(nxt)
        else:
            return Ff()
    # try a comparison first; fall back to a parenthesized boolean
    mark = c.save()
    try:
        left = _parse_expr(c, typed)
        op = c.peek()
        if op in ("<=", "="):
            c.next()
            right = _parse_expr(c, typed)
            return Leq(left, right) if op == "<=" else Eq(left, right)
        raise ParseError("not a comparison", c.line_no)
    except ParseError:
        c.restore(mark)
    if c.peek() == "(":
        c.next()
        b = _parse_bexpr(c, typed)
        c.expect(")")
        return b
    c.fail(f"expected boolean expression, got {c.peek()!r}")


# ---------------------------------------------------------------------------
# Guard store literals
# ---------------------------------------------------------------------------

_FAMILY_DECL_RE = re.compile(r"^\[(\d*)\]$")


def _parse_abstract_store(c: _Cursor, tag: str, arrays: dict[str, int]) -> AbstractStore:
    dom = get_domain(tag)
    t = c.peek()
    if t == "bot":
        c.next()
        return dom.bottom()
    if t == "top":
        c.next()
        return dom.top()
    c.expect("{")
    bindings: dict[str, object] = {}
    while c.peek() != "}":
        name = c.next()
        if not _NAME_RE.match(name):
            c.fail(f"bad variable name {name!r}")
        c.expect(":")
        tok = c.next()
        if tok.startswith('"'):
            from .domains import CPConst
            val = CPConst(_unquote(tok))
        else:
            try:
                val = dom.parse_value(tok)
            except Exception as exc:
                c.fail(str(exc))
        # optional family suffix: name: Bool[100] or name: Bool[]
        if c.peek() == "[":
            c.next()
            if c.peek() == "]":
                size = arrays.get(name)
                if size is None:
                    c.fail(f"family {name}[] needs a #array declaration")
            else:
                size_tok = c.next()
                if not size_tok.isdigit():
                    c.fail(f"bad family size {size_tok!r}")
                size = int(size_tok)
            c.expect("]")
            for i in range(size):
                bindings[f"{name}_{i}"] = val
        else:
            bindings[name] = val
        if c.peek() == ",":
            c.next()
    c.expect("}")
    return dom.make(bindings)


# ---------------------------------------------------------------------------
# Actions and whole programs
# ---------------------------------------------------------------------------

def _parse_action(c: _Cursor, typed: bool, arrays: dict[str, int]) -> lang.Action:
    t = c.peek()
    if t == "skip":
        c.next()
        return Skip()
    if t == "put":
        c.next()
        c.expect("{")
        names = []
        while c.peek() != "}":
            names.append(c.next())
            if c.peek() == ",":
                c.next()
        c.expect("}")
        return Put(frozenset(names))
    if t in ("guard",) or (t == "!" and c.toks[c.i + 1:c.i + 2] == ["guard"]):
        positive = True
        if t == "!":
            c.next()
            positive = False
        c.expect("guard")
        tag = c.next()
        store = _parse_abstract_store(c, tag, arrays)
        return Guard(tag, store, positive)
    # assignment heads: x := E  or  a[i] := E
    if _is_name(t):
        mark = c.save()
        name = c.next()
        if c.peek() == ":=":
            c.next()
            return Assign(name, _parse_expr(c, typed))
        if c.peek() == "[":
            c.next()
            idx = _parse_expr(c, typed)
            c.expect("]")
            if c.peek() == ":=":
                c.next()
                return ArrayAssign(name, idx, _parse_expr(c, typed))
        c.restore(mark)
    return Cond(_parse_bexpr(c, typed))


def parse_command(text: str, line_no: Optional[int] = None, typed: bool = True,
                  arrays: Optional[dict[str, int]] = None) -> Command:
    c = _Cursor(tokenize(text, line_no), line_no)
    label = c.next()
    if not _NAME_RE.match(label):
        c.fail(f"bad label {label!r}")
    c.expect(":")
    action = _parse_action(c, typed, arrays or {})
    c.expect("->")
    succ = c.next()
    if succ != HALT and not _NAME_RE.match(succ):
        c.fail(f"bad successor label {succ!r}")
    if c.peek() is not None:
        c.fail(f"trailing tokens: {c.peek()!r}")
    return Command(label, action, succ)


def parse_program(text: str, typed_syntax: bool = True) -> Program:
    entry: Optional[str] = None
    arrays: dict[str, int] = {}
    commands: list[Command] = []
    seen: set[Command] = set()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()  # tokenize stops at ';' outside string literals
        if not line or line.startswith(";"):
            continue
        if line.startswith("#entry"):
            toks = tokenize(line[len("#entry"):], line_no)
            if len(toks) != 1:
                raise ParseError("#entry takes one label", line_no)
            entry = toks[0]
            continue
        if line.startswith("#array"):
            toks = tokenize(line[len("#array"):], line_no)
            if len(toks) != 2 or not toks[1].isdigit():
                raise ParseError("#array takes a name and a size", line_no)
            arrays[toks[0]] = int(toks[1])
            continue
        if line.startswith("#"):
            raise ParseError(f"unknown directive: {line.split()[0]}", line_no)
        cmd = parse_command(line, line_no, typed_syntax, arrays)
        if cmd in seen:
            raise ParseError(f"duplicate command: {cmd}", line_no)
        seen.add(cmd)
        commands.append(cmd)
    if entry is None:
        raise ParseError("missing #entry directive")
    if not commands:
        raise ParseError("no commands")
    return Program(frozenset(commands), entry, tuple(sorted(arrays.items())))


def print_program(p: Program) -> str:
    lines = [f"#entry {p.entry}"]
    for name, size in p.arrays:
        lines.append(f"#array {name} {size}")
    for c in p.sorted_commands:
        lines.append(str(c))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Trace and store I/O
# ---------------------------------------------------------------------------

def store_to_json(store: Store) -> dict:
    out = {}
    for k, v in sorted(store.items()):
        out[k] = v.value if isinstance(v, Bool) else v
    return out


def store_from_json(obj: dict) -> Store:
    bindings = {}
    for k, v in obj.items():
        if isinstance(v, bool):
            bindings[k] = Bool(v)
        elif isinstance(v, (int, str)):
            bindings[k] = v
        else:
            raise ParseError(f"bad store value for {k}: {v!r}")
    return Store(bindings)


def trace_to_jsonl(states, truncated: bool = False) -> str:
    lines = []
    for s in states:
        lines.append(json.dumps({
            "store": store_to_json(s.store),
            "label": s.command.label,
            "action": str(s.command.action),
            "succ": s.command.succ,
        }, sort_keys=True))
    if truncated:
        lines.append(json.dumps({"truncated": True}))
    return "\n".join(lines) + "\n"


_GP_TOKEN_RE = re.compile(
    r"""\s*(?:
        (?P<string>"(?:[^"\\]|\\.)*") |
        (?P<int>-?\d+) |
        (?P<name>[A-Za-z_][A-Za-z0-9_]*) |
        (?P<op>:=|<=|&&|[(){},=%+!;])
    )""",
    re.X,
)


def _gp_tokenize(text: str) -> list[str]:
    toks = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        pos = 0
        while pos < len(line):
            m = _GP_TOKEN_RE.match(line, pos)
            if not m or m.end() == pos:
                rest = line[pos:].strip()
                if not rest:
                    break
                raise ParseError(f"cannot tokenize at: {rest[:20]!r}", line_no)
            toks.append(m.group(0).strip())
            pos = m.end()
    return toks


def parse_gp_program(text: str):
    """Concrete while-language syntax: ``skip;``, ``x := E;``,
    ``if B then { ... }``, ``while B do { ... }``, ``bail B to { ... }``.
    Comments start with ``#``."""
    from .gp import GAssign, GBail, GIf, GSkip, GWhile

    c = _Cursor(_gp_tokenize(text))

    def parse_seq(stop_at_brace: bool):
        out = []
        while True:
            t = c.peek()
            if t is None or (stop_at_brace and t == "}"):
                return tuple(out)
            out.append(parse_stmt())

    def parse_block():
        c.expect("{")
        s = parse_seq(stop_at_brace=True)
        c.expect("}")
        return s

    def parse_stmt():
        t = c.peek()
        if t == "skip":
            c.next()
            c.expect(";")
            return GSkip()
        if t == "if":
            c.next()
            b = _parse_bexpr(c, typed=False)
            c.expect("then")
            return GIf(b, parse_block())
        if t == "while":
            c.next()
            b = _parse_bexpr(c, typed=False)
            c.expect("do")
            return GWhile(b, parse_block())
        if t == "bail":
            c.next()
            b = _parse_bexpr(c, typed=False)
            c.expect("to")
            return GBail(b, parse_block())
        if _is_name(t):
            name = c.next()
            c.expect(":=")
            e = _parse_expr(c, typed=False)
            c.expect(";")
            return GAssign(name, e)
        c.fail(f"expected a statement, got {t!r}")

    return parse_seq(stop_at_brace=False)


def program_to_dot(p: Program, highlight: frozenset[Command] = frozenset()) -> str:
    """Flow graph; highlighted commands (a stitch) drawn in a distinct style."""
    def esc(s: str) -> str:
        return s.replace('"', '\\"')

    lines = ["digraph program {", '  node [shape=box, fontname="monospace"];']
    for l in sorted(p.labels()):
        lines.append(f'  "{esc(l)}";')
    lines.append('  "." [shape=doublecircle, label="halt"];')
    for c in p.sorted_commands:
        style = ' color=blue fontcolor=blue' if c in highlight else ""
        lines.append(f'  "{esc(c.label)}" -> "{esc(c.succ)}" [label="{esc(str(c.action))}"{style}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
