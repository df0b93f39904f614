"""Pluggable store abstractions: one-point, types, constant propagation.

Each domain abstracts sets of concrete stores nonrelationally, by pointwise
lifting of a value abstraction.  Elements are kept sparse: a binding equal to
the element's default is dropped, and the default of any alpha image is the
abstraction of {undef}, matching the display convention of omitting v/undef
bindings.  Concretizations are never materialized; consumers use the decidable
``contains`` predicate.
"""

from __future__ import annotations

import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Iterable, Optional

from .values import (BOOL, BOT_T, Bool, INT, STRING, TOP_T, UNDEF, UNDEF_T,
                     UValue, type_of, value_str)


class DomainError(Exception):
    pass


# ---------------------------------------------------------------------------
# Abstract stores
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AbstractStore:
    """Nonrelational abstract store: finite exceptions over a default slot value."""

    domain: str
    items: tuple[tuple[str, object], ...]  # sorted, values != default
    default: object

    def get(self, var: str):
        for k, v in self.items:
            if k == var:
                return v
        return self.default

    def keys(self) -> frozenset[str]:
        return frozenset(k for k, _ in self.items)

    def __str__(self):
        return get_domain(self.domain).pretty(self)

    def __repr__(self):
        return f"<{self.domain} {self}>"


def _canon(domain: str, bindings: dict[str, object], default: object) -> AbstractStore:
    items = tuple(sorted((k, v) for k, v in bindings.items() if v != default))
    return AbstractStore(domain, items, default)


class StoreAbstraction(ABC):
    """Behavioral interface of a store abstraction (Galois-style, sparse elements)."""

    tag: str

    # -- value-level hooks ---------------------------------------------------
    @abstractmethod
    def value_alpha(self, values: Iterable[UValue]):
        ...

    @abstractmethod
    def value_leq(self, a, b) -> bool:
        ...

    @abstractmethod
    def value_has(self, a, v: UValue) -> bool:
        """Decides v in gamma(a)."""

    @abstractmethod
    def value_str(self, a) -> str:
        ...

    @abstractmethod
    def parse_value(self, text: str):
        ...

    def value_universal(self, a) -> bool:
        """gamma(a) is all of UValue."""
        return False

    # -- store level ----------------------------------------------------------
    @property
    def undef_slot(self):
        return self.value_alpha([UNDEF])

    @property
    def bot_slot(self):
        return self.value_alpha([])

    def make(self, bindings: dict[str, object], default: object = None) -> AbstractStore:
        if default is None:
            default = self.undef_slot
        return _canon(self.tag, dict(bindings), default)

    def top(self) -> AbstractStore:
        return AbstractStore(self.tag, (), self.value_alpha([1, "a", UNDEF]))

    def bottom(self) -> AbstractStore:
        return AbstractStore(self.tag, (), self.bot_slot)

    def alpha(self, stores: Iterable) -> AbstractStore:
        stores = list(stores)
        if not stores:
            return self.bottom()
        keys = set()
        for s in stores:
            keys |= set(s.keys())
        bindings = {x: self.value_alpha([s.get(x) for s in stores]) for x in keys}
        return _canon(self.tag, bindings, self.undef_slot)

    def leq(self, a1: AbstractStore, a2: AbstractStore) -> bool:
        for x in a1.keys() | a2.keys():
            if not self.value_leq(a1.get(x), a2.get(x)):
                return False
        return self.value_leq(a1.default, a2.default)

    def contains(self, a: AbstractStore, store) -> bool:
        """Decides store in gamma(a).  A non-universal default constrains every
        variable, including the unmentioned ones; gamma(bottom) is empty."""
        if a.default == self.bot_slot and self.bot_is_empty():
            return False
        for x in a.keys() | frozenset(store.keys()):
            if not self.value_has(a.get(x), store.get(x)):
                return False
        return True

    def bot_is_empty(self) -> bool:
        return True

    def is_universal(self, a: AbstractStore) -> bool:
        """gamma(a) is the whole store space (only the one-point top, in practice)."""
        return self.value_universal(a.default) and \
            all(self.value_universal(v) for _, v in a.items)

    def pretty(self, a: AbstractStore) -> str:
        if a.default != self.undef_slot:
            if a.default == self.bot_slot and not a.items:
                return "bot"
            if self.value_universal(a.default) and not a.items:
                return "top"
            raise DomainError("abstract store with exotic default has no literal syntax")
        parts = []
        for k, v, count in _compress_families(a.items):
            if count is None:
                parts.append(f"{k}: {self.value_str(v)}")
            else:
                parts.append(f"{k}: {self.value_str(v)}[{count}]")
        return "{" + ", ".join(parts) + "}"


_FAMILY_RE = re.compile(r"^(.+)_(\d+)$")


def _compress_families(items) -> list[tuple[str, object, Optional[int]]]:
    """Display name_0..name_{n-1} sharing one slot value as ``name: V[n]``."""
    groups: dict[str, dict[int, object]] = {}
    for k, v in items:
        m = _FAMILY_RE.match(k)
        if m:
            groups.setdefault(m.group(1), {})[int(m.group(2))] = v
    full: dict[str, tuple[object, int]] = {}
    skip: set[str] = set()
    for name, idxs in groups.items():
        n = len(idxs)
        vals = set(map(repr, idxs.values()))
        if n >= 2 and set(idxs) == set(range(n)) and len(vals) == 1:
            full[name] = (next(iter(idxs.values())), n)
            skip |= {f"{name}_{i}" for i in range(n)}
    out: list[tuple[str, object, Optional[int]]] = []
    emitted: set[str] = set()
    for k, v in items:
        m = _FAMILY_RE.match(k)
        if m and k in skip:
            name = m.group(1)
            if name not in emitted:
                val, n = full[name]
                out.append((name, val, n))
                emitted.add(name)
        else:
            out.append((k, v, None))
    return out


# ---------------------------------------------------------------------------
# One-point domain
# ---------------------------------------------------------------------------

class OnePointDomain(StoreAbstraction):
    """Store# = {top}: every store set abstracts to the same element."""

    tag = "onepoint"
    _TOP = "the-one-point"

    def value_alpha(self, values):
        return self._TOP

    def value_leq(self, a, b):
        return True

    def value_has(self, a, v):
        return True

    def value_universal(self, a):
        return True

    def value_str(self, a):
        raise DomainError("one-point elements print as {}")

    def parse_value(self, text):
        raise DomainError("one-point store literals are {}")

    def bot_is_empty(self):
        return False  # bottom and top coincide

    def alpha(self, stores):
        return self.top()

    def top(self):
        return AbstractStore(self.tag, (), self._TOP)

    def bottom(self):
        return self.top()

    def pretty(self, a):
        return "{}"


# ---------------------------------------------------------------------------
# Type domain
# ---------------------------------------------------------------------------

TYPE_NAMES = (BOT_T, INT, STRING, BOOL, UNDEF_T, TOP_T)
_MIDDLE = {INT, STRING, BOOL, UNDEF_T}


def type_leq(t1: str, t2: str) -> bool:
    return t1 == BOT_T or t2 == TOP_T or t1 == t2


def type_join(t1: str, t2: str) -> str:
    if t1 == BOT_T:
        return t2
    if t2 == BOT_T:
        return t1
    if t1 == t2:
        return t1
    return TOP_T


def type_alpha(values: Iterable[UValue]) -> str:
    """Smallest type covering a finite set of possibly undefined values."""
    t = BOT_T
    for v in values:
        t = type_join(t, type_of(v))
    return t


class TypeDomain(StoreAbstraction):
    """Pointwise lifting of the five-point type lattice (plus Bool for arrays)."""

    tag = "type"

    def value_alpha(self, values):
        return type_alpha(values)

    def value_leq(self, a, b):
        return type_leq(a, b)

    def value_has(self, a, v):
        if a == BOT_T:
            return False
        if a == TOP_T:
            return True
        return type_of(v) == a

    def value_universal(self, a):
        return a == TOP_T

    def value_str(self, a):
        return a

    def parse_value(self, text):
        alias = {"Str": STRING}
        t = alias.get(text, text)
        if t not in TYPE_NAMES:
            raise DomainError(f"unknown type name: {text}")
        return t


# ---------------------------------------------------------------------------
# Constant propagation domain
# ---------------------------------------------------------------------------

class _CPBot:
    def __repr__(self):
        return "bot"


class _CPTop:
    def __repr__(self):
        return "top"


CP_BOT = _CPBot()
CP_TOP = _CPTop()


@dataclass(frozen=True)
class CPConst:
    """A single known value; undef is a constant like any other."""

    value: UValue

    def __repr__(self):
        return value_str(self.value)


class CPDomain(StoreAbstraction):
    """Flat constant lattice per variable: bot <= each value <= top."""

    tag = "cp"

    def value_alpha(self, values):
        found = None
        for v in values:
            if found is None:
                found = CPConst(v)
            elif found != CPConst(v):
                return CP_TOP
        return CP_BOT if found is None else found

    def value_leq(self, a, b):
        return a is CP_BOT or b is CP_TOP or a == b

    def value_has(self, a, v):
        if a is CP_BOT:
            return False
        if a is CP_TOP:
            return True
        return a == CPConst(v)

    def value_universal(self, a):
        return a is CP_TOP

    def value_str(self, a):
        return repr(a)

    def parse_value(self, text):
        if text == "top":
            return CP_TOP
        if text == "bot":
            return CP_BOT
        if text == "undef":
            return CPConst(UNDEF)
        if text == "tt":
            return CPConst(Bool(True))
        if text == "ff":
            return CPConst(Bool(False))
        if text.startswith('"'):
            raise DomainError("string constants are parsed by the tokenizer")
        return CPConst(int(text))


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

_REGISTRY: dict[str, StoreAbstraction] = {}


def register(domain: StoreAbstraction) -> StoreAbstraction:
    _REGISTRY[domain.tag] = domain
    return domain


def get_domain(tag: str) -> StoreAbstraction:
    try:
        return _REGISTRY[tag]
    except KeyError:
        raise DomainError(f"unregistered store abstraction: {tag}") from None


def domain_tags() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


onepoint_domain = register(OnePointDomain())
type_domain = register(TypeDomain())
cp_domain = register(CPDomain())


# ---------------------------------------------------------------------------
# Abstract type semantics of expressions
# ---------------------------------------------------------------------------

def abstract_add_type(t1: str, t2: str) -> str:
    """Best correct approximation of generic addition on type names."""
    if BOT_T in (t1, t2):
        return BOT_T
    if t1 == t2 and t1 in (INT, STRING):
        return t1
    if t1 != TOP_T and t2 != TOP_T:
        return UNDEF_T
    return TOP_T


def _abstract_typed_add(t1: str, t2: str, want: str) -> str:
    if BOT_T in (t1, t2):
        return BOT_T
    if t1 == t2 == want:
        return want
    if t1 in (want, TOP_T) and t2 in (want, TOP_T):
        return TOP_T
    return UNDEF_T


def eval_type(e, tstore: AbstractStore) -> str:
    """Abstract type of an expression under a type-domain store."""
    from . import lang

    if tstore.domain != type_domain.tag:
        raise DomainError("eval_type needs a type-domain store")
    if isinstance(e, lang.Lit):
        return type_of(e.value)
    if isinstance(e, lang.Var):
        return tstore.get(e.name)
    if isinstance(e, lang.Add):
        return abstract_add_type(eval_type(e.left, tstore), eval_type(e.right, tstore))
    if isinstance(e, lang.AddTyped):
        want = INT if e.tag == "Int" else STRING
        return _abstract_typed_add(eval_type(e.left, tstore), eval_type(e.right, tstore), want)
    if isinstance(e, lang.Mod):
        return _abstract_typed_add(eval_type(e.left, tstore), eval_type(e.right, tstore), INT)
    if isinstance(e, lang.Index):
        return TOP_T  # index resolution is concrete; no relational precision here
    raise DomainError(f"not an expression: {e!r}")
