"""Hot-path mining: loop-path selection over recorded traces.

A loop path is a trace segment that jumps back to its own first command; it is
hot when its store-abstracted image occurs at least N times in the abstracted
trace.  Backward jumps are recognized against a reverse-postorder numbering of
the command flow graph (cyclic graphs have no true topological order; back
edge = target rank <= source rank is the usual compiler reading).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .domains import AbstractStore, get_domain
from .lang import Command, HALT, Program, command_key, find_cmpl
from .semantics import State


class HotPathError(Exception):
    pass


# ---------------------------------------------------------------------------
# Topological order (reverse postorder)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TopoOrder:
    rank: dict[Command, int]

    def lessdot(self, c1: Command, c2: Command) -> bool:
        return self.rank[c1] <= self.rank[c2]


def _branch_key(c: Command) -> tuple:
    """Positive branches explore first, so a loop's head ranks at or before
    its exit commands; negations and failing guards are the cold side."""
    from .lang import Cond, Guard, Not
    a = c.action
    negated = (isinstance(a, Cond) and isinstance(a.test, Not)) or \
        (isinstance(a, Guard) and not a.positive)
    return (negated, str(a), c.succ)


def topo_order(p: Program) -> TopoOrder:
    """Reverse-postorder DFS numbering from the entry, with deterministic
    positive-branch-first tie-breaking; commands unreachable from the entry
    are numbered afterwards the same way."""
    post: list[Command] = []
    visited: set[Command] = set()

    def dfs(root: Command) -> None:
        stack: list[tuple[Command, int]] = [(root, 0)]
        visited.add(root)
        while stack:
            cmd, i = stack.pop()
            succs = () if cmd.succ == HALT else \
                tuple(sorted(p.at(cmd.succ), key=_branch_key))
            if i < len(succs):
                stack.append((cmd, i + 1))
                nxt = succs[i]
                if nxt not in visited:
                    visited.add(nxt)
                    stack.append((nxt, 0))
            else:
                post.append(cmd)

    for c in p.at(p.entry):
        if c not in visited:
            dfs(c)
    for c in p.sorted_commands:
        if c not in visited:
            dfs(c)
    order = list(reversed(post))
    return TopoOrder({c: i for i, c in enumerate(order)})


# ---------------------------------------------------------------------------
# Loop paths
# ---------------------------------------------------------------------------

def sloop(states: Sequence[State], ord: TopoOrder, p: Program) -> list[tuple[int, int]]:
    """All loop-path segments of a state sequence, as (i, j) index pairs:
    suc(C_j) = lbl(C_i), C_i before C_j in the order, and no interior
    re-occurrence of C_i or its complement."""
    n = len(states) - 1  # j must have a successor state in the sequence
    segments: list[tuple[int, int]] = []
    for i in range(n):
        ci = states[i].command
        blockers = {ci, find_cmpl(ci, p)} - {None}
        for j in range(i, n):
            cj = states[j].command
            if j > i and cj in blockers:
                break
            if cj.succ == ci.label and ord.rank[ci] <= ord.rank[cj]:
                segments.append((i, j))
    return segments


def count(abstract_trace: Sequence[tuple[AbstractStore, Command]],
          abstract_path: Sequence[tuple[AbstractStore, Command]]) -> int:
    """Number of (possibly overlapping) exact occurrences of the path."""
    n, m = len(abstract_trace), len(abstract_path)
    if m == 0 or m > n:
        return 0
    path = tuple(abstract_path)
    total = 0
    for i in range(n - m + 1):
        if tuple(abstract_trace[i:i + m]) == path:
            total += 1
    return total


# ---------------------------------------------------------------------------
# Hot paths
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HotPath:
    """Abstracted loop path with the cyclic successor function next(i)."""

    pairs: tuple[tuple[AbstractStore, Command], ...]
    domain: str
    threshold: Optional[int] = None

    def __post_init__(self):
        # interior pairs need not be successor-linked: nested paths cut
        # previously stitched regions down to their entry and exit commands
        if not self.pairs:
            raise HotPathError("empty hot path")
        cmds = self.commands
        if cmds[-1].succ != cmds[0].label:
            raise HotPathError("path does not loop back to its first command")
        head = cmds[0].label
        if any(c.label == head for c in cmds[1:]):
            raise HotPathError("interior occurrence of the first command's label")

    @property
    def commands(self) -> tuple[Command, ...]:
        return tuple(c for _, c in self.pairs)

    def next(self, i: int) -> int:
        return 0 if i == len(self.pairs) - 1 else i + 1

    def __len__(self):
        return len(self.pairs)

    def __str__(self):
        return " ; ".join(f"({a}) {c}" for a, c in self.pairs)


def abstract_trace(states: Sequence[State], domain_tag: str) -> list[tuple[AbstractStore, Command]]:
    dom = get_domain(domain_tag)
    return [(dom.alpha([s.store]), s.command) for s in states]


def hot_n(states: Sequence[State], n: int, domain_tag: str, p: Program,
          ord: Optional[TopoOrder] = None, with_counts: bool = False):
    """N-hot paths of one trace: abstracted loop segments whose exact image
    occurs at least n times, in first-occurrence order."""
    if n < 1:
        raise HotPathError("threshold must be >= 1")
    if ord is None:
        ord = topo_order(p)
    abs_tr = abstract_trace(states, domain_tag)
    seen: dict[tuple, int] = {}
    ordered: list[tuple[HotPath, int]] = []
    for i, j in sloop(states, ord, p):
        pairs = tuple(abs_tr[i:j + 1])
        if pairs in seen:
            continue
        seen[pairs] = i
        c = count(abs_tr, pairs)
        if c >= n:
            ordered.append((HotPath(pairs, domain_tag, n), c))
    if with_counts:
        return ordered
    return [hp for hp, _ in ordered]


def alpha_hot_n(traces, n: int, domain_tag: str, p: Program) -> list[HotPath]:
    ord = topo_order(p)
    out: list[HotPath] = []
    for tr in traces:
        for hp in hot_n(tr, n, domain_tag, p, ord):
            if hp not in out:
                out.append(hp)
    return out


# ---------------------------------------------------------------------------
# Nested variant: cut previously stitched regions down to entry/exit states
# ---------------------------------------------------------------------------

def hotcut(states: Sequence[State], original: Program) -> tuple[State, ...]:
    """Drops interior states of runs of commands outside the original program,
    keeping each run's first and last state."""
    inside = original.commands
    rest = list(states)
    out: list[State] = []
    while rest:
        if len(rest) >= 3 and all(s.command not in inside for s in rest[:3]):
            del rest[1]
        else:
            out.append(rest.pop(0))
    return tuple(out)


def outerhot_n(states: Sequence[State], original: Program, n: int, domain_tag: str,
               current: Program, with_counts: bool = False):
    """hot_n over the hotcut of the trace; equals hot_n when current == original."""
    cut = hotcut(states, original)
    return hot_n(cut, n, domain_tag, current, with_counts=with_counts)


def alpha_outerhot_n(traces, original: Program, n: int, domain_tag: str,
                     current: Program) -> list[HotPath]:
    out: list[HotPath] = []
    for tr in traces:
        for hp in outerhot_n(tr, original, n, domain_tag, current):
            if hp not in out:
                out.append(hp)
    return out


# ---------------------------------------------------------------------------
# Storeless variant used by the while-language front end
# ---------------------------------------------------------------------------

def sloop_gp(states: Sequence[State], ord: TopoOrder, p: Program) -> list[tuple[Command, ...]]:
    """Command-only projections of loop segments, deduplicated in first-occurrence order."""
    seen: set[tuple[Command, ...]] = set()
    out: list[tuple[Command, ...]] = []
    for i, j in sloop(states, ord, p):
        cmds = tuple(s.command for s in states[i:j + 1])
        if cmds not in seen:
            seen.add(cmds)
            out.append(cmds)
    return out
