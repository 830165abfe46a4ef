"""Stores, local states and the global thread tree.

Trees are immutable values.  Every node carries an integer id (unique in a
tree) and a mark bit.  AND and XOR nodes are n-ary and kept flat; SOR is
binary (body, controller).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace as dc_replace
from typing import Iterator, Optional

from .values import format_value


# -- stores ------------------------------------------------------------------

@dataclass(frozen=True)
class GlobalStore:
    vars: dict = field(default_factory=dict)
    signals: dict = field(default_factory=dict)

    @classmethod
    def initial(cls, signals) -> "GlobalStore":
        return cls({}, {s: False for s in sorted(signals)})

    def assign(self, name, value) -> "GlobalStore":
        return GlobalStore({**self.vars, name: value}, self.signals)

    def emit(self, signal) -> "GlobalStore":
        return GlobalStore(self.vars, {**self.signals, signal: True})

    def reset_signals(self) -> "GlobalStore":
        return GlobalStore(self.vars, {s: False for s in self.signals})


def update(store: dict, name, value) -> dict:
    """Local store update ``store[name -> value]``, leaving ``store`` untouched."""
    return {**store, name: value}


# -- tree nodes --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Node:
    nid: int
    marked: bool = False

    def unmarked(self):
        return dc_replace(self, marked=False) if self.marked else self


@dataclass(frozen=True, eq=False)
class Leaf(Node):
    loc: int = 0
    store: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class Terminal(Node):
    kind: str = "true"  # "true" | "false" | "error"


@dataclass(frozen=True, eq=False)
class And(Node):
    children: tuple = ()


@dataclass(frozen=True, eq=False)
class Xor(Node):
    children: tuple = ()


@dataclass(frozen=True, eq=False)
class Sor(Node):
    body: Node = None
    ctrl: Node = None


def is_true(t) -> bool:
    return isinstance(t, Terminal) and t.kind == "true"


def is_error(t) -> bool:
    return isinstance(t, Terminal) and t.kind == "error"


class Ids:
    """Monotone node-id allocator."""

    def __init__(self, start=0):
        self._c = itertools.count(start)

    def __call__(self) -> int:
        return next(self._c)


def leaf(ids, loc, store=None, marked=False) -> Leaf:
    return Leaf(ids(), marked, loc, dict(store or {}))


def true(ids, marked=False) -> Terminal:
    return Terminal(ids(), marked, "true")


def error(ids) -> Terminal:
    return Terminal(ids(), False, "error")


def make_and(ids, children, marked=False) -> Node:
    return And(ids(), marked, _flatten(And, children))


def make_xor(ids, children, marked=False) -> Node:
    kids = _flatten(Xor, children)
    if len(kids) == 1:
        return kids[0]
    return Xor(ids(), marked, kids)


def make_sor(ids, body, ctrl, marked=False) -> Sor:
    return Sor(ids(), marked, body, ctrl)


def _flatten(cls, children) -> tuple:
    out = []
    for c in children:
        # a marked subtree must stay visible as one operand until marks clear
        if type(c) is cls and not c.marked:
            out.extend(c.children)
        else:
            out.append(c)
    return tuple(out)


def children(t) -> tuple:
    if isinstance(t, (And, Xor)):
        return t.children
    if isinstance(t, Sor):
        return (t.body, t.ctrl)
    return ()


def with_children(t, kids):
    if isinstance(t, (And, Xor)):
        kids = _flatten(type(t), kids)
        if len(kids) == 1:
            return kids[0]
        return dc_replace(t, children=kids)
    if isinstance(t, Sor):
        return dc_replace(t, body=kids[0], ctrl=kids[1])
    return t


# -- traversal ---------------------------------------------------------------

def walk(t) -> Iterator[Node]:
    """Pre-order traversal (SOR: body before controller)."""
    stack = [t]
    while stack:
        n = stack.pop()
        yield n
        kids = children(n)
        if kids:
            stack.extend(reversed(kids))


def leaves_in_order(t) -> list[tuple[int, Leaf]]:
    """Leaves left to right (SOR: body before controller)."""
    return [(n.nid, n) for n in walk(t) if isinstance(n, Leaf)]


def find(t, nid) -> Optional[Node]:
    for n in walk(t):
        if n.nid == nid:
            return n
    return None


def replace(t, nid, sub):
    """Plug ``sub`` in place of the node with id ``nid``."""
    found = False

    def go(n):
        nonlocal found
        if n.nid == nid:
            found = True
            return sub
        kids = children(n)
        if not kids:
            return n
        new = tuple(go(c) for c in kids)
        if all(a is b for a, b in zip(new, kids)):
            return n
        return with_children(n, new)

    out = go(t)
    if not found:
        raise KeyError(f"no node with id {nid}")
    return out


def clear_marks(t):
    kids = children(t)
    if kids:
        new = tuple(clear_marks(c) for c in kids)
        if not all(a is b for a, b in zip(new, kids)):
            t = with_children(t, new)
    return t.unmarked()


def has_marks(t) -> bool:
    return any(n.marked for n in walk(t))


# -- normalization -----------------------------------------------------------

def _step(t, log):
    """Apply one rule at the root of ``t`` (children already normal), or None."""
    if isinstance(t, Xor):
        kids = t.children
        for j, b in enumerate(kids):
            if is_error(b):
                log.append("xor(X,error)")
                return _pair(t, 0 if j else 1, j, b)
        marked = [i for i, a in enumerate(kids) if a.marked]
        if len(marked) >= 2:
            i, j = marked[:2]
            log.append("xor(T_,T_')")
            return _pair(t, i, j, Terminal(kids[i].nid, False, "error"))
        if marked:
            log.append("xor(T_,T)")
            return _drop(t, 1 if marked[0] == 0 else 0)
        return None
    if isinstance(t, Sor):
        b, c = t.body, t.ctrl
        if is_error(c):
            log.append("sor(X,error)")
            return c
        if is_error(b):
            log.append("sor(error,X)")
            return b
        if c.marked and not b.marked:
            log.append("sor(T,T_)")
            return c
        if c.marked and b.marked:
            log.append("sor(T_,T_')")
            return Terminal(t.nid, False, "error")
        if is_true(b):
            log.append("sor(true,X)")
            return b
        return None
    if isinstance(t, And):
        kids = t.children
        for i, a in enumerate(kids):
            if is_error(a):
                log.append("and(X,error)")
                return _pair(t, 1 if i == 0 else 0, i, a)
        for i, a in enumerate(kids):
            if is_true(a):
                j = 1 if i == 0 else 0
                x = kids[j]
                if is_true(x) and a.marked and not x.marked:
                    # two finished threads merge; keep the "unlocked" mark
                    x = dc_replace(x, marked=True)
                log.append("and(X,true)")
                return _pair(t, j, i, x)
        return None
    return None


def _drop(t, j):
    return with_children(t, t.children[:j] + t.children[j + 1:])


def _pair(t, i, j, result):
    """Replace children i and j of an n-ary node with ``result``."""
    kids = list(t.children)
    lo, hi = sorted((i, j))
    kids[lo] = result
    del kids[hi]
    if len(kids) == 1:
        return kids[0]
    return with_children(t, tuple(kids))


def normalize(t, log: list = None):
    """Rewrite ``t`` with the tree rules until none applies.

    Subtrees are normalized first, so every rule sees normal-form operands.
    ``log``, if given, receives the name of every rule applied, in order.
    """
    log = [] if log is None else log
    kids = children(t)
    if kids:
        new = tuple(normalize(c, log) for c in kids)
        if not all(a is b for a, b in zip(new, kids)):
            t = with_children(t, new)
    while True:
        nxt = _step(t, log)
        if nxt is None:
            return t
        t = nxt


def replace_normal(t, nid, sub, log: list = None):
    """``normalize(replace(t, nid, sub))`` for an already normal ``t``.

    Only ``sub`` and the ancestors of the replaced node are rewritten.
    """
    log = [] if log is None else log
    found = False

    def go(n):
        nonlocal found
        if n.nid == nid:
            found = True
            return normalize(sub, log)
        kids = children(n)
        if not kids:
            return n
        new = tuple(go(c) for c in kids)
        if all(a is b for a, b in zip(new, kids)):
            return n
        n = with_children(n, new)
        while True:
            nxt = _step(n, log)
            if nxt is None:
                return n
            n = nxt

    out = go(t)
    if not found:
        raise KeyError(f"no node with id {nid}")
    return out


RULES = (
    "xor(T_,T)", "xor(T_,T_')", "xor(X,error)",
    "sor(T,T_)", "sor(T_,T_')", "sor(X,error)", "sor(error,X)",
    "and(X,true)", "and(X,error)", "sor(true,X)",
)


# -- rendering ---------------------------------------------------------------

def dump(t) -> str:
    """S-expression rendering with node ids; marked nodes end in ``!``."""
    bang = "!" if t.marked else ""
    if isinstance(t, Terminal):
        return f"{t.kind}#{t.nid}{bang}"
    if isinstance(t, Leaf):
        store = " ".join(f"{k}={format_value(v)}" for k, v in sorted(t.store.items()))
        store = f" {{{store}}}" if store else ""
        return f"(leaf#{t.nid}{bang} @{t.loc}{store})"
    name = {And: "and", Xor: "xor", Sor: "sor"}[type(t)]
    return f"({name}#{t.nid}{bang} " + " ".join(dump(c) for c in children(t)) + ")"


def shape(t):
    """Id-free structural summary, for comparing trees."""
    m = "!" if t.marked else ""
    if isinstance(t, Terminal):
        return t.kind + m
    if isinstance(t, Leaf):
        return ("leaf" + m, t.loc, tuple(sorted(t.store.items())))
    name = {And: "and", Xor: "xor", Sor: "sor"}[type(t)] + m
    return (name,) + tuple(shape(c) for c in children(t))
