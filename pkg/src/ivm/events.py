"""Logical events, the leaf rules they trigger, and tree-wide event application."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

from . import machine as mc
from .tree import (
    GlobalStore, Ids, Leaf, children, clear_marks, error, leaf, leaves_in_order,
    make_and, normalize, true, with_children,
)
from .values import NotEvaluable, evaluate, evaluate_duration


@dataclass(frozen=True)
class Epsilon:
    def __str__(self):
        return "epsilon"


EPSILON = Epsilon()


@dataclass(frozen=True)
class Done:
    node: int


@dataclass(frozen=True)
class Step:
    node: int


@dataclass(frozen=True)
class Input:
    symbol: str


@dataclass(frozen=True)
class ExternalAssign:
    name: str
    value: Any


def leaf_transition(m: mc.Machine, lf: Leaf, event, store: GlobalStore, ids: Ids,
                    clocks=None) -> Optional[Any]:
    """Marked replacement for ``lf`` under event ``event``, or None.

    ``clocks`` is a clock snapshot used for duration arithmetic.
    """
    instr = m[lf.loc]
    gvars, local = store.vars, lf.store

    if isinstance(instr, mc.Await):
        if event == EPSILON:
            try:
                d = evaluate_duration(instr.expr, gvars, local, clocks)
            except NotEvaluable:
                return error(ids)
            return leaf(ids, instr.target, local, marked=True) if d.magnitude == 0 else None
        if isinstance(event, Done) and event.node == lf.nid:
            return leaf(ids, instr.target, local, marked=True)
        return None

    if isinstance(instr, mc.Repeat):
        if event == EPSILON:
            try:
                d = evaluate_duration(instr.period, gvars, local, clocks)
                d2 = evaluate_duration(instr.expiry, gvars, local, clocks)
            except NotEvaluable:
                return error(ids)
            if d.magnitude == 0:
                return error(ids)
            if d2.magnitude == 0:
                return leaf(ids, instr.body, local, marked=True)
            return None
        if isinstance(event, Step) and event.node == lf.nid:
            return make_and(ids, [lf, leaf(ids, instr.body, {})], marked=True)
        if isinstance(event, Done) and event.node == lf.nid:
            return true(ids, marked=True)
        return None

    if isinstance(instr, mc.Receive):
        if isinstance(event, Input) and event.symbol == instr.symbol:
            return leaf(ids, instr.target, local, marked=True)
        return None

    if isinstance(instr, mc.Present):
        if event == EPSILON and store.signals.get(instr.signal) is True:
            return leaf(ids, instr.target, local, marked=True)
        return None

    if isinstance(instr, mc.Suspend):
        if event == EPSILON:
            env = gvars
        elif isinstance(event, ExternalAssign):
            env = {**gvars, event.name: event.value}
        else:
            return None
        try:
            v = evaluate(instr.expr, env, local, clocks)
        except NotEvaluable:
            return None
        return leaf(ids, instr.target, local, marked=True) if v is True else None

    return None


def unlocks(m: mc.Machine, t, event, store: GlobalStore, clocks=None) -> bool:
    """True iff ``event`` triggers a rule at one leaf of ``t`` at least."""
    scratch = Ids(-1_000_000)
    return any(leaf_transition(m, lf, event, store, scratch, clocks) is not None
               for _, lf in leaves_in_order(t))


def _substitute(t, subs: dict):
    if t.nid in subs:
        return subs[t.nid]
    kids = children(t)
    if not kids:
        return t
    new = tuple(_substitute(c, subs) for c in kids)
    if all(a is b for a, b in zip(new, kids)):
        return t
    return with_children(t, new)


def apply_event(m: mc.Machine, t, event, store: GlobalStore, ids: Ids,
                clocks=None, date: float = 0.0, log: list = None):
    """Rewrite every unlocked leaf at once, normalize, then drop the marks.

    All leaves are tested against the same ``store``.  If ``clocks`` (a
    :class:`~ivm.clocks.Clocks`) is given, timers owned by leaves that no
    longer exist are cancelled.
    """
    snap = clocks.snapshot(date) if clocks is not None else None
    subs = {}
    for nid, lf in leaves_in_order(t):
        r = leaf_transition(m, lf, event, store, ids, snap)
        if r is not None:
            subs[nid] = r
    if not subs:
        return t
    out = clear_marks(normalize(_substitute(t, subs), log))
    if clocks is not None:
        cancel_orphans(out, clocks)
    return out


def cancel_orphans(t, clocks) -> None:
    alive = {nid for nid, _ in leaves_in_order(t)}
    for owner in clocks.owners() - alive:
        clocks.cancel(owner)
