"""Synchronous transitions: run instantaneous instructions to a fixpoint."""

from __future__ import annotations

from dataclasses import dataclass, replace as dc_replace
from typing import Any, Optional

from . import machine as mc
from .tree import (
    GlobalStore, Ids, Leaf, error, leaf, leaves_in_order, make_and, make_sor,
    make_xor, replace_normal, true, update,
)
from .values import NotEvaluable, evaluate, evaluate_duration

DEFAULT_STEP_BUDGET = 1_000_000


class DivergenceError(RuntimeError):
    """A synchronous cascade did not reach an asynchronous fixpoint in budget."""


# -- effects -----------------------------------------------------------------

@dataclass(frozen=True)
class Executed:
    loc: int
    opcode: str


@dataclass(frozen=True)
class OutputSent:
    symbol: str
    loc: int = -1


@dataclass(frozen=True)
class SignalEmitted:
    signal: str
    loc: int = -1


@dataclass(frozen=True)
class GlobalAssigned:
    name: str
    value: Any
    loc: int = -1


@dataclass(frozen=True)
class TimerArmed:
    node: int
    kind: str  # "timer" | "recursive"
    loc: int = -1


@dataclass(frozen=True)
class NodeErrored:
    node: int
    reason: str
    loc: int = -1


@dataclass(frozen=True)
class GlobalState:
    store: GlobalStore
    tree: Any
    ids: Ids
    # ids of asynchronous leaves already seen by the timer-arming pass
    entered: frozenset = frozenset()

    @classmethod
    def initial(cls, m: mc.Machine) -> "GlobalState":
        ids = Ids()
        return cls(GlobalStore.initial(m.signals), leaf(ids, m.first), ids)


def _snap(clocks, date):
    return clocks.snapshot(date) if clocks is not None else None


def pick_synchronous(m, tree) -> Optional[Leaf]:
    """The synchronous leaf at the least location; leftmost on ties."""
    best = None
    for pos, (_, lf) in enumerate(leaves_in_order(tree)):
        if mc.is_synchronous(m[lf.loc]):
            key = (m.rank[lf.loc], pos)
            if best is None or key < best[0]:
                best = (key, lf)
    return best[1] if best else None


def sync_step(m: mc.Machine, g: GlobalState, clocks=None, date: float = 0.0):
    """Execute one synchronous instruction; None if every leaf is asynchronous."""
    lf = pick_synchronous(m, g.tree)
    if lf is None:
        return None
    instr = m[lf.loc]
    ids, store, local = g.ids, g.store, lf.store
    effects = [Executed(lf.loc, mc.opcode(instr))]
    nxt = m.successor(lf.loc)
    sub = None

    def fail(reason):
        effects.append(NodeErrored(lf.nid, reason, lf.loc))
        return error(ids)

    if isinstance(instr, mc.Emit):
        store = store.emit(instr.signal)
        effects.append(SignalEmitted(instr.signal, lf.loc))
        sub = leaf(ids, nxt, local)
    elif isinstance(instr, mc.Send):
        effects.append(OutputSent(instr.symbol, lf.loc))
        sub = leaf(ids, nxt, local)
    elif isinstance(instr, mc.Assign):
        try:
            v = evaluate(instr.expr, store.vars, local, _snap(clocks, date))
        except NotEvaluable as e:
            sub = fail(str(e))
        else:
            if instr.is_global:
                store = store.assign(instr.name, v)
                effects.append(GlobalAssigned(instr.name, v, lf.loc))
                sub = leaf(ids, nxt, local)
            else:
                sub = leaf(ids, nxt, update(local, instr.name, v))
    elif isinstance(instr, mc.Stop):
        sub = true(ids)
    elif isinstance(instr, mc.If):
        try:
            v = evaluate(instr.expr, store.vars, local, _snap(clocks, date))
        except NotEvaluable as e:
            sub = fail(str(e))
        else:
            if v is True:
                sub = leaf(ids, instr.target, local)
            elif v is False:
                sub = leaf(ids, nxt, local)
            else:
                sub = fail("condition is not a boolean")
    elif isinstance(instr, mc.Spawn):
        sub = make_and(ids, [leaf(ids, nxt, local), leaf(ids, instr.target, local)])
    elif isinstance(instr, mc.Spawn0):
        sub = make_and(ids, [leaf(ids, nxt, local), leaf(ids, instr.target, {})])
    elif isinstance(instr, mc.Asap):
        sub = make_xor(ids, [leaf(ids, t, local) for t in instr.targets])
    elif isinstance(instr, mc.Sustain):
        sub = make_sor(ids, leaf(ids, instr.body, local), leaf(ids, instr.controller, local))
    tree = replace_normal(g.tree, lf.nid, sub)
    return dc_replace(g, store=store, tree=tree), effects


def sync_normalize(m: mc.Machine, g: GlobalState, clocks=None, date: float = 0.0,
                   step_budget: int = DEFAULT_STEP_BUDGET, strict: bool = False):
    """Run :func:`sync_step` to a fixpoint, then arm timers for new waits.

    A newly entered ``await`` with a positive delay starts a timer, a
    ``repeat`` with positive period and expiry starts a recursive timer.
    Zero or non-evaluable delays are left to the internal-event rules, unless
    ``strict`` is set, in which case they turn the whole tree into an error.
    """
    if step_budget <= 0:
        raise ValueError("step budget must be positive")
    effects = []
    steps = 0
    while True:
        try:
            r = sync_step(m, g, clocks, date)
        except RecursionError:
            raise DivergenceError(f"global tree nested too deeply after {steps} steps") from None
        if r is None:
            break
        steps += 1
        if steps > step_budget:
            raise DivergenceError(f"no asynchronous fixpoint after {step_budget} steps")
        g, eff = r
        effects.extend(eff)

    snap = _snap(clocks, date)
    fresh = [(m.rank[lf.loc], pos, lf)
             for pos, (nid, lf) in enumerate(leaves_in_order(g.tree))
             if nid not in g.entered]
    tree = g.tree
    for _, _, lf in sorted(fresh, key=lambda x: x[:2]):
        instr = m[lf.loc]
        ok = True
        if isinstance(instr, mc.Await):
            try:
                d = evaluate_duration(instr.expr, g.store.vars, lf.store, snap)
            except NotEvaluable:
                ok = False
            else:
                if d.magnitude > 0:
                    if clocks is not None:
                        clocks.start_timer(lf.nid, d, date)
                    effects.append(TimerArmed(lf.nid, "timer", lf.loc))
                else:
                    ok = False
        elif isinstance(instr, mc.Repeat):
            try:
                d = evaluate_duration(instr.period, g.store.vars, lf.store, snap)
                d2 = evaluate_duration(instr.expiry, g.store.vars, lf.store, snap)
            except NotEvaluable:
                ok = False
            else:
                if d.magnitude > 0 and d2.magnitude > 0:
                    if clocks is not None:
                        clocks.start_recursive_timer(lf.nid, d, d2, date)
                    effects.append(TimerArmed(lf.nid, "recursive", lf.loc))
                else:
                    ok = False
        if strict and not ok:
            effects.append(NodeErrored(lf.nid, "delay is not a positive duration", lf.loc))
            tree = error(g.ids)
            break
    entered = frozenset(nid for nid, _ in leaves_in_order(tree))
    return dc_replace(g, tree=tree, entered=entered), effects
