import pytest

from helpers import prog
from ivm.clocks import Clocks
from ivm.sync import (
    DivergenceError, GlobalState, OutputSent, TimerArmed, pick_synchronous,
    sync_normalize, sync_step,
)
from ivm.tree import dump, is_error, is_true, leaves_in_order


def cascade(text, **kw):
    m = prog(text)
    clocks = Clocks()
    g, eff = sync_normalize(m, GlobalState.initial(m), clocks, **kw)
    return m, g, eff, clocks


def test_sync_step_returns_none_at_fixpoint():
    m = prog("await (1 s) jump A\nA: stop\n")
    assert sync_step(m, GlobalState.initial(m)) is None


def test_least_location_runs_first():
    # source order, not spawn order, decides which thread runs
    m, g, eff, _ = cascade("""
        spawn B
        spawn C
        send a
        stop
        C: send c
        stop
        B: send b
        stop
    """)
    assert [e.symbol for e in eff if isinstance(e, OutputSent)] == ["a", "c", "b"]
    assert is_true(g.tree)


def test_custom_order_changes_schedule():
    from ivm import machine as mc
    instrs = (mc.Spawn(1), mc.Send("a"), mc.Stop(), mc.Send("b"), mc.Stop())
    m = mc.Machine(instrs, order=(0, 3, 4, 1, 2))
    g, eff = sync_normalize(m, GlobalState.initial(m))
    assert [e.symbol for e in eff if isinstance(e, OutputSent)] == ["b", "a"]


def test_locals_and_spawn0():
    m, g, eff, _ = cascade("""
        x := 5
        spawn A
        spawn0 B
        await (1 s) jump A
        A: if (x = 5) jump OK
        stop
        OK: send ok
        stop
        B: y := x
        stop
    """)
    assert [e.symbol for e in eff if isinstance(e, OutputSent)] == ["ok"]
    assert is_error(g.tree)  # B reads an unbound local


def test_if_needs_a_boolean():
    _, g, _, _ = cascade("if 3 jump A\nA: stop\n")
    assert is_error(g.tree)


def test_global_assignment_visible_in_same_cascade():
    _, g, eff, _ = cascade("$v := 2\nif ($v = 2) jump A\nstop\nA: send yes\nstop\n")
    assert OutputSent("yes", 3) in eff


def test_timers_armed_once_in_source_order():
    m, g, eff, clocks = cascade("""
        spawn B
        await (2 s) jump X
        X: stop
        B: repeat (1 s) jump X for (3 s)
    """)
    armed = [(e.kind, e.loc) for e in eff if isinstance(e, TimerArmed)]
    assert armed == [("timer", 1), ("recursive", 3)]
    g2, eff2 = sync_normalize(m, g, clocks)
    assert not [e for e in eff2 if isinstance(e, TimerArmed)]


def test_zero_await_is_left_for_epsilon():
    _, g, eff, clocks = cascade("await (0 s) jump A\nA: stop\n")
    assert not clocks.owners() and not is_error(g.tree)


def test_strict_mode_rejects_zero_delay():
    _, g, _, _ = cascade("await (0 s) jump A\nA: stop\n", strict=True)
    assert is_error(g.tree)


def test_divergence():
    with pytest.raises(DivergenceError):
        cascade("L: send x\nif true jump L\nstop\n", step_budget=50)


def test_pick_synchronous_leftmost_on_ties():
    m = prog("spawn A\nA: send x\nstop\n")
    g, _ = sync_step(m, GlobalState.initial(m))
    # both children sit at location 1: the left one is picked
    lf = pick_synchronous(m, g.tree)
    assert lf is leaves_in_order(g.tree)[0][1]
