from helpers import prog
from ivm.clocks import Clocks
from ivm.events import (
    EPSILON, Done, ExternalAssign, Input, Step, apply_event, leaf_transition, unlocks,
)
from ivm.sync import GlobalState, sync_normalize
from ivm.tree import GlobalStore, Ids, Leaf, has_marks, is_error, is_true, leaf, leaves_in_order, shape


def one(text, loc=0, store=None, gvars=None, signals=()):
    m = prog(text)
    ids = Ids(100)
    g = GlobalStore(dict(gvars or {}), {s: True for s in signals})
    return m, leaf(ids, loc, store), g, ids


def test_await_rules():
    m, lf, g, ids = one("await (1 s) jump A\nA: stop\n")
    assert leaf_transition(m, lf, EPSILON, g, ids) is None
    r = leaf_transition(m, lf, Done(lf.nid), g, ids)
    assert isinstance(r, Leaf) and r.marked and r.loc == 1
    assert leaf_transition(m, lf, Done(lf.nid + 1), g, ids) is None
    m, lf, g, ids = one("await (0 s) jump A\nA: stop\n")
    assert leaf_transition(m, lf, EPSILON, g, ids).loc == 1
    m, lf, g, ids = one("await ($d) jump A\nA: stop\n")
    assert is_error(leaf_transition(m, lf, EPSILON, g, ids))


def test_repeat_rules():
    m, lf, g, ids = one("repeat (1 s) jump B for (2 s)\nB: stop\n")
    r = leaf_transition(m, lf, Step(lf.nid), g, ids)
    assert r.marked and shape(r) == ("and!", ("leaf", 0, ()), ("leaf", 1, ()))
    assert r.children[0] is lf  # the timer's owner survives
    assert shape(leaf_transition(m, lf, Done(lf.nid), g, ids)) == "true!"
    m, lf, g, ids = one("repeat (0 s) jump B for (2 s)\nB: stop\n")
    assert is_error(leaf_transition(m, lf, EPSILON, g, ids))
    m, lf, g, ids = one("repeat (1 s) jump B for (0 s)\nB: stop\n")
    assert leaf_transition(m, lf, EPSILON, g, ids).loc == 1


def test_receive_present_suspend():
    m, lf, g, ids = one(".inputs a b\nreceive a jump A\nA: stop\n")
    assert leaf_transition(m, lf, Input("b"), g, ids) is None
    assert leaf_transition(m, lf, Input("a"), g, ids).loc == 1
    m, lf, g, ids = one("present s jump A\nA: emit s\nstop\n", signals=("s",))
    assert leaf_transition(m, lf, EPSILON, g, ids).loc == 1
    assert leaf_transition(m, lf, Input("s"), g, ids) is None
    m, lf, g, ids = one("suspend ($v > 2) jump A\nA: stop\n", gvars={"v": 1})
    assert leaf_transition(m, lf, EPSILON, g, ids) is None
    # tested against the store updated by the assignment
    assert leaf_transition(m, lf, ExternalAssign("v", 3), g, ids).loc == 1
    assert leaf_transition(m, lf, ExternalAssign("w", 3), g, ids) is None


def test_all_leaves_use_the_same_store():
    m = prog("""
        spawn B
        suspend ($v = 1) jump A
        A: stop
        B: suspend ($v = 1) jump C
        C: stop
    """)
    g, _ = sync_normalize(m, GlobalState.initial(m))
    t = apply_event(m, g.tree, ExternalAssign("v", 1), g.store, g.ids)
    assert [lf.loc for _, lf in leaves_in_order(t)] == [2, 4]
    assert not has_marks(t)


def test_apply_event_cancels_discarded_timers():
    m = prog("""
        .inputs go
        asap R W
        R: receive go jump A
        W: await (5 s) jump A
        A: stop
    """)
    clocks = Clocks()
    g, _ = sync_normalize(m, GlobalState.initial(m), clocks)
    assert len(clocks.owners()) == 1
    t = apply_event(m, g.tree, Input("go"), g.store, g.ids, clocks)
    assert clocks.owners() == set()
    assert [lf.loc for _, lf in leaves_in_order(t)] == [3]


def test_unlocks_has_no_side_effects():
    m = prog(".inputs go\nreceive go jump A\nA: stop\n")
    g = GlobalState.initial(m)
    before = g.ids()
    assert unlocks(m, g.tree, Input("go"), g.store)
    assert not unlocks(m, g.tree, EPSILON, g.store)
    assert g.ids() == before + 1
    assert is_true(apply_event(m, leaf(Ids(), 1), EPSILON, g.store, Ids())) is False
