import random

from hypothesis import given, settings, strategies as st

from ivm.tree import (
    And, GlobalStore, Ids, Leaf, Sor, Terminal, Xor, clear_marks, dump, find,
    has_marks, leaf, leaves_in_order, make_and, make_sor, make_xor, normalize,
    replace, replace_normal, shape, true, walk,
)


def test_make_and_flattens_unmarked_only():
    ids = Ids()
    inner = make_and(ids, [leaf(ids, 1), leaf(ids, 2)])
    assert len(make_and(ids, [inner, leaf(ids, 3)]).children) == 3
    marked = make_and(ids, [leaf(ids, 1), leaf(ids, 2)], marked=True)
    outer = make_and(ids, [marked, leaf(ids, 3)])
    assert outer.children[0] is marked


def test_make_xor_single_child():
    ids = Ids()
    lf = leaf(ids, 4)
    assert make_xor(ids, [lf]) is lf


def test_leaves_in_order_body_before_controller():
    ids = Ids()
    t = make_and(ids, [make_sor(ids, leaf(ids, 1), leaf(ids, 2)), leaf(ids, 3)])
    assert [lf.loc for _, lf in leaves_in_order(t)] == [1, 2, 3]
    assert find(t, t.nid) is t


def test_clear_marks():
    ids = Ids()
    t = make_sor(ids, leaf(ids, 1, marked=True),
                 make_and(ids, [leaf(ids, 2), true(ids, True)], marked=True))
    assert has_marks(t)
    assert not has_marks(clear_marks(t))


def test_dump():
    ids = Ids()
    t = make_and(ids, [leaf(ids, 2, {"x": 1}), true(ids, True)])
    assert dump(t) == "(and#2 (leaf#0 @2 {x=1}) true#1!)"


def test_global_store():
    g = GlobalStore.initial({"s"})
    assert g.signals == {"s": False}
    g2 = g.emit("s").assign("v", 3)
    assert g2.signals["s"] and g2.vars["v"] == 3
    assert g.signals["s"] is False  # immutable
    assert g2.reset_signals().signals["s"] is False


def random_tree(rng, ids, depth=0):
    r = rng.random()
    if depth > 2 or r < 0.4:
        k = rng.random()
        if k < 0.7:
            return leaf(ids, rng.randrange(5), marked=rng.random() < 0.3)
        if k < 0.9:
            return true(ids, marked=rng.random() < 0.5)
        return Terminal(ids(), False, "error")
    kids = [random_tree(rng, ids, depth + 1) for _ in range(rng.choice((2, 3)))]
    if r < 0.6:
        return make_and(ids, kids, marked=rng.random() < 0.2)
    if r < 0.8:
        return make_xor(ids, kids)
    return make_sor(ids, kids[0], kids[1])


@settings(max_examples=200)
@given(st.integers(0, 10**9))
def test_replace_normal_agrees_with_full_normalization(seed):
    rng = random.Random(seed)
    ids = Ids()
    t = normalize(random_tree(rng, ids))
    targets = [n.nid for n in walk(t)]
    nid = rng.choice(targets)
    sub = random_tree(rng, ids)
    assert shape(replace_normal(t, nid, sub)) == shape(normalize(replace(t, nid, sub)))


@settings(max_examples=200)
@given(st.integers(0, 10**9))
def test_normalize_is_idempotent(seed):
    t = normalize(random_tree(random.Random(seed), Ids()))
    log = []
    assert normalize(t, log) is t and not log
