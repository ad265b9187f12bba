from hypothesis import given, settings, strategies as st

from microdroid import syntax as S
from microdroid.abstraction import beta_val
from microdroid.domains import (BOTTOM, TOP, AbstractValue, ConstSet, TaintOnly, abs_binop,
                                abs_compare, parse_domain)
from microdroid.values import PUBLIC, SECRET, Annot, Prim

import pytest

P = lambda n, h=PUBLIC: Prim("int", n, h)
DOMS = [TaintOnly(), ConstSet(), ConstSet(2)]


def test_constset_binop_example():
    d = ConstSet()
    r = abs_binop(d, "add", d.beta(P(2, SECRET)), d.beta(P(3)))
    assert r == AbstractValue(frozenset({(("int", 5), SECRET)}))


def test_taint_only_raises_taint():
    d = TaintOnly()
    r = abs_binop(d, "add", d.beta(P(1, SECRET)), d.beta(P(9)))
    assert r == AbstractValue(frozenset({(TOP, SECRET)}))


def test_compare_equal_singletons_is_may_true_only():
    d = ConstSet()
    assert abs_compare(d, "eq", d.beta(P(0)), d.beta(P(0))) == (True, False)


def test_compare_with_location_is_both():
    d = ConstSet()
    loc = AbstractValue(frozenset(), frozenset({Annot("class", "A")}))
    assert abs_compare(d, "eq", loc, d.beta(P(0))) == (True, True)


def test_constset_collapses_beyond_k():
    d = ConstSet(2)
    v = BOTTOM
    for n, h in [(1, PUBLIC), (2, PUBLIC), (3, SECRET)]:
        v = d.join(v, d.beta(P(n, h)))
    # three literals exceed k = 2; ⊤@secret subsumes ⊤@public
    assert v.prims == frozenset({(TOP, SECRET)})
    assert d.leq(d.beta(P(7)), v)


def test_parse_domain():
    assert str(parse_domain("taint")) == "taint"
    assert str(parse_domain("const")) == "const:32"
    assert str(parse_domain("const:4")) == "const:4"
    for bad in ("const:0", "const:x", "interval"):
        with pytest.raises(ValueError):
            parse_domain(bad)


ints = st.integers(min_value=-4, max_value=4)
taints = st.sampled_from([PUBLIC, SECRET])
prims = st.builds(lambda n, h: P(n, h), ints, taints)


def values(dom):
    return st.lists(prims, max_size=4).map(
        lambda ps: _join_all(dom, ps))


def _join_all(dom, ps):
    v = BOTTOM
    for p in ps:
        v = dom.join(v, dom.beta(p))
    return v


@pytest.mark.parametrize("dom", DOMS, ids=str)
@settings(max_examples=150, deadline=None)
@given(data=st.data())
def test_preorder_and_join(dom, data):
    a, b, c = (data.draw(values(dom)) for _ in range(3))
    assert dom.leq(a, a)
    assert dom.leq(BOTTOM, a)
    j = dom.join(a, b)
    assert dom.leq(a, j) and dom.leq(b, j)
    if dom.leq(a, c) and dom.leq(b, c):
        assert dom.leq(j, c)
    if dom.leq(a, b) and dom.leq(b, c):
        assert dom.leq(a, c)


@pytest.mark.parametrize("dom", DOMS, ids=str)
@settings(max_examples=100, deadline=None)
@given(data=st.data())
def test_widening_bounds_ascending_chains(dom, data):
    chain = data.draw(st.lists(prims, min_size=1, max_size=40))
    cur = BOTTOM
    acc = BOTTOM
    changes = 0
    for p in chain:
        acc = dom.join(acc, dom.beta(p))
        nxt = dom.widen(cur, acc)
        assert dom.leq(cur, nxt) and dom.leq(acc, nxt)
        if nxt != cur:
            changes += 1
        cur = nxt
    k = getattr(dom, "k", 1)
    assert changes <= k + 2


@pytest.mark.parametrize("dom", DOMS, ids=str)
@settings(max_examples=200, deadline=None)
@given(u=prims, v=prims, op=st.sampled_from(["add", "sub", "mul", "div", "rem"]))
def test_binop_image_is_covered(dom, u, v, op):
    from microdroid.interpreter import apply_binop
    r = apply_binop(op, u, v)
    if r is not None:
        assert dom.leq(beta_val(dom, r), abs_binop(dom, op, dom.beta(u), dom.beta(v)))


@pytest.mark.parametrize("dom", DOMS, ids=str)
def test_operator_inclusions_and_monotonicity(dom):
    from oracles import operator_soundness
    assert operator_soundness(dom, pairs=500, seed=1) == {}


def test_operator_oracle_catches_a_wrong_table():
    from oracles import operator_soundness

    class OffByOne(ConstSet):
        def binop(self, op, u, v):
            r = super().binop(op, u, v)
            if op != "add":
                return r
            bump = lambda c: ("int", c[1] + 1) if c != TOP else c
            return self.value({(bump(c), h) for c, h in r.prims}, r.annots)

    fails = operator_soundness(OffByOne(), pairs=200)
    assert set(fails) == {"add"}


def test_compare_oracle_catches_a_missing_branch():
    from oracles import operator_soundness

    class NeverFalse(ConstSet):
        def compare(self, op, u, v):
            return (super().compare(op, u, v)[0], False)

    assert set(operator_soundness(NeverFalse(), pairs=200)) == set(S.COMPARISONS)
