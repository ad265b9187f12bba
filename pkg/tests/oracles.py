"""Randomized oracles shared by the unit tests and the acceptance suite."""

import random

from microdroid import syntax as S
from microdroid.abstraction import beta_val
from microdroid.domains import abs_binop, abs_compare, abs_unop, annot_value
from microdroid.interpreter import INT_MAX, INT_MIN, apply_binop, apply_unop, compare
from microdroid.values import (NULL, PUBLIC, SECRET, Annot, Arr, FrozenMap, IntentBlock, Loc,
                               Obj, Prim, site)

EDGE = (0, 1, -1, 2, -2, INT_MAX, INT_MIN, INT_MAX - 1, INT_MIN + 1)


def random_int(rng):
    r = rng.random()
    if r < 0.3:
        return rng.choice(EDGE)
    if r < 0.8:
        return rng.randint(-8, 8)
    return rng.randint(INT_MIN, INT_MAX)


def random_prim(rng, kind="int"):
    h = rng.choice((PUBLIC, SECRET))
    if kind == "bool":
        return Prim("bool", rng.random() < 0.5, h)
    return Prim("int", random_int(rng), h)


def enlarge(dom, rng, v):
    """v joined with a few random extra elements: an arbitrary abstract value
    above v, sometimes mixing kinds or adding an annotation."""
    for _ in range(rng.randint(0, 3)):
        kind = "int" if rng.random() < 0.85 else "bool"
        v = dom.join(v, beta_val(dom, random_prim(rng, kind)))
    if rng.random() < 0.1:
        v = dom.join(v, annot_value(Annot("class", "A")))
    return v


def operator_soundness(dom, pairs=10_000, seed=0):
    """For every operator, sample concrete operands, check that the concrete
    result is included in the abstract result of the abstracted operands,
    and that enlarging the operands only enlarges the abstract result.
    Returns {operator: [failure descriptions]}."""
    rng = random.Random(f"ops:{dom}:{seed}")
    fails = {}

    def bad(op, msg):
        fails.setdefault(op, []).append(msg)

    for op in S.BINOPS:
        for _ in range(pairs):
            u, v = random_prim(rng), random_prim(rng)
            bu, bv = beta_val(dom, u), beta_val(dom, v)
            eu, ev = enlarge(dom, rng, bu), enlarge(dom, rng, bv)
            exact, big = abs_binop(dom, op, bu, bv), abs_binop(dom, op, eu, ev)
            r = apply_binop(op, u, v)
            if r is not None and not dom.leq(beta_val(dom, r), exact):
                bad(op, f"{u} {op} {v} = {r} not in {exact}")
            if not dom.leq(exact, big):
                bad(op, f"not monotone: {bu},{bv} -> {exact}; {eu},{ev} -> {big}")
    for op, kind in (("neg", "int"), ("not", "bool")):
        for _ in range(pairs):
            u = random_prim(rng, kind)
            bu = beta_val(dom, u)
            eu = enlarge(dom, rng, bu)
            exact, big = abs_unop(dom, op, bu), abs_unop(dom, op, eu)
            r = apply_unop(op, u)
            if r is not None and not dom.leq(beta_val(dom, r), exact):
                bad(op, f"{op} {u} = {r} not in {exact}")
            if not dom.leq(exact, big):
                bad(op, f"not monotone: {bu} -> {exact}; {eu} -> {big}")
    for op in S.COMPARISONS:
        for _ in range(pairs):
            kind = "int" if op not in ("eq", "ne") or rng.random() < 0.7 else "bool"
            u, v = random_prim(rng, kind), random_prim(rng, kind)
            if rng.random() < 0.3:
                v = u if rng.random() < 0.5 else Prim(u.kind, u.value, rng.choice((PUBLIC, SECRET)))
            bu, bv = beta_val(dom, u), beta_val(dom, v)
            eu, ev = enlarge(dom, rng, bu), enlarge(dom, rng, bv)
            exact, big = abs_compare(dom, op, bu, bv), abs_compare(dom, op, eu, ev)
            c = compare(op, u, v)
            if c is not None and not exact[0 if c else 1]:
                bad(op, f"{u} {op} {v} is {c} but abstract answer is {exact}")
            if (exact[0] and not big[0]) or (exact[1] and not big[1]):
                bad(op, f"not monotone: {exact} then {big}")
    return fails


# ---------------------------------------------------------------- heaps

def random_heap(rng: random.Random):
    """A heap of objects, arrays and intents with random cross-references."""
    n = rng.randint(1, 6)
    locs = [Loc(site(S.ProgramPoint("C", "m", rng.randrange(4))), i) for i in range(n)]

    def value():
        r = rng.random()
        if r < 0.4:
            return rng.choice(locs)
        if r < 0.5:
            return NULL
        return Prim("int", rng.randint(-3, 3), rng.choice(["public", SECRET]))

    heap = {}
    for loc in locs:
        kind = rng.randrange(3)
        if kind == 0:
            heap[loc] = Obj("C", tuple((f"f{j}", value()) for j in range(rng.randint(0, 3))))
        elif kind == 1:
            heap[loc] = Arr(S.OBJECT, tuple(value() for _ in range(rng.randint(0, 3))))
        else:
            extras = {("int", j): value() for j in range(rng.randint(0, 3))}
            heap[loc] = IntentBlock("C", tuple(sorted(extras.items())))
    return FrozenMap(heap), locs, value


def isomorphic_copy(heap, v, merged, w, pairs):
    """Check that w (in merged) is a structural copy of v (in heap)."""
    if not isinstance(v, Loc):
        return v == w
    if v in pairs:
        return pairs[v] == w
    if not isinstance(w, Loc) or w.annot != v.annot:
        return False
    pairs[v] = w
    a, b = heap[v], merged[w]
    if type(a) is not type(b):
        return False
    if isinstance(a, Obj):
        return [f for f, _ in a.fields] == [f for f, _ in b.fields] and all(
            isomorphic_copy(heap, x, merged, y, pairs) for (_, x), (_, y) in zip(a.fields, b.fields))
    if isinstance(a, Arr):
        return len(a.cells) == len(b.cells) and all(
            isomorphic_copy(heap, x, merged, y, pairs) for x, y in zip(a.cells, b.cells))
    return [k for k, _ in a.extras] == [k for k, _ in b.extras] and all(
        isomorphic_copy(heap, x, merged, y, pairs) for (_, x), (_, y) in zip(a.extras, b.extras))
