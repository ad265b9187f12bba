"""Facts, representation functions from concrete states to facts, the fact
ordering and coverage check, and taint extraction."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable

from .domains import (AArr, AbstractValue, AIntent, AObj, BOTTOM, DomainPlugin, block_values,
                      leq_blk, leq_seq)
from .values import (PUBLIC, SECRET, Arr, IntentBlock, Loc, Null, Obj, Prim, taint_join,
                     values_of)


class AnyContext:
    """The merged call context that stands for every argument tuple."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __str__(self) -> str:
        return "*"

    __repr__ = __str__

    def __reduce__(self):
        return (AnyContext, ())


ANY_CTX = AnyContext()

PREDICATES = ("R", "RHS", "Res", "H", "S", "I")


@dataclass(frozen=True)
class Fact:
    """pred ∈ PREDICATES. Keys: R/RHS (pp, ctx); Res (class, method, ctx);
    H (annotation,); S (class, field); I (sender class, target class)."""
    pred: str
    key: tuple
    value: object

    def base(self) -> tuple:
        if self.pred in ("R", "RHS", "Res"):
            return self.key[:-1]
        return self.key

    def ctx(self):
        if self.pred in ("R", "RHS", "Res"):
            return self.key[-1]
        return None

    def __str__(self) -> str:
        return fact_str(self.pred, self.key, self.value)


def ctx_str(ctx) -> str:
    if ctx is ANY_CTX:
        return "*"
    return "(" + ", ".join(str(v) for v in ctx) + ")"


def fact_str(pred, key, value) -> str:
    if pred == "R":
        return f"R[{key[0]}]({ctx_str(key[1])}; " + ", ".join(str(v) for v in value) + ")"
    if pred == "RHS":
        return f"RHS[{key[0]}]({ctx_str(key[1])}; {value})"
    if pred == "Res":
        return f"Res[{key[0]}.{key[1]}]({ctx_str(key[2])}; {value})"
    if pred == "H":
        return f"H({key[0]}, {value})"
    if pred == "S":
        return f"S[{key[0]}.{key[1]}]({value})"
    if pred == "I":
        return f"I({key[0]}, {value})"
    return f"{pred}{key}({value})"


def ctx_leq(dom: DomainPlugin, a, b) -> bool:
    if b is ANY_CTX:
        return True
    if a is ANY_CTX:
        return False
    return leq_seq(dom, a, b)


def leq_value(dom: DomainPlugin, pred: str, a, b) -> bool:
    if pred == "R":
        return leq_seq(dom, a, b)
    if pred in ("H", "I"):
        return leq_blk(dom, a, b)
    return dom.leq(a, b)


def leq_fact(dom: DomainPlugin, f: Fact, g: Fact) -> bool:
    if f.pred != g.pred or f.base() != g.base():
        return False
    if f.ctx() is not None and not ctx_leq(dom, f.ctx(), g.ctx()):
        return False
    return leq_value(dom, f.pred, f.value, g.value)


def leq_val(dom, u, v) -> bool:
    return dom.leq(u, v)


class FactIndex:
    """Facts grouped by predicate and base key for ∀∃ coverage checks."""

    def __init__(self, facts: Iterable[Fact] = ()):
        self.groups = defaultdict(list)
        for f in facts:
            self.groups[(f.pred, f.base())].append(f)

    def candidates(self, f: Fact):
        return self.groups.get((f.pred, f.base()), ())


def covers(dom: DomainPlugin, delta: Iterable[Fact], target) -> bool:
    """Δ <: Δ': every fact of Δ is ⊑ some fact of the target, which is a
    fact iterable or anything with a `covering(fact)` method."""
    return not uncovered(dom, delta, target)


def uncovered(dom: DomainPlugin, delta: Iterable[Fact], target) -> list:
    if hasattr(target, "covering"):
        return [f for f in delta if target.covering(f) is None]
    index = target if isinstance(target, FactIndex) else FactIndex(target)
    return [f for f in delta
            if not any(leq_fact(dom, f, g) for g in index.candidates(f))]


# ---------------------------------------------------------------- β

def beta_val(dom: DomainPlugin, v) -> AbstractValue:
    if isinstance(v, Prim):
        return AbstractValue(dom.beta_prim(v))
    if isinstance(v, Loc):
        return AbstractValue(frozenset(), frozenset((v.annot,)))
    if isinstance(v, Null):
        return BOTTOM
    raise TypeError(v)


def _join_all(dom, values) -> AbstractValue:
    out = BOTTOM
    for v in values:
        out = dom.join(out, beta_val(dom, v))
    return out


def beta_blk(dom: DomainPlugin, b):
    if isinstance(b, Obj):
        return AObj(b.cls, tuple((f, beta_val(dom, v)) for f, v in b.fields))
    if isinstance(b, Arr):
        return AArr(b.elem, _join_all(dom, b.cells))
    if isinstance(b, IntentBlock):
        return AIntent(b.target, _join_all(dom, [v for _, v in b.extras]))
    raise TypeError(b)


def beta_heap(dom: DomainPlugin, heap) -> list:
    return [Fact("H", (loc.annot,), beta_blk(dom, b)) for loc, b in heap.items()]


def beta_stat(dom: DomainPlugin, static) -> list:
    return [Fact("S", key, beta_val(dom, v)) for key, v in static.items()]


def beta_lst(dom: DomainPlugin, ls) -> Fact:
    ctx = tuple(beta_val(dom, v) for v in ls.args)
    return Fact("R", (ls.pp, ctx), tuple(beta_val(dom, v) for v in ls.regs))


def beta_pact(dom: DomainPlugin, owner: Loc, pending) -> list:
    return [Fact("I", (owner.annot.cls, i.target), beta_blk(dom, i)) for i in pending]


def beta_lcnf(dom: DomainPlugin, sigma) -> list:
    out = [beta_lst(dom, ls) for ls in sigma.stack]
    out += beta_pact(dom, sigma.owner, sigma.pending)
    return out + beta_heap(dom, sigma.heap) + beta_stat(dom, sigma.static)


def beta_cnf(dom: DomainPlugin, psi) -> list:
    out = []
    for fr in psi.frames:
        out.extend(beta_lst(dom, ls) for ls in fr.stack)
        out.extend(beta_pact(dom, fr.loc, fr.pending))
    out += beta_heap(dom, psi.heap)
    out += beta_stat(dom, psi.static)
    return list(dict.fromkeys(out))


# ---------------------------------------------------------------- taint

def taint_of(v, heap) -> str:
    """ℏ: the taint of a primitive, or the join over everything reachable
    from a location."""
    if isinstance(v, Prim):
        return v.taint
    if not isinstance(v, Loc):
        return PUBLIC
    seen = set()
    todo = [v]
    while todo:
        loc = todo.pop()
        if loc in seen or loc not in heap:
            continue
        seen.add(loc)
        for x in values_of(heap[loc]):
            if isinstance(x, Prim) and x.taint == SECRET:
                return SECRET
            if isinstance(x, Loc):
                todo.append(x)
    return PUBLIC


def taint_of_abs(v: AbstractValue, blocks_of) -> str:
    """ℏ̂: join of the primitive taints and of everything reachable through
    the model's H facts; `blocks_of(annot)` yields the stored blocks."""
    h = PUBLIC
    for _, t in v.prims:
        h = taint_join(h, t)
    if h == SECRET:
        return h
    seen = set()
    todo = sorted(v.annots)
    while todo:
        a = todo.pop()
        if a in seen:
            continue
        seen.add(a)
        for b in blocks_of(a):
            for x in block_values(b):
                if any(t == SECRET for _, t in x.prims):
                    return SECRET
                todo.extend(sorted(x.annots - seen))
    return PUBLIC
