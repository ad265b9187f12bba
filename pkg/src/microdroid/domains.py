"""Abstract values and blocks, and the pluggable primitive domains.

A primitive element is a pair (constant, taint) where constant is a literal
("int", n) / ("bool", b) or TOP. Sets of elements are kept as antichains so
that equal sets are equal in the pre-order as well."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from . import syntax as S
from .interpreter import apply_binop, apply_unop, compare
from .values import PUBLIC, SECRET, Prim, taint_join, taint_leq

TOP = ("top", 0)
EMPTY = frozenset()


def elem_str(e) -> str:
    c, h = e
    if c == TOP:
        txt = "top"
    elif c[0] == "bool":
        txt = "true" if c[1] else "false"
    else:
        txt = str(c[1])
    return txt if h == PUBLIC else f"{txt}@{h}"


@dataclass(frozen=True)
class AbstractValue:
    prims: frozenset = EMPTY
    annots: frozenset = EMPTY

    def __str__(self) -> str:
        parts = [elem_str(e) for e in sorted(self.prims)] + [str(a) for a in sorted(self.annots)]
        return "{" + ", ".join(parts) + "}"

    def __bool__(self) -> bool:
        return bool(self.prims or self.annots)


BOTTOM = AbstractValue()


def annot_value(*annots) -> AbstractValue:
    return AbstractValue(EMPTY, frozenset(annots))


# ---------------------------------------------------------------- blocks

@dataclass(frozen=True)
class AObj:
    cls: str
    fields: tuple  # ((name, AbstractValue), ...) in declared order

    def get(self, name: str):
        for f, v in self.fields:
            if f == name:
                return v
        return None

    def has(self, name: str) -> bool:
        return any(f == name for f, _ in self.fields)

    def set(self, name: str, v: AbstractValue) -> "AObj":
        return AObj(self.cls, tuple((f, v if f == name else x) for f, x in self.fields))

    def __str__(self) -> str:
        inner = "; ".join(f"{f}={v}" for f, v in self.fields)
        return f"obj {self.cls} [{inner}]"


@dataclass(frozen=True)
class AArr:
    elem: S.TypeName
    val: AbstractValue

    def __str__(self) -> str:
        return f"array {self.elem} [{self.val}]"


@dataclass(frozen=True)
class AIntent:
    target: str
    val: AbstractValue

    def __str__(self) -> str:
        return f"intent {self.target} [{self.val}]"


AbstractBlock = Union[AObj, AArr, AIntent]


def get_type_hat(b: AbstractBlock) -> S.TypeName:
    if isinstance(b, AObj):
        return S.ClassType(b.cls)
    if isinstance(b, AArr):
        return S.ArrayType(b.elem)
    return S.INTENT


def block_values(b: AbstractBlock):
    if isinstance(b, AObj):
        return [v for _, v in b.fields]
    return [b.val]


# ---------------------------------------------------------------- plugins

def _elem_leq(e, prims: frozenset) -> bool:
    c, h = e
    if (c, h) in prims or (c, SECRET) in prims or (TOP, SECRET) in prims:
        return True
    return h == PUBLIC and (TOP, PUBLIC) in prims


class DomainPlugin:
    """Contract for a primitive domain. Subclasses supply literal
    abstraction, the abstract operators and widening; the antichain
    normalization and ordering are shared."""

    name = "abstract"
    finite_encoding = True

    def beta_prim(self, p: Prim) -> frozenset:
        raise NotImplementedError

    def leq_elem(self, e1, e2) -> bool:
        (c1, h1), (c2, h2) = e1, e2
        return (c1 == c2 or c2 == TOP) and taint_leq(h1, h2)

    def normalize(self, prims: frozenset) -> frozenset:
        if len(prims) <= 1:
            return prims
        keep = set()
        for e in prims:
            c, h = e
            if h == PUBLIC and (c, SECRET) in prims:
                continue
            if c != TOP and ((TOP, SECRET) in prims or (h == PUBLIC and (TOP, PUBLIC) in prims)):
                continue
            keep.add(e)
        return frozenset(keep)

    def leq(self, u: AbstractValue, v: AbstractValue) -> bool:
        if u is v:
            return True
        if not u.annots <= v.annots:
            return False
        vp = v.prims
        return all(_elem_leq(e, vp) for e in u.prims)

    def join(self, u: AbstractValue, v: AbstractValue) -> AbstractValue:
        if u is v or not v:
            return u
        if not u:
            return v
        prims = self.normalize(u.prims | v.prims)
        annots = u.annots | v.annots
        if prims == u.prims and annots == u.annots:
            return u
        if prims == v.prims and annots == v.annots:
            return v
        return AbstractValue(prims, annots)

    def value(self, prims=EMPTY, annots=EMPTY) -> AbstractValue:
        return AbstractValue(self.normalize(frozenset(prims)), frozenset(annots))

    def beta(self, p: Prim) -> AbstractValue:
        return AbstractValue(self.beta_prim(p), EMPTY)

    def top_prim(self, t: S.PrimType) -> frozenset:
        return frozenset({(TOP, PUBLIC)})

    def binop(self, op: str, u: AbstractValue, v: AbstractValue) -> AbstractValue:
        raise NotImplementedError

    def unop(self, op: str, u: AbstractValue) -> AbstractValue:
        raise NotImplementedError

    def compare(self, op: str, u: AbstractValue, v: AbstractValue) -> tuple:
        raise NotImplementedError

    def widen(self, old: AbstractValue, new: AbstractValue) -> AbstractValue:
        return self.join(old, new)

    # element-level tables used by the SMT encoding
    def elem_binop(self, op: str, e1, e2):
        """Result element for a pair of elements, or None if undefined."""
        raise NotImplementedError

    def elem_unop(self, op: str, e):
        raise NotImplementedError

    def elem_compare(self, op: str, e1, e2) -> tuple:
        raise NotImplementedError

    def constants_of(self, prims: frozenset):
        return [c for c, _ in prims if c != TOP]


class TaintOnly(DomainPlugin):
    """Every primitive is ⊤; only its taint is tracked."""

    name = "taint"

    def __str__(self) -> str:
        return "taint"

    def beta_prim(self, p: Prim) -> frozenset:
        return frozenset({(TOP, p.taint)})

    def _taints(self, u: AbstractValue):
        return [h for _, h in u.prims]

    def binop(self, op, u, v):
        out = {(TOP, taint_join(h1, h2)) for h1 in self._taints(u) for h2 in self._taints(v)}
        return AbstractValue(self.normalize(frozenset(out)), EMPTY)

    def unop(self, op, u):
        return AbstractValue(u.prims, EMPTY)

    def compare(self, op, u, v):
        if u.annots or v.annots or (u.prims and v.prims):
            return True, True
        return False, False

    def elem_binop(self, op, e1, e2):
        return (TOP, taint_join(e1[1], e2[1]))

    def elem_unop(self, op, e):
        return e

    def elem_compare(self, op, e1, e2):
        return True, True


def _as_prim(c, h) -> Prim:
    return Prim(c[0], c[1], h)


class ConstSet(DomainPlugin):
    """Finite sets of exact literals (each with its taint); more than k
    distinct literals collapse to ⊤ with the joined taint."""

    name = "const"

    def __init__(self, k: int = 32):
        if k < 1:
            raise ValueError("ConstSet bound must be positive")
        self.k = k

    def __str__(self) -> str:
        return f"const:{self.k}"

    def beta_prim(self, p: Prim) -> frozenset:
        return frozenset({((p.kind, p.value), p.taint)})

    def normalize(self, prims: frozenset) -> frozenset:
        prims = super().normalize(prims)
        consts = {c for c, _ in prims if c != TOP}
        if len(consts) <= self.k:
            return prims
        collapsed = {(TOP, h) for c, h in prims}
        return super().normalize(frozenset(collapsed))

    def elem_binop(self, op, e1, e2):
        (c1, h1), (c2, h2) = e1, e2
        h = taint_join(h1, h2)
        if c1 == TOP or c2 == TOP:
            if (c1 != TOP and c1[0] != "int") or (c2 != TOP and c2[0] != "int"):
                return None
            return (TOP, h)
        if c1[0] != "int" or c2[0] != "int":
            return None
        if c2[1] == 0 and op in ("div", "rem"):
            return (TOP, h)
        r = apply_binop(op, _as_prim(c1, h1), _as_prim(c2, h2))
        return (("int", r.value), h)

    def elem_unop(self, op, e):
        c, h = e
        if c == TOP:
            return e
        r = apply_unop(op, _as_prim(c, h))
        return None if r is None else ((r.kind, r.value), h)

    def elem_compare(self, op, e1, e2):
        (c1, h1), (c2, h2) = e1, e2
        if c1 == TOP or c2 == TOP:
            return True, True
        r = compare(op, _as_prim(c1, h1), _as_prim(c2, h2))
        if r is None:
            return False, False
        return r, not r

    def binop(self, op, u, v):
        out = set()
        for e1 in u.prims:
            for e2 in v.prims:
                r = self.elem_binop(op, e1, e2)
                if r is not None:
                    out.add(r)
        return AbstractValue(self.normalize(frozenset(out)), EMPTY)

    def unop(self, op, u):
        out = {r for e in u.prims for r in [self.elem_unop(op, e)] if r is not None}
        return AbstractValue(self.normalize(frozenset(out)), EMPTY)

    def compare(self, op, u, v):
        if u.annots or v.annots:
            return True, True
        may_t = may_f = False
        for e1 in u.prims:
            for e2 in v.prims:
                t, f = self.elem_compare(op, e1, e2)
                may_t |= t
                may_f |= f
                if may_t and may_f:
                    return True, True
        return may_t, may_f

    def widen(self, old, new):
        if self.leq(new, old):
            return old
        j = self.join(old, new)
        old_consts = {c for c, _ in old.prims if c != TOP}
        new_consts = {c for c, _ in j.prims if c != TOP}
        if new_consts <= old_consts:
            return j
        prims = frozenset((TOP if c != TOP else c, h) for c, h in j.prims)
        return AbstractValue(self.normalize(prims), j.annots)


def parse_domain(text: str) -> DomainPlugin:
    """`taint` or `const` / `const:<k>`."""
    if text == "taint":
        return TaintOnly()
    if text == "const":
        return ConstSet()
    if text.startswith("const:"):
        try:
            return ConstSet(int(text.split(":", 1)[1]))
        except ValueError:
            pass
    raise ValueError(f"unknown domain {text!r} (expected taint or const:<k>)")


# ---------------------------------------------------------------- lifted operations

def join_blk(dom: DomainPlugin, a: AbstractBlock, b: AbstractBlock) -> AbstractBlock:
    if a is b:
        return a
    if isinstance(a, AObj) and isinstance(b, AObj) and a.cls == b.cls:
        return AObj(a.cls, tuple((f, dom.join(x, y)) for (f, x), (_, y) in zip(a.fields, b.fields)))
    if isinstance(a, AArr) and isinstance(b, AArr) and a.elem == b.elem:
        return AArr(a.elem, dom.join(a.val, b.val))
    if isinstance(a, AIntent) and isinstance(b, AIntent) and a.target == b.target:
        return AIntent(a.target, dom.join(a.val, b.val))
    raise ValueError(f"cannot join incompatible blocks {a} and {b}")


def leq_blk(dom: DomainPlugin, a: AbstractBlock, b: AbstractBlock) -> bool:
    if isinstance(a, AObj) and isinstance(b, AObj):
        if a.cls != b.cls or len(a.fields) != len(b.fields):
            return False
        return all(f == g and dom.leq(x, y) for (f, x), (g, y) in zip(a.fields, b.fields))
    if isinstance(a, AArr) and isinstance(b, AArr):
        return a.elem == b.elem and dom.leq(a.val, b.val)
    if isinstance(a, AIntent) and isinstance(b, AIntent):
        return a.target == b.target and dom.leq(a.val, b.val)
    return False


def widen_blk(dom: DomainPlugin, a: AbstractBlock, b: AbstractBlock) -> AbstractBlock:
    if isinstance(a, AObj):
        return AObj(a.cls, tuple((f, dom.widen(x, y)) for (f, x), (_, y) in zip(a.fields, b.fields)))
    if isinstance(a, AArr):
        return AArr(a.elem, dom.widen(a.val, b.val))
    return AIntent(a.target, dom.widen(a.val, b.val))


def leq_seq(dom: DomainPlugin, xs: tuple, ys: tuple) -> bool:
    return len(xs) == len(ys) and all(dom.leq(x, y) for x, y in zip(xs, ys))


def join_seq(dom: DomainPlugin, xs: tuple, ys: tuple) -> tuple:
    return tuple(dom.join(x, y) for x, y in zip(xs, ys))


def widen_seq(dom: DomainPlugin, xs: tuple, ys: tuple) -> tuple:
    return tuple(dom.widen(x, y) for x, y in zip(xs, ys))


def abs_binop(dom, op, u, v):
    return dom.binop(op, u, v)


def abs_unop(dom, op, u):
    return dom.unop(op, u)


def abs_compare(dom, op, u, v):
    return dom.compare(op, u, v)
