"""Concrete runtime values, annotations, memory blocks and an immutable map."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from typing import Optional, Union

from . import syntax as S

PUBLIC = "public"
SECRET = "secret"
TAINTS = (PUBLIC, SECRET)


def taint_join(a: str, b: str) -> str:
    return SECRET if SECRET in (a, b) else PUBLIC


def taint_leq(a: str, b: str) -> bool:
    return a == PUBLIC or b == SECRET


# ---------------------------------------------------------------- annotations

@dataclass(frozen=True, order=True)
class Annot:
    """Static name of a heap location: an allocation site (kind "pp"), an
    activity class (kind "class") or the intent that started a class ("in")."""
    kind: str
    cls: str
    method: str = ""
    pc: int = -1

    def __str__(self) -> str:
        if self.kind == "pp":
            return f"{self.cls}.{self.method}:{self.pc}"
        if self.kind == "in":
            return f"in({self.cls})"
        return self.cls


def site(pp: S.ProgramPoint) -> Annot:
    return Annot("pp", pp.cls, pp.method, pp.pc)


def class_annot(c: str) -> Annot:
    return Annot("class", c)


def intent_annot(c: str) -> Annot:
    return Annot("in", c)


# ---------------------------------------------------------------- values

@dataclass(frozen=True, order=True)
class Prim:
    kind: str  # "int" | "bool"
    value: Union[int, bool]
    taint: str = PUBLIC

    def __str__(self) -> str:
        v = ("true" if self.value else "false") if self.kind == "bool" else str(self.value)
        return v if self.taint == PUBLIC else f"{v}@{self.taint}"


@dataclass(frozen=True, order=True)
class Null:
    def __str__(self) -> str:
        return "null"


NULL = Null()


@dataclass(frozen=True, order=True)
class Loc:
    annot: Annot
    pointer: int

    def __str__(self) -> str:
        return f"p{self.pointer}_{self.annot}"


Value = Union[Prim, Null, Loc]


def zero(t: S.TypeName) -> Value:
    """Default value 0_τ."""
    if t == S.BOOL:
        return Prim("bool", False)
    if isinstance(t, S.PrimType):
        return Prim("int", 0)
    return NULL


ZERO = Prim("int", 0)


# ---------------------------------------------------------------- blocks

@dataclass(frozen=True)
class Obj:
    cls: str
    fields: tuple  # ((name, Value), ...) in declared order

    def get(self, name: str) -> Optional[Value]:
        for f, v in self.fields:
            if f == name:
                return v
        return None

    def has(self, name: str) -> bool:
        return any(f == name for f, _ in self.fields)

    def set(self, name: str, value: Value) -> "Obj":
        return Obj(self.cls, tuple((f, value if f == name else v) for f, v in self.fields))


@dataclass(frozen=True)
class Arr:
    elem: S.TypeName
    cells: tuple


@dataclass(frozen=True)
class IntentBlock:
    target: str
    extras: tuple  # ((key, Value), ...) sorted by key; key = (kind, payload)

    def get(self, key) -> Optional[Value]:
        for k, v in self.extras:
            if k == key:
                return v
        return None

    def put(self, key, value: Value) -> "IntentBlock":
        d = dict(self.extras)
        d[key] = value
        return IntentBlock(self.target, tuple(sorted(d.items())))


Block = Union[Obj, Arr, IntentBlock]


def values_of(b: Block):
    if isinstance(b, Obj):
        return [v for _, v in b.fields]
    if isinstance(b, Arr):
        return list(b.cells)
    return [v for _, v in b.extras]


# ---------------------------------------------------------------- frozen map

class FrozenMap(Mapping):
    """Hashable immutable mapping with copy-on-write updates."""

    __slots__ = ("_d", "_h")

    def __init__(self, data=()):
        self._d = dict(data)
        self._h = None

    def __getitem__(self, k):
        return self._d[k]

    def __iter__(self):
        return iter(self._d)

    def __len__(self):
        return len(self._d)

    def __hash__(self):
        if self._h is None:
            self._h = hash(frozenset(self._d.items()))
        return self._h

    def __eq__(self, other):
        if isinstance(other, FrozenMap):
            return self._d == other._d
        return NotImplemented

    def set(self, k, v) -> "FrozenMap":
        d = dict(self._d)
        d[k] = v
        return FrozenMap(d)

    def update(self, items) -> "FrozenMap":
        d = dict(self._d)
        d.update(items)
        return FrozenMap(d)

    def __repr__(self):
        return f"FrozenMap({self._d!r})"


def get_type(heap: Mapping, v: Value) -> Optional[S.TypeName]:
    """type_H(v); None when undefined (null or dangling location)."""
    if isinstance(v, Prim):
        return S.PrimType(v.kind)
    if isinstance(v, Loc):
        b = heap.get(v)
        if isinstance(b, Obj):
            return S.ClassType(b.cls)
        if isinstance(b, Arr):
            return S.ArrayType(b.elem)
        if isinstance(b, IntentBlock):
            return S.INTENT
    return None


def fits(p: S.Program, heap: Mapping, v: Value, t: S.TypeName) -> bool:
    """Dynamic store check: the value's type is a subtype of `t`; null fits
    every reference type."""
    if isinstance(v, Null):
        return S.is_reference(t)
    vt = get_type(heap, v)
    return vt is not None and p.subtype(vt, t)


def fresh(heap: Mapping, annot: Annot, extra: Mapping = None) -> Loc:
    """ν: next pointer for an annotation, one past the largest in use."""
    top = -1
    for loc in heap:
        if loc.annot == annot and loc.pointer > top:
            top = loc.pointer
    if extra:
        for loc in extra:
            if loc.annot == annot and loc.pointer > top:
                top = loc.pointer
    return Loc(annot, top + 1)
