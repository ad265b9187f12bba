"""Object-language definitions: types, statements, classes, programs and
the class-hierarchy services (subtyping, method lookup, signatures)."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Union


# ---------------------------------------------------------------- types

@dataclass(frozen=True, order=True)
class PrimType:
    name: str  # "int", "bool" or "void" (return position only)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, order=True)
class ClassType:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, order=True)
class ArrayType:
    elem: "TypeName"

    def __str__(self) -> str:
        return f"(array {self.elem})"


TypeName = Union[PrimType, ClassType, ArrayType]

INT = PrimType("int")
BOOL = PrimType("bool")
VOID = PrimType("void")
OBJECT = ClassType("Object")
ACTIVITY = ClassType("Activity")
INTENT = ClassType("Intent")

BUILTIN_CLASSES = ("Object", "Activity", "Intent")

# Fields every activity object carries; declared on the built-in Activity root.
ACTIVITY_FIELDS = (
    ("finished", BOOL),
    ("intent", INTENT),
    ("result", INTENT),
    ("parent", ACTIVITY),
)


def is_reference(t: TypeName) -> bool:
    return not isinstance(t, PrimType)


def type_sort_key(t: TypeName) -> str:
    return str(t)


# ---------------------------------------------------------------- operators

COMPARISONS = ("lt", "gt", "le", "ge", "eq", "ne")
BINOPS = ("add", "sub", "mul", "div", "rem")
UNOPS = ("neg", "not")


# ---------------------------------------------------------------- operands

RET = -1


@dataclass(frozen=True, order=True)
class Reg:
    index: int  # RET for the distinguished return register

    @property
    def is_ret(self) -> bool:
        return self.index == RET

    def __str__(self) -> str:
        return "(reg ret)" if self.is_ret else f"(reg {self.index})"


@dataclass(frozen=True)
class ArrayCell:
    array: Reg
    index: Reg

    def __str__(self) -> str:
        return f"(cell {self.array} {self.index})"


@dataclass(frozen=True)
class FieldRef:
    obj: Reg
    field: str

    def __str__(self) -> str:
        return f"(field {self.obj} {self.field})"


@dataclass(frozen=True)
class StaticField:
    cls: str
    field: str

    def __str__(self) -> str:
        return f"(static {self.cls} {self.field})"


@dataclass(frozen=True)
class Literal:
    kind: str  # "int" or "bool"
    value: Union[int, bool]

    def __str__(self) -> str:
        if self.kind == "bool":
            return f"(prim bool {'true' if self.value else 'false'})"
        return f"(prim int {self.value})"


Lhs = Union[Reg, ArrayCell, FieldRef, StaticField]
Rhs = Union[Reg, ArrayCell, FieldRef, StaticField, Literal]


def _regs(regs) -> str:
    return "".join(f" {r}" for r in regs)


# ---------------------------------------------------------------- statements

@dataclass(frozen=True)
class Goto:
    target: int

    def __str__(self) -> str:
        return f"(goto {self.target})"


@dataclass(frozen=True)
class Move:
    lhs: Lhs
    rhs: Rhs

    def __str__(self) -> str:
        return f"(move {self.lhs} {self.rhs})"


@dataclass(frozen=True)
class If:
    op: str
    left: Reg
    right: Reg
    target: int

    def __str__(self) -> str:
        return f"(if {self.op} {self.left} {self.right} {self.target})"


@dataclass(frozen=True)
class Unop:
    op: str
    dst: Reg
    src: Reg

    def __str__(self) -> str:
        return f"(unop {self.op} {self.dst} {self.src})"


@dataclass(frozen=True)
class Binop:
    op: str
    dst: Reg
    left: Reg
    right: Reg

    def __str__(self) -> str:
        return f"(binop {self.op} {self.dst} {self.left} {self.right})"


@dataclass(frozen=True)
class New:
    dst: Reg
    cls: str

    def __str__(self) -> str:
        return f"(new {self.dst} {self.cls})"


@dataclass(frozen=True)
class NewArray:
    dst: Reg
    length: Reg
    elem: TypeName

    def __str__(self) -> str:
        return f"(newarray {self.dst} {self.length} {self.elem})"


@dataclass(frozen=True)
class CheckCast:
    src: Reg
    type: TypeName

    def __str__(self) -> str:
        return f"(checkcast {self.src} {self.type})"


@dataclass(frozen=True)
class InstanceOf:
    dst: Reg
    src: Reg
    type: TypeName

    def __str__(self) -> str:
        return f"(instof {self.dst} {self.src} {self.type})"


@dataclass(frozen=True)
class Invoke:
    receiver: Reg
    method: str
    args: tuple

    def __str__(self) -> str:
        return f"(invoke {self.receiver} {self.method}{_regs(self.args)})"


@dataclass(frozen=True)
class StaticInvoke:
    cls: str
    method: str
    args: tuple

    def __str__(self) -> str:
        return f"(sinvoke {self.cls} {self.method}{_regs(self.args)})"


@dataclass(frozen=True)
class Return:
    def __str__(self) -> str:
        return "(return)"


@dataclass(frozen=True)
class NewIntent:
    dst: Reg
    target: str

    def __str__(self) -> str:
        return f"(newintent {self.dst} {self.target})"


@dataclass(frozen=True)
class PutExtra:
    intent: Reg
    key: Reg
    value: Reg

    def __str__(self) -> str:
        return f"(put-extra {self.intent} {self.key} {self.value})"


@dataclass(frozen=True)
class GetExtra:
    intent: Reg
    key: Reg
    type: TypeName

    def __str__(self) -> str:
        return f"(get-extra {self.intent} {self.key} {self.type})"


@dataclass(frozen=True)
class StartActivity:
    intent: Reg

    def __str__(self) -> str:
        return f"(start-activity {self.intent})"


Statement = Union[Goto, Move, If, Unop, Binop, New, NewArray, CheckCast,
                  InstanceOf, Invoke, StaticInvoke, Return, NewIntent,
                  PutExtra, GetExtra, StartActivity]


def registers_of(st: Statement) -> list:
    """Every register operand mentioned by a statement."""
    out = []

    def operand(x):
        if isinstance(x, Reg):
            out.append(x)
        elif isinstance(x, ArrayCell):
            out.extend([x.array, x.index])
        elif isinstance(x, FieldRef):
            out.append(x.obj)

    if isinstance(st, Move):
        operand(st.lhs)
        operand(st.rhs)
    elif isinstance(st, Invoke):
        out.append(st.receiver)
        out.extend(st.args)
    elif isinstance(st, StaticInvoke):
        out.extend(st.args)
    else:
        for name in ("left", "right", "dst", "src", "length", "intent", "key", "value"):
            v = getattr(st, name, None)
            if isinstance(v, Reg):
                out.append(v)
    return out


# ---------------------------------------------------------------- program points

@dataclass(frozen=True, order=True)
class ProgramPoint:
    cls: str
    method: str
    pc: int

    def __str__(self) -> str:
        return f"{self.cls}.{self.method}:{self.pc}"

    def next(self) -> "ProgramPoint":
        return ProgramPoint(self.cls, self.method, self.pc + 1)

    def at(self, pc: int) -> "ProgramPoint":
        return ProgramPoint(self.cls, self.method, pc)


# ---------------------------------------------------------------- declarations

@dataclass(frozen=True)
class Pos:
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


@dataclass(frozen=True)
class MethodDef:
    name: str
    arg_types: tuple
    ret_type: TypeName
    locals: int
    body: tuple
    is_static: bool = False
    pcs: tuple = ()  # pc labels as written, checked for contiguity
    pos: Optional[Pos] = field(default=None, compare=False)

    @property
    def arity(self) -> int:
        return len(self.arg_types)

    @property
    def receiver_index(self) -> Optional[int]:
        return None if self.is_static else self.locals

    @property
    def first_arg_index(self) -> int:
        return self.locals + (0 if self.is_static else 1)

    @property
    def register_count(self) -> int:
        """Numbered registers; the ret slot is stored after these."""
        return self.first_arg_index + self.arity


@dataclass(frozen=True)
class ClassDef:
    name: str
    super: Optional[str]
    interfaces: tuple = ()
    fields: tuple = ()  # (name, TypeName) pairs
    methods: tuple = ()
    callbacks: tuple = ()  # (state, method name) pairs
    has_activity_block: bool = False
    pos: Optional[Pos] = field(default=None, compare=False)

    def method(self, name: str) -> Optional[MethodDef]:
        for m in self.methods:
            if m.name == name:
                return m
        return None


DEFAULT_LIFECYCLE = (
    ("constructor", "onCreate"),
    ("onCreate", "onStart"),
    ("onStart", "onResume"),
    ("onResume", "running"),
    ("running", "onPause"),
    ("onPause", "onResume"),
    ("onPause", "onStop"),
    ("onStop", "onStart"),
    ("onStop", "onDestroy"),
)

ACTIVITY_STATES = ("constructor", "onCreate", "onStart", "onResume", "running",
                   "onPause", "onStop", "onDestroy", "onActivityResult")


def builtin_classes() -> tuple:
    return (
        ClassDef("Object", None),
        ClassDef("Activity", "Object", fields=ACTIVITY_FIELDS),
        ClassDef("Intent", "Object"),
    )


@dataclass(frozen=True)
class Program:
    classes: tuple
    entry: str
    lifecycle: tuple = DEFAULT_LIFECYCLE

    # -- indexes

    @cached_property
    def class_map(self) -> dict:
        table = {c.name: c for c in builtin_classes()}
        for c in self.classes:
            table.setdefault(c.name, c)
        return table

    def get_class(self, name: str) -> Optional[ClassDef]:
        return self.class_map.get(name)

    @cached_property
    def class_names(self) -> tuple:
        return tuple(c.name for c in self.classes)

    def chain(self, name: str) -> list:
        """The superclass chain starting at `name` (cycle-safe)."""
        out, seen = [], set()
        cur = name
        while cur is not None and cur not in seen:
            c = self.get_class(cur)
            if c is None:
                break
            seen.add(cur)
            out.append(c)
            cur = c.super
        return out

    @cached_property
    def _supertypes(self) -> dict:
        """Reflexive-transitive closure of extends/implements over classes."""
        up = {}
        for name in self.class_map:
            c = self.class_map[name]
            up[name] = set(([c.super] if c.super else []) + list(c.interfaces))
        closure = {}
        for name in self.class_map:
            seen = {name}
            todo = [name]
            while todo:
                x = todo.pop()
                for y in up.get(x, ()):
                    if y not in seen:
                        seen.add(y)
                        todo.append(y)
            closure[name] = frozenset(seen)
        return closure

    # -- hierarchy services

    def subtype(self, t1: TypeName, t2: TypeName) -> bool:
        if t1 == t2:
            return True
        if isinstance(t1, ArrayType) and isinstance(t2, ArrayType):
            return self.subtype(t1.elem, t2.elem)
        if isinstance(t1, ClassType) and isinstance(t2, ClassType):
            return t2.name in self._supertypes.get(t1.name, frozenset((t1.name,)))
        return False

    def is_activity(self, name: str) -> bool:
        return name != "Activity" and self.subtype(ClassType(name), ACTIVITY)

    @cached_property
    def activity_classes(self) -> tuple:
        return tuple(sorted(n for n in self.class_names if self.is_activity(n)))

    def all_fields(self, name: str) -> tuple:
        """Declared fields of a class including inherited ones, root first."""
        out = []
        for c in reversed(self.chain(name)):
            out.extend(c.fields)
        return tuple(out)

    def field_type(self, name: str, fname: str) -> Optional[TypeName]:
        for f, t in self.all_fields(name):
            if f == fname:
                return t
        return None

    def lookup(self, cls: str, m: str):
        """Nearest definition of `m` on the superclass chain of `cls`:
        (defining class, MethodDef) or None."""
        for c in self.chain(cls):
            md = c.method(m)
            if md is not None:
                return c.name, md
        return None

    def sign(self, cls: str, m: str):
        hit = self.lookup(cls, m)
        if hit is None:
            return None
        md = hit[1]
        return md.arg_types, md.ret_type, md.locals

    def lookup_hat(self, m: str, arity: int) -> frozenset:
        out = set()
        for name in self.class_map:
            hit = self.lookup(name, m)
            if hit is not None and hit[1].arity == arity and not hit[1].is_static:
                out.add(name)
        return frozenset(out)

    def method(self, cls: str, m: str) -> Optional[MethodDef]:
        c = self.get_class(cls)
        return c.method(m) if c else None

    def statement(self, pp: ProgramPoint):
        md = self.method(pp.cls, pp.method)
        if md is None or not 0 <= pp.pc < len(md.body):
            return None
        return md.body[pp.pc]

    def callbacks(self, cls: str, state: str) -> tuple:
        """cb(c, s): callback method names declared by `cls` for a state."""
        c = self.get_class(cls)
        if c is None:
            return ()
        return tuple(m for s, m in c.callbacks if s == state)

    def handlers(self, cls: str) -> tuple:
        return self.callbacks(cls, "running")

    @cached_property
    def lifecycle_set(self) -> frozenset:
        return frozenset(self.lifecycle)

    @cached_property
    def states(self) -> tuple:
        seen = list(ACTIVITY_STATES)
        for a, b in self.lifecycle:
            for s in (a, b):
                if s not in seen:
                    seen.append(s)
        return tuple(seen)

    def methods(self):
        """(class name, MethodDef) for every user-declared method, in order."""
        for c in self.classes:
            for md in c.methods:
                yield c.name, md

    @cached_property
    def occurring_types(self) -> tuple:
        """Types syntactically occurring in the program, closed under one
        array constructor level."""
        base = {INT, BOOL, OBJECT, ACTIVITY, INTENT}
        for name in self.class_map:
            base.add(ClassType(name))
        for c in self.classes:
            for _, t in c.fields:
                base.add(t)
            for md in c.methods:
                base.update(md.arg_types)
                if md.ret_type != VOID:
                    base.add(md.ret_type)
                for st in md.body:
                    for attr in ("elem", "type"):
                        t = getattr(st, attr, None)
                        if t is not None:
                            base.add(t)
        closed = set()

        def add_all(t):
            closed.add(t)
            if isinstance(t, ArrayType):
                add_all(t.elem)

        for t in base:
            add_all(t)
        closed |= {ArrayType(t) for t in list(closed)}
        return tuple(sorted(closed, key=type_sort_key))


def subtype(t1: TypeName, t2: TypeName, p: Program) -> bool:
    return p.subtype(t1, t2)


def lookup(c: str, m: str, p: Program):
    return p.lookup(c, m)


def sign(c: str, m: str, p: Program):
    return p.sign(c, m)


def lookup_hat(m: str, arity: int, p: Program) -> frozenset:
    return p.lookup_hat(m, arity)
