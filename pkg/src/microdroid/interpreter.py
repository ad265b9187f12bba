"""Concrete small-step semantics: statements, activity stacks, serialization
and bounded breadth-first exploration."""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from . import syntax as S
from .values import (NULL, PUBLIC, SECRET, ZERO, Arr, FrozenMap, IntentBlock, Loc,
                     Obj, Prim, Value, class_annot, fits, fresh, get_type, intent_annot,
                     site, taint_join, values_of, zero)

INT_MIN, INT_MAX = -(2 ** 31), 2 ** 31 - 1
MAX_ARRAY = 1024

CALLBACK_SAMPLES = {
    "int": (Prim("int", 0), Prim("int", 1), Prim("int", -1)),
    "bool": (Prim("bool", True), Prim("bool", False)),
}


def wrap32(x: int) -> int:
    return (x - INT_MIN) % (2 ** 32) + INT_MIN


def int_binop(op: str, a: int, b: int) -> Optional[int]:
    """Java-style 32-bit arithmetic; None when undefined (division by zero)."""
    if op == "add":
        return wrap32(a + b)
    if op == "sub":
        return wrap32(a - b)
    if op == "mul":
        return wrap32(a * b)
    if b == 0:
        return None
    q = abs(a) // abs(b)
    if (a < 0) != (b < 0):
        q = -q
    if op == "div":
        return wrap32(q)
    return wrap32(a - b * q)


def compare(op: str, a: Prim, b: Prim) -> Optional[bool]:
    """Concrete ⋈; None when the operands cannot be compared."""
    if a.kind != b.kind:
        return None
    if op == "eq":
        return a.value == b.value
    if op == "ne":
        return a.value != b.value
    if a.kind != "int":
        return None
    return {"lt": a.value < b.value, "gt": a.value > b.value,
            "le": a.value <= b.value, "ge": a.value >= b.value}[op]


def apply_binop(op: str, a: Prim, b: Prim) -> Optional[Prim]:
    if a.kind != "int" or b.kind != "int":
        return None
    r = int_binop(op, a.value, b.value)
    if r is None:
        return None
    return Prim("int", r, taint_join(a.taint, b.taint))


def apply_unop(op: str, a: Prim) -> Optional[Prim]:
    if op == "neg" and a.kind == "int":
        return Prim("int", wrap32(-a.value), a.taint)
    if op == "not" and a.kind == "bool":
        return Prim("bool", not a.value, a.taint)
    return None


# ---------------------------------------------------------------- machine state

@dataclass(frozen=True)
class LocalState:
    pp: S.ProgramPoint
    regs: tuple  # numbered registers followed by the ret slot
    args: tuple  # recorded call arguments

    def reg(self, r: S.Reg) -> Value:
        return self.regs[r.index]

    def with_reg(self, r: S.Reg, v: Value) -> "LocalState":
        regs = list(self.regs)
        regs[r.index] = v
        return replace(self, regs=tuple(regs))

    def at(self, pc: int) -> "LocalState":
        return replace(self, pp=self.pp.at(pc))


@dataclass(frozen=True)
class LocalConfiguration:
    owner: Loc
    stack: tuple  # LocalState, top first
    pending: tuple  # IntentBlock, most recent first
    heap: FrozenMap
    static: FrozenMap


@dataclass(frozen=True)
class Frame:
    loc: Loc
    state: str
    pending: tuple
    stack: tuple
    active: bool = False


@dataclass(frozen=True)
class Configuration:
    frames: tuple  # top first
    heap: FrozenMap
    static: FrozenMap


@dataclass(frozen=True)
class Fault:
    message: str
    pp: Optional[S.ProgramPoint] = None

    def __str__(self) -> str:
        return f"{self.pp}: {self.message}" if self.pp else self.message


class _Fault(Exception):
    pass


TERMINAL = "terminal"


# ---------------------------------------------------------------- machine

class Machine:
    """Interpreter for one program; `sources` are (class, method) pairs whose
    returned primitive values become secret."""

    def __init__(self, program: S.Program, sources: Iterable = ()):
        self.p = program
        self.sources = frozenset(sources)

    # -- local semantics

    def statement(self, ls: LocalState):
        return self.p.statement(ls.pp)

    def successful(self, stack: tuple) -> bool:
        if not stack:
            return True
        return len(stack) == 1 and isinstance(self.statement(stack[0]), S.Return)

    def eval_rhs(self, sigma: LocalConfiguration, rhs: S.Rhs) -> Value:
        top = sigma.stack[0]
        if isinstance(rhs, S.Literal):
            return Prim(rhs.kind, rhs.value, PUBLIC)
        if isinstance(rhs, S.Reg):
            return top.reg(rhs)
        if isinstance(rhs, S.ArrayCell):
            arr = self._block(sigma.heap, top.reg(rhs.array), Arr, "array read")
            idx = top.reg(rhs.index)
            if not isinstance(idx, Prim) or idx.kind != "int":
                raise _Fault("array index is not an int")
            if not 0 <= idx.value < len(arr.cells):
                raise _Fault(f"array index {idx.value} out of bounds")
            return arr.cells[idx.value]
        if isinstance(rhs, S.FieldRef):
            obj = self._block(sigma.heap, top.reg(rhs.obj), Obj, "field read")
            if not obj.has(rhs.field):
                raise _Fault(f"object of class {obj.cls} has no field {rhs.field}")
            return obj.get(rhs.field)
        if isinstance(rhs, S.StaticField):
            return sigma.static[(rhs.cls, rhs.field)]
        raise TypeError(rhs)

    def _block(self, heap, v: Value, kind, what):
        if not isinstance(v, Loc):
            raise _Fault(f"{what} through a non-location ({v})")
        b = heap.get(v)
        if b is None:
            raise _Fault(f"{what} through a dangling location")
        if not isinstance(b, kind):
            raise _Fault(f"{what} on the wrong kind of block")
        return b

    def _prim(self, v: Value, what: str) -> Prim:
        if not isinstance(v, Prim):
            raise _Fault(f"{what} on a non-primitive operand ({v})")
        return v

    def new_object(self, cls: str) -> Obj:
        return Obj(cls, tuple((f, zero(t)) for f, t in self.p.all_fields(cls)))

    def step_local(self, sigma: LocalConfiguration):
        """One statement of the top frame: a LocalConfiguration, TERMINAL
        (a lone frame returning) or a Fault."""
        top = sigma.stack[0]
        st = self.statement(top)
        if st is None:
            return Fault("no statement at this program point", top.pp)
        try:
            return self._step(sigma, top, st)
        except _Fault as e:
            return Fault(str(e), top.pp)

    def _step(self, sigma, top: LocalState, st):
        p = self.p
        heap, static = sigma.heap, sigma.static
        rest = sigma.stack[1:]
        pc = top.pp.pc

        def done(new_top, heap=heap, static=static, pending=sigma.pending, below=rest):
            return LocalConfiguration(sigma.owner, (new_top,) + below, pending, heap, static)

        if isinstance(st, S.Goto):
            return done(top.at(st.target))
        if isinstance(st, S.Move):
            v = self.eval_rhs(sigma, st.rhs)
            lhs = st.lhs
            nxt = top.at(pc + 1)
            if isinstance(lhs, S.Reg):
                return done(nxt.with_reg(lhs, v))
            if isinstance(lhs, S.ArrayCell):
                loc = top.reg(lhs.array)
                arr = self._block(heap, loc, Arr, "array write")
                idx = top.reg(lhs.index)
                if not isinstance(idx, Prim) or idx.kind != "int":
                    raise _Fault("array index is not an int")
                if not 0 <= idx.value < len(arr.cells):
                    raise _Fault(f"array index {idx.value} out of bounds")
                if not fits(p, heap, v, arr.elem):
                    raise _Fault(f"array store check failed for element type {arr.elem}")
                cells = list(arr.cells)
                cells[idx.value] = v
                return done(nxt, heap=heap.set(loc, Arr(arr.elem, tuple(cells))))
            if isinstance(lhs, S.FieldRef):
                loc = top.reg(lhs.obj)
                obj = self._block(heap, loc, Obj, "field write")
                ftype = p.field_type(obj.cls, lhs.field)
                if ftype is None:
                    raise _Fault(f"object of class {obj.cls} has no field {lhs.field}")
                if not fits(p, heap, v, ftype):
                    raise _Fault(f"field store check failed for {obj.cls}.{lhs.field}")
                return done(nxt, heap=heap.set(loc, obj.set(lhs.field, v)))
            ftype = p.field_type(lhs.cls, lhs.field)
            if not fits(p, heap, v, ftype):
                raise _Fault(f"static store check failed for {lhs.cls}.{lhs.field}")
            return done(nxt, static=static.set((lhs.cls, lhs.field), v))
        if isinstance(st, S.If):
            a = self._prim(top.reg(st.left), "comparison")
            b = self._prim(top.reg(st.right), "comparison")
            res = compare(st.op, a, b)
            if res is None:
                raise _Fault(f"cannot compare {a} and {b} with {st.op}")
            return done(top.at(st.target if res else pc + 1))
        if isinstance(st, S.Unop):
            r = apply_unop(st.op, self._prim(top.reg(st.src), "unop"))
            if r is None:
                raise _Fault(f"{st.op} undefined on operand")
            return done(top.at(pc + 1).with_reg(st.dst, r))
        if isinstance(st, S.Binop):
            a = self._prim(top.reg(st.left), "binop")
            b = self._prim(top.reg(st.right), "binop")
            r = apply_binop(st.op, a, b)
            if r is None:
                raise _Fault(f"{st.op} undefined on {a}, {b}")
            return done(top.at(pc + 1).with_reg(st.dst, r))
        if isinstance(st, S.New):
            loc = fresh(heap, site(top.pp))
            return done(top.at(pc + 1).with_reg(st.dst, loc),
                        heap=heap.set(loc, self.new_object(st.cls)))
        if isinstance(st, S.NewArray):
            n = self._prim(top.reg(st.length), "array length")
            if n.kind != "int" or n.value < 0:
                raise _Fault(f"bad array length {n}")
            if n.value > MAX_ARRAY:
                raise _Fault(f"array length {n.value} exceeds the interpreter limit")
            loc = fresh(heap, site(top.pp))
            arr = Arr(st.elem, (zero(st.elem),) * n.value)
            return done(top.at(pc + 1).with_reg(st.dst, loc), heap=heap.set(loc, arr))
        if isinstance(st, S.CheckCast):
            v = top.reg(st.src)
            if not isinstance(v, Loc):
                raise _Fault("checkcast of a non-location")
            t = get_type(heap, v)
            if t is None or not p.subtype(t, st.type):
                raise _Fault(f"checkcast: {t} is not a subtype of {st.type}")
            return done(top.at(pc + 1))
        if isinstance(st, S.InstanceOf):
            v = top.reg(st.src)
            if not isinstance(v, Loc):
                raise _Fault("instof of a non-location")
            t = get_type(heap, v)
            if t is None:
                raise _Fault("instof through a dangling location")
            return done(top.at(pc + 1).with_reg(st.dst, Prim("bool", p.subtype(t, st.type))))
        if isinstance(st, S.Invoke):
            recv = top.reg(st.receiver)
            obj = self._block(heap, recv, Obj, "invoke")
            hit = p.lookup(obj.cls, st.method)
            if hit is None:
                raise _Fault(f"class {obj.cls} has no method {st.method}")
            defc, md = hit
            if md.is_static or md.arity != len(st.args):
                raise _Fault(f"{defc}.{st.method} cannot be invoked with {len(st.args)} arguments")
            args = tuple(top.reg(r) for r in st.args)
            callee = self.entry_state(defc, md, recv, args)
            return LocalConfiguration(sigma.owner, (callee, top) + rest, sigma.pending, heap, static)
        if isinstance(st, S.StaticInvoke):
            md = p.method(st.cls, st.method)
            if md is None or not md.is_static or md.arity != len(st.args):
                raise _Fault(f"bad static call {st.cls}.{st.method}")
            args = tuple(top.reg(r) for r in st.args)
            callee = self.entry_state(st.cls, md, None, args)
            return LocalConfiguration(sigma.owner, (callee, top) + rest, sigma.pending, heap, static)
        if isinstance(st, S.Return):
            if not rest:
                return TERMINAL
            ret = top.regs[-1]
            if (top.pp.cls, top.pp.method) in self.sources and isinstance(ret, Prim):
                ret = replace(ret, taint=SECRET)
            caller = rest[0]
            caller = caller.at(caller.pp.pc + 1).with_reg(S.Reg(S.RET), ret)
            return LocalConfiguration(sigma.owner, (caller,) + rest[1:], sigma.pending, heap, static)
        if isinstance(st, S.NewIntent):
            loc = fresh(heap, site(top.pp))
            return done(top.at(pc + 1).with_reg(st.dst, loc),
                        heap=heap.set(loc, IntentBlock(st.target, ())))
        if isinstance(st, S.PutExtra):
            loc = top.reg(st.intent)
            i = self._block(heap, loc, IntentBlock, "put-extra")
            k = self._prim(top.reg(st.key), "intent key")
            i2 = i.put((k.kind, k.value), top.reg(st.value))
            return done(top.at(pc + 1), heap=heap.set(loc, i2))
        if isinstance(st, S.GetExtra):
            i = self._block(heap, top.reg(st.intent), IntentBlock, "get-extra")
            k = self._prim(top.reg(st.key), "intent key")
            v = i.get((k.kind, k.value))
            if v is None:
                raise _Fault(f"intent has no extra {k.value}")
            if not fits(p, heap, v, st.type):
                raise _Fault(f"get-extra: value is not of type {st.type}")
            return done(top.at(pc + 1).with_reg(S.Reg(S.RET), v))
        if isinstance(st, S.StartActivity):
            i = self._block(heap, top.reg(st.intent), IntentBlock, "start-activity")
            return done(top.at(pc + 1), pending=(i,) + sigma.pending)
        raise TypeError(st)

    def entry_state(self, defc: str, md: S.MethodDef, receiver, args: tuple) -> LocalState:
        regs = (ZERO,) * md.locals
        if not md.is_static:
            regs += (receiver,)
        regs += args + (ZERO,)
        return LocalState(S.ProgramPoint(defc, md.name, 0), regs, args)

    # -- serialization

    def serialize_value(self, heap, v: Value, visited: dict | None = None, ext: dict | None = None):
        """Deep copy `v` to fresh locations with the same annotations.
        Returns (copy, heap extension)."""
        visited = {} if visited is None else visited
        ext = {} if ext is None else ext
        if not isinstance(v, Loc):
            return v, ext
        if v in visited:
            return visited[v], ext
        new = fresh(heap, v.annot, ext)
        visited[v] = new
        ext[new] = None  # reserve the pointer before descending
        b, _ = self.serialize_block(heap, heap[v], visited, ext)
        ext[new] = b
        return new, ext

    def serialize_block(self, heap, b, visited: dict | None = None, ext: dict | None = None):
        visited = {} if visited is None else visited
        ext = {} if ext is None else ext

        def ser(x):
            return self.serialize_value(heap, x, visited, ext)[0]

        if isinstance(b, Obj):
            out = Obj(b.cls, tuple((f, ser(x)) for f, x in b.fields))
        elif isinstance(b, Arr):
            out = Arr(b.elem, tuple(ser(x) for x in b.cells))
        else:
            out = IntentBlock(b.target, tuple((k, ser(x)) for k, x in b.extras))
        return out, ext

    # -- activity semantics

    def activity_object(self, cls: str, **fields) -> Obj:
        obj = self.new_object(cls)
        for k, v in fields.items():
            obj = obj.set(k, v)
        return obj

    def callback_stacks(self, heap, loc: Loc, state: str) -> list:
        """Every callback stack for `state`: one per callback method and
        per choice of sampled arguments."""
        obj = heap[loc]
        out = []
        for m in self.p.callbacks(obj.cls, state):
            hit = self.p.lookup(obj.cls, m)
            if hit is None:
                continue
            defc, md = hit
            pools = [CALLBACK_SAMPLES.get(t.name, (NULL,)) if isinstance(t, S.PrimType)
                     else (NULL,) for t in md.arg_types]
            for args in itertools.product(*pools):
                out.append((self.entry_state(defc, md, loc, tuple(args)),))
        return out

    def enter(self, heap, frame_loc: Loc, state: str, pending: tuple) -> list:
        """Frames for an activity moving to `state`; with no callbacks for
        that state the frame moves without running code."""
        stacks = self.callback_stacks(heap, frame_loc, state)
        if not stacks:
            return [Frame(frame_loc, state, pending, (), False)]
        return [Frame(frame_loc, state, pending, st, True) for st in stacks]

    def initial_heap(self):
        static = {}
        for name in self.p.class_map:
            for f, t in self.p.all_fields(name):
                static[(name, f)] = zero(t)
        loc = Loc(class_annot(self.p.entry), 0)
        heap = FrozenMap({loc: self.activity_object(self.p.entry)})
        return loc, heap, FrozenMap(static)

    def initial_configurations(self) -> list:
        loc, heap, static = self.initial_heap()
        return [Configuration((fr,), heap, static)
                for fr in self.enter(heap, loc, "constructor", ())]

    def finished(self, heap, loc: Loc) -> bool:
        v = heap[loc].get("finished")
        return isinstance(v, Prim) and v.value is True

    def step_config(self, psi: Configuration, faults: list | None = None) -> list:
        """All successors of a configuration, in a deterministic order."""
        p = self.p
        frames, heap, static = psi.frames, psi.heap, psi.static
        out: list = []
        for i, fr in enumerate(frames):
            if not fr.active:
                continue
            if self.successful(fr.stack):  # A-Deactivate
                out.append(Configuration(frames[:i] + (replace(fr, active=False),) + frames[i + 1:],
                                         heap, static))
                return out
            sigma = LocalConfiguration(fr.loc, fr.stack, fr.pending, heap, static)
            r = self.step_local(sigma)  # A-Active
            if isinstance(r, Fault):
                if faults is not None:
                    faults.append(r)
                return out
            if r == TERMINAL:
                return out
            nf = replace(fr, stack=r.stack, pending=r.pending)
            out.append(Configuration(frames[:i] + (nf,) + frames[i + 1:], r.heap, r.static))
            return out
        if not frames:
            return out
        top, below = frames[0], frames[1:]
        top_ok = self.successful(top.stack)
        fin = self.finished(heap, top.loc)

        if top_ok:  # A-Step
            for s, s2 in p.lifecycle:
                if s != top.state:
                    continue
                if top.pending and (s, s2) != ("running", "onPause"):
                    continue
                if fin and (s, s2) not in (("running", "onPause"), ("onPause", "onStop"),
                                           ("onStop", "onDestroy")):
                    continue
                for nf in self.enter(heap, top.loc, s2, top.pending):
                    out.append(Configuration((nf,) + below, heap, static))

        for j, fr in enumerate(frames):  # A-Destroy
            if fr.state == "onDestroy" and self.successful(fr.stack) and self.finished(heap, fr.loc):
                out.append(Configuration(frames[:j] + frames[j + 1:], heap, static))

        if top_ok and top.state == "running" and not top.pending and not fin:  # A-Back
            obj = heap[top.loc].set("finished", Prim("bool", True))
            out.append(Configuration(frames, heap.set(top.loc, obj), static))

        if top_ok and top.state == "onDestroy":  # A-Replace
            cls = heap[top.loc].cls
            loc = fresh(heap, top.loc.annot)
            h2 = heap.set(loc, self.activity_object(cls))
            for nf in self.enter(h2, loc, "constructor", top.pending):
                out.append(Configuration((nf,) + below, h2, static))

        if top_ok and top.state in ("onResume", "onPause"):  # A-Hidden
            for j in range(1, len(frames)):
                fr = frames[j]
                if not self.successful(fr.stack):
                    continue
                nxt = {"onPause": "onStop", "onStop": "onDestroy"}.get(fr.state)
                if nxt is None:
                    continue
                for nf in self.enter(heap, fr.loc, nxt, fr.pending):
                    out.append(Configuration(frames[:j] + (nf,) + frames[j + 1:], heap, static))

        if top_ok and top.state in ("onPause", "onStop") and top.pending:  # A-Start
            intent, rest = top.pending[0], top.pending[1:]
            copy, ext = self.serialize_block(heap, intent)
            h2 = heap.update(ext)
            target = intent.target
            iloc = fresh(h2, intent_annot(target))
            h2 = h2.set(iloc, copy)
            aloc = fresh(h2, class_annot(target))
            h2 = h2.set(aloc, self.activity_object(target, intent=iloc, parent=top.loc))
            parent = replace(top, pending=rest)
            for nf in self.enter(h2, aloc, "constructor", ()):
                out.append(Configuration((nf, parent) + below, h2, static))

        if len(frames) >= 2:
            child, par = frames[0], frames[1]
            if (child.state == "onPause" and not child.pending and fin
                    and heap[child.loc].get("parent") == par.loc
                    and par.state in ("onPause", "onStop")):
                if par.pending:  # A-Swap
                    out.append(Configuration((par, child) + frames[2:], heap, static))
                else:  # A-Result
                    res, ext = self.serialize_value(heap, heap[child.loc].get("result"))
                    h2 = heap.update(ext)
                    h2 = h2.set(par.loc, h2[par.loc].set("result", res))
                    for nf in self.enter(h2, par.loc, "onActivityResult", ()):
                        nf = replace(nf, state=par.state)
                        out.append(Configuration((nf, child) + frames[2:], h2, static))
        return out

    # -- exploration

    def run_bounded(self, psi0: Configuration, depth: int, branch_cap: int = 16,
                    seed: int = 0, max_configs: int = 50_000) -> "BoundedRun":
        seen = {psi0: 0}
        order = [psi0]
        frontier = [psi0]
        truncated = partial = False
        faults: list = []
        for level in range(depth):
            nxt = []
            for idx, psi in enumerate(frontier):
                succ = self.step_config(psi, faults)
                if len(succ) > branch_cap:
                    truncated = True
                    rng = random.Random(f"{seed}:{level}:{idx}")
                    keep = sorted(rng.sample(range(len(succ)), branch_cap))
                    succ = [succ[k] for k in keep]
                for s in succ:
                    if s in seen:
                        continue
                    if len(seen) >= max_configs:
                        partial = True
                        break
                    seen[s] = level + 1
                    order.append(s)
                    nxt.append(s)
                if partial:
                    break
            frontier = nxt
            if partial or not frontier:
                break
        return BoundedRun(order, seen, truncated, partial, faults)


@dataclass
class BoundedRun:
    configs: list
    depths: dict
    truncated: bool
    partial: bool
    faults: list = field(default_factory=list)


# ---------------------------------------------------------------- checks

def check_configuration(p: S.Program, psi: Configuration) -> list:
    """Problems with a configuration: frame discipline, activity frames,
    suspended call frames and heap typing. Empty list means well-formed."""
    problems = []
    heap = psi.heap
    if sum(1 for f in psi.frames if f.active) > 1:
        problems.append("more than one active frame")
    for fr in psi.frames:
        b = heap.get(fr.loc)
        if fr.loc.annot.kind != "class" or not isinstance(b, Obj) or b.cls != fr.loc.annot.cls \
                or not p.is_activity(b.cls):
            problems.append(f"frame {fr.loc} is not an activity object of its annotated class")
        stack = fr.stack
        for k in range(1, len(stack)):
            caller, callee = stack[k], stack[k - 1]
            st = p.statement(caller.pp)
            if isinstance(st, S.StaticInvoke):
                target = (st.cls, st.method)
            elif isinstance(st, S.Invoke):
                recv = caller.reg(st.receiver)
                rb = heap.get(recv) if isinstance(recv, Loc) else None
                hit = p.lookup(rb.cls, st.method) if isinstance(rb, Obj) else None
                target = (hit[0], st.method) if hit else None
            else:
                problems.append(f"suspended frame at {caller.pp} is not at a call")
                continue
            if target != (callee.pp.cls, callee.pp.method):
                problems.append(f"frame above {caller.pp} does not match the call")
            elif tuple(caller.reg(r) for r in st.args) != callee.args:
                problems.append(f"recorded arguments at {callee.pp} differ from the call")
    for loc, b in heap.items():
        if isinstance(b, Obj):
            for f, v in b.fields:
                t = p.field_type(b.cls, f)
                if t is None or not fits(p, heap, v, t):
                    problems.append(f"field {b.cls}.{f} of {loc} holds ill-typed {v}")
        elif isinstance(b, Arr):
            for v in b.cells:
                if not fits(p, heap, v, b.elem):
                    problems.append(f"array {loc} holds ill-typed {v}")
        for v in values_of(b):
            if isinstance(v, Loc) and v not in heap:
                problems.append(f"dangling location {v} in {loc}")
    return problems


def trace_record(psi: Configuration, depth: int) -> str:
    """One line of the trace dump."""
    frames = [{"activity": str(f.loc), "state": f.state, "active": f.active,
               "pending": len(f.pending), "pps": [str(ls.pp) for ls in f.stack]}
              for f in psi.frames]
    return json.dumps({"depth": depth, "frames": frames, "heap_size": len(psi.heap)},
                      sort_keys=True)


# module-level conveniences

def step_local(p: S.Program, sigma: LocalConfiguration, sources=()):
    return Machine(p, sources).step_local(sigma)


def step_config(p: S.Program, psi: Configuration, sources=()):
    return Machine(p, sources).step_config(psi)


def run_bounded(p: S.Program, psi0: Configuration, depth: int, branch_cap: int = 16,
                seed: int = 0, sources=()):
    return Machine(p, sources).run_bounded(psi0, depth, branch_cap, seed)
