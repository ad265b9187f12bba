"""Random well-formed programs from a small bounded grammar.

Every statement form can be generated. Programs are kept small so that the
interpreter can explore them exhaustively up to a modest depth."""

from __future__ import annotations

import random
from dataclasses import dataclass

from . import syntax as S
from .wellformed import check_well_formed

STATES = ("constructor", "onCreate", "onStart", "onResume", "running", "onPause", "onStop",
          "onDestroy", "onActivityResult")
METHOD_NAMES = ("m0", "m1", "m2")


@dataclass(frozen=True)
class Bounds:
    max_classes: int = 3
    max_methods: int = 2
    max_statements: int = 10
    max_registers: int = 4
    min_const: int = -3
    max_const: int = 3


@dataclass
class _Sig:
    cls: str
    name: str
    args: tuple
    ret: S.TypeName
    locals: int
    static: bool

    @property
    def register_count(self) -> int:
        return self.locals + (0 if self.static else 1) + len(self.args)


class Generator:
    def __init__(self, rng: random.Random, bounds: Bounds = Bounds()):
        self.rng = rng
        self.b = bounds

    def program(self) -> S.Program:
        rng, b = self.rng, self.b
        n = rng.randint(1, b.max_classes)
        names = [f"C{i}" for i in range(n)]
        supers = {"C0": "Activity"}
        for i in range(1, n):
            supers[names[i]] = rng.choice(["Activity", "Object"] + names[:i])
        self.names = names
        self.supers = supers

        field_types = [S.INT, S.BOOL, S.OBJECT, S.ArrayType(S.INT), S.INTENT]
        self.fields = {}
        for i, c in enumerate(names):
            k = rng.randint(0, 2)
            extra = [S.ClassType(x) for x in names[:i]]
            self.fields[c] = tuple((f"f{i}{j}", rng.choice(field_types + extra)) for j in range(k))

        self.sigs = {}
        for c in names:
            picked = rng.sample(METHOD_NAMES, rng.randint(1, b.max_methods))
            sigs = []
            for m in picked:
                static = rng.random() < 0.2
                arity = rng.randint(0, 1)
                args = tuple(rng.choice([S.INT, S.BOOL, S.OBJECT]) for _ in range(arity))
                room = b.max_registers - arity - (0 if static else 1)
                locs = rng.randint(0, max(0, min(2, room)))
                ret = rng.choice([S.VOID, S.INT, S.BOOL, S.OBJECT])
                sigs.append(_Sig(c, m, args, ret, locs, static))
            self.sigs[c] = sigs

        proto = S.Program(tuple(S.ClassDef(c, supers[c], (), self.fields[c]) for c in names), "C0")
        self.proto = proto
        self.activities = [c for c in names if proto.is_activity(c)]
        self.all_fields = [f for c in names for f, _ in self.fields[c]] + ["finished", "intent",
                                                                            "result", "parent"]
        self.statics = [(c, f) for c in names for f, _ in proto.all_fields(c)]
        self.instance = [(s.name, len(s.args)) for c in names for s in self.sigs[c] if not s.static]
        self.static_sigs = [s for c in names for s in self.sigs[c] if s.static]
        self.types = [S.INT, S.BOOL, S.OBJECT, S.ACTIVITY, S.INTENT, S.ArrayType(S.INT)] + \
            [S.ClassType(c) for c in names]
        self.literal_ints = list(range(b.min_const, b.max_const + 1))

        classes = []
        for c in names:
            methods = tuple(self.method(s) for s in self.sigs[c])
            callbacks = ()
            is_act = c in self.activities
            if is_act:
                # callbacks may name inherited methods if they resolve to instance methods
                resolved, cur = {}, c
                while cur in self.sigs:
                    for sg in self.sigs[cur]:
                        resolved.setdefault(sg.name, sg)
                    cur = supers[cur]
                inst = sorted(m for m, sg in resolved.items() if not sg.static)
                cbs = []
                if inst:
                    for st in STATES:
                        if rng.random() < 0.35:
                            cbs.append((st, rng.choice(inst)))
                callbacks = tuple(cbs)
            classes.append(S.ClassDef(c, supers[c], (), self.fields[c], methods, callbacks, is_act))
        return S.Program(tuple(classes), "C0")

    # -- bodies

    def method(self, s: _Sig) -> S.MethodDef:
        rng = self.rng
        n = rng.randint(1, self.b.max_statements)
        # a rough guess of what each register holds, assuming straight-line
        # flow; operands are usually picked to fit so that runs go deeper
        kinds = {i: "int" for i in range(s.locals)}
        if not s.static:
            kinds[s.locals] = ("obj", s.cls)
        first = s.locals + (0 if s.static else 1)
        for j, t in enumerate(s.args):
            kinds[first + j] = t.name if isinstance(t, S.PrimType) else "null"
        kinds[S.RET] = "int"
        self.kinds = kinds
        self.sig = s
        body = [self.statement(s, n) for _ in range(n - 1)]
        body.append(S.Return() if rng.random() < 0.9 or n == 1 else S.Goto(rng.randrange(n)))
        return S.MethodDef(s.name, s.args, s.ret, s.locals, tuple(body), s.static,
                           tuple(range(n)))

    def reg(self, s: _Sig, want=None) -> S.Reg:
        """A register, usually one whose guessed kind satisfies `want`."""
        rng = self.rng
        k = s.register_count
        if want is not None and rng.random() < 0.92:
            fits = [i for i, kd in sorted(self.kinds.items()) if want(kd)]
            if fits:
                return S.Reg(rng.choice(fits))
        if k == 0 or rng.random() < 0.15:
            return S.Reg(S.RET)
        return S.Reg(rng.randrange(k))

    def _set(self, r: S.Reg, kind):
        self.kinds[r.index] = kind

    def literal(self) -> S.Literal:
        if self.rng.random() < 0.75:
            return S.Literal("int", self.rng.choice(self.literal_ints))
        return S.Literal("bool", self.rng.random() < 0.5)

    def _field_of(self, kind):
        if isinstance(kind, tuple):
            fs = [f for f, _ in self.proto.all_fields(kind[1])]
            if fs:
                return self.rng.choice(fs)
        return self.rng.choice(self.all_fields)

    def operand(self, s, writing: bool):
        """A memory operand: register, array cell, object field or static."""
        rng = self.rng
        r = rng.random()
        if r < (0.6 if writing else 0.25):
            return self.reg(s)
        if r < (0.72 if writing else 0.37):
            return S.ArrayCell(self.reg(s, lambda k: k == "arr"), self.reg(s, lambda k: k == "int"))
        if r < (0.88 if writing else 0.6):
            o = self.reg(s, lambda k: isinstance(k, tuple))
            return S.FieldRef(o, self._field_of(self.kinds.get(o.index)))
        if self.statics and r < (1.0 if writing else 0.72):
            return S.StaticField(*rng.choice(self.statics))
        return self.literal()

    def statement(self, s: _Sig, n: int):
        rng = self.rng
        forms = ["move"] * 6 + ["goto", "if", "if", "unop", "binop", "binop", "new", "new",
                                "newarray", "checkcast", "instof", "invoke", "invoke", "sinvoke",
                                "return", "newintent", "newintent", "put-extra", "get-extra",
                                "start-activity", "start-activity"]
        form = rng.choice(forms)
        is_int = lambda k: k == "int"
        is_prim = lambda k: k in ("int", "bool")
        is_obj = lambda k: isinstance(k, tuple)
        is_intent = lambda k: k == "intent"
        have = lambda want: any(want(k) for k in self.kinds.values())
        # forms whose operand would certainly fault are usually preceded by
        # an allocation instead, which keeps random runs going
        if form in ("put-extra", "get-extra", "start-activity") and not have(is_intent) \
                and rng.random() < 0.8:
            form = "newintent"
        if form == "invoke" and self.instance and not have(is_obj) and rng.random() < 0.8:
            form = "new"
        if form == "move":
            lhs = self.operand(s, True)
            if isinstance(lhs, S.Literal):
                lhs = self.reg(s)
            rhs = self.operand(s, False)
            if isinstance(lhs, S.Reg):
                if isinstance(rhs, S.Literal):
                    self._set(lhs, rhs.kind)
                elif isinstance(rhs, S.Reg):
                    self._set(lhs, self.kinds.get(rhs.index, "?"))
                else:
                    self._set(lhs, "?")
            return S.Move(lhs, rhs)
        if form == "goto":
            return S.Goto(rng.randrange(n))
        if form == "if":
            a = self.reg(s, is_prim)
            kind = self.kinds.get(a.index)
            b = self.reg(s, lambda k: k == kind)
            return S.If(rng.choice(S.COMPARISONS), a, b, rng.randrange(n))
        if form == "unop":
            src = self.reg(s, is_prim)
            op = "not" if self.kinds.get(src.index) == "bool" else "neg"
            if rng.random() < 0.1:
                op = rng.choice(S.UNOPS)
            dst = self.reg(s)
            self._set(dst, self.kinds.get(src.index, "?"))
            return S.Unop(op, dst, src)
        if form == "binop":
            a, b = self.reg(s, is_int), self.reg(s, is_int)
            dst = self.reg(s)
            self._set(dst, "int")
            return S.Binop(rng.choice(S.BINOPS), dst, a, b)
        if form == "new":
            cls = rng.choice(self.names + self.names + ["Object"])
            dst = self.reg(s)
            self._set(dst, ("obj", cls))
            return S.New(dst, cls)
        if form == "newarray":
            length = self.reg(s, is_int)
            dst = self.reg(s)
            self._set(dst, "arr")
            return S.NewArray(dst, length, rng.choice([S.INT, S.BOOL, S.OBJECT]))
        if form == "checkcast":
            return S.CheckCast(self.reg(s, is_obj), rng.choice(self.types))
        if form == "instof":
            src = self.reg(s, lambda k: is_obj(k) or k in ("arr", "intent"))
            dst = self.reg(s)
            self._set(dst, "bool")
            return S.InstanceOf(dst, src, rng.choice(self.types))
        if form == "invoke" and self.instance:
            m, k = rng.choice(self.instance)
            owners = {c for c in self.names for sg in self.sigs[c]
                      if sg.name == m and not sg.static}
            recv = self.reg(s, lambda kd: is_obj(kd) and any(
                self.proto.subtype(S.ClassType(kd[1]), S.ClassType(o)) for o in owners))
            args = tuple(self.reg(s) for _ in range(k))
            self._set(S.Reg(S.RET), "?")
            return S.Invoke(recv, m, args)
        if form == "sinvoke" and self.static_sigs:
            t = rng.choice(self.static_sigs)
            self._set(S.Reg(S.RET), "?")
            return S.StaticInvoke(t.cls, t.name, tuple(self.reg(s) for _ in range(len(t.args))))
        if form == "newintent" and self.activities:
            dst = self.reg(s)
            self._set(dst, "intent")
            return S.NewIntent(dst, rng.choice(self.activities))
        if form == "put-extra":
            return S.PutExtra(self.reg(s, is_intent), self.reg(s, is_prim), self.reg(s))
        if form == "get-extra":
            i, key = self.reg(s, is_intent), self.reg(s, is_prim)
            self._set(S.Reg(S.RET), "?")
            return S.GetExtra(i, key, rng.choice([S.INT, S.BOOL, S.OBJECT]))
        if form == "start-activity":
            return S.StartActivity(self.reg(s, is_intent))
        if form == "return":
            return S.Return()
        dst = self.reg(s)
        lit = self.literal()
        self._set(dst, lit.kind)
        return S.Move(dst, lit)


def random_program(seed, bounds: Bounds = Bounds()) -> S.Program:
    rng = random.Random(seed)
    p = Generator(rng, bounds).program()
    problems = check_well_formed(p)
    if problems:  # a generator bug, not a user error
        raise AssertionError("generated an ill-formed program: " + "; ".join(map(str, problems)))
    return p
