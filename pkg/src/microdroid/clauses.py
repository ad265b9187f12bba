"""Horn-clause IR and the translation of programs into abstract programs.

A clause body is an ordered list of items: fact atoms (which bind
variables by matching stored facts), membership atoms λ ∈ v̂ (which bind an
annotation variable), and side conditions (subtyping tests over the ground
Sub facts, comparison guards, block-shape tests). Heads are computed from
the bindings by small expression trees."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import syntax as S
from .abstraction import ANY_CTX
from .domains import (AArr, AbstractValue, AIntent, AObj, BOTTOM, DomainPlugin, EMPTY,
                      annot_value)
from .values import PUBLIC, SECRET, Prim, class_annot, intent_annot, site, zero
from .abstraction import beta_val


# ---------------------------------------------------------------- expressions

@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Const:
    value: object

    def __str__(self):
        v = self.value
        if isinstance(v, tuple):
            return "(" + ", ".join(str(x) for x in v) + ")"
        return str(v)


@dataclass(frozen=True)
class Proj:
    vec: object
    index: int

    def __str__(self):
        return f"{self.vec}[{'ret' if self.index == S.RET else self.index}]"


@dataclass(frozen=True)
class Update:
    vec: object
    index: int
    val: object

    def __str__(self):
        i = "ret" if self.index == S.RET else self.index
        return f"{self.vec}[{i}:={self.val}]"


@dataclass(frozen=True)
class Vec:
    items: tuple

    def __str__(self):
        return "<" + ", ".join(str(x) for x in self.items) + ">"


@dataclass(frozen=True)
class Slice:
    vec: object
    indices: tuple

    def __str__(self):
        return f"{self.vec}[{','.join(str(i) for i in self.indices)}]"


@dataclass(frozen=True)
class Join:
    left: object
    right: object

    def __str__(self):
        return f"({self.left} u {self.right})"


@dataclass(frozen=True)
class BinOpE:
    op: str
    left: object
    right: object

    def __str__(self):
        return f"{self.op}^({self.left}, {self.right})"


@dataclass(frozen=True)
class UnOpE:
    op: str
    arg: object

    def __str__(self):
        return f"{self.op}^({self.arg})"


@dataclass(frozen=True)
class Singleton:
    annot: object

    def __str__(self):
        return "{" + str(self.annot) + "}"


@dataclass(frozen=True)
class FieldOf:
    block: object
    field: str

    def __str__(self):
        return f"{self.block}.{self.field}"


@dataclass(frozen=True)
class SetField:
    block: object
    field: str
    val: object

    def __str__(self):
        return f"{self.block}[{self.field}:={self.val}]"


@dataclass(frozen=True)
class Summary:
    block: object

    def __str__(self):
        return f"content({self.block})"


@dataclass(frozen=True)
class AddSummary:
    block: object
    val: object

    def __str__(self):
        return f"{self.block}[content u= {self.val}]"


@dataclass(frozen=True)
class TypeOf:
    block: object

    def __str__(self):
        return f"type^({self.block})"


@dataclass(frozen=True)
class TargetOf:
    block: object

    def __str__(self):
        return f"target({self.block})"


# ---------------------------------------------------------------- body items

@dataclass(frozen=True)
class Atom:
    """A fact atom. Key entries are expressions: unbound variables bind to
    the stored key component; anything else must match it (a call context
    also matches the merged context)."""
    pred: str
    key: tuple
    value: Var

    def __str__(self):
        return f"{self.pred}[{', '.join(str(k) for k in self.key)}]({self.value})"


@dataclass(frozen=True)
class Member:
    var: Var
    of: object

    def __str__(self):
        return f"{self.var} in {self.of}"


@dataclass(frozen=True)
class SubGuard:
    sub: object
    sup: object
    positive: bool = True

    def __str__(self):
        return f"{self.sub} {'<=' if self.positive else '!<='} {self.sup}"


@dataclass(frozen=True)
class CmpGuard:
    op: str
    left: object
    right: object
    want: bool  # True: may be true; False: may be false

    def __str__(self):
        return f"may_{'true' if self.want else 'false'}({self.left} {self.op}^ {self.right})"


@dataclass(frozen=True)
class ShapeGuard:
    """The block is an object having `field`, an array, an intent, or (kind
    "activity") the object of the activity class named by `annot`."""
    kind: str
    block: object
    field: Optional[str] = None
    annot: Optional[object] = None

    def __str__(self):
        if self.kind == "activity":
            return f"activity({self.annot}, {self.block})"
        if self.field:
            return f"has_field({self.block}, {self.field})"
        return f"is_{self.kind}({self.block})"


@dataclass(frozen=True)
class Head:
    pred: str
    key: tuple
    value: object

    def __str__(self):
        return f"{self.pred}[{', '.join(str(k) for k in self.key)}]({self.value})"


@dataclass(frozen=True)
class HornClause:
    label: str
    body: tuple
    head: Head

    def __str__(self):
        body = " & ".join(str(b) for b in self.body) if self.body else "true"
        return f"{self.label}: {body} => {self.head}"


@dataclass
class AbstractProgram:
    program: S.Program
    dom: DomainPlugin
    clauses: list
    seeds: list
    sub: frozenset  # ground (τ, τ') pairs
    annotations: dict  # annotation -> static block type
    sources: frozenset = frozenset()

    def dump(self) -> str:
        lines = [str(c) for c in self.clauses]
        lines += [f"Sub({a}, {b})" for a, b in sorted(self.sub, key=lambda p: (str(p[0]), str(p[1])))]
        lines += [f"seed: {f}" for f in self.seeds]
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- variables

def _vars(x, out: set):
    if isinstance(x, Var):
        out.add(x.name)
    elif isinstance(x, (tuple, list)):
        for y in x:
            _vars(y, out)
    elif hasattr(x, "__dataclass_fields__") and not isinstance(x, (Const, AbstractValue)):
        for name in x.__dataclass_fields__:
            _vars(getattr(x, name), out)
    return out


def bound_vars(body) -> set:
    out = set()
    for item in body:
        if isinstance(item, Atom):
            for k in item.key:
                if isinstance(k, Var):
                    out.add(k.name)
            out.add(item.value.name)
        elif isinstance(item, Member):
            out.add(item.var.name)
    return out


def check_closure(c: HornClause):
    """Every head variable (and every variable used in a guard or computed
    key) is bound by an earlier body item."""
    bound: set = set()
    for item in c.body:
        if isinstance(item, Atom):
            for k in item.key:
                if not isinstance(k, Var):
                    missing = _vars(k, set()) - bound
                    if missing:
                        raise ValueError(f"{c.label}: unbound {sorted(missing)} in key")
            bound |= bound_vars([item])
        elif isinstance(item, Member):
            missing = _vars(item.of, set()) - bound
            if missing:
                raise ValueError(f"{c.label}: unbound {sorted(missing)}")
            bound.add(item.var.name)
        else:
            missing = _vars(item, set()) - bound
            if missing:
                raise ValueError(f"{c.label}: unbound {sorted(missing)} in guard")
    missing = _vars(c.head, set()) - bound
    if missing:
        raise ValueError(f"{c.label}: head variables {sorted(missing)} not bound in body")


# ---------------------------------------------------------------- translation

CTX, REGS, V, LAM, B, RET_V = Var("ctx"), Var("regs"), Var("v"), Var("lam"), Var("b"), Var("ret")


class Translator:
    def __init__(self, p: S.Program, dom: DomainPlugin):
        self.p = p
        self.dom = dom
        self.annotations = self._annotation_universe()

    # -- helpers

    def r_atom(self, pp) -> Atom:
        return Atom("R", (Const(pp), CTX), REGS)

    def r_head(self, pp, regs=REGS, ctx=CTX) -> Head:
        return Head("R", (Const(pp), ctx), regs)

    def zero_hat(self, t: S.TypeName) -> AbstractValue:
        return beta_val(self.dom, zero(t))

    def top_value(self, t: S.TypeName) -> AbstractValue:
        """⊤_τ: ⊤ primitive for primitive types; for reference types every
        annotation whose block type is a subtype of τ."""
        if isinstance(t, S.PrimType):
            return AbstractValue(self.dom.top_prim(t), EMPTY)
        annots = [a for a, bt in self.annotations.items() if self.p.subtype(bt, t)]
        return AbstractValue(EMPTY, frozenset(annots))

    def default_object(self, cls: str, **overrides) -> AObj:
        fields = []
        for f, t in self.p.all_fields(cls):
            fields.append((f, overrides.get(f, self.zero_hat(t))))
        return AObj(cls, tuple(fields))

    def _annotation_universe(self) -> dict:
        out = {}
        for cname, md in self.p.methods():
            for pc, st in enumerate(md.body):
                a = site(S.ProgramPoint(cname, md.name, pc))
                if isinstance(st, S.New):
                    out[a] = S.ClassType(st.cls)
                elif isinstance(st, S.NewArray):
                    out[a] = S.ArrayType(st.elem)
                elif isinstance(st, S.NewIntent):
                    out[a] = S.INTENT
        for c in self.p.activity_classes:
            out[class_annot(c)] = S.ClassType(c)
            out[intent_annot(c)] = S.INTENT
        return dict(sorted(out.items()))

    def entry_regs(self, md: S.MethodDef, receiver, args: list) -> Vec:
        items = [Const(self.zero_hat(S.INT))] * md.locals
        if not md.is_static:
            items.append(receiver)
        items += args
        items.append(Const(self.zero_hat(S.INT)))
        return Vec(tuple(items))

    # -- right-hand sides

    def translate_rhs(self, rhs: S.Rhs, pp: S.ProgramPoint) -> list:
        head = lambda val: Head("RHS", (Const(pp), CTX), val)
        label = f"rhs@{pp}"
        r = self.r_atom(pp)
        if isinstance(rhs, S.Literal):
            lit = beta_val(self.dom, Prim(rhs.kind, rhs.value, PUBLIC))
            # unconditional: holds in every context
            return [HornClause(label, (), Head("RHS", (Const(pp), Const(ANY_CTX)), Const(lit)))]
        if isinstance(rhs, S.Reg):
            return [HornClause(label, (r,), head(Proj(REGS, rhs.index)))]
        if isinstance(rhs, S.StaticField):
            return [HornClause(label, (r, Atom("S", (Const(rhs.cls), Const(rhs.field)), V)), head(V))]
        if isinstance(rhs, S.FieldRef):
            body = (r, Member(LAM, Proj(REGS, rhs.obj.index)), Atom("H", (LAM,), B),
                    ShapeGuard("obj", B, rhs.field))
            return [HornClause(label, body, head(FieldOf(B, rhs.field)))]
        if isinstance(rhs, S.ArrayCell):
            body = (r, Member(LAM, Proj(REGS, rhs.array.index)), Atom("H", (LAM,), B),
                    ShapeGuard("array", B))
            return [HornClause(label, body, head(Summary(B)))]
        raise TypeError(rhs)

    # -- statements

    def translate_stmt(self, st: S.Statement, pp: S.ProgramPoint) -> list:
        p = self.p
        r = self.r_atom(pp)
        nxt = pp.next()
        name = type(st).__name__.lower()
        label = f"{name}@{pp}"
        out: list = []

        def add(body, head, suffix=""):
            out.append(HornClause(label + suffix, tuple(body), head))

        def reg(x: S.Reg):
            return Proj(REGS, x.index)

        if isinstance(st, S.Goto):
            add([r], self.r_head(pp.at(st.target)))
        elif isinstance(st, S.If):
            add([r, CmpGuard(st.op, reg(st.left), reg(st.right), True)], self.r_head(pp.at(st.target)))
            add([r, CmpGuard(st.op, reg(st.left), reg(st.right), False)], self.r_head(nxt))
        elif isinstance(st, S.Unop):
            add([r], self.r_head(nxt, Update(REGS, st.dst.index, UnOpE(st.op, reg(st.src)))))
        elif isinstance(st, S.Binop):
            val = BinOpE(st.op, reg(st.left), reg(st.right))
            add([r], self.r_head(nxt, Update(REGS, st.dst.index, val)))
        elif isinstance(st, S.Move):
            out.extend(self.translate_rhs(st.rhs, pp))
            rhs = Atom("RHS", (Const(pp), CTX), V)
            lhs = st.lhs
            if isinstance(lhs, S.Reg):
                add([r, rhs], self.r_head(nxt, Update(REGS, lhs.index, V)))
            elif isinstance(lhs, S.ArrayCell):
                add([r, rhs, Member(LAM, reg(lhs.array)), Atom("H", (LAM,), B), ShapeGuard("array", B)],
                    Head("H", (LAM,), AddSummary(B, V)), ":heap")
                add([r, rhs], self.r_head(nxt))
            elif isinstance(lhs, S.FieldRef):
                add([r, rhs, Member(LAM, reg(lhs.obj)), Atom("H", (LAM,), B),
                     ShapeGuard("obj", B, lhs.field)],
                    Head("H", (LAM,), SetField(B, lhs.field, V)), ":heap")
                add([r, rhs], self.r_head(nxt))
            else:
                add([r, rhs], Head("S", (Const(lhs.cls), Const(lhs.field)), V), ":static")
                add([r, rhs], self.r_head(nxt))
        elif isinstance(st, (S.New, S.NewArray, S.NewIntent)):
            a = site(pp)
            if isinstance(st, S.New):
                blk = self.default_object(st.cls)
            elif isinstance(st, S.NewArray):
                blk = AArr(st.elem, self.zero_hat(st.elem))
            else:
                blk = AIntent(st.target, BOTTOM)
            add([], Head("H", (Const(a),), Const(blk)), ":alloc")
            add([r], self.r_head(nxt, Update(REGS, st.dst.index, Const(annot_value(a)))))
        elif isinstance(st, S.CheckCast):
            add([r, Member(LAM, reg(st.src)), Atom("H", (LAM,), B),
                 SubGuard(TypeOf(B), Const(st.type))], self.r_head(nxt))
        elif isinstance(st, S.InstanceOf):
            t = beta_val(self.dom, Prim("bool", True))
            f = beta_val(self.dom, Prim("bool", False))
            base = [r, Member(LAM, reg(st.src)), Atom("H", (LAM,), B)]
            add(base + [SubGuard(TypeOf(B), Const(st.type), True)],
                self.r_head(nxt, Update(REGS, st.dst.index, Const(t))), ":true")
            add(base + [SubGuard(TypeOf(B), Const(st.type), False)],
                self.r_head(nxt, Update(REGS, st.dst.index, Const(f))), ":false")
        elif isinstance(st, S.Invoke):
            idx = tuple(a.index for a in st.args)
            for cand in sorted(p.lookup_hat(st.method, len(st.args))):
                defc, md = p.lookup(cand, st.method)
                callee = S.ProgramPoint(defc, st.method, 0)
                guard = [r, Member(LAM, reg(st.receiver)), Atom("H", (LAM,), B),
                         SubGuard(TypeOf(B), Const(S.ClassType(cand)))]
                regs = self.entry_regs(md, Singleton(LAM), [reg(a) for a in st.args])
                add(guard, self.r_head(callee, regs, Slice(REGS, idx)), f":call:{cand}")
                res = Atom("Res", (Const(defc), Const(st.method), Slice(REGS, idx)), RET_V)
                add(guard + [res], self.r_head(nxt, Update(REGS, S.RET, RET_V)), f":ret:{cand}")
        elif isinstance(st, S.StaticInvoke):
            md = p.method(st.cls, st.method)
            idx = tuple(a.index for a in st.args)
            callee = S.ProgramPoint(st.cls, st.method, 0)
            regs = self.entry_regs(md, None, [reg(a) for a in st.args])
            add([r], self.r_head(callee, regs, Slice(REGS, idx)), ":call")
            res = Atom("Res", (Const(st.cls), Const(st.method), Slice(REGS, idx)), RET_V)
            add([r, res], self.r_head(nxt, Update(REGS, S.RET, RET_V)), ":ret")
        elif isinstance(st, S.Return):
            add([r], Head("Res", (Const(pp.cls), Const(pp.method), CTX), Proj(REGS, S.RET)))
        elif isinstance(st, S.PutExtra):
            add([r, Member(LAM, reg(st.intent)), Atom("H", (LAM,), B), ShapeGuard("intent", B)],
                Head("H", (LAM,), AddSummary(B, reg(st.value))), ":heap")
            add([r], self.r_head(nxt))
        elif isinstance(st, S.GetExtra):
            add([r, Member(LAM, reg(st.intent)), Atom("H", (LAM,), B), ShapeGuard("intent", B)],
                self.r_head(nxt, Update(REGS, S.RET, Summary(B))))
        elif isinstance(st, S.StartActivity):
            # the sending activity is not known from the code location, so
            # every activity class is a possible sender
            for sender in p.activity_classes:
                add([r, Member(LAM, reg(st.intent)), Atom("H", (LAM,), B), ShapeGuard("intent", B)],
                    Head("I", (Const(sender), TargetOf(B)), B), f":send:{sender}")
            add([r], self.r_head(nxt))
        else:
            raise TypeError(st)
        return out

    # -- lifecycle

    def lifecycle_rules(self) -> list:
        p = self.p
        out: list = []
        seen = set()
        # Cbk
        for cprime in p.activity_classes:
            for state in p.states:
                for m in p.callbacks(cprime, state):
                    if (cprime, m) in seen:
                        continue
                    seen.add((cprime, m))
                    hit = p.lookup(cprime, m)
                    if hit is None:
                        continue
                    defc, md = hit
                    tops = [self.top_value(t) for t in md.arg_types]
                    regs = self.entry_regs(md, Singleton(LAM), [Const(t) for t in tops])
                    body = (Atom("H", (LAM,), B), ShapeGuard("activity", B, annot=LAM),
                            SubGuard(TypeOf(B), Const(S.ClassType(cprime))))
                    out.append(HornClause(f"cbk:{cprime}.{m}", body,
                                          self.r_head(S.ProgramPoint(defc, m, 0), regs,
                                                      Const(tuple(tops)))))
        act = (Atom("H", (LAM,), B), ShapeGuard("activity", B, annot=LAM))
        bool_top = AbstractValue(self.dom.top_prim(S.BOOL), EMPTY)
        if p.activity_classes:
            out.append(HornClause("fin", act, Head("H", (LAM,), SetField(B, "finished", Const(bool_top)))))
        for c in p.activity_classes:
            a = class_annot(c)
            out.append(HornClause(f"rep:{c}", (Atom("H", (Const(a),), B),),
                                  Head("H", (Const(a),), Const(self.default_object(c)))))
        for target in p.activity_classes:
            for sender in p.activity_classes:
                i_atom = Atom("I", (Const(sender), Const(target)), B)
                out.append(HornClause(f"act:{sender}->{target}:intent", (i_atom,),
                                      Head("H", (Const(intent_annot(target)),), B)))
                obj = self.default_object(target, parent=annot_value(class_annot(sender)),
                                          intent=annot_value(intent_annot(target)))
                out.append(HornClause(f"act:{sender}->{target}:object", (i_atom,),
                                      Head("H", (Const(class_annot(target)),), Const(obj))))
        if p.activity_classes:
            child, parent, bc, bp = Var("child"), Var("parent"), Var("bc"), Var("bp")
            body = (Atom("H", (child,), bc), ShapeGuard("activity", bc, annot=child),
                    Member(parent, FieldOf(bc, "parent")), Atom("H", (parent,), bp),
                    ShapeGuard("activity", bp, annot=parent))
            out.append(HornClause("res", body,
                                  Head("H", (parent,), SetField(bp, "result", FieldOf(bc, "result")))))
        return out

    def sub_facts(self) -> frozenset:
        types = self.p.occurring_types
        return frozenset((a, b) for a in types for b in types if self.p.subtype(a, b))

    def seeds(self) -> list:
        from .abstraction import beta_cnf
        from .interpreter import Machine
        out = []
        for psi in Machine(self.p).initial_configurations():
            out.extend(beta_cnf(self.dom, psi))
        return list(dict.fromkeys(out))


def translate_program(p: S.Program, dom: DomainPlugin) -> AbstractProgram:
    t = Translator(p, dom)
    clauses: list = []
    for cname, md in p.methods():
        for pc, st in enumerate(md.body):
            clauses.extend(t.translate_stmt(st, S.ProgramPoint(cname, md.name, pc)))
    clauses.extend(t.lifecycle_rules())
    for c in clauses:
        check_closure(c)
    return AbstractProgram(p, dom, clauses, t.seeds(), t.sub_facts(), t.annotations)


def translate_stmt(st, pp, p: S.Program, dom: DomainPlugin) -> list:
    return Translator(p, dom).translate_stmt(st, pp)


def translate_rhs(rhs, pp, p: S.Program, dom: DomainPlugin) -> list:
    return Translator(p, dom).translate_rhs(rhs, pp)


def lifecycle_rules(p: S.Program, dom: DomainPlugin) -> list:
    return Translator(p, dom).lifecycle_rules()


def seed_sources(ap: AbstractProgram, sources) -> AbstractProgram:
    """Add, per source method, a clause making its result secret ⊤ in every
    context in which it is entered."""
    secret_top = AbstractValue(frozenset({(("top", 0), SECRET)}), EMPTY)
    extra = []
    for cls, m in sorted(sources):
        md = ap.program.method(cls, m)
        if md is None:
            continue
        pp = S.ProgramPoint(cls, m, 0)
        extra.append(HornClause(f"source:{cls}.{m}", (Atom("R", (Const(pp), CTX), REGS),),
                                Head("Res", (Const(cls), Const(m), CTX), Const(secret_top))))
    return AbstractProgram(ap.program, ap.dom, ap.clauses + extra, ap.seeds, ap.sub,
                           ap.annotations, frozenset(sources))
