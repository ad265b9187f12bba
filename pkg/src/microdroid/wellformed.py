"""Well-formedness checking: the distinctness conditions on classes, fields
and methods plus the structural invariants the rest of the tool relies on."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from . import syntax as S


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    where: str = ""

    def __str__(self) -> str:
        return f"{self.where}: {self.message}" if self.where else self.message


class IllFormed(Exception):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


def check_well_formed(p: S.Program) -> list:
    """Return the list of diagnostics; an empty list means well-formed."""
    out: list = []

    def diag(code, msg, where=""):
        out.append(Diagnostic(code, msg, where))

    names = Counter(c.name for c in p.classes)
    for name, k in names.items():
        if k > 1:
            diag("duplicate-class", f"class {name} declared {k} times", name)
        if name in S.BUILTIN_CLASSES:
            diag("builtin-class", f"class {name} redefines a built-in class", name)

    def known_type(t: S.TypeName) -> bool:
        if isinstance(t, S.PrimType):
            return True
        if isinstance(t, S.ArrayType):
            return known_type(t.elem)
        return t.name in p.class_map

    def check_type(t, where, allow_void=False):
        if t == S.VOID and not allow_void:
            diag("bad-type", "void used as a value type", where)
        elif not known_type(t):
            diag("unknown-type", f"unknown type {t}", where)

    states = set(p.states)
    for a, b in p.lifecycle:
        if a not in states or b not in states:
            diag("bad-lifecycle", f"lifecycle edge ({a} {b}) names an unknown state")

    for c in p.classes:
        where = c.name
        if c.super not in p.class_map:
            diag("unknown-super", f"superclass {c.super} does not exist", where)
        for i in c.interfaces:
            if i not in p.class_map:
                diag("unknown-interface", f"implemented class {i} does not exist", where)
        # cycles in extends
        seen, cur = set(), c.name
        while cur is not None and cur in p.class_map and cur not in seen:
            seen.add(cur)
            cur = p.class_map[cur].super
        if cur is not None and cur in seen:
            diag("cyclic-hierarchy", "superclass chain is cyclic", where)

        fcount = Counter(f for f, _ in c.fields)
        for f, k in fcount.items():
            if k > 1:
                diag("duplicate-field", f"field {f} declared {k} times", where)
        inherited = {f for f, _ in p.all_fields(c.super)} if c.super in p.class_map else set()
        for f, t in c.fields:
            if f in inherited:
                diag("shadowed-field", f"field {f} shadows an inherited field", where)
            check_type(t, f"{where}.{f}")

        mcount = Counter(m.name for m in c.methods)
        for m, k in mcount.items():
            if k > 1:
                diag("duplicate-method", f"method {m} declared {k} times", where)

        if c.has_activity_block and not p.is_activity(c.name):
            diag("not-activity", "activity block on a class that does not extend Activity", where)
        for state, m in c.callbacks:
            if state not in states:
                diag("bad-state", f"unknown activity state {state}", where)
            hit = p.lookup(c.name, m)
            if hit is None:
                diag("unknown-callback", f"callback {m} for {state} is not defined", where)
            elif hit[1].is_static:
                diag("static-callback", f"callback {m} is static", where)

        for md in c.methods:
            _check_method(p, c, md, diag, check_type)

    if p.entry not in p.class_map:
        diag("unknown-entry", f"entry class {p.entry} does not exist")
    elif not p.is_activity(p.entry):
        diag("entry-not-activity", f"entry class {p.entry} is not an activity")
    return out


def _check_method(p, c, md, diag, check_type):
    where = f"{c.name}.{md.name}"
    for t in md.arg_types:
        check_type(t, where)
    check_type(md.ret_type, where, allow_void=True)
    n = len(md.body)
    if n == 0:
        diag("empty-body", "method body is empty", where)
        return
    if tuple(md.pcs) not in ((), tuple(range(n))):
        diag("bad-pc-labels", "statement labels must be 0, 1, 2, ... in order", where)
    for pc, st in enumerate(md.body):
        at = f"{where}:{pc}"
        for r in S.registers_of(st):
            if not r.is_ret and r.index >= md.register_count:
                diag("register-out-of-range",
                     f"register {r.index} exceeds {md.register_count} registers", at)
        if isinstance(st, (S.Goto, S.If)) and not 0 <= st.target < n:
            diag("target-out-of-range", f"jump target {st.target} outside [0, {n})", at)
        if pc == n - 1 and not isinstance(st, (S.Goto, S.Return)):
            diag("falls-off-end", "control falls off the end of the body", at)
        if isinstance(st, S.New):
            if st.cls not in p.class_map:
                diag("unknown-class", f"new of unknown class {st.cls}", at)
            elif st.cls == "Intent":
                diag("new-intent", "intents are created with newintent", at)
        if isinstance(st, (S.NewArray, S.CheckCast, S.InstanceOf, S.GetExtra)):
            check_type(getattr(st, "elem", None) or st.type, at)
        if isinstance(st, S.NewIntent) and not p.is_activity(st.target):
            diag("intent-target", f"intent target {st.target} is not an activity", at)
        if isinstance(st, S.Invoke):
            if not p.lookup_hat(st.method, len(st.args)):
                diag("unknown-method",
                     f"no class defines instance method {st.method}/{len(st.args)}", at)
        if isinstance(st, S.StaticInvoke):
            target = p.method(st.cls, st.method)
            if target is None:
                diag("unknown-method", f"{st.cls} does not define {st.method}", at)
            elif not target.is_static:
                diag("not-static", f"{st.cls}.{st.method} is not static", at)
            elif target.arity != len(st.args):
                diag("arity", f"{st.cls}.{st.method} expects {target.arity} arguments", at)
        if isinstance(st, S.Move):
            for operand in (st.lhs, st.rhs):
                if isinstance(operand, S.StaticField):
                    if operand.cls not in p.class_map:
                        diag("unknown-class", f"static field of unknown class {operand.cls}", at)
                    elif p.field_type(operand.cls, operand.field) is None:
                        diag("unknown-field", f"{operand.cls} has no field {operand.field}", at)
                if isinstance(operand, S.FieldRef):
                    if not any(p.field_type(k, operand.field) for k in p.class_map):
                        diag("unknown-field", f"no class declares field {operand.field}", at)


def ensure_well_formed(p: S.Program) -> S.Program:
    diags = check_well_formed(p)
    if diags:
        raise IllFormed(diags)
    return p
