"""SMT-LIB2 constrained-Horn-clause emission and an external solver bridge.

Every abstract value is a fixed-width bit-vector: one bit per primitive
element (constant × taint, plus ⊤ × taint), followed by one bit per
annotation. Union is bvor. Abstract operators become define-fun tables over
element pairs. Annotation variables are grounded, so each heap relation is
specific to one annotation and takes one argument per block slot."""

from __future__ import annotations

import itertools
import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass, field

from . import syntax as S
from .abstraction import ANY_CTX
from .clauses import (AbstractProgram, AddSummary, Atom, BinOpE, CmpGuard, Const, FieldOf,
                      HornClause, Join, Member, Proj, SetField, ShapeGuard, Singleton, Slice,
                      SubGuard, Summary, TargetOf, TypeOf, UnOpE, Update, Var, Vec)
from .domains import (AArr, AIntent, AObj, AbstractValue, ConstSet, TOP, elem_str,
                      TaintOnly)
from .values import PUBLIC, SECRET


class UnsupportedDomain(ValueError):
    pass


class SolverConfigError(RuntimeError):
    pass


# ---------------------------------------------------------------- encoding

def program_constants(ap: AbstractProgram) -> set:
    """Constants written in the program or produced by the translation."""
    out = {("int", 0), ("bool", False), ("bool", True)}
    for _, md in ap.program.methods():
        for st in md.body:
            rhs = getattr(st, "rhs", None)
            if isinstance(rhs, S.Literal):
                out.add((rhs.kind, rhs.value))
    return out


def _value_constants(v, out: set):
    if isinstance(v, AbstractValue):
        out.update(c for c, _ in v.prims if c != TOP)
    elif isinstance(v, (AObj,)):
        for _, x in v.fields:
            _value_constants(x, out)
    elif isinstance(v, (AArr, AIntent)):
        _value_constants(v.val, out)
    elif isinstance(v, tuple):
        for x in v:
            _value_constants(x, out)


@dataclass
class Encoding:
    """Bit layout of abstract values and relation names."""
    elements: tuple  # primitive elements (const, taint), bit i for element i
    annotations: tuple  # annotation at bit len(elements) + j
    names: dict = field(default_factory=dict)

    def __post_init__(self):
        self.elem_bit = {e: i for i, e in enumerate(self.elements)}
        base = len(self.elements)
        self.annot_bit = {a: base + j for j, a in enumerate(self.annotations)}

    @property
    def width(self) -> int:
        return len(self.elements) + len(self.annotations)

    @property
    def sort(self) -> str:
        return f"(_ BitVec {self.width})"

    def element_for(self, c, h):
        if (c, h) in self.elem_bit:
            return (c, h)
        return (TOP, h)

    def encode(self, v: AbstractValue) -> int:
        mask = 0
        for c, h in v.prims:
            mask |= 1 << self.elem_bit[self.element_for(c, h)]
        for a in v.annots:
            mask |= 1 << self.annot_bit[a]
        return mask

    def decode(self, mask: int) -> AbstractValue:
        prims = frozenset(e for e, i in self.elem_bit.items() if mask >> i & 1)
        annots = frozenset(a for a, i in self.annot_bit.items() if mask >> i & 1)
        return AbstractValue(prims, annots)

    def literal(self, mask: int) -> str:
        return "#b" + format(mask, f"0{self.width}b")

    def lit(self, v: AbstractValue) -> str:
        return self.literal(self.encode(v))

    @property
    def zero(self) -> str:
        return self.literal(0)

    def mask(self, bits) -> int:
        m = 0
        for b in bits:
            m |= 1 << b
        return m

    def secret_mask(self) -> int:
        return self.mask(i for (c, h), i in self.elem_bit.items() if h == SECRET)

    def annot_mask(self) -> int:
        return self.mask(self.annot_bit.values())

    def relation(self, *parts) -> str:
        key = tuple(parts)
        name = self.names.get(key)
        if name is None:
            text = " ".join(str(p) for p in parts).replace("|", "/").replace("\\", "/")
            name = self.names[key] = f"|{text}|"
        return name


def make_encoding(ap: AbstractProgram, extra_values=()) -> Encoding:
    dom = ap.dom
    if isinstance(dom, TaintOnly):
        consts: list = []
    elif isinstance(dom, ConstSet):
        found = program_constants(ap)
        for f in ap.seeds:
            _value_constants(f.value, found)
        for v in extra_values:
            _value_constants(v, found)
        consts = sorted(found, key=lambda c: (c[0], int(c[1])))
    else:
        raise UnsupportedDomain(f"domain {dom} has no finite encoding")
    elements = [(c, h) for c in consts for h in (PUBLIC, SECRET)]
    elements += [(TOP, PUBLIC), (TOP, SECRET)]
    return Encoding(tuple(elements), tuple(sorted(ap.annotations)))


# ---------------------------------------------------------------- symbolic terms

@dataclass(frozen=True)
class SymBlock:
    annot: object
    slots: tuple  # SMT terms, one per field / one summary


class _Drop(Exception):
    """The clause instance is statically impossible."""


class _Emitter:
    def __init__(self, ap: AbstractProgram, enc: Encoding):
        self.ap = ap
        self.p = ap.program
        self.enc = enc
        self.relations: dict = {}  # name -> arity
        self.ops_used: set = set()
        self.rules: list = []
        self._intent_targets = {}
        for cname, md in self.p.methods():
            for pc, st in enumerate(md.body):
                if isinstance(st, S.NewIntent):
                    self._intent_targets[("pp", cname, md.name, pc)] = st.target

    # -- static facts about annotations

    def block_type(self, a) -> S.TypeName:
        return self.ap.annotations[a]

    def slots(self, a) -> list:
        """Field names of the block stored at `a` (None for a summary slot)."""
        t = self.block_type(a)
        if isinstance(t, S.ClassType) and t != S.INTENT:
            return [f for f, _ in self.p.all_fields(t.name)]
        return [None]

    def shape(self, a) -> str:
        t = self.block_type(a)
        if isinstance(t, S.ArrayType):
            return "array"
        if t == S.INTENT:
            return "intent"
        return "obj"

    def target(self, a) -> str:
        if a.kind == "in":
            return a.cls
        return self._intent_targets[(a.kind, a.cls, a.method, a.pc)]

    # -- relations

    def rel(self, pred, key) -> tuple:
        """(name, arity) of the relation for a ground base key."""
        if pred == "R":
            pp = key[0]
            md = self.p.method(pp.cls, pp.method)
            n = md.arity + md.register_count + 1
            name = self.enc.relation("R", pp)
        elif pred == "RHS":
            pp = key[0]
            n = self.p.method(pp.cls, pp.method).arity + 1
            name = self.enc.relation("RHS", pp)
        elif pred == "Res":
            n = self.p.method(key[0], key[1]).arity + 1
            name = self.enc.relation("Res", f"{key[0]}.{key[1]}")
        elif pred == "H":
            n = len(self.slots(key[0]))
            name = self.enc.relation("H", key[0])
        elif pred == "S":
            n = 1
            name = self.enc.relation("S", f"{key[0]}.{key[1]}")
        elif pred == "I":
            n = 1
            name = self.enc.relation("I", f"{key[0]}->{key[1]}")
        else:
            raise ValueError(pred)
        self.relations[name] = n
        return name, n

    def app(self, name, args) -> str:
        return f"({name} {' '.join(args)})" if args else name

    def ctx_arity(self, pred, base) -> int:
        if pred in ("R", "RHS"):
            pp = base[0]
            return self.p.method(pp.cls, pp.method).arity
        return self.p.method(base[0], base[1]).arity

    # -- expressions

    def term(self, e, env, st):
        enc = self.enc
        if isinstance(e, Var):
            return env[e.name]
        if isinstance(e, Const):
            return self.const(e.value)
        if isinstance(e, Proj):
            return self.term(e.vec, env, st)[e.index]
        if isinstance(e, Update):
            vec = list(self.term(e.vec, env, st))
            vec[e.index] = self.term(e.val, env, st)
            return tuple(vec)
        if isinstance(e, Vec):
            return tuple(self.term(x, env, st) for x in e.items)
        if isinstance(e, Slice):
            vec = self.term(e.vec, env, st)
            return tuple(vec[i] for i in e.indices)
        if isinstance(e, Join):
            return f"(bvor {self.term(e.left, env, st)} {self.term(e.right, env, st)})"
        if isinstance(e, BinOpE):
            self.ops_used.add(("binop", e.op))
            return f"(binop_{e.op} {self.term(e.left, env, st)} {self.term(e.right, env, st)})"
        if isinstance(e, UnOpE):
            self.ops_used.add(("unop", e.op))
            return f"(unop_{e.op} {self.term(e.arg, env, st)})"
        if isinstance(e, Singleton):
            a = self.term(e.annot, env, st)
            return enc.literal(1 << enc.annot_bit[a])
        if isinstance(e, FieldOf):
            b = self.term(e.block, env, st)
            names = self.slots(b.annot)
            if e.field not in names:
                raise _Drop()
            return b.slots[names.index(e.field)]
        if isinstance(e, SetField):
            b = self.term(e.block, env, st)
            names = self.slots(b.annot)
            v = self.term(e.val, env, st)
            return SymBlock(b.annot, tuple(v if n == e.field else s for n, s in zip(names, b.slots)))
        if isinstance(e, Summary):
            return self.term(e.block, env, st).slots[0]
        if isinstance(e, AddSummary):
            b = self.term(e.block, env, st)
            return SymBlock(b.annot, (f"(bvor {b.slots[0]} {self.term(e.val, env, st)})",))
        if isinstance(e, TypeOf):
            return self.block_type(self.term(e.block, env, st).annot)
        if isinstance(e, TargetOf):
            return self.target(self.term(e.block, env, st).annot)
        raise TypeError(e)

    def const(self, v):
        if isinstance(v, AbstractValue):
            return self.enc.lit(v)
        if isinstance(v, AObj):
            return SymBlock(None, tuple(self.enc.lit(x) for _, x in v.fields))
        if isinstance(v, (AArr, AIntent)):
            return SymBlock(None, (self.enc.lit(v.val),))
        if isinstance(v, tuple):
            return tuple(self.const(x) for x in v)
        return v

    # -- clauses

    def fresh(self, st, n=1):
        out = []
        for _ in range(n):
            name = f"x{st['n']}"
            st["n"] += 1
            st["vars"].append(name)
            out.append(name)
        return out

    def instantiate(self, clause: HornClause):
        """Ground the clause over annotations; yields (vars, body, head)."""

        def go(i, env, st, body):
            if i == len(clause.body):
                yield env, st, body
                return
            item = clause.body[i]
            if isinstance(item, Member):
                of = self.term(item.of, env, st)
                for a in self.enc.annotations:
                    env1 = dict(env)
                    env1[item.var.name] = a
                    bit = self.enc.annot_bit[a]
                    cond = f"(= ((_ extract {bit} {bit}) {of}) #b1)"
                    yield from go(i + 1, env1, _copy(st), body + [cond])
            elif isinstance(item, Atom):
                yield from self.atom(item, env, st, body, lambda e, s, b: go(i + 1, e, s, b))
            else:
                try:
                    cond = self.guard(item, env, st)
                except _Drop:
                    return
                if cond is False:
                    return
                yield from go(i + 1, env, st, body if cond is True else body + [cond])

        yield from go(0, {}, {"n": 0, "vars": []}, [])

    def atom(self, item: Atom, env, st, body, k):
        pred = item.pred
        has_ctx = pred in ("R", "RHS", "Res")
        bexprs = item.key[:-1] if has_ctx else item.key
        cexpr = item.key[-1] if has_ctx else None
        unbound = [e for e in bexprs if isinstance(e, Var) and e.name not in env]
        if unbound:  # H with an unbound annotation variable
            assert pred == "H" and len(bexprs) == 1
            candidates = [dict(env, **{unbound[0].name: a}) for a in self.enc.annotations]
        else:
            candidates = [env]
        for env1 in candidates:
            st1 = _copy(st)
            try:
                base = tuple(self.term(e, env1, st1) for e in bexprs)
            except _Drop:
                continue
            name, n = self.rel(pred, base)
            args = []
            env2 = dict(env1)
            body1 = list(body)
            if has_ctx:
                m = self.ctx_arity(pred, base)
                if isinstance(cexpr, Var) and cexpr.name not in env2:
                    ctx = tuple(self.fresh(st1, m))
                    env2[cexpr.name] = ctx
                    args += ctx
                else:
                    want = self.term(cexpr, env2, st1)
                    xs = self.fresh(st1, m)
                    if want is not ANY_CTX:
                        body1 += [f"(= {x} {t})" for x, t in zip(xs, want)]
                    args += xs
            vals = self.fresh(st1, n - len(args))
            args += vals
            if pred == "R":
                env2[item.value.name] = tuple(vals)
            elif pred == "H":
                env2[item.value.name] = SymBlock(base[0], tuple(vals))
            elif pred == "I":
                # intents sent towards base[1]: the summary slot of an intent block
                env2[item.value.name] = SymBlock(("intent", base[1]), tuple(vals))
            else:
                env2[item.value.name] = vals[0]
            app = self.app(name, args)
            yield from k(env2, st1, body1 + [app])

    def guard(self, g, env, st):
        if isinstance(g, SubGuard):
            pair = (self.term(g.sub, env, st), self.term(g.sup, env, st))
            return (pair in self.ap.sub) == g.positive
        if isinstance(g, ShapeGuard):
            b = self.term(g.block, env, st)
            a = b.annot
            if g.kind == "activity":
                lam = self.term(g.annot, env, st)
                return (a == lam and a.kind == "class"
                        and self.block_type(a) == S.ClassType(a.cls))
            if g.kind == "obj":
                return self.shape(a) == "obj" and (g.field is None or g.field in self.slots(a))
            return self.shape(a) == g.kind
        if isinstance(g, CmpGuard):
            self.ops_used.add(("cmp", g.op, g.want))
            return (f"(cmp_{g.op}_{'t' if g.want else 'f'} "
                    f"{self.term(g.left, env, st)} {self.term(g.right, env, st)})")
        raise TypeError(g)

    def head(self, h, env, st):
        pred = h.pred
        has_ctx = pred in ("R", "RHS", "Res")
        bexprs = h.key[:-1] if has_ctx else h.key
        base = tuple(self.term(e, env, st) for e in bexprs)
        if pred == "H":
            pass
        name, n = self.rel(pred, base)
        args = []
        if has_ctx:
            ctx = self.term(h.key[-1], env, st)
            if ctx is ANY_CTX:
                ctx = tuple(self.fresh(st, self.ctx_arity(pred, base)))
            args += list(ctx)
        val = self.term(h.value, env, st)
        if isinstance(val, SymBlock):
            args += list(val.slots)
        elif isinstance(val, tuple):
            args += list(val)
        else:
            args.append(val)
        if len(args) != n:
            raise _Drop()
        return self.app(name, args)

    def rule(self, label, st, body, head):
        vs = st["vars"]
        if body:
            conj = body[0] if len(body) == 1 else "(and " + " ".join(body) + ")"
            formula = f"(=> {conj} {head})"
        else:
            formula = head
        if vs:
            decl = " ".join(f"({v} {self.enc.sort})" for v in vs)
            formula = f"(forall ({decl}) {formula})"
        self.rules.append(f"; {label}\n(assert {formula})")

    def clause(self, c: HornClause):
        for env, st, body in self.instantiate(c):
            try:
                h = self.head(c.head, env, st)
            except _Drop:
                continue
            self.rule(c.label, st, body, h)

    def seed(self, f):
        st = {"n": 0, "vars": []}
        env = {"v": self.const(f.value)}
        pred = f.pred
        key = f.key[:-1] if pred in ("R", "RHS", "Res") else f.key
        from .clauses import Head
        head_key = tuple(Const(k) for k in key)
        if pred in ("R", "RHS", "Res"):
            head_key += (Const(f.key[-1]),)
        h = Head(pred, head_key, Var("v"))
        if pred == "H":
            env["v"] = SymBlock(key[0], env["v"].slots)
        self.rule(f"seed {pred}", st, [], self.head(h, env, st))

    # -- operator tables

    def op_defs(self) -> list:
        enc, dom = self.enc, self.ap.dom
        W = enc.sort
        out = []
        elems = enc.elements
        zero = enc.zero

        def has(x, e):
            i = enc.elem_bit[e]
            return f"(= ((_ extract {i} {i}) {x}) #b1)"

        annot_nonzero = None
        if enc.annotations:
            hi, lo = enc.width - 1, len(elems)
            annot_nonzero = lambda x: f"(not (= ((_ extract {hi} {lo}) {x}) #b{'0' * (hi - lo + 1)}))"
        for op in sorted(self.ops_used, key=str):
            if op[0] == "binop":
                terms = []
                for e1, e2 in itertools.product(elems, elems):
                    r = dom.elem_binop(op[1], e1, e2)
                    if r is None:
                        continue
                    r = enc.element_for(*r)
                    terms.append(f"(ite (and {has('x', e1)} {has('y', e2)}) "
                                 f"{enc.literal(1 << enc.elem_bit[r])} {zero})")
                out.append(f"(define-fun binop_{op[1]} ((x {W}) (y {W})) {W} {_bvor(terms, zero)})")
            elif op[0] == "unop":
                terms = []
                for e in elems:
                    r = dom.elem_unop(op[1], e)
                    if r is None:
                        continue
                    r = enc.element_for(*r)
                    terms.append(f"(ite {has('x', e)} {enc.literal(1 << enc.elem_bit[r])} {zero})")
                out.append(f"(define-fun unop_{op[1]} ((x {W})) {W} {_bvor(terms, zero)})")
            else:
                _, name, want = op
                disj = []
                for e1, e2 in itertools.product(elems, elems):
                    t, f = dom.elem_compare(name, e1, e2)
                    if (t if want else f):
                        disj.append(f"(and {has('x', e1)} {has('y', e2)})")
                if annot_nonzero:
                    disj += [annot_nonzero("x"), annot_nonzero("y")]
                body = "false" if not disj else disj[0] if len(disj) == 1 else "(or " + " ".join(disj) + ")"
                out.append(f"(define-fun cmp_{name}_{'t' if want else 'f'} ((x {W}) (y {W})) Bool {body})")
        return out


def _copy(st):
    return {"n": st["n"], "vars": list(st["vars"])}


def _bvor(terms, zero):
    if not terms:
        return zero
    if len(terms) == 1:
        return terms[0]
    return "(bvor " + " ".join(terms) + ")"


# ---------------------------------------------------------------- document

def emit_chc(ap: AbstractProgram, queries=(), extra_values=()) -> str:
    """An SMT-LIB2 HORN script: rules, then one push/check-sat/pop block per
    sink query. For each query the solver answers unsat when the leak fact
    is derivable."""
    enc = make_encoding(ap, extra_values)
    em = _Emitter(ap, enc)
    for c in ap.clauses:
        em.clause(c)
    for f in ap.seeds:
        em.seed(f)
    W = enc.sort
    secret = enc.literal(enc.secret_mask())

    # taint reachability through the heap
    taint_rules = []
    for a in enc.annotations:
        name, n = em.rel("H", (a,))
        tname = enc.relation("Tainted", a)
        em.relations[tname] = 0
        xs = [f"x{i}" for i in range(n)]
        decl = " ".join(f"({x} {W})" for x in xs)
        app = em.app(name, xs)
        for x in xs:
            taint_rules.append(f"(assert (forall ({decl}) (=> (and {app} "
                               f"(not (= (bvand {x} {secret}) {enc.zero}))) {tname})))")
            for b in enc.annotations:
                bit = enc.annot_bit[b]
                taint_rules.append(
                    f"(assert (forall ({decl}) (=> (and {app} (= ((_ extract {bit} {bit}) {x}) #b1) "
                    f"{enc.relation('Tainted', b)}) {tname})))")

    query_blocks = []
    for sink in queries:
        pp = S.ProgramPoint(sink[0], sink[1], 0)
        qname = enc.relation("Leak", f"{sink[0]}.{sink[1]}")
        em.relations[qname] = 0
        md = ap.program.method(*sink)
        if md is not None:
            name, n = em.rel("R", (pp,))
            xs = [f"x{i}" for i in range(n)]
            decl = " ".join(f"({x} {W})" for x in xs)
            app = em.app(name, xs)
            for x in xs[md.arity:]:
                taint_rules.append(f"(assert (forall ({decl}) (=> (and {app} "
                                   f"(not (= (bvand {x} {secret}) {enc.zero}))) {qname})))")
                for b in enc.annotations:
                    bit = enc.annot_bit[b]
                    taint_rules.append(
                        f"(assert (forall ({decl}) (=> (and {app} (= ((_ extract {bit} {bit}) {x}) #b1) "
                        f"{enc.relation('Tainted', b)}) {qname})))")
        query_blocks.append(f"; query {sink[0]}.{sink[1]}\n(push 1)\n"
                            f"(assert (=> {qname} false))\n(check-sat)\n(pop 1)")

    lines = ["; constrained Horn clauses generated by microdroid", "(set-logic HORN)",
             f"; value layout: {len(enc.elements)} primitive bits, {len(enc.annotations)} annotation bits"]
    for i, (c, h) in enumerate(enc.elements):
        lines.append(f";   bit {i}: {elem_str((c, h))}")
    for a in enc.annotations:
        lines.append(f";   bit {enc.annot_bit[a]}: {a}")
    lines += em.op_defs()
    for name in sorted(em.relations):
        n = em.relations[name]
        lines.append(f"(declare-fun {name} ({' '.join([W] * n)}) Bool)")
    lines += em.rules
    lines += taint_rules
    lines += query_blocks
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- solver bridge

def split_queries(doc: str):
    """The shared rules of a document and one standalone script per query.
    Horn solvers such as z3 only use their CHC engine on scripts without
    push/pop, so each query is solved separately."""
    head, *blocks = doc.split("\n; query ")
    scripts = []
    for b in blocks:
        asserts = [ln for ln in b.splitlines() if ln.startswith("(assert ")]
        scripts.append(head + "\n" + "\n".join(asserts) + "\n(check-sat)\n")
    return head, scripts


def _solve_one(argv, script: str, timeout: float):
    with tempfile.NamedTemporaryFile("w", suffix=".smt2", delete=False, encoding="utf-8") as fh:
        fh.write(script)
        path = fh.name
    try:
        proc = subprocess.run(argv + [path], capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired:
        return "unknown", f"solver timed out after {timeout}s"
    except OSError as e:
        raise SolverConfigError(f"cannot run solver: {e}") from e
    finally:
        os.unlink(path)
    answers = [ln.strip() for ln in proc.stdout.splitlines()
               if ln.strip() in ("sat", "unsat", "unknown")]
    if proc.returncode != 0 or len(answers) != 1:
        err = (proc.stderr or "").strip() or (proc.stdout or "").strip()
        return "unknown", f"solver exit status {proc.returncode}: {err[:2000]}"
    return answers[0], None


def run_external(doc: str, command: str, n_queries: int, timeout: float = 60.0):
    """Run `<command> <file>` once per query of the document. Returns
    (verdicts, diagnostics) with one verdict per query in leak polarity:
    "sat" when the leak fact is derivable, "unsat" when it is not, "unknown"
    otherwise. The solver itself prints unsat for a derivable leak, so its
    answers are flipped. `timeout` applies to each query."""
    argv = shlex.split(command)
    if not argv:
        raise SolverConfigError("empty solver command")
    from shutil import which
    if which(argv[0]) is None and not os.path.exists(argv[0]):
        raise SolverConfigError(f"solver command not found: {argv[0]}")
    _, scripts = split_queries(doc)
    if len(scripts) != n_queries:
        raise ValueError(f"document has {len(scripts)} queries, expected {n_queries}")
    flip = {"sat": "unsat", "unsat": "sat", "unknown": "unknown"}
    verdicts, diag = [], []
    for i, script in enumerate(scripts):
        answer, note = _solve_one(argv, script, timeout)
        verdicts.append(flip[answer])
        if note:
            diag.append(f"query {i}: {note}")
    return verdicts, diag
