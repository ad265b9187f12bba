"""Bottom-up saturation of an abstract program to a post-fixpoint model.

Storage: each predicate maps a base key (pp, λ, (c,f), (c,m), ...) and, for
R/RHS/Res, a call context to an entry. R entries keep a bounded list of
incomparable disjuncts (a new value replaces the disjuncts it subsumes);
every other predicate keeps a single joined value per key. Widening kicks in
after a number of strict increases of one value lineage. Evaluation is
semi-naive: each changed entry is pushed on a worklist and only clauses with
a matching body atom are re-run, with that atom pinned to the change."""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Callable, Optional

from .abstraction import ANY_CTX, Fact, ctx_leq, leq_value
from .clauses import (AbstractProgram, AddSummary, Atom, BinOpE, CmpGuard, Const, FieldOf,
                      Head, HornClause, Join, Member, Proj, SetField, ShapeGuard, Singleton,
                      Slice, SubGuard, Summary, TargetOf, TypeOf, UnOpE, Update, Var, Vec)
from .domains import (AArr, AIntent, AObj, BOTTOM, DomainPlugin, annot_value,
                      get_type_hat, join_blk, join_seq, widen_blk, widen_seq)

CTX_PREDS = ("R", "RHS", "Res")
PRED_ORDER = {p: i for i, p in enumerate(("R", "RHS", "Res", "H", "S", "I"))}


@dataclass
class Limits:
    widen_after: int = 8
    context_cap: int = 64
    max_derivations: int = 2_000_000
    disjunct_cap: int = 64
    key_update_cap: int = 2048

    def __post_init__(self):
        for name in ("widen_after", "context_cap", "max_derivations", "disjunct_cap",
                     "key_update_cap"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


@dataclass
class Stats:
    derivations: int = 0
    iterations: int = 0
    widenings: int = 0
    merged_contexts: int = 0
    collapsed_keys: int = 0


class _Entry:
    __slots__ = ("cells", "joined", "updates")

    def __init__(self, joined: bool):
        self.cells: list = []  # [value, strict-increase count]
        self.joined = joined
        self.updates = 0


# ---------------------------------------------------------------- lattice ops per predicate

def _join(dom, pred, a, b):
    if pred == "R":
        return join_seq(dom, a, b)
    if pred in ("H", "I"):
        return join_blk(dom, a, b)
    return dom.join(a, b)


def _widen(dom, pred, a, b):
    if pred == "R":
        return widen_seq(dom, a, join_seq(dom, a, b))
    if pred in ("H", "I"):
        return widen_blk(dom, a, join_blk(dom, a, b))
    return dom.widen(a, dom.join(a, b))


# ---------------------------------------------------------------- model

class Model:
    """The fact store. After saturation it is read-only."""

    def __init__(self, dom: DomainPlugin, limits: Limits):
        self.dom = dom
        self.limits = limits
        self.store = {p: {} for p in PRED_ORDER}  # pred -> base -> ctx -> _Entry
        self.contexts = defaultdict(set)  # (cls, method) -> exact contexts seen in R
        self.stats = Stats()
        self.complete = True
        self.reason = ""

    # -- insertion

    def _ctx_for(self, pred, base, ctx):
        if pred != "R" or ctx is ANY_CTX:
            return ctx
        pp = base[0]
        seen = self.contexts[(pp.cls, pp.method)]
        if ctx in seen:
            return ctx
        if len(seen) >= self.limits.context_cap:
            self.stats.merged_contexts += 1
            return ANY_CTX
        seen.add(ctx)
        return ctx

    def insert(self, fact: Fact) -> list:
        """Add a fact; returns the list of new or grown values (as facts)."""
        pred, dom, lim = fact.pred, self.dom, self.limits
        if pred in CTX_PREDS:
            base, ctx = fact.key[:-1], fact.key[-1]
            ctx = self._ctx_for(pred, base, ctx)
        else:
            base, ctx = fact.key, None
        by_ctx = self.store[pred].setdefault(base, {})
        entry = by_ctx.get(ctx)
        if entry is None:
            entry = by_ctx[ctx] = _Entry(joined=pred != "R")
        v = fact.value
        for cell in entry.cells:
            if leq_value(dom, pred, v, cell[0]):
                return []
        entry.updates += 1
        key = base + (ctx,) if pred in CTX_PREDS else base
        if not entry.joined and (entry.updates > lim.key_update_cap
                                 or len(entry.cells) >= lim.disjunct_cap):
            self.stats.collapsed_keys += 1
            entry.joined = True
            if entry.cells:
                acc, count = entry.cells[0]
                for c in entry.cells[1:]:
                    acc = _join(dom, pred, acc, c[0])
                    count = max(count, c[1])
                entry.cells = [[acc, count]]
        if entry.joined:
            if not entry.cells:
                entry.cells = [[v, 0]]
            else:
                cur, count = entry.cells[0]
                count += 1
                if count > lim.widen_after:
                    self.stats.widenings += 1
                    new = _widen(dom, pred, cur, v)
                else:
                    new = _join(dom, pred, cur, v)
                entry.cells = [[new, count]]
            return [Fact(pred, key, entry.cells[0][0])]
        below = [c for c in entry.cells if leq_value(dom, pred, c[0], v)]
        if below:
            count = max(c[1] for c in below) + 1
            if count > lim.widen_after:
                self.stats.widenings += 1
                old = below[0][0]
                for c in below[1:]:
                    old = _join(dom, pred, old, c[0])
                v = _widen(dom, pred, old, v)
            keep = [c for c in entry.cells if not any(c is b for b in below)]
            # a widened value may now subsume further disjuncts
            keep = [c for c in keep if not leq_value(dom, pred, c[0], v)]
            entry.cells = keep + [[v, count]]
        else:
            entry.cells.append([v, 0])
        return [Fact(pred, key, v)]

    def holds(self, fact: Fact) -> bool:
        """The stored value the fact would be pinned to is still current."""
        pred = fact.pred
        if pred in CTX_PREDS:
            base, ctx = fact.key[:-1], fact.key[-1]
        else:
            base, ctx = fact.key, None
        entry = self.store[pred].get(base, {}).get(ctx)
        return entry is not None and any(c[0] == fact.value for c in entry.cells)

    # -- reading

    def entries(self, pred, base=None):
        """(base, ctx, value) triples, optionally for one base key."""
        table = self.store[pred]
        bases = [base] if base is not None else list(table)
        for b in bases:
            for ctx, entry in table.get(b, {}).items():
                for cell in entry.cells:
                    yield b, ctx, cell[0]

    def lookup(self, pred, base, ctx=None) -> list:
        """Values for a base key; for context predicates the exact context
        and the merged one."""
        by_ctx = self.store[pred].get(base, {})
        if pred not in CTX_PREDS:
            e = by_ctx.get(None)
            return [c[0] for c in e.cells] if e else []
        out = []
        for k in (ctx, ANY_CTX) if ctx is not ANY_CTX else (ANY_CTX,):
            e = by_ctx.get(k)
            if e:
                out.extend(c[0] for c in e.cells)
        return out

    def facts(self) -> list:
        out = []
        for pred in PRED_ORDER:
            for base, ctx, v in self.entries(pred):
                key = base + (ctx,) if pred in CTX_PREDS else base
                out.append(Fact(pred, key, v))
        return sorted(out, key=_fact_sort_key)

    def covering(self, f: Fact, keyed: bool = False) -> Optional[Fact]:
        """A stored fact ⊒ f, or None. With `keyed`, a context only covers
        itself or comes from the merged context, which is how clause bodies
        read the store; otherwise any larger context covers."""
        pred, dom = f.pred, self.dom
        if pred in CTX_PREDS:
            base, ctx = f.key[:-1], f.key[-1]
            for sctx, entry in self.store[pred].get(base, {}).items():
                if keyed:
                    if sctx != ctx and sctx is not ANY_CTX:
                        continue
                elif not ctx_leq(dom, ctx, sctx):
                    continue
                for cell in entry.cells:
                    if leq_value(dom, pred, f.value, cell[0]):
                        return Fact(pred, base + (sctx,), cell[0])
            return None
        entry = self.store[pred].get(f.key, {}).get(None)
        if entry:
            for cell in entry.cells:
                if leq_value(dom, pred, f.value, cell[0]):
                    return Fact(pred, f.key, cell[0])
        return None

    def blocks_of(self, annot) -> list:
        return self.lookup("H", (annot,))

    def dump(self) -> str:
        lines = [str(f) for f in self.facts()]
        return "\n".join(lines) + ("\n" if lines else "")

    def size(self) -> int:
        return sum(1 for _ in self.facts())


def _fact_sort_key(f: Fact):
    return (PRED_ORDER[f.pred], str(f))


# ---------------------------------------------------------------- evaluation

class Evaluator:
    def __init__(self, ap: AbstractProgram):
        self.ap = ap
        self.dom = ap.dom
        self.sub = ap.sub

    def expr(self, e, env):
        dom = self.dom
        if isinstance(e, Var):
            return env[e.name]
        if isinstance(e, Const):
            return e.value
        if isinstance(e, Proj):
            return self.expr(e.vec, env)[e.index]
        if isinstance(e, Update):
            vec = list(self.expr(e.vec, env))
            vec[e.index] = self.expr(e.val, env)
            return tuple(vec)
        if isinstance(e, Vec):
            return tuple(self.expr(x, env) for x in e.items)
        if isinstance(e, Slice):
            vec = self.expr(e.vec, env)
            return tuple(vec[i] for i in e.indices)
        if isinstance(e, Join):
            return dom.join(self.expr(e.left, env), self.expr(e.right, env))
        if isinstance(e, BinOpE):
            return dom.binop(e.op, self.expr(e.left, env), self.expr(e.right, env))
        if isinstance(e, UnOpE):
            return dom.unop(e.op, self.expr(e.arg, env))
        if isinstance(e, Singleton):
            return annot_value(self.expr(e.annot, env))
        if isinstance(e, FieldOf):
            v = self.expr(e.block, env).get(e.field)
            return BOTTOM if v is None else v
        if isinstance(e, SetField):
            return self.expr(e.block, env).set(e.field, self.expr(e.val, env))
        if isinstance(e, Summary):
            return self.expr(e.block, env).val
        if isinstance(e, AddSummary):
            b = self.expr(e.block, env)
            v = dom.join(b.val, self.expr(e.val, env))
            return AArr(b.elem, v) if isinstance(b, AArr) else AIntent(b.target, v)
        if isinstance(e, TypeOf):
            return get_type_hat(self.expr(e.block, env))
        if isinstance(e, TargetOf):
            return self.expr(e.block, env).target
        raise TypeError(e)

    def guard(self, g, env) -> bool:
        if isinstance(g, SubGuard):
            pair = (self.expr(g.sub, env), self.expr(g.sup, env))
            return (pair in self.sub) == g.positive
        if isinstance(g, CmpGuard):
            t, f = self.dom.compare(g.op, self.expr(g.left, env), self.expr(g.right, env))
            return t if g.want else f
        if isinstance(g, ShapeGuard):
            b = self.expr(g.block, env)
            if g.kind == "obj":
                return isinstance(b, AObj) and (g.field is None or b.has(g.field))
            if g.kind == "array":
                return isinstance(b, AArr)
            if g.kind == "intent":
                return isinstance(b, AIntent)
            if g.kind == "activity":
                a = self.expr(g.annot, env)
                return isinstance(b, AObj) and a.kind == "class" and b.cls == a.cls
        raise TypeError(g)

    def _split(self, atom: Atom):
        if atom.pred in CTX_PREDS:
            return atom.key[:-1], atom.key[-1]
        return atom.key, None

    def _unify_base(self, exprs, base, env):
        new = dict(env)
        for e, k in zip(exprs, base):
            if isinstance(e, Var) and e.name not in new:
                new[e.name] = k
            elif self.expr(e, new) != k:
                return None
        return new

    def _base_ground(self, exprs, env):
        try:
            return tuple(self.expr(e, env) for e in exprs)
        except KeyError:
            return None

    def match_atom(self, atom: Atom, model: Model, env):
        """Environments extending env with the atom matched in the store."""
        bexprs, cexpr = self._split(atom)
        base = self._base_ground(bexprs, env)
        if base is not None:
            bases = [base]
        else:
            bases = list(model.store[atom.pred])
        for b in bases:
            env1 = self._unify_base(bexprs, b, env)
            if env1 is None:
                continue
            by_ctx = model.store[atom.pred].get(b, {})
            if cexpr is None:
                pairs = [(None, by_ctx.get(None))]
            elif isinstance(cexpr, Var) and cexpr.name not in env1:
                pairs = list(by_ctx.items())
            else:
                want = self.expr(cexpr, env1)
                pairs = [(want, by_ctx.get(want))]
                if want is not ANY_CTX:
                    pairs.append((ANY_CTX, by_ctx.get(ANY_CTX)))
            for ctx, entry in pairs:
                if entry is None:
                    continue
                env2 = env1
                if isinstance(cexpr, Var) and cexpr.name not in env1:
                    env2 = dict(env1)
                    env2[cexpr.name] = ctx
                for cell in list(entry.cells):
                    env3 = dict(env2)
                    env3[atom.value.name] = cell[0]
                    yield env3

    def match_pinned(self, atom: Atom, fact: Fact, env):
        bexprs, cexpr = self._split(atom)
        if atom.pred in CTX_PREDS:
            base, ctx = fact.key[:-1], fact.key[-1]
        else:
            base, ctx = fact.key, None
        env1 = self._unify_base(bexprs, base, env)
        if env1 is None:
            return None
        if cexpr is not None:
            if isinstance(cexpr, Var) and cexpr.name not in env1:
                env1[cexpr.name] = ctx
            else:
                want = self.expr(cexpr, env1)
                if ctx is not ANY_CTX and ctx != want:
                    return None
        env1[atom.value.name] = fact.value
        return env1

    def solutions(self, clause: HornClause, model: Model, pinned: int = -1, fact: Fact = None):
        """All body environments; with `pinned`, that body atom is matched
        against `fact` only."""
        body = clause.body

        def go(i, env):
            if i == len(body):
                yield env
                return
            item = body[i]
            if isinstance(item, Atom):
                if i == pinned:
                    env1 = self.match_pinned(item, fact, env)
                    if env1 is not None:
                        yield from go(i + 1, env1)
                else:
                    for env1 in self.match_atom(item, model, env):
                        yield from go(i + 1, env1)
            elif isinstance(item, Member):
                v = self.expr(item.of, env)
                for a in sorted(v.annots):
                    env1 = dict(env)
                    env1[item.var.name] = a
                    yield from go(i + 1, env1)
            elif self.guard(item, env):
                yield from go(i + 1, env)

        yield from go(0, {})

    def head_fact(self, head: Head, env) -> Fact:
        key = tuple(self.expr(k, env) for k in head.key)
        return Fact(head.pred, key, self.expr(head.value, env))


# ---------------------------------------------------------------- saturation

def _clause_index(ap: AbstractProgram):
    """(pred, first key constant or None) -> [(clause, atom position)]"""
    index = defaultdict(list)
    for c in ap.clauses:
        for i, item in enumerate(c.body):
            if isinstance(item, Atom):
                k0 = item.key[0]
                index[(item.pred, k0.value if isinstance(k0, Const) else None)].append((c, i))
    return index


def saturate(ap: AbstractProgram, seeds=None, limits: Limits = None, trim: bool = True) -> Model:
    """Saturate the clauses from the seeds. With `trim`, cells that were
    derived from values later replaced by larger ones, and that nothing in
    the final store still needs, are dropped (see `trimmed`)."""
    limits = limits or Limits()
    model = Model(ap.dom, limits)
    ev = Evaluator(ap)
    index = _clause_index(ap)

    work: deque = deque()
    for f in (ap.seeds if seeds is None else seeds):
        work.extend(model.insert(f))

    def fire(clause, env):
        model.stats.derivations += 1
        work.extend(model.insert(ev.head_fact(clause.head, env)))

    for c in ap.clauses:
        if not c.body:
            fire(c, {})

    while work:
        f = work.popleft()
        if not model.holds(f):
            continue
        model.stats.iterations += 1
        k0 = f.key[0]
        for c, pos in index.get((f.pred, k0), []) + index.get((f.pred, None), []):
            for env in ev.solutions(c, model, pos, f):
                fire(c, env)
                if model.stats.derivations > limits.max_derivations:
                    model.complete = False
                    model.reason = f"derivation limit {limits.max_derivations} exceeded"
                    return model
    return trimmed(ap, model, seeds, index) if trim else model


def trimmed(ap: AbstractProgram, model: Model, seeds=None, index=None) -> Model:
    """The part of a saturated store reachable from the seeds: re-derive from
    kept cells only, keeping for each head the stored cell that covers it.
    The result is still closed under every clause."""
    index = index if index is not None else _clause_index(ap)
    kept = Model(model.dom, model.limits)
    kept.contexts, kept.stats = model.contexts, model.stats
    ev = Evaluator(ap)
    work: deque = deque()

    def keep(f: Fact):
        if kept.covering(f, keyed=True) is not None:
            return
        c = model.covering(f, keyed=True)
        if c is None:
            raise AssertionError(f"saturated store does not cover {f}")
        if c.pred in CTX_PREDS:
            base, ctx = c.key[:-1], c.key[-1]
        else:
            base, ctx = c.key, None
        src = model.store[c.pred][base][ctx]
        entry = kept.store[c.pred].setdefault(base, {}).get(ctx)
        if entry is None:
            entry = kept.store[c.pred][base][ctx] = _Entry(src.joined)
            entry.updates = src.updates
        entry.cells.append([c.value, 0])
        work.append(c)

    for f in (ap.seeds if seeds is None else seeds):
        keep(f)
    for c in ap.clauses:
        if not c.body:
            keep(ev.head_fact(c.head, {}))
    while work:
        f = work.popleft()
        for c, pos in index.get((f.pred, f.key[0]), []) + index.get((f.pred, None), []):
            for env in ev.solutions(c, kept, pos, f):
                keep(ev.head_fact(c.head, env))
    return kept


@dataclass
class Counterexample:
    clause: HornClause
    env: dict
    head: Fact

    def __str__(self):
        binds = ", ".join(f"{k}={_short(v)}" for k, v in sorted(self.env.items()))
        return f"clause {self.clause.label} with {binds} derives uncovered {self.head}"


def _short(v):
    if isinstance(v, tuple):
        return "<" + ", ".join(str(x) for x in v) + ">"
    return str(v)


@dataclass
class CheckResult:
    status: str  # "ok" | "counterexample" | "skipped"
    counterexample: Optional[Counterexample] = None
    missing_seed: Optional[Fact] = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def check_postfixpoint(ap: AbstractProgram, model: Model, seeds=None) -> CheckResult:
    """Re-evaluate every clause on the frozen store and check that every
    derivable head (and every seed) is covered."""
    if not model.complete:
        return CheckResult("skipped")
    for f in (ap.seeds if seeds is None else seeds):
        if model.covering(f, keyed=True) is None:
            return CheckResult("counterexample", missing_seed=f)
    ev = Evaluator(ap)
    for c in ap.clauses:
        for env in ev.solutions(c, model):
            h = ev.head_fact(c.head, env)
            if model.covering(h, keyed=True) is None:
                return CheckResult("counterexample", Counterexample(c, env, h))
    return CheckResult("ok")


def query(model: Model, pred: str, base: tuple = None,
          where: Callable = None) -> list:
    """Stored facts of `pred` (optionally with a given base key) whose value
    satisfies `where`, in a deterministic order."""
    out = []
    for b, ctx, v in model.entries(pred, base):
        if where is None or where(v):
            key = b + (ctx,) if pred in CTX_PREDS else b
            out.append(Fact(pred, key, v))
    return sorted(out, key=_fact_sort_key)


def remove_fact(model: Model, f: Fact) -> bool:
    """Drop one stored fact (for mutation tests)."""
    pred = f.pred
    if pred in CTX_PREDS:
        base, ctx = f.key[:-1], f.key[-1]
    else:
        base, ctx = f.key, None
    entry = model.store[pred].get(base, {}).get(ctx)
    if entry is None:
        return False
    before = len(entry.cells)
    entry.cells = [c for c in entry.cells if c[0] != f.value]
    if not entry.cells:
        del model.store[pred][base][ctx]
        if not model.store[pred][base]:
            del model.store[pred][base]
    return len(entry.cells) < before
