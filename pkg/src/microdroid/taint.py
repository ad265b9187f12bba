"""Source/sink database, sink queries over a saturated model, leak reports,
and the concrete leak check used as an oracle."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import syntax as S
from .abstraction import taint_of, taint_of_abs
from .clauses import AbstractProgram, seed_sources, translate_program
from .domains import DomainPlugin, TaintOnly
from .engine import Limits, Model, query, saturate
from .values import SECRET

log = logging.getLogger(__name__)

LEAK, NO_LEAK, UNKNOWN = "leak_possible", "no_leak", "unknown"


class DBError(ValueError):
    pass


@dataclass(frozen=True)
class SourceSinkDB:
    sources: frozenset = frozenset()
    sinks: frozenset = frozenset()

    def merged(self, other: "SourceSinkDB") -> "SourceSinkDB":
        return SourceSinkDB(self.sources | other.sources, self.sinks | other.sinks)


def parse_db(text: str, origin: str = "<db>") -> SourceSinkDB:
    sources, sinks = set(), set()
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3 or parts[0] not in ("source", "sink"):
            raise DBError(f"{origin}:{n}: expected 'source <Class> <method>' or "
                          f"'sink <Class> <method>', got {raw.strip()!r}")
        (sources if parts[0] == "source" else sinks).add((parts[1], parts[2]))
    return SourceSinkDB(frozenset(sources), frozenset(sinks))


def load_db(path) -> SourceSinkDB:
    path = Path(path)
    return parse_db(path.read_text(encoding="utf-8"), str(path))


def unresolved(p: S.Program, db: SourceSinkDB) -> list:
    """Entries of the database naming methods the program does not define."""
    out = []
    for kind, pairs in (("source", db.sources), ("sink", db.sinks)):
        for c, m in sorted(pairs):
            if p.method(c, m) is None:
                out.append(f"{kind} {c}.{m} does not resolve to a method of the program")
    return out


# ---------------------------------------------------------------- reports

@dataclass
class Witness:
    register: int
    value: str
    context: str

    def to_json(self):
        return {"register": self.register, "value": self.value, "context": self.context}


@dataclass
class SinkResult:
    sink: tuple
    verdict: str
    witnesses: list = field(default_factory=list)

    @property
    def name(self) -> str:
        return f"{self.sink[0]}.{self.sink[1]}"


@dataclass
class LeakReport:
    engine: str
    domain: str
    results: list
    warnings: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    @property
    def overall(self) -> str:
        verdicts = {r.verdict for r in self.results}
        if LEAK in verdicts:
            return LEAK
        if UNKNOWN in verdicts:
            return UNKNOWN
        return NO_LEAK

    def verdict(self, sink) -> Optional[str]:
        for r in self.results:
            if r.sink == tuple(sink):
                return r.verdict
        return None

    def to_json(self) -> dict:
        return {
            "engine": self.engine,
            "domain": self.domain,
            "overall": self.overall,
            "verdicts": {r.name: r.verdict for r in self.results},
            "witnesses": {r.name: [w.to_json() for w in r.witnesses] for r in self.results},
            "warnings": list(self.warnings),
            "diagnostics": list(self.diagnostics),
        }

    def json_text(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    def text(self) -> str:
        lines = [f"engine: {self.engine}  domain: {self.domain}"]
        for w in self.warnings:
            lines.append(f"warning: {w}")
        for r in self.results:
            lines.append(f"{r.name}: {r.verdict}")
            for w in r.witnesses:
                lines.append(f"  register {w.register} in context {w.context}: {w.value}")
        for d in self.diagnostics:
            lines.append(f"note: {d}")
        lines.append(f"overall: {self.overall}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- analysis

def sink_witnesses(model: Model, sink: tuple) -> list:
    """Registers at the sink's entry whose abstract taint is secret."""
    out = []
    pp = S.ProgramPoint(sink[0], sink[1], 0)
    for f in query(model, "R", (pp,)):
        ctx = f.key[-1]
        ctx_txt = "*" if not isinstance(ctx, tuple) else "(" + ", ".join(map(str, ctx)) + ")"
        for i, v in enumerate(f.value):
            if taint_of_abs(v, model.blocks_of) == SECRET:
                out.append(Witness(i if i < len(f.value) - 1 else S.RET, str(v), ctx_txt))
    return out


def prepare(p: S.Program, db: SourceSinkDB, dom: DomainPlugin) -> AbstractProgram:
    return seed_sources(translate_program(p, dom), db.sources)


@dataclass
class Analysis:
    report: LeakReport
    abstract_program: AbstractProgram
    model: Optional[Model] = None


def analyze(p: S.Program, db: SourceSinkDB, dom: DomainPlugin = None, engine: str = "builtin",
            limits: Limits = None, smt_timeout: float = 60.0) -> Analysis:
    """Translate, seed sources, solve, and decide each sink."""
    dom = dom or TaintOnly()
    warnings = unresolved(p, db)
    for w in warnings:
        log.warning(w)
    ap = prepare(p, db, dom)
    sinks = sorted(db.sinks)
    if engine == "builtin":
        model = saturate(ap, limits=limits)
        results = []
        diagnostics = []
        if not model.complete:
            diagnostics.append(f"model incomplete: {model.reason}")
        for sink in sinks:
            ws = sink_witnesses(model, sink)
            if ws:
                verdict = LEAK
            else:
                verdict = NO_LEAK if model.complete else UNKNOWN
            results.append(SinkResult(sink, verdict, ws))
        report = LeakReport("builtin", str(dom), results, warnings, diagnostics)
        return Analysis(report, ap, model)
    if engine.startswith("chc:"):
        from .smtlib import run_external
        doc = smt_document(ap, sinks, limits)
        verdicts, diag = run_external(doc, engine[4:], len(sinks), timeout=smt_timeout)
        mapping = {"sat": LEAK, "unsat": NO_LEAK}
        results = [SinkResult(s, mapping.get(v, UNKNOWN)) for s, v in zip(sinks, verdicts)]
        return Analysis(LeakReport(engine, str(dom), results, warnings, diag), ap, None)
    raise ValueError(f"unknown engine {engine!r}")


def smt_document(ap: AbstractProgram, sinks, limits: Limits = None, model: Model = None) -> str:
    """The CHC script for the sink queries. For constant-set domains the
    constant table also lists every constant of the builtin model, so that
    no value the builtin engine tracks exactly is forced to ⊤."""
    from .smtlib import emit_chc
    extra = []
    if not isinstance(ap.dom, TaintOnly):
        model = model or saturate(ap, limits=limits)
        extra = [f.value for f in model.facts()]
    return emit_chc(ap, sinks, extra)


# ---------------------------------------------------------------- concrete oracle

def concrete_leaks(psi, sinks) -> list:
    """Sinks entered with a secret register in this configuration: an active
    frame's top local state is at pc 0 of a sink method."""
    hits = []
    for fr in psi.frames:
        if not fr.stack:
            continue
        ls = fr.stack[0]
        if (ls.pp.cls, ls.pp.method) in sinks and ls.pp.pc == 0:
            if any(taint_of(v, psi.heap) == SECRET for v in ls.regs):
                hits.append((ls.pp.cls, ls.pp.method))
    return hits
