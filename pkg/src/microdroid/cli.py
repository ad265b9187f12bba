"""Command-line driver.

Exit codes for `analyze`: 0 no leak at any sink, 2 some leak possible,
3 some verdict unknown, 1 usage or input error. `soundness` and `corpus`
exit 0 on success and 2 when a check fails."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .domains import parse_domain
from .engine import Limits
from .parser import ParseError, parse_program
from .taint import LEAK, NO_LEAK, DBError, SourceSinkDB, analyze, load_db, smt_document
from .wellformed import IllFormed, ensure_well_formed

log = logging.getLogger("microdroid")

EXIT_OK, EXIT_ERROR, EXIT_LEAK, EXIT_UNKNOWN = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    program: Path
    db: Optional[Path]
    domain: str = "taint"
    engine: str = "builtin"
    limits: Limits = field(default_factory=Limits)
    emit_smt: Optional[str] = None
    dump_clauses: Optional[str] = None
    dump_model: Optional[str] = None
    json: bool = False
    timeout: float = 60.0


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _domain(text: str) -> str:
    try:
        parse_domain(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))
    return text


def _engine(text: str) -> str:
    if text == "builtin" or (text.startswith("chc:") and len(text) > 4):
        return text
    raise argparse.ArgumentTypeError("engine must be 'builtin' or 'chc:<solver command>'")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="microdroid",
                                 description="Static taint analysis of activity-based bytecode programs.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    ap.add_argument("--debug", action="store_true", help="show tracebacks on errors")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="analyze one program")
    a.add_argument("program", type=Path)
    a.add_argument("--db", type=Path, help="sources/sinks database")
    a.add_argument("--domain", type=_domain, default="taint", help="taint | const | const:<k>")
    a.add_argument("--engine", type=_engine, default="builtin", help="builtin | chc:<command>")
    a.add_argument("--emit-smt", metavar="PATH", help="write the SMT-LIB Horn encoding")
    a.add_argument("--dump-clauses", nargs="?", const="-", metavar="PATH",
                   help="write the clause set (default: standard output)")
    a.add_argument("--dump-model", nargs="?", const="-", metavar="PATH",
                   help="write the saturated model (default: standard output)")
    a.add_argument("--json", action="store_true", help="machine-readable report")
    a.add_argument("--widen-after", type=_positive, default=8)
    a.add_argument("--context-cap", type=_positive, default=64)
    a.add_argument("--max-derivations", type=_positive, default=2_000_000)
    a.add_argument("--disjunct-cap", type=_positive, default=64)
    a.add_argument("--timeout", type=float, default=60.0, help="external solver timeout (s)")

    s = sub.add_parser("soundness", help="randomized coverage check of the analysis")
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--programs", type=_positive, default=10)
    s.add_argument("--depth", type=_positive, default=10)
    s.add_argument("--domain", type=_domain, default="const")
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--artifacts", type=Path, default=Path("soundness-failures"),
                   help="directory for replayable failing programs")
    s.add_argument("--replay", type=Path, metavar="PROGRAM",
                   help="re-check one serialized program with --seed as its seed string")
    s.add_argument("--replay-seed", default=None,
                   help="seed string recorded in the failure artifact (e.g. 1:17)")

    c = sub.add_parser("corpus", help="check the expected verdicts of a fixture directory")
    c.add_argument("directory", type=Path)
    c.add_argument("--domain", type=_domain, action="append",
                   help="domains to run (default: taint and const)")
    c.add_argument("--engine", type=_engine, default="builtin")

    r = sub.add_parser("run", help="explore a program concretely and print a trace")
    r.add_argument("program", type=Path)
    r.add_argument("--db", type=Path)
    r.add_argument("--depth", type=_positive, default=20)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--branch-cap", type=_positive, default=16)
    return ap


def _write(dest: str, text: str):
    if dest == "-":
        sys.stdout.write(text)
    else:
        Path(dest).write_text(text, encoding="utf-8")


def load_program(path: Path):
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}")
    return ensure_well_formed(parse_program(text))


def _db(path: Optional[Path]) -> SourceSinkDB:
    if path is None:
        return SourceSinkDB()
    try:
        return load_db(path)
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}")


def cmd_analyze(args) -> int:
    cfg = RunConfig(args.program, args.db, args.domain, args.engine,
                    Limits(widen_after=args.widen_after, context_cap=args.context_cap,
                           max_derivations=args.max_derivations, disjunct_cap=args.disjunct_cap),
                    args.emit_smt, args.dump_clauses, args.dump_model, args.json, args.timeout)
    p = load_program(cfg.program)
    db = _db(cfg.db)
    dom = parse_domain(cfg.domain)
    result = analyze(p, db, dom, engine=cfg.engine, limits=cfg.limits, smt_timeout=cfg.timeout)
    if cfg.dump_clauses:
        _write(cfg.dump_clauses, result.abstract_program.dump())
    if cfg.dump_model:
        if result.model is None:
            log.warning("--dump-model needs the builtin engine; nothing written")
        else:
            _write(cfg.dump_model, result.model.dump())
    if cfg.emit_smt:
        doc = smt_document(result.abstract_program, sorted(db.sinks), cfg.limits, result.model)
        Path(cfg.emit_smt).write_text(doc, encoding="utf-8")
    report = result.report
    sys.stdout.write(report.json_text() if cfg.json else report.text())
    return {LEAK: EXIT_LEAK, NO_LEAK: EXIT_OK}.get(report.overall, EXIT_UNKNOWN)


def cmd_soundness(args) -> int:
    from .harness import replay, run_harness
    if args.replay:
        seed = args.replay_seed or str(args.seed)
        res = replay(args.replay.read_text(encoding="utf-8"), seed, args.depth, args.domain)
        print(f"configurations checked: {res.configs}")
        for v in res.violations:
            print(v)
        return EXIT_OK if res.ok else EXIT_LEAK
    summary = run_harness(args.seed, args.programs, args.depth, args.domain,
                          workers=args.workers, artifacts=args.artifacts)
    sys.stdout.write(summary.text())
    return EXIT_OK if summary.ok else EXIT_LEAK


def cmd_corpus(args) -> int:
    from .corpus import DOMAINS, run_corpus
    if not args.directory.is_dir():
        raise UsageError(f"{args.directory} is not a directory")
    results = run_corpus(args.directory, tuple(args.domain or DOMAINS), engine=args.engine)
    for r in results:
        print(r.line())
    bad = [r for r in results if not r.ok]
    print(f"{len(results) - len(bad)}/{len(results)} expectations met")
    return EXIT_OK if not bad else EXIT_LEAK


def cmd_run(args) -> int:
    from .interpreter import Machine, trace_record
    from .taint import concrete_leaks
    p = load_program(args.program)
    db = _db(args.db)
    m = Machine(p, db.sources)
    leaks = set()
    for psi0 in m.initial_configurations():
        run = m.run_bounded(psi0, args.depth, branch_cap=args.branch_cap, seed=args.seed)
        for psi in run.configs:
            print(trace_record(psi, run.depths[psi]))
            leaks.update(concrete_leaks(psi, db.sinks))
        for f in run.faults:
            log.info("fault at %s: %s", f.pp, f.message)
    for c, mth in sorted(leaks):
        print(f"concrete leak at {c}.{mth}", file=sys.stderr)
    return EXIT_LEAK if leaks else EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_ERROR if e.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s: %(message)s")
    handlers = {"analyze": cmd_analyze, "soundness": cmd_soundness, "corpus": cmd_corpus,
                "run": cmd_run}
    try:
        return handlers[args.command](args)
    except (UsageError, ParseError, IllFormed, DBError, ValueError, OSError) as e:
        if args.debug:
            raise
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as e:  # noqa: BLE001 - reported, never a stack dump by default
        if args.debug:
            raise
        from .smtlib import SolverConfigError
        kind = "solver configuration" if isinstance(e, SolverConfigError) else "internal"
        print(f"{kind} error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
