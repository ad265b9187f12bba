"""Fixture corpus: programs with embedded expected verdicts.

Header lines at the top of a fixture:

    ; expected: leak_possible          (every domain)
    ; expected[const]: no_leak          (one domain, overrides the above)
    ; db: other-db.txt                  (default: db.txt next to the fixture)
    ; planted: Sink.leak                (a sink the program really leaks to)
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .domains import parse_domain
from .engine import Limits
from .parser import parse_program
from .taint import LEAK, NO_LEAK, UNKNOWN, analyze, load_db
from .wellformed import ensure_well_formed

_HEADER = re.compile(r"^;\s*(expected|db|planted)(?:\[([\w:]+)\])?\s*:\s*(\S+)\s*$")
VERDICTS = (LEAK, NO_LEAK, UNKNOWN)
DOMAINS = ("taint", "const")


@dataclass
class Fixture:
    path: Path
    expected: dict  # domain name -> verdict; key None = every domain
    db: Path
    planted: tuple = ()

    def expectation(self, domain: str) -> Optional[str]:
        return self.expected.get(domain, self.expected.get(None))

    @property
    def name(self) -> str:
        return self.path.stem


def read_fixture(path: Path) -> Fixture:
    expected, db, planted = {}, path.parent / "db.txt", []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.startswith(";"):
            if line.strip():
                break
            continue
        m = _HEADER.match(line)
        if not m:
            continue
        kind, dom, value = m.groups()
        if kind == "db":
            db = path.parent / value
        elif kind == "planted":
            cls, _, meth = value.partition(".")
            if not meth:
                raise ValueError(f"{path}: planted sink must be Class.method, got {value!r}")
            planted.append((cls, meth))
        else:
            if value not in VERDICTS:
                raise ValueError(f"{path}: unknown expected verdict {value!r}")
            expected[dom] = value
    return Fixture(path, expected, db, tuple(planted))


def fixtures(directory) -> list:
    return [read_fixture(p) for p in sorted(Path(directory).glob("*.mdx"))]


@dataclass
class CorpusResult:
    fixture: str
    domain: str
    expected: str
    actual: str

    @property
    def ok(self) -> bool:
        return self.expected == self.actual

    def line(self) -> str:
        mark = "ok  " if self.ok else "FAIL"
        return f"{mark} {self.fixture} [{self.domain}] expected {self.expected}, got {self.actual}"


def run_corpus(directory, domains=DOMAINS, engine: str = "builtin",
               limits: Optional[Limits] = None) -> list:
    out = []
    for fx in fixtures(directory):
        p = ensure_well_formed(parse_program(fx.path.read_text(encoding="utf-8")))
        db = load_db(fx.db)
        for d in domains:
            want = fx.expectation(d)
            if want is None:
                continue
            got = analyze(p, db, parse_domain(d), engine=engine, limits=limits).report.overall
            out.append(CorpusResult(fx.name, d, want, got))
    return out
