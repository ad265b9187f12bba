"""Randomized soundness harness: every configuration reached by bounded
concrete exploration must be covered by the saturated model."""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import syntax as S
from .abstraction import beta_cnf
from .clauses import AbstractProgram, seed_sources, translate_program
from .domains import DomainPlugin, parse_domain
from .engine import Limits, saturate
from .interpreter import Machine
from .parser import parse_program, pretty_print
from .randprog import Bounds, random_program

log = logging.getLogger(__name__)


@dataclass
class ProgramResult:
    index: int
    seed: str
    program: str
    configs: int = 0
    violations: list = field(default_factory=list)
    incomplete: bool = False
    truncated: bool = False
    faults: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations and not self.incomplete


@dataclass
class HarnessSummary:
    results: list

    @property
    def violations(self) -> list:
        return [r for r in self.results if r.violations]

    @property
    def incomplete(self) -> list:
        return [r for r in self.results if r.incomplete]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.results)

    @property
    def configs(self) -> int:
        return sum(r.configs for r in self.results)

    def text(self) -> str:
        lines = [f"programs: {len(self.results)}", f"configurations checked: {self.configs}",
                 f"coverage violations: {sum(len(r.violations) for r in self.results)}",
                 f"incomplete models: {len(self.incomplete)}"]
        for r in self.violations[:5]:
            lines.append(f"--- program {r.index} (seed {r.seed}) ---")
            lines.extend(r.violations[:3])
            lines.append(r.program.rstrip())
        return "\n".join(lines) + "\n"


def program_seed(seed: int, index: int) -> str:
    return f"{seed}:{index}"


def pick_sources(p: S.Program, seed: str) -> frozenset:
    """A deterministic choice of at most one source method, to exercise taint."""
    import random
    rng = random.Random("sources:" + seed)
    cands = sorted((c, md.name) for c, md in p.methods())
    if not cands or rng.random() < 0.5:
        return frozenset()
    return frozenset([rng.choice(cands)])


def check_program(p: S.Program, depth: int, dom: DomainPlugin, *, seed: str = "0",
                  index: int = 0, sources=frozenset(), branch_cap: int = 16,
                  max_configs: int = 4000, limits: Optional[Limits] = None,
                  drop_labels=()) -> ProgramResult:
    """Saturate, explore, and check coverage of every reached configuration.
    `drop_labels` removes clauses whose label starts with one of the given
    prefixes (mutation testing)."""
    res = ProgramResult(index, seed, pretty_print(p))
    ap = seed_sources(translate_program(p, dom), sources)
    if drop_labels:
        kept = [c for c in ap.clauses if not c.label.startswith(tuple(drop_labels))]
        ap = AbstractProgram(ap.program, ap.dom, kept, ap.seeds, ap.sub, ap.annotations,
                             ap.sources)
    model = saturate(ap, limits=limits)
    if not model.complete:
        res.incomplete = True
        return res
    m = Machine(p, sources)
    for psi0 in m.initial_configurations():
        run = m.run_bounded(psi0, depth, branch_cap=branch_cap, seed=hash_seed(seed),
                            max_configs=max_configs)
        res.truncated |= run.truncated or run.partial
        res.faults += len(run.faults)
        for psi in run.configs:
            res.configs += 1
            for f in beta_cnf(dom, psi):
                if model.covering(f) is None:
                    res.violations.append(f"uncovered at depth {run.depths[psi]}: {f}")
                    if len(res.violations) >= 10:
                        return res
    return res


def hash_seed(seed: str) -> int:
    """A stable integer from a seed string (independent of PYTHONHASHSEED)."""
    import zlib
    return zlib.crc32(seed.encode())


def _job(args):
    seed, index, depth, domain, drop, bounds = args
    s = program_seed(seed, index)
    p = random_program(s, bounds)
    return check_program(p, depth, parse_domain(domain), seed=s, index=index,
                         sources=pick_sources(p, s), drop_labels=drop)


def run_harness(seed: int, n_programs: int, depth: int, domain: str = "const",
                workers: Optional[int] = None, drop_labels=(), bounds: Bounds = Bounds(),
                artifacts: Optional[Path] = None) -> HarnessSummary:
    jobs = [(seed, i, depth, domain, tuple(drop_labels), bounds) for i in range(n_programs)]
    workers = workers if workers is not None else min(8, os.cpu_count() or 1)
    if workers <= 1:
        results = [_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_job, jobs, chunksize=4))
    summary = HarnessSummary(results)
    if artifacts is not None:
        for r in summary.violations:
            artifacts.mkdir(parents=True, exist_ok=True)
            path = artifacts / f"violation-{r.seed.replace(':', '-')}.mdx"
            header = "".join(f"; {v}\n" for v in r.violations)
            path.write_text(f"; seed {r.seed} depth {depth} domain {domain}\n{header}{r.program}",
                            encoding="utf-8")
            log.error("coverage violation written to %s", path)
    return summary


def replay(text: str, seed: str, depth: int, domain: str = "const",
           sources=None) -> ProgramResult:
    """Re-check a saved program. Sources default to the ones the harness
    picked for that seed string."""
    p = parse_program(text)
    if sources is None:
        sources = pick_sources(p, seed)
    return check_program(p, depth, parse_domain(domain), seed=seed, sources=sources)
