"""Acceptance suite: one test per primary criterion, each printing a single
PASS/FAIL line. Run with

    pytest -v tests/test_acceptance.py

or directly with `python3 tests/test_acceptance.py`, which prints the seven
lines and exits non-zero if any criterion fails."""

import copy
import os
import random
import shutil
import subprocess
import sys
import time
from pathlib import Path

import pytest

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE))

from microdroid.abstraction import beta_val  # noqa: E402
from microdroid.cli import main  # noqa: E402
from microdroid.corpus import fixtures, run_corpus  # noqa: E402
from microdroid.domains import ConstSet, TaintOnly, parse_domain  # noqa: E402
from microdroid.engine import check_postfixpoint, remove_fact, saturate  # noqa: E402
from microdroid.harness import run_harness  # noqa: E402
from microdroid.interpreter import Machine  # noqa: E402
from microdroid.parser import parse_program  # noqa: E402
from microdroid.taint import LEAK, NO_LEAK, analyze, load_db, prepare  # noqa: E402

from conftest import CORPUS, activity_program  # noqa: E402
from oracles import operator_soundness, random_heap  # noqa: E402

Z3 = shutil.which("z3")
SOLVER_TIMEOUT = float(os.environ.get("MICRODROID_SOLVER_TIMEOUT", "60"))


def line(n, ok, detail):
    status = "PASS" if ok else "FAIL"
    return f"criterion {n}: {status} - {detail}"


# ---------------------------------------------------------------- checks

def check_soundness_harness():
    t0 = time.monotonic()
    runs = {d: run_harness(1, 500, 20, d, artifacts=HERE.parent / "soundness-failures")
            for d in ("const", "taint")}
    took = time.monotonic() - t0
    violations = sum(len(r.violations) for s in runs.values() for r in s.results)
    incomplete = sum(len(s.incomplete) for s in runs.values())
    configs = sum(s.configs for s in runs.values())
    ok = violations == 0 and incomplete == 0 and took < 600
    return ok, (f"500 programs x 2 domains, depth 20: {configs} configurations, "
                f"{violations} violations, {incomplete} incomplete models, {took:.1f}s")


def check_corpus():
    fxs = fixtures(CORPUS)
    results = run_corpus(CORPUS)
    by = {(r.fixture, r.domain): r.actual for r in results}
    problems = [r.line() for r in results if not r.ok]
    for fx in fxs:
        for sink in fx.planted:
            for d in ("taint", "const"):
                rep = analyze(parse_program(fx.path.read_text()), load_db(fx.db),
                              parse_domain(d)).report
                if rep.verdict(sink) != LEAK:
                    problems.append(f"planted leak in {fx.name} missed under {d}")
    if by.get(("02_register_overwrite", "const")) != NO_LEAK:
        problems.append("register overwrite fixture not no_leak")
    if by.get(("12_counter_loop", "const")) != NO_LEAK:
        problems.append("counter loop not no_leak under const")
    rc = main(["corpus", str(CORPUS)])
    if rc != 0:
        problems.append(f"`microdroid corpus` exited {rc}")
    planted = sum(1 for fx in fxs if fx.planted)
    ok = len(fxs) >= 15 and not problems
    detail = (f"{len(fxs)} fixtures, {planted} planted leaks, "
              f"{len(results) - len([r for r in results if not r.ok])}/{len(results)} "
              f"expectations met")
    return ok, detail + ("; " + "; ".join(problems[:3]) if problems else "")


def check_serialization():
    rng = random.Random(2024)
    m = Machine(activity_program("(0 (return))"))
    bad = 0
    for _ in range(1000):
        heap, _, value = random_heap(rng)
        v = value()
        copy_v, _ = m.serialize_value(heap, v)
        for dom in (TaintOnly(), ConstSet()):
            if beta_val(dom, copy_v) != beta_val(dom, v):
                bad += 1
    return bad == 0, f"1000 heap/value pairs x 2 domains, {bad} mismatches"


def check_operators():
    fails = {}
    for dom in (TaintOnly(), ConstSet()):
        for op, msgs in operator_soundness(dom, pairs=10_000).items():
            fails[f"{dom}/{op}"] = msgs
    detail = "10000 pairs per operator, 13 operators x 2 domains"
    if fails:
        k = sorted(fails)[0]
        detail += f"; failing: {', '.join(sorted(fails))}; e.g. {fails[k][0]}"
    return not fails, detail


def check_postfixpoints():
    models = removed = caught = 0
    not_post = []
    for fx in fixtures(CORPUS):
        p, db = parse_program(fx.path.read_text()), load_db(fx.db)
        for d in ("taint", "const"):
            ap = prepare(p, db, parse_domain(d))
            model = saturate(ap)
            models += 1
            if not check_postfixpoint(ap, model).ok:
                not_post.append(f"{fx.name}[{d}]")
                continue
            for f in model.facts():
                m2 = copy.deepcopy(model)
                remove_fact(m2, f)
                removed += 1
                if check_postfixpoint(ap, m2).status == "counterexample":
                    caught += 1
    ok = not not_post and removed > 0 and caught == removed
    detail = (f"{models - len(not_post)}/{models} corpus models are postfixpoints; "
              f"{caught}/{removed} single-fact removals detected")
    return ok, detail


_DRIVER = r"""
import sys
from pathlib import Path
from microdroid.cli import main
out, corpus = Path(sys.argv[1]), Path(sys.argv[2])
for fx in sorted(corpus.glob("*.mdx")):
    for d in ("taint", "const"):
        stem = out / f"{fx.stem}.{d}"
        with open(f"{stem}.json", "w") as sys.stdout:
            main(["analyze", str(fx), "--db", str(corpus / "db.txt"), "--domain", d, "--json",
                  "--dump-clauses", f"{stem}.clauses", "--dump-model", f"{stem}.model",
                  "--emit-smt", f"{stem}.smt2"])
sys.stdout = sys.__stdout__
"""


def check_determinism(tmp: Path):
    """Two separate processes with different hash seeds must write the same bytes."""
    dirs = []
    for hashseed in ("1", "2"):
        d = tmp / f"run{hashseed}"
        d.mkdir()
        env = dict(os.environ, PYTHONHASHSEED=hashseed)
        subprocess.run([sys.executable, "-c", _DRIVER, str(d), str(CORPUS)], env=env,
                       check=True)
        dirs.append(d)
    names = sorted(p.name for p in dirs[0].iterdir())
    differ = [n for n in names if (dirs[0] / n).read_bytes() != (dirs[1] / n).read_bytes()]
    same_set = names == sorted(p.name for p in dirs[1].iterdir())
    kinds = sorted({n.rsplit(".", 1)[1] for n in names})
    ok = same_set and not differ and len(names) == 4 * 2 * len(fixtures(CORPUS))
    detail = f"{len(names)} artifacts ({', '.join(kinds)}) compared, {len(differ)} differ"
    return ok, detail + (f": {', '.join(differ[:3])}" if differ else "")


def check_external_solver():
    agree, disagree = 0, []
    for fx in fixtures(CORPUS):
        p, db = parse_program(fx.path.read_text()), load_db(fx.db)
        for d in ("taint", "const"):
            dom = parse_domain(d)
            ours = analyze(p, db, dom).report
            theirs = analyze(p, db, dom, engine="chc:z3", smt_timeout=SOLVER_TIMEOUT).report
            for r in ours.results:
                if theirs.verdict(r.sink) == r.verdict:
                    agree += 1
                else:
                    disagree.append(f"{fx.name}[{d}] builtin {r.verdict}, "
                                    f"z3 {theirs.verdict(r.sink)}")
    detail = f"{agree}/{agree + len(disagree)} sink queries agree with z3"
    if disagree:
        detail += "; " + "; ".join(disagree[:3])
    return not disagree, detail


# ---------------------------------------------------------------- pytest

def _report(capsys, n, result):
    ok, detail = result
    with capsys.disabled():
        print("\n" + line(n, ok, detail))
    assert ok, detail


def test_criterion_1_soundness_harness(capsys):
    _report(capsys, 1, check_soundness_harness())


def test_criterion_2_corpus(capsys):
    _report(capsys, 2, check_corpus())


def test_criterion_3_serialization_preserves_abstraction(capsys):
    _report(capsys, 3, check_serialization())


def test_criterion_4_operator_assumptions(capsys):
    _report(capsys, 4, check_operators())


def test_criterion_5_postfixpoint_and_mutation(capsys):
    _report(capsys, 5, check_postfixpoints())


def test_criterion_6_byte_identical_outputs(capsys, tmp_path):
    _report(capsys, 6, check_determinism(tmp_path))


@pytest.mark.skipif(Z3 is None, reason="no CHC solver (z3) on PATH")
def test_criterion_7_external_solver_agrees(capsys):
    _report(capsys, 7, check_external_solver())


if __name__ == "__main__":
    import tempfile
    with tempfile.TemporaryDirectory() as tmp:
        checks = [check_soundness_harness, check_corpus, check_serialization, check_operators,
                  check_postfixpoints, lambda: check_determinism(Path(tmp))]
        all_ok = True
        for n, check in enumerate(checks, 1):
            ok, detail = check()
            all_ok &= ok
            print(line(n, ok, detail), flush=True)
        if Z3 is None:
            print("criterion 7: SKIP - no CHC solver (z3) on PATH")
        else:
            ok, detail = check_external_solver()
            all_ok &= ok
            print(line(7, ok, detail))
    sys.exit(0 if all_ok else 1)
