from collections import Counter

from hypothesis import given, settings, strategies as st

from microdroid import syntax as S
from microdroid.domains import ConstSet
from microdroid.harness import check_program, pick_sources, program_seed, replay, run_harness
from microdroid.parser import parse_program, pretty_print
from microdroid.randprog import random_program
from microdroid.wellformed import check_well_formed

FORMS = (S.Move, S.Goto, S.If, S.Unop, S.Binop, S.New, S.NewArray, S.CheckCast, S.InstanceOf,
         S.Invoke, S.StaticInvoke, S.Return, S.NewIntent, S.PutExtra, S.GetExtra,
         S.StartActivity)


def test_generator_covers_every_statement_form():
    seen = Counter()
    for i in range(200):
        for _, md in random_program(program_seed(0, i)).methods():
            seen.update(type(s) for s in md.body)
    assert set(FORMS) <= set(seen)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_generated_programs_are_well_formed_and_print_round_trip(n):
    p = random_program(program_seed(n, 0))
    assert check_well_formed(p) == []
    assert parse_program(pretty_print(p)) == p


def test_generation_is_deterministic():
    assert pretty_print(random_program("5:3")) == pretty_print(random_program("5:3"))


def test_small_harness_run_is_clean():
    s = run_harness(3, 40, 15, "const", workers=1)
    assert s.ok
    assert s.configs > 40
    assert "coverage violations: 0" in s.text()


def test_taint_domain_harness_run_is_clean():
    assert run_harness(4, 40, 15, "taint", workers=1).ok


def test_dropping_lifecycle_clauses_is_detected(tmp_path):
    """Removing the callback-entry clauses makes the model miss the
    configurations inside callbacks, and the harness must notice."""
    s = run_harness(1, 30, 10, "const", workers=1, drop_labels=("cbk",), artifacts=tmp_path)
    assert s.violations
    written = sorted(tmp_path.glob("violation-*.mdx"))
    assert len(written) == len(s.violations)
    text = written[0].read_text()
    assert text.startswith("; seed 1:")
    parse_program(text)  # comment header keeps the artifact replayable


def test_dropping_result_clauses_is_detected():
    s = run_harness(1, 60, 12, "const", workers=1, drop_labels=("return",))
    assert s.violations


def test_replay_reproduces_a_clean_check():
    seed = program_seed(2, 7)
    p = random_program(seed)
    direct = check_program(p, 12, ConstSet(), seed=seed, sources=pick_sources(p, seed))
    again = replay(pretty_print(p), seed, 12, "const")
    assert (direct.configs, direct.violations) == (again.configs, again.violations)


def test_parallel_and_serial_runs_agree():
    a = run_harness(6, 12, 10, "const", workers=1)
    b = run_harness(6, 12, 10, "const", workers=2)
    assert [(r.configs, r.violations) for r in a.results] == \
        [(r.configs, r.violations) for r in b.results]


FINISHING = """(program (entry Main)
 (class Main (super Activity)
   (activity (callbacks (running onClick)))
   (method onClick (args) (returns void) (locals 1)
     (0 (move (reg 0) (field (reg 1) finished)))
     (1 (return)))))"""


def test_dropping_fin_clauses_is_detected_on_a_finishing_program():
    p = parse_program(FINISHING)
    full = check_program(p, 20, ConstSet())
    assert full.ok and full.configs > 5
    broken = check_program(p, 20, ConstSet(), drop_labels=("fin",))
    assert broken.violations
    assert any("finished" in v and "true" in v for v in broken.violations)
