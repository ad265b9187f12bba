import random

import pytest

from microdroid import syntax as S
from microdroid.clauses import translate_program
from microdroid.domains import ConstSet, TaintOnly
from microdroid.engine import Limits, check_postfixpoint, query, remove_fact, saturate
from microdroid.parser import parse_program
from microdroid.randprog import random_program
from microdroid.taint import load_db, prepare
from microdroid.values import class_annot, intent_annot

from conftest import CORPUS, activity_program
from test_clauses import ONE_CLASS


def pp(m, pc, cls="Main"):
    return S.ProgramPoint(cls, m, pc)


def test_saturate_small_program():
    ap = translate_program(parse_program(ONE_CLASS), ConstSet())
    model = saturate(ap)
    assert model.complete
    rows = [str(f) for f in query(model, "R", (pp("onCreate", 2),))]
    assert rows == ["R[Main.onCreate:2]((); {5}, {10}, {Main}, {0})"]
    # eq(5, 10) cannot be true, so pc 0 is never re-entered with 5 in reg 0
    assert [str(f.value[0]) for f in query(model, "R", (pp("onCreate", 0),))] == ["{0}"]
    assert check_postfixpoint(ap, model).ok


def test_fin_widens_finished():
    ap = translate_program(parse_program(ONE_CLASS), ConstSet())
    model = saturate(ap)
    (h,) = query(model, "H", (class_annot("Main"),))
    assert str(h.value.get("finished")) == "{top}"


def test_query_on_absent_key_is_empty():
    model = saturate(translate_program(parse_program(ONE_CLASS), TaintOnly()))
    assert query(model, "R", (pp("nothing", 0),)) == []


def test_act_derives_intent_summary():
    text = (CORPUS / "07_intent_extra.mdx").read_text()
    ap = prepare(parse_program(text), load_db(CORPUS / "db.txt"), TaintOnly())
    model = saturate(ap)
    (h,) = query(model, "H", (intent_annot("Second"),))
    # the only extra put into it is the source's ⊤@secret
    assert str(h.value) == "intent Second [{top@secret}]"


def test_loop_terminates_with_widening():
    p = activity_program("""
     (0 (move (reg 1) (prim int 1)))
     (1 (binop add (reg 0) (reg 0) (reg 1)))
     (2 (goto 1))""")
    model = saturate(translate_program(p, ConstSet()), limits=Limits(widen_after=4))
    assert model.complete
    vals = {str(f.value[0]) for f in query(model, "R", (pp("onCreate", 1),))}
    assert any("top" in v for v in vals)


def test_derivation_cap_marks_model_incomplete():
    p = activity_program("""
     (0 (move (reg 1) (prim int 1)))
     (1 (binop add (reg 0) (reg 0) (reg 1)))
     (2 (goto 1))""")
    ap = translate_program(p, ConstSet())
    model = saturate(ap, limits=Limits(max_derivations=5))
    assert not model.complete
    assert check_postfixpoint(ap, model).status == "skipped"


def test_removing_a_derived_fact_is_caught():
    ap = translate_program(parse_program(ONE_CLASS), ConstSet())
    model = saturate(ap)
    (f,) = query(model, "R", (pp("onCreate", 3),))
    assert remove_fact(model, f)
    res = check_postfixpoint(ap, model)
    assert res.status == "counterexample"
    assert res.counterexample.clause.label == "if@Main.onCreate:2"


def test_idempotent_and_monotone():
    rng = random.Random(5)
    for seed in range(25):
        p = random_program(seed)
        ap = translate_program(p, ConstSet())
        model = saturate(ap)
        facts = model.facts()
        again = saturate(ap, seeds=facts)
        assert again.dump() == model.dump()
        extra = rng.sample(facts, min(3, len(facts)))
        bigger = saturate(ap, seeds=list(ap.seeds) + extra)
        assert all(bigger.covering(f) is not None for f in facts)


def test_model_dump_is_deterministic():
    for path in sorted(CORPUS.glob("*.mdx")):
        ap = prepare(parse_program(path.read_text()), load_db(CORPUS / "db.txt"), ConstSet())
        assert saturate(ap).dump() == saturate(ap).dump()


def _corpus_model(name, dom, trim=True):
    path = next(CORPUS.glob(name + "_*.mdx"))
    ap = prepare(parse_program(path.read_text()), load_db(CORPUS / "db.txt"), dom)
    return ap, saturate(ap, trim=trim)


def test_trim_drops_only_stale_cells():
    ap, full = _corpus_model("03", ConstSet(), trim=False)
    _, small = _corpus_model("03", ConstSet())
    assert set(small.facts()) < set(full.facts())
    assert check_postfixpoint(ap, small).ok
    assert all(full.covering(f, keyed=True) == f for f in small.facts())


@pytest.mark.parametrize("name", ["03", "07", "12", "15"])
def test_every_removed_fact_is_detected(name):
    import copy
    for dom in (TaintOnly(), ConstSet()):
        ap, model = _corpus_model(name, dom)
        for f in model.facts():
            m2 = copy.deepcopy(model)
            assert remove_fact(m2, f)
            assert check_postfixpoint(ap, m2).status == "counterexample", str(f)
