import json

import pytest

from microdroid.corpus import fixtures
from microdroid.domains import ConstSet, TaintOnly
from microdroid.interpreter import Machine
from microdroid.parser import parse_program
from microdroid.taint import (LEAK, NO_LEAK, UNKNOWN, DBError, SourceSinkDB, analyze,
                              concrete_leaks, load_db, parse_db)
from microdroid.engine import Limits

from conftest import CORPUS, activity_program

DB = load_db(CORPUS / "db.txt")


def test_parse_db():
    db = parse_db("# comment\nsource A f\n\nsink B g   # trailing\n")
    assert db == SourceSinkDB(frozenset({("A", "f")}), frozenset({("B", "g")}))


def test_parse_db_error_has_line_number():
    with pytest.raises(DBError) as e:
        parse_db("source A f\nsink B\n", "db.txt")
    assert "db.txt:2" in str(e.value)


def test_unresolved_entries_are_warnings():
    p = activity_program("(0 (return))")
    db = DB.merged(parse_db("sink Nowhere nothing"))
    rep = analyze(p, db).report
    assert any("Nowhere.nothing" in w for w in rep.warnings)
    assert rep.verdict(("Nowhere", "nothing")) == NO_LEAK


def test_witness_names_the_register():
    p = parse_program((CORPUS / "01_direct_leak.mdx").read_text())
    rep = analyze(p, DB, TaintOnly()).report
    (res,) = rep.results
    assert res.verdict == LEAK
    assert [w.register for w in res.witnesses] == [0]


def test_incomplete_model_gives_unknown_not_no_leak():
    p = parse_program((CORPUS / "02_register_overwrite.mdx").read_text())
    rep = analyze(p, DB, ConstSet(), limits=Limits(max_derivations=3)).report
    assert rep.overall == UNKNOWN
    assert rep.diagnostics


def test_json_report_schema_and_stability():
    p = parse_program((CORPUS / "03_static_cross_callback.mdx").read_text())
    a = analyze(p, DB, ConstSet()).report.json_text()
    b = analyze(p, DB, ConstSet()).report.json_text()
    assert a == b
    doc = json.loads(a)
    assert sorted(doc) == ["diagnostics", "domain", "engine", "overall", "verdicts", "warnings",
                           "witnesses"]
    assert doc["verdicts"] == {"Sink.leak": LEAK}


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.mdx")), ids=lambda p: p.stem)
def test_concrete_leaks_are_reported(path):
    """Whenever bounded execution reaches a sink with a secret register, the
    analysis must report a possible leak there."""
    p = parse_program(path.read_text())
    m = Machine(p, DB.sources)
    seen = set()
    for psi0 in m.initial_configurations():
        for psi in m.run_bounded(psi0, 60, max_configs=20000).configs:
            seen.update(concrete_leaks(psi, DB.sinks))
    for dom in (TaintOnly(), ConstSet()):
        rep = analyze(p, DB, dom).report
        for sink in seen:
            assert rep.verdict(sink) == LEAK, (path.stem, str(dom))


PLANTED = [fx for fx in fixtures(CORPUS) if fx.planted]


@pytest.mark.parametrize("fx", PLANTED, ids=lambda fx: fx.name)
def test_planted_leaks_are_real(fx):
    """A fixture tagged as planted must reach its sink with a secret under
    bounded concrete execution; otherwise the tag is wrong."""
    p = parse_program(fx.path.read_text())
    m = Machine(p, DB.sources)
    seen = set()
    for psi0 in m.initial_configurations():
        for psi in m.run_bounded(psi0, 60, max_configs=20000).configs:
            seen.update(concrete_leaks(psi, DB.sinks))
    assert set(fx.planted) <= seen
