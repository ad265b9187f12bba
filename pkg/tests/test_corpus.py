import pytest

from microdroid.corpus import fixtures, read_fixture, run_corpus
from microdroid.taint import LEAK, NO_LEAK

from conftest import CORPUS


def test_corpus_is_large_enough():
    assert len(fixtures(CORPUS)) >= 15


def test_every_corpus_expectation_holds():
    results = run_corpus(CORPUS)
    bad = [r.line() for r in results if not r.ok]
    assert not bad, "\n".join(bad)
    assert len(results) == 2 * len(fixtures(CORPUS))


def test_required_negative_fixtures_are_present():
    by_name = {fx.name: fx for fx in fixtures(CORPUS)}
    assert by_name["02_register_overwrite"].expectation("taint") == NO_LEAK
    assert by_name["02_register_overwrite"].expectation("const") == NO_LEAK
    assert by_name["12_counter_loop"].expectation("const") == NO_LEAK


def test_planted_fixtures_expect_a_leak_everywhere():
    planted = [fx for fx in fixtures(CORPUS) if fx.planted]
    assert len(planted) >= 10
    for fx in planted:
        assert fx.expectation("taint") == fx.expectation("const") == LEAK, fx.name


def test_header_parsing(tmp_path):
    f = tmp_path / "x.mdx"
    f.write_text("; expected: leak_possible\n; expected[const]: no_leak\n; db: other.txt\n"
                 "; planted: Sink.leak\n; free text is ignored\n\n(program (entry A))\n"
                 "; expected: unknown\n")
    fx = read_fixture(f)
    assert fx.expectation("taint") == LEAK
    assert fx.expectation("const") == NO_LEAK
    assert fx.expectation("const:4") == LEAK
    assert fx.db == tmp_path / "other.txt"
    assert fx.planted == (("Sink", "leak"),)


@pytest.mark.parametrize("line", ["; expected: maybe", "; planted: Sink"])
def test_bad_headers_are_rejected(tmp_path, line):
    f = tmp_path / "x.mdx"
    f.write_text(line + "\n(program (entry A))\n")
    with pytest.raises(ValueError):
        read_fixture(f)


def test_failed_expectation_is_reported(tmp_path):
    src = (CORPUS / "01_direct_leak.mdx").read_text()
    (tmp_path / "db.txt").write_text((CORPUS / "db.txt").read_text())
    (tmp_path / "a.mdx").write_text(src.replace("; expected: leak_possible", "; expected: no_leak"))
    (r,) = run_corpus(tmp_path, ("taint",))
    assert not r.ok
    assert r.line().startswith("FAIL a [taint] expected no_leak, got leak_possible")
