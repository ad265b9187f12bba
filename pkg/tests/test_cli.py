import json
import shutil

import pytest

from microdroid.cli import EXIT_ERROR, EXIT_LEAK, EXIT_OK, EXIT_UNKNOWN, main

from conftest import CORPUS

DB = str(CORPUS / "db.txt")


def fx(name):
    return str(next(CORPUS.glob(name + "_*.mdx")))


def test_analyze_leak_exit_code(capsys):
    assert main(["analyze", fx("01"), "--db", DB]) == EXIT_LEAK
    out = capsys.readouterr().out
    assert "Sink.leak: leak_possible" in out
    assert out.rstrip().endswith("overall: leak_possible")


def test_analyze_no_leak_exit_code(capsys):
    assert main(["analyze", fx("02"), "--db", DB, "--domain", "const"]) == EXIT_OK
    assert "overall: no_leak" in capsys.readouterr().out


def test_analyze_unknown_when_budget_exhausted(capsys):
    rc = main(["analyze", fx("12"), "--db", DB, "--domain", "const", "--max-derivations", "3"])
    assert rc == EXIT_UNKNOWN
    assert "model incomplete" in capsys.readouterr().out


def test_domain_matters_for_dead_branch():
    assert main(["analyze", fx("17"), "--db", DB, "--domain", "taint"]) == EXIT_LEAK
    assert main(["analyze", fx("17"), "--db", DB, "--domain", "const:8"]) == EXIT_OK


def test_json_output(capsys):
    main(["analyze", fx("03"), "--db", DB, "--json"])
    doc = json.loads(capsys.readouterr().out)
    assert doc["overall"] == "leak_possible"
    assert doc["verdicts"] == {"Sink.leak": "leak_possible"}
    assert doc["engine"] == "builtin"


def test_dumps_to_files_are_deterministic(tmp_path):
    outs = []
    for run in ("a", "b"):
        d = tmp_path / run
        d.mkdir()
        main(["analyze", fx("05"), "--db", DB, "--domain", "const",
              "--dump-clauses", str(d / "clauses.txt"), "--dump-model", str(d / "model.txt"),
              "--emit-smt", str(d / "q.smt2")])
        outs.append([(d / n).read_bytes() for n in ("clauses.txt", "model.txt", "q.smt2")])
    assert outs[0] == outs[1]
    assert all(outs[0])
    assert b"(check-sat)" in outs[0][2]


def test_dump_clauses_to_stdout(capsys):
    main(["analyze", fx("01"), "--db", DB, "--dump-clauses"])
    out = capsys.readouterr().out
    assert "staticinvoke@Main.onCreate:2:call: " in out


@pytest.mark.parametrize("argv", [
    ["analyze", "/nonexistent.mdx"],
    ["analyze", "DOMAIN", "--domain", "bogus"],
    ["analyze", "DOMAIN", "--engine", "z3"],
    ["analyze", "DOMAIN", "--db", "/nonexistent-db.txt"],
    ["analyze", "DOMAIN", "--widen-after", "0"],
    ["corpus", "/nonexistent-dir"],
    [],
])
def test_usage_errors_exit_1(argv, capsys):
    argv = [fx("01") if a == "DOMAIN" else a for a in argv]
    assert main(argv) == EXIT_ERROR
    assert "Traceback" not in capsys.readouterr().err


def test_parse_error_is_reported_without_traceback(tmp_path, capsys):
    bad = tmp_path / "bad.mdx"
    bad.write_text("(program (entry Main)\n (class Main (super Activity)\n")
    assert main(["analyze", str(bad)]) == EXIT_ERROR
    err = capsys.readouterr().err
    assert err.startswith("error:")
    assert "Traceback" not in err


def test_ill_formed_program_is_rejected(tmp_path, capsys):
    bad = tmp_path / "bad.mdx"
    bad.write_text("(program (entry Nope))")
    assert main(["analyze", str(bad)]) == EXIT_ERROR
    assert "Nope" in capsys.readouterr().err


def test_missing_solver_is_a_configuration_error(capsys):
    rc = main(["analyze", fx("01"), "--db", DB, "--engine", "chc:no-such-solver-binary"])
    assert rc == EXIT_ERROR
    assert "solver configuration error" in capsys.readouterr().err


def test_corpus_subcommand(capsys):
    assert main(["corpus", str(CORPUS)]) == EXIT_OK
    assert capsys.readouterr().out.rstrip().endswith("expectations met")


def test_soundness_subcommand(capsys, tmp_path):
    rc = main(["soundness", "--seed", "2", "--programs", "10", "--depth", "8", "--workers", "1",
               "--artifacts", str(tmp_path)])
    assert rc == EXIT_OK
    assert "coverage violations: 0" in capsys.readouterr().out


def test_soundness_replay(capsys, tmp_path):
    prog = tmp_path / "p.mdx"
    prog.write_text((CORPUS / "05_lifecycle_field.mdx").read_text())
    rc = main(["soundness", "--replay", str(prog), "--replay-seed", "9:1", "--depth", "15"])
    assert rc == EXIT_OK
    assert "configurations checked:" in capsys.readouterr().out


def test_run_subcommand_reports_concrete_leak(capsys):
    assert main(["run", fx("01"), "--db", DB, "--depth", "30"]) == EXIT_LEAK
    cap = capsys.readouterr()
    assert "concrete leak at Sink.leak" in cap.err
    first = json.loads(cap.out.splitlines()[0])
    assert first["depth"] == 0


@pytest.mark.skipif(shutil.which("z3") is None, reason="z3 not installed")
def test_external_engine_verdict(capsys):
    rc = main(["analyze", fx("01"), "--db", DB, "--engine", "chc:z3", "--json"])
    assert rc == EXIT_LEAK
    assert json.loads(capsys.readouterr().out)["engine"] == "chc:z3"
