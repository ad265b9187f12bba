import pytest
from hypothesis import given, settings, strategies as st

from microdroid import syntax as S
from microdroid.parser import ParseError, parse_program, pretty_print
from microdroid.randprog import random_program

from conftest import CORPUS

SMALL = """
(program (entry Main)
 (class Main (super Activity)
   (field count int)
   (activity (callbacks (onCreate onCreate)))
   (method onCreate (args) (returns void) (locals 1)
     (0 (move (reg 0) (prim int -2)))
     (1 (move (field (reg 1) count) (reg 0)))
     (2 (return)))))
"""


def test_parse_small_program():
    p = parse_program(SMALL)
    assert p.entry == "Main"
    md = p.method("Main", "onCreate")
    assert md.locals == 1 and md.arg_types == () and md.ret_type == S.VOID
    assert md.body[0] == S.Move(S.Reg(0), S.Literal("int", -2))
    assert md.body[1] == S.Move(S.FieldRef(S.Reg(1), "count"), S.Reg(0))
    assert isinstance(md.body[2], S.Return)
    assert p.callbacks("Main", "onCreate") == ("onCreate",)


def test_ret_register_and_static_method():
    p = parse_program("""(program (entry A)
      (class A (super Activity)
        (method f (static) (args int bool) (returns int) (locals 0)
          (0 (move (reg ret) (reg 1))) (1 (return)))))""")
    md = p.method("A", "f")
    assert md.is_static
    assert md.arg_types == (S.INT, S.BOOL)
    assert md.body[0] == S.Move(S.Reg(S.RET), S.Reg(1))


@pytest.mark.parametrize("text, fragment", [
    ("(program (entry A) (class A (super Activity) (method m (args) (returns void) (locals 0) (0 (jump 1)))))",
     "unknown statement form"),
    ("(program (class A (super Object)))", "needs (entry"),
    ("(program (entry A) (class A (super Object)", "unclosed"),
    ("(program (entry A) (class A (super Activity) (method m (args) (returns void) (locals 0) (0 (binop pow (reg 0) (reg 0) (reg 0))))))",
     "unknown binary operator"),
    ("(program (entry A) (class A (super Activity) (method m (args) (returns void) (locals 0) (0 (move (reg -1) (prim int 1))))))",
     "negative register"),
])
def test_parse_errors_name_the_problem(text, fragment):
    with pytest.raises(ParseError) as e:
        parse_program(text)
    assert fragment in str(e.value)


def test_parse_error_reports_position():
    text = "(program (entry A)\n  (class A (super Object)\n    (bogus)))"
    with pytest.raises(ParseError) as e:
        parse_program(text)
    assert "3:" in str(e.value)


def test_round_trip_corpus():
    for path in sorted(CORPUS.glob("*.mdx")):
        p = parse_program(path.read_text())
        again = parse_program(pretty_print(p))
        assert pretty_print(again) == pretty_print(p), path.name


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=10**6))
def test_round_trip_random_programs(seed):
    p = random_program(seed)
    text = pretty_print(p)
    assert pretty_print(parse_program(text)) == text
