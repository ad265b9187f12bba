import pytest

from microdroid.parser import parse_program
from microdroid.wellformed import IllFormed, check_well_formed, ensure_well_formed

from conftest import LIB


def codes(text):
    return {d.code for d in check_well_formed(parse_program(text))}


def main_with(body, locals_=1, extra="", activity="(activity (callbacks (onCreate onCreate)))",
              head="(class Main (super Activity)"):
    return f"""(program (entry Main) {LIB} {extra}
 {head}
   {activity}
   (method onCreate (args) (returns void) (locals {locals_})
     {body})))"""


def test_minimal_program_is_well_formed():
    assert codes(main_with("(0 (return))")) == set()


@pytest.mark.parametrize("extra,code", [
    ("(class Sink (super Object))", "duplicate-class"),
    ("(class Intent (super Object))", "builtin-class"),
    ("(class A (super Missing))", "unknown-super"),
    ("(class A (super B)) (class B (super A))", "cyclic-hierarchy"),
    ("(class A (super Object) (field x int) (field x bool))", "duplicate-field"),
    ("(class A (super Object) (field x int)) (class B (super A) (field x int))", "shadowed-field"),
    ("(class A (super Object) (field x Missing))", "unknown-type"),
    ("(class A (super Object) (activity (callbacks)))", "not-activity"),
])
def test_class_level_diagnostics(extra, code):
    assert code in codes(main_with("(0 (return))", extra=extra))


def test_duplicate_method():
    text = main_with("(0 (return))", head="""(class Main (super Activity)
   (method onCreate (args) (returns void) (locals 0) (0 (return)))""")
    assert "duplicate-method" in codes(text)


@pytest.mark.parametrize("body,code", [
    ("(0 (move (reg 5) (prim int 1))) (1 (return))", "register-out-of-range"),
    ("(0 (goto 9))", "target-out-of-range"),
    ("(0 (move (reg 0) (prim int 1)))", "falls-off-end"),
    ("(0 (invoke (reg 1) nothing)) (1 (return))", "unknown-method"),
    ("(0 (sinvoke Sink leak)) (1 (return))", "arity"),
    ("(0 (sinvoke Sink missing)) (1 (return))", "unknown-method"),
    ("(0 (new (reg 0) Missing)) (1 (return))", "unknown-class"),
    ("(0 (new (reg 0) Intent)) (1 (return))", "new-intent"),
    ("(0 (newintent (reg 0) Sink)) (1 (return))", "intent-target"),
    ("(0 (move (reg 0) (field (reg 1) nosuch))) (1 (return))", "unknown-field"),
    ("(0 (move (reg 0) (static Main nosuch))) (1 (return))", "unknown-field"),
    ("(0 (newarray (reg 0) (reg 0) Missing)) (1 (return))", "unknown-type"),
])
def test_statement_diagnostics(body, code):
    assert code in codes(main_with(body))


def test_sinvoke_of_instance_method():
    extra = "(class A (super Object) (method m (args) (returns void) (locals 0) (0 (return))))"
    assert "not-static" in codes(main_with("(0 (sinvoke A m)) (1 (return))", extra=extra))


@pytest.mark.parametrize("activity,code", [
    ("(activity (callbacks (onCreate missing)))", "unknown-callback"),
    ("(activity (callbacks (nowhere onCreate)))", "bad-state"),
])
def test_callback_diagnostics(activity, code):
    assert code in codes(main_with("(0 (return))", activity=activity))


def test_static_callback_rejected():
    text = f"""(program (entry Main) {LIB}
 (class Main (super Activity)
   (activity (callbacks (onCreate go)))
   (method go (static) (args) (returns void) (locals 0) (0 (return)))))"""
    assert "static-callback" in codes(text)


def test_entry_must_be_an_activity():
    text = f"(program (entry Sink) {LIB})"
    assert codes(text) == {"entry-not-activity"}
    assert "unknown-entry" in codes(f"(program (entry Nope) {LIB})")


def test_ensure_raises_with_location():
    with pytest.raises(IllFormed) as e:
        ensure_well_formed(parse_program(main_with("(0 (goto 9))")))
    assert "Main.onCreate:0" in str(e.value)
