"""S-expression reader, program parser and pretty printer."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from . import syntax as S
from .syntax import Pos


class ParseError(Exception):
    def __init__(self, message: str, pos: Pos | None = None):
        self.message = message
        self.pos = pos
        where = f"{pos.line}:{pos.col}: " if pos else ""
        super().__init__(where + message)


@dataclass
class Atom:
    text: str
    pos: Pos


@dataclass
class SList:
    items: list
    pos: Pos


Node = Union[Atom, SList]


def read_sexprs(text: str) -> list:
    """Tokenize and read every top-level s-expression; `;` starts a comment."""
    out: list = []
    stack: list = []
    i, n = 0, len(text)
    line, col = 1, 1

    def advance(k=1):
        nonlocal i, line, col
        for _ in range(k):
            if text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            advance()
        elif ch == ";":
            while i < n and text[i] != "\n":
                advance()
        elif ch == "(":
            stack.append(SList([], Pos(line, col)))
            advance()
        elif ch == ")":
            if not stack:
                raise ParseError("unbalanced ')'", Pos(line, col))
            node = stack.pop()
            advance()
            (stack[-1].items if stack else out).append(node)
        else:
            start = Pos(line, col)
            j = i
            while j < n and text[j] not in " \t\r\n();":
                j += 1
            atom = Atom(text[i:j], start)
            advance(j - i)
            (stack[-1].items if stack else out).append(atom)
    if stack:
        raise ParseError("unclosed '('", stack[-1].pos)
    return out


# ---------------------------------------------------------------- helpers

def _head(node: Node) -> str | None:
    if isinstance(node, SList) and node.items and isinstance(node.items[0], Atom):
        return node.items[0].text
    return None


def _atom(node: Node, what: str) -> str:
    if not isinstance(node, Atom):
        raise ParseError(f"expected {what}", node.pos)
    return node.text


def _int(node: Node, what: str) -> int:
    text = _atom(node, what)
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"expected integer {what}, got {text!r}", node.pos) from None


def _arity(node: SList, k: int, form: str):
    if len(node.items) != k:
        raise ParseError(f"'{form}' expects {k - 1} operands, got {len(node.items) - 1}",
                         node.pos)


def parse_type(node: Node) -> S.TypeName:
    if isinstance(node, Atom):
        if node.text in ("int", "bool", "void"):
            return S.PrimType(node.text)
        if not node.text or not (node.text[0].isalpha() or node.text[0] == "_"):
            raise ParseError(f"bad type name {node.text!r}", node.pos)
        return S.ClassType(node.text)
    if _head(node) == "array":
        _arity(node, 2, "array")
        elem = parse_type(node.items[1])
        if elem == S.VOID:
            raise ParseError("array of void", node.pos)
        return S.ArrayType(elem)
    raise ParseError("malformed type", node.pos)


def parse_reg(node: Node) -> S.Reg:
    if _head(node) != "reg" or len(node.items) != 2:
        raise ParseError("expected (reg N) or (reg ret)", node.pos)
    text = _atom(node.items[1], "register index")
    if text == "ret":
        return S.Reg(S.RET)
    idx = _int(node.items[1], "register index")
    if idx < 0:
        raise ParseError("negative register index", node.pos)
    return S.Reg(idx)


def parse_lhs(node: Node) -> S.Lhs:
    h = _head(node)
    if h == "reg":
        return parse_reg(node)
    if h == "cell":
        _arity(node, 3, "cell")
        return S.ArrayCell(parse_reg(node.items[1]), parse_reg(node.items[2]))
    if h == "field":
        _arity(node, 3, "field")
        return S.FieldRef(parse_reg(node.items[1]), _atom(node.items[2], "field name"))
    if h == "static":
        _arity(node, 3, "static")
        return S.StaticField(_atom(node.items[1], "class name"),
                             _atom(node.items[2], "field name"))
    raise ParseError("expected register, cell, field or static operand", node.pos)


def parse_rhs(node: Node) -> S.Rhs:
    if _head(node) == "prim":
        _arity(node, 3, "prim")
        kind = _atom(node.items[1], "literal kind")
        text = _atom(node.items[2], "literal")
        if kind == "int":
            return S.Literal("int", _int(node.items[2], "literal"))
        if kind == "bool" and text in ("true", "false"):
            return S.Literal("bool", text == "true")
        raise ParseError(f"malformed literal ({kind} {text})", node.pos)
    return parse_lhs(node)


def _op(node: Node, allowed: tuple, what: str) -> str:
    text = _atom(node, what)
    if text not in allowed:
        raise ParseError(f"unknown {what} {text!r} (expected one of {', '.join(allowed)})",
                         node.pos)
    return text


def parse_statement(node: Node) -> S.Statement:
    h = _head(node)
    if h is None:
        raise ParseError("expected a statement", node.pos)
    it = node.items
    if h == "goto":
        _arity(node, 2, h)
        return S.Goto(_int(it[1], "jump target"))
    if h == "move":
        _arity(node, 3, h)
        return S.Move(parse_lhs(it[1]), parse_rhs(it[2]))
    if h == "if":
        _arity(node, 5, h)
        return S.If(_op(it[1], S.COMPARISONS, "comparison"), parse_reg(it[2]),
                    parse_reg(it[3]), _int(it[4], "jump target"))
    if h == "unop":
        _arity(node, 4, h)
        return S.Unop(_op(it[1], S.UNOPS, "unary operator"), parse_reg(it[2]), parse_reg(it[3]))
    if h == "binop":
        _arity(node, 5, h)
        return S.Binop(_op(it[1], S.BINOPS, "binary operator"), parse_reg(it[2]),
                       parse_reg(it[3]), parse_reg(it[4]))
    if h == "new":
        _arity(node, 3, h)
        return S.New(parse_reg(it[1]), _atom(it[2], "class name"))
    if h == "newarray":
        _arity(node, 4, h)
        return S.NewArray(parse_reg(it[1]), parse_reg(it[2]), parse_type(it[3]))
    if h == "checkcast":
        _arity(node, 3, h)
        return S.CheckCast(parse_reg(it[1]), parse_type(it[2]))
    if h == "instof":
        _arity(node, 4, h)
        return S.InstanceOf(parse_reg(it[1]), parse_reg(it[2]), parse_type(it[3]))
    if h == "invoke":
        if len(it) < 3:
            raise ParseError("'invoke' expects a receiver and a method name", node.pos)
        return S.Invoke(parse_reg(it[1]), _atom(it[2], "method name"),
                        tuple(parse_reg(x) for x in it[3:]))
    if h == "sinvoke":
        if len(it) < 3:
            raise ParseError("'sinvoke' expects a class and a method name", node.pos)
        return S.StaticInvoke(_atom(it[1], "class name"), _atom(it[2], "method name"),
                              tuple(parse_reg(x) for x in it[3:]))
    if h == "return":
        _arity(node, 1, h)
        return S.Return()
    if h == "newintent":
        _arity(node, 3, h)
        return S.NewIntent(parse_reg(it[1]), _atom(it[2], "class name"))
    if h == "put-extra":
        _arity(node, 4, h)
        return S.PutExtra(parse_reg(it[1]), parse_reg(it[2]), parse_reg(it[3]))
    if h == "get-extra":
        _arity(node, 4, h)
        return S.GetExtra(parse_reg(it[1]), parse_reg(it[2]), parse_type(it[3]))
    if h == "start-activity":
        _arity(node, 2, h)
        return S.StartActivity(parse_reg(it[1]))
    raise ParseError(f"unknown statement form {h!r}", node.pos)


def parse_method(node: SList) -> S.MethodDef:
    it = node.items
    if len(it) < 2:
        raise ParseError("method needs a name", node.pos)
    name = _atom(it[1], "method name")
    is_static = False
    args = ret = locs = None
    pcs, body = [], []
    for sub in it[2:]:
        h = _head(sub)
        if h == "static":
            _arity(sub, 1, "static")
            is_static = True
        elif h == "args":
            args = tuple(parse_type(x) for x in sub.items[1:])
        elif h == "returns":
            _arity(sub, 2, "returns")
            ret = parse_type(sub.items[1])
        elif h == "locals":
            _arity(sub, 2, "locals")
            locs = _int(sub.items[1], "locals count")
            if locs < 0:
                raise ParseError("negative locals count", sub.pos)
        elif isinstance(sub, SList) and len(sub.items) == 2 and isinstance(sub.items[0], Atom):
            pcs.append(_int(sub.items[0], "program counter"))
            body.append(parse_statement(sub.items[1]))
        else:
            raise ParseError(f"unexpected item in method {name}", sub.pos)
    if args is None or ret is None or locs is None:
        raise ParseError(f"method {name} needs (args ...), (returns ...) and (locals n)",
                         node.pos)
    return S.MethodDef(name, args, ret, locs, tuple(body), is_static, tuple(pcs), node.pos)


def parse_class(node: SList) -> S.ClassDef:
    it = node.items
    if len(it) < 2:
        raise ParseError("class needs a name", node.pos)
    name = _atom(it[1], "class name")
    sup = None
    interfaces: list = []
    fields: list = []
    methods: list = []
    callbacks: list = []
    has_block = False
    for sub in it[2:]:
        h = _head(sub)
        if h == "super":
            _arity(sub, 2, "super")
            sup = _atom(sub.items[1], "class name")
        elif h == "implements":
            interfaces.extend(_atom(x, "class name") for x in sub.items[1:])
        elif h == "activity":
            has_block = True
            for cb in sub.items[1:]:
                if _head(cb) != "callbacks":
                    raise ParseError("expected (callbacks ...)", cb.pos)
                for pair in cb.items[1:]:
                    if not isinstance(pair, SList) or len(pair.items) != 2:
                        raise ParseError("expected (<state> <method>)", pair.pos)
                    callbacks.append((_atom(pair.items[0], "state"),
                                      _atom(pair.items[1], "method name")))
        elif h == "field":
            _arity(sub, 3, "field")
            ftype = parse_type(sub.items[2])
            if ftype == S.VOID:
                raise ParseError("field of type void", sub.pos)
            fields.append((_atom(sub.items[1], "field name"), ftype))
        elif h == "method":
            methods.append(parse_method(sub))
        else:
            raise ParseError(f"unexpected item in class {name}", sub.pos)
    if sup is None:
        raise ParseError(f"class {name} needs (super ...)", node.pos)
    return S.ClassDef(name, sup, tuple(interfaces), tuple(fields), tuple(methods),
                      tuple(callbacks), has_block, node.pos)


def parse_program(text: str) -> S.Program:
    nodes = read_sexprs(text)
    if len(nodes) != 1 or _head(nodes[0]) != "program":
        pos = nodes[0].pos if nodes else Pos(1, 1)
        raise ParseError("expected exactly one (program ...) form", pos)
    entry = None
    lifecycle = None
    classes = []
    for sub in nodes[0].items[1:]:
        h = _head(sub)
        if h == "entry":
            _arity(sub, 2, "entry")
            entry = _atom(sub.items[1], "class name")
        elif h == "lifecycle":
            edges = []
            for e in sub.items[1:]:
                if not isinstance(e, SList) or len(e.items) != 2:
                    raise ParseError("lifecycle edge must be (<state> <state>)", e.pos)
                edges.append((_atom(e.items[0], "state"), _atom(e.items[1], "state")))
            lifecycle = tuple(edges)
        elif h == "class":
            classes.append(parse_class(sub))
        else:
            raise ParseError("expected entry, lifecycle or class", sub.pos)
    if entry is None:
        raise ParseError("program needs (entry <Class>)", nodes[0].pos)
    if lifecycle is None:
        return S.Program(tuple(classes), entry)
    return S.Program(tuple(classes), entry, lifecycle)


# ---------------------------------------------------------------- printer

def pretty_print(p: S.Program) -> str:
    lines = ["(program", f"  (entry {p.entry})"]
    if p.lifecycle != S.DEFAULT_LIFECYCLE:
        edges = " ".join(f"({a} {b})" for a, b in p.lifecycle)
        lines.append(f"  (lifecycle {edges})")
    for c in p.classes:
        lines.append(f"  (class {c.name} (super {c.super})")
        if c.interfaces:
            lines.append(f"    (implements {' '.join(c.interfaces)})")
        if c.has_activity_block:
            cbs = " ".join(f"({s} {m})" for s, m in c.callbacks)
            lines.append(f"    (activity (callbacks {cbs}))" if cbs else "    (activity (callbacks))")
        for f, t in c.fields:
            lines.append(f"    (field {f} {t})")
        for md in c.methods:
            head = f"    (method {md.name}"
            if md.is_static:
                head += " (static)"
            args = "".join(f" {t}" for t in md.arg_types)
            head += f" (args{args}) (returns {md.ret_type}) (locals {md.locals})"
            lines.append(head)
            pcs = md.pcs if len(md.pcs) == len(md.body) else range(len(md.body))
            for pc, st in zip(pcs, md.body):
                lines.append(f"      ({pc} {st})")
            lines[-1] += ")"
        lines[-1] += ")"
    lines[-1] += ")"
    return "\n".join(lines) + "\n"
