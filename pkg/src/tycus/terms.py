"""Abstract and concrete syntax of the core language.

Terms::

    t ::= t t | let x = t in t | letrec x : T = t in t | fix t
        | if t then t else t | cons t t | nil[T] | null t | head t | tail t
        | query (x, ...) <- body | t.l | {l = t, ...} | x | \\(x : T). t
        | true | false | <iri> | _:blank | "literal" | 123

Types::

    T ::= bool | ShapeName | T list | T -> T | {l : T, ...}

A projection label is a property path; plain names double as record field
names. Graph nodes in terms must be written ``<name>`` since bare names are
program variables.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Union

from .pcq import Pcq, PathExpr, format_path
from .rdf import Blank, Iri, Literal, Node, format_node
from .shacl import Shape, ShapeParser
from .syntax import unescape_string

__all__ = [
    "BoolT", "BOOL", "ShapeT", "Func", "ListT", "RecordT", "Type",
    "App", "Let", "Fix", "If", "Cons", "Nil", "Null", "Head", "Tail", "Query", "Proj",
    "Record", "Var", "NodeVal", "Abs", "BoolVal", "TRUE", "FALSE", "Term",
    "is_value", "free_vars", "substitute", "format_term", "format_type",
    "parse_term", "parse_type", "parse_program", "letrec", "KEYWORDS",
]


# -- types -------------------------------------------------------------------


@dataclass(frozen=True)
class BoolT:
    pass


BOOL = BoolT()


@dataclass(frozen=True)
class ShapeT:
    name: str


@dataclass(frozen=True)
class Func:
    arg: "Type"
    result: "Type"


@dataclass(frozen=True)
class ListT:
    elem: "Type"


@dataclass(frozen=True)
class RecordT:
    fields: tuple[tuple[str, "Type"], ...]

    def __post_init__(self):
        labels = [l for l, _ in self.fields]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate record labels in {labels}")

    def get(self, label: str):
        for l, t in self.fields:
            if l == label:
                return t
        return None


Type = Union[BoolT, ShapeT, Func, ListT, RecordT]


def format_type(t: Type, prec: int = 0) -> str:
    if isinstance(t, BoolT):
        return "bool"
    if isinstance(t, ShapeT):
        return t.name
    if isinstance(t, ListT):
        return f"{format_type(t.elem, 1)} list"
    if isinstance(t, RecordT):
        return "{" + ", ".join(f"{l}: {format_type(ft)}" for l, ft in t.fields) + "}"
    if isinstance(t, Func):
        text = f"{format_type(t.arg, 1)} -> {format_type(t.result, 0)}"
        return f"({text})" if prec > 0 else text
    raise TypeError(f"not a type: {t!r}")


# -- terms -------------------------------------------------------------------


@dataclass(frozen=True)
class App:
    fn: "Term"
    arg: "Term"


@dataclass(frozen=True)
class Let:
    name: str
    bound: "Term"
    body: "Term"


@dataclass(frozen=True)
class Fix:
    body: "Term"


@dataclass(frozen=True)
class If:
    cond: "Term"
    then: "Term"
    else_: "Term"


@dataclass(frozen=True)
class Cons:
    head: "Term"
    tail: "Term"


@dataclass(frozen=True)
class Nil:
    elem: Type


@dataclass(frozen=True)
class Null:
    arg: "Term"


@dataclass(frozen=True)
class Head:
    arg: "Term"


@dataclass(frozen=True)
class Tail:
    arg: "Term"


@dataclass(frozen=True)
class Query:
    query: Pcq
    # set by the type checker; names the inferred shapes <id>$<var>
    id: str | None = None


@dataclass(frozen=True)
class Proj:
    target: "Term"
    label: PathExpr
    # set by the type checker for node projections
    shape: str | None = None


@dataclass(frozen=True)
class Record:
    fields: tuple[tuple[str, "Term"], ...]

    def __post_init__(self):
        labels = [l for l, _ in self.fields]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate record labels in {labels}")

    def get(self, label: str):
        for l, t in self.fields:
            if l == label:
                return t
        return None


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class NodeVal:
    node: Node


@dataclass(frozen=True)
class Abs:
    name: str
    type: Type
    body: "Term"


@dataclass(frozen=True)
class BoolVal:
    value: bool


TRUE = BoolVal(True)
FALSE = BoolVal(False)

Term = Union[App, Let, Fix, If, Cons, Nil, Null, Head, Tail, Query, Proj, Record, Var, NodeVal, Abs, BoolVal]


def letrec(name: str, typ: Type, bound: Term, body: Term) -> Term:
    return Let(name, Fix(Abs(name, typ, bound)), body)


def is_value(t: Term) -> bool:
    if isinstance(t, (NodeVal, Nil, Abs, BoolVal)):
        return True
    if isinstance(t, Cons):
        return is_value(t.head) and is_value(t.tail)
    if isinstance(t, Record):
        return all(is_value(v) for _, v in t.fields)
    return False


# -- substitution ------------------------------------------------------------


def free_vars(t: Term) -> frozenset:
    if isinstance(t, Var):
        return frozenset({t.name})
    if isinstance(t, Abs):
        return free_vars(t.body) - {t.name}
    if isinstance(t, Let):
        return free_vars(t.bound) | (free_vars(t.body) - {t.name})
    if isinstance(t, Record):
        return frozenset().union(*(free_vars(v) for _, v in t.fields))
    if isinstance(t, (NodeVal, Nil, BoolVal, Query)):
        return frozenset()
    return frozenset().union(*(free_vars(c) for c in _children(t)))


def _children(t: Term) -> tuple:
    if isinstance(t, App):
        return (t.fn, t.arg)
    if isinstance(t, If):
        return (t.cond, t.then, t.else_)
    if isinstance(t, Cons):
        return (t.head, t.tail)
    if isinstance(t, (Fix,)):
        return (t.body,)
    if isinstance(t, (Null, Head, Tail)):
        return (t.arg,)
    if isinstance(t, Proj):
        return (t.target,)
    return ()


def _fresh(base: str, avoid: frozenset) -> str:
    stem = base.rstrip("0123456789'")
    for i in itertools.count(1):
        candidate = f"{stem}{i}'"
        if candidate not in avoid:
            return candidate


def substitute(t: Term, name: str, value: Term) -> Term:
    """Capture-avoiding ``[name -> value] t``."""
    return _subst(t, name, value, free_vars(value))


def _subst(t: Term, x: str, s: Term, fv: frozenset) -> Term:
    if isinstance(t, Var):
        return s if t.name == x else t
    if isinstance(t, (NodeVal, Nil, BoolVal, Query)):
        return t
    if isinstance(t, Abs):
        if t.name == x:
            return t
        if t.name in fv:
            new = _fresh(t.name, fv | free_vars(t.body) | {x})
            body = _subst(t.body, t.name, Var(new), frozenset({new}))
            return Abs(new, t.type, _subst(body, x, s, fv))
        return Abs(t.name, t.type, _subst(t.body, x, s, fv))
    if isinstance(t, Let):
        bound = _subst(t.bound, x, s, fv)
        if t.name == x:
            return Let(t.name, bound, t.body)
        if t.name in fv:
            new = _fresh(t.name, fv | free_vars(t.body) | {x})
            body = _subst(t.body, t.name, Var(new), frozenset({new}))
            return Let(new, bound, _subst(body, x, s, fv))
        return Let(t.name, bound, _subst(t.body, x, s, fv))
    if isinstance(t, Record):
        return Record(tuple((l, _subst(v, x, s, fv)) for l, v in t.fields))
    if isinstance(t, App):
        return App(_subst(t.fn, x, s, fv), _subst(t.arg, x, s, fv))
    if isinstance(t, If):
        return If(_subst(t.cond, x, s, fv), _subst(t.then, x, s, fv), _subst(t.else_, x, s, fv))
    if isinstance(t, Cons):
        return Cons(_subst(t.head, x, s, fv), _subst(t.tail, x, s, fv))
    if isinstance(t, Fix):
        return Fix(_subst(t.body, x, s, fv))
    if isinstance(t, Proj):
        return Proj(_subst(t.target, x, s, fv), t.label, t.shape)
    return type(t)(_subst(t.arg, x, s, fv))


# -- printing ----------------------------------------------------------------


def _format_label(label: PathExpr) -> str:
    if isinstance(label, Iri) and label.name.isidentifier() and label.name not in KEYWORDS:
        return label.name
    return f"({format_path(label)})"


def _format_node_term(node: Node) -> str:
    if isinstance(node, Iri):
        return f"<{node.name}>"
    return format_node(node)


def format_term(t: Term, prec: int = 0) -> str:
    """Source-syntax rendering; ``prec`` 0 = any term, 1 = application, 2 = atom."""
    if isinstance(t, BoolVal):
        return "true" if t.value else "false"
    if isinstance(t, Var):
        return t.name
    if isinstance(t, NodeVal):
        return _format_node_term(t.node)
    if isinstance(t, Nil):
        return f"nil[{format_type(t.elem)}]"
    if isinstance(t, Record):
        return "{" + ", ".join(f"{l} = {format_term(v)}" for l, v in t.fields) + "}"
    if isinstance(t, Proj):
        return f"{format_term(t.target, 2)}.{_format_label(t.label)}"
    if isinstance(t, Query):
        text = f"query {t.query}"
        return f"({text})" if prec > 0 else text
    if isinstance(t, (App, Cons, Null, Head, Tail, Fix)):
        if isinstance(t, App):
            text = f"{format_term(t.fn, 1)} {format_term(t.arg, 2)}"
        elif isinstance(t, Cons):
            text = f"cons {format_term(t.head, 2)} {format_term(t.tail, 2)}"
        elif isinstance(t, Fix):
            text = f"fix {format_term(t.body, 2)}"
        else:
            text = f"{type(t).__name__.lower()} {format_term(t.arg, 2)}"
        return f"({text})" if prec > 1 else text
    if isinstance(t, Abs):
        text = f"\\({t.name}: {format_type(t.type)}). {format_term(t.body)}"
    elif isinstance(t, Let):
        text = f"let {t.name} = {format_term(t.bound)} in {format_term(t.body)}"
    elif isinstance(t, If):
        text = f"if {format_term(t.cond)} then {format_term(t.then)} else {format_term(t.else_)}"
    else:
        raise TypeError(f"not a term: {t!r}")
    return f"({text})" if prec > 0 else text


# -- parsing -----------------------------------------------------------------

KEYWORDS = frozenset({
    "let", "letrec", "in", "fix", "if", "then", "else", "cons", "nil", "null",
    "head", "tail", "query", "true", "false", "fun", "shape", "bool", "list",
})

_PREFIX = {"null": Null, "head": Head, "tail": Tail, "fix": Fix}


class TermParser(ShapeParser):
    def parse_type(self) -> Type:
        left = self._list_type()
        if self.accept("arrow"):
            return Func(left, self.parse_type())
        return left

    def _list_type(self) -> Type:
        t = self._atom_type()
        while self.at_keyword("list"):
            self.next()
            t = ListT(t)
        return t

    def _atom_type(self) -> Type:
        tok = self.peek()
        if self.accept("("):
            t = self.parse_type()
            self.expect(")")
            return t
        if self.accept("{"):
            fields = []
            if not self.at("}"):
                while True:
                    label = self.expect("ident")
                    self.expect(":")
                    fields.append((label.value, self.parse_type()))
                    if not self.accept(","):
                        break
            self.expect("}")
            if len({l for l, _ in fields}) != len(fields):
                self.error("duplicate record label in type", tok)
            return RecordT(tuple(fields))
        if self.at_keyword("bool"):
            self.next()
            return BOOL
        if tok.kind == "ident" and tok.value not in KEYWORDS:
            self.next()
            return ShapeT(tok.value)
        self.error(f"expected a type, found {tok.value or tok.kind!r}")

    def _binder(self) -> str:
        tok = self.expect("ident")
        if tok.value in KEYWORDS:
            self.error(f"{tok.value!r} is a keyword", tok)
        return tok.value

    def parse_term(self) -> Term:
        tok = self.peek()
        if self.at_keyword("let"):
            self.next()
            name = self._binder()
            self.expect("=")
            bound = self.parse_term()
            self.expect_keyword("in")
            return Let(name, bound, self.parse_term())
        if self.at_keyword("letrec"):
            self.next()
            name = self._binder()
            self.expect(":")
            typ = self.parse_type()
            self.expect("=")
            bound = self.parse_term()
            self.expect_keyword("in")
            return letrec(name, typ, bound, self.parse_term())
        if self.at_keyword("if"):
            self.next()
            cond = self.parse_term()
            self.expect_keyword("then")
            then = self.parse_term()
            self.expect_keyword("else")
            return If(cond, then, self.parse_term())
        if self.at("lambda") or self.at_keyword("fun"):
            self.next()
            self.expect("(")
            name = self._binder()
            self.expect(":")
            typ = self.parse_type()
            self.expect(")")
            self.expect(".")
            return Abs(name, typ, self.parse_term())
        return self._application(tok)

    def _starts_unit(self) -> bool:
        tok = self.peek()
        if tok.kind == "ident":
            return tok.value not in KEYWORDS or tok.value in (
                "cons", "nil", "null", "head", "tail", "fix", "query", "true", "false")
        return tok.kind in ("(", "{", "iri", "blank", "string", "number")

    def _application(self, tok) -> Term:
        if not self._starts_unit():
            self.error(f"expected a term, found {tok.value or tok.kind!r}")
        t = self._unit()
        while self._starts_unit():
            t = App(t, self._unit())
        return t

    def _unit(self) -> Term:
        tok = self.peek()
        if self.at_keyword("cons"):
            self.next()
            head = self._postfix()
            return Cons(head, self._postfix())
        if tok.kind == "ident" and tok.value in _PREFIX:
            self.next()
            return _PREFIX[tok.value](self._unit())
        return self._postfix()

    def _postfix(self) -> Term:
        t = self._term_atom()
        while self.at("."):
            self.next()
            t = Proj(t, self._path_unary())
        return t

    def _term_atom(self) -> Term:
        tok = self.peek()
        if self.accept("("):
            t = self.parse_term()
            self.expect(")")
            return t
        if self.accept("{"):
            fields = []
            if not self.at("}"):
                while True:
                    label = self.expect("ident")
                    self.expect("=")
                    fields.append((label.value, self.parse_term()))
                    if not self.accept(","):
                        break
            self.expect("}")
            if len({l for l, _ in fields}) != len(fields):
                self.error("duplicate record label", tok)
            return Record(tuple(fields))
        if tok.kind == "ident":
            if tok.value in ("true", "false"):
                self.next()
                return TRUE if tok.value == "true" else FALSE
            if tok.value == "nil":
                self.next()
                self.expect("[")
                elem = self.parse_type()
                self.expect("]")
                return Nil(elem)
            if tok.value == "query":
                self.next()
                return Query(self.parse_query())
            if tok.value in KEYWORDS:
                self.error(f"unexpected keyword {tok.value!r}")
            self.next()
            return Var(tok.value)
        self.next()
        if tok.kind == "iri":
            return NodeVal(Iri(tok.value[1:-1]))
        if tok.kind == "blank":
            return NodeVal(Blank(tok.value[2:]))
        if tok.kind == "string":
            return NodeVal(Literal(unescape_string(tok.value)))
        if tok.kind == "number":
            return NodeVal(Literal(tok.value))
        self.error(f"expected a term, found {tok.value or tok.kind!r}", tok)


def parse_term(text: str) -> Term:
    parser = TermParser(text)
    t = parser.parse_term()
    parser.expect_eof()
    return t


def parse_type(text: str) -> Type:
    parser = TermParser(text)
    t = parser.parse_type()
    parser.expect_eof()
    return t


def parse_program(text: str, known_shapes=()) -> tuple[list[Shape], Term]:
    """A program is an optional shape block followed by a single term."""
    parser = TermParser(text)
    shapes = parser.parse_shape_block(known_shapes)
    t = parser.parse_term()
    parser.expect_eof()
    return shapes, t
