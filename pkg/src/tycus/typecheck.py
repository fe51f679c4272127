"""Type checking with shapes as types, including head-insertion elaboration.

``typecheck`` returns the elaborated term, its type and the shapes created
along the way (query shapes, projection shapes, node-literal shapes and
the fresh shapes behind least upper and greatest lower bounds).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .inference import infer_shapes, shape_name
from .pcq import inverse
from .rdf import Iri
from .shacl import AtLeast, Const, Or, Shape, ShapeRef, conj
from .subtyping import ShapeReasoner
from .terms import (
    BOOL, Abs, App, BoolVal, Cons, Fix, Func, Head, If, Let, ListT, Nil, NodeVal, Null,
    Proj, Query, Record, RecordT, ShapeT, Tail, Term, Type, Var, format_term, format_type,
)

__all__ = [
    "TypeCheckError", "TypingContext", "TypingResult", "NameSupply", "TypeChecker",
    "typecheck", "lub", "glb", "type_shape_names",
]


class TypeCheckError(Exception):
    def __init__(self, rule: str, term: Term, message: str, expected=None, actual=None):
        super().__init__(message)
        self.rule = rule
        self.term = term
        self.expected = expected
        self.actual = actual
        self.message = message

    def record(self) -> dict:
        return {
            "rule": self.rule,
            "term": format_term(self.term),
            "message": self.message,
            "expected": None if self.expected is None else _show(self.expected),
            "actual": None if self.actual is None else _show(self.actual),
        }

    def __str__(self):
        text = f"{self.rule}: {self.message} in {format_term(self.term)}"
        if self.expected is not None:
            text += f"; expected {_show(self.expected)}"
        if self.actual is not None:
            text += f", found {_show(self.actual)}"
        return text


def _show(x) -> str:
    return x if isinstance(x, str) else format_type(x)


@dataclass(frozen=True)
class TypingContext:
    bindings: tuple = ()

    def extend(self, name: str, typ: Type) -> "TypingContext":
        return TypingContext(self.bindings + ((name, typ),))

    def lookup(self, name: str):
        for n, t in reversed(self.bindings):
            if n == name:
                return t
        return None


@dataclass
class TypingResult:
    term: Term
    type: Type
    new_shapes: list = field(default_factory=list)


class NameSupply:
    """Deterministic generator for fresh shape and query names."""

    def __init__(self):
        self._counters: dict = {}

    def fresh(self, prefix: str) -> str:
        n = self._counters.get(prefix, 0) + 1
        self._counters[prefix] = n
        return f"{prefix}{n}" if prefix == "q" else f"{prefix}${n}"


def type_shape_names(t: Type) -> set:
    if isinstance(t, ShapeT):
        return {t.name}
    if isinstance(t, ListT):
        return type_shape_names(t.elem)
    if isinstance(t, Func):
        return type_shape_names(t.arg) | type_shape_names(t.result)
    if isinstance(t, RecordT):
        return set().union(*(type_shape_names(ft) for _, ft in t.fields))
    return set()


class TypeChecker:
    def __init__(self, shapes, *, elaborate=True, world=None, names: NameSupply | None = None):
        self.reasoner = ShapeReasoner(shapes, world)
        self.elaborate = elaborate
        self.names = names or NameSupply()
        self.new_shapes: list = []

    @property
    def shapes(self) -> dict:
        return self.reasoner.shapes

    def _define(self, shape: Shape):
        self.new_shapes.append(shape)
        self.reasoner.add([shape])

    def subtype(self, t1: Type, t2: Type) -> bool:
        return self.reasoner.subtype(t1, t2)

    def _check_type(self, t: Type, term: Term):
        for name in sorted(type_shape_names(t)):
            if name not in self.shapes:
                raise TypeCheckError("T-WF", term, f"unknown shape {name!r}")

    # -- bounds ------------------------------------------------------------

    def _fresh_shape(self, prefix: str, constraint) -> ShapeT:
        name = self.names.fresh(prefix)
        self._define(Shape(name, constraint))
        return ShapeT(name)

    def lub(self, t1: Type, t2: Type, term: Term | None = None) -> Type:
        if self.subtype(t1, t2):
            return t2
        if self.subtype(t2, t1):
            return t1
        if isinstance(t1, ShapeT) and isinstance(t2, ShapeT):
            return self._fresh_shape("lub", Or(ShapeRef(t1.name), ShapeRef(t2.name)))
        if isinstance(t1, ListT) and isinstance(t2, ListT):
            return ListT(self.lub(t1.elem, t2.elem, term))
        if isinstance(t1, Func) and isinstance(t2, Func):
            return Func(self.glb(t1.arg, t2.arg, term), self.lub(t1.result, t2.result, term))
        if isinstance(t1, RecordT) and isinstance(t2, RecordT):
            fields = []
            for label, ft in t1.fields:
                other = t2.get(label)
                if other is not None:
                    fields.append((label, self.lub(ft, other, term)))
            return RecordT(tuple(fields))
        raise TypeCheckError("T-IF", term if term is not None else BoolVal(True),
                             "no least upper bound", t1, t2)

    def glb(self, t1: Type, t2: Type, term: Term | None = None) -> Type:
        if self.subtype(t1, t2):
            return t1
        if self.subtype(t2, t1):
            return t2
        if isinstance(t1, ShapeT) and isinstance(t2, ShapeT):
            return self._fresh_shape("glb", conj([ShapeRef(t1.name), ShapeRef(t2.name)]))
        if isinstance(t1, ListT) and isinstance(t2, ListT):
            return ListT(self.glb(t1.elem, t2.elem, term))
        if isinstance(t1, Func) and isinstance(t2, Func):
            return Func(self.lub(t1.arg, t2.arg, term), self.glb(t1.result, t2.result, term))
        if isinstance(t1, RecordT) and isinstance(t2, RecordT):
            fields = []
            for label, ft in t1.fields:
                other = t2.get(label)
                fields.append((label, ft if other is None else self.glb(ft, other, term)))
            fields.extend((label, ft) for label, ft in t2.fields if t1.get(label) is None)
            return RecordT(tuple(fields))
        raise TypeCheckError("T-IF", term if term is not None else BoolVal(True),
                             "no greatest lower bound", t1, t2)

    # -- rules -------------------------------------------------------------

    def _expect_sub(self, rule, term, actual, expected):
        if not self.subtype(actual, expected):
            raise TypeCheckError(rule, term, "type mismatch", expected, actual)

    def check(self, ctx: TypingContext, t: Term):
        """Return ``(elaborated term, type)``."""
        if isinstance(t, BoolVal):
            return t, BOOL
        if isinstance(t, Var):
            found = ctx.lookup(t.name)
            if found is None:
                raise TypeCheckError("T-VAR", t, f"unbound variable {t.name!r}")
            return t, found
        if isinstance(t, NodeVal):
            return t, self._fresh_shape("node", Const(t.node))
        if isinstance(t, Abs):
            self._check_type(t.type, t)
            body, tb = self.check(ctx.extend(t.name, t.type), t.body)
            return Abs(t.name, t.type, body), Func(t.type, tb)
        if isinstance(t, App):
            fn, tf = self.check(ctx, t.fn)
            arg, ta = self.check(ctx, t.arg)
            if not isinstance(tf, Func):
                raise TypeCheckError("T-APP", t.fn, "applied term is not a function", "a function type", tf)
            self._expect_sub("T-APP", t.arg, ta, tf.arg)
            return App(fn, arg), tf.result
        if isinstance(t, Let):
            bound, tb = self.check(ctx, t.bound)
            body, tt = self.check(ctx.extend(t.name, tb), t.body)
            return Let(t.name, bound, body), tt
        if isinstance(t, Fix):
            body, tf = self.check(ctx, t.body)
            if not isinstance(tf, Func):
                raise TypeCheckError("T-FIX", t.body, "fix needs a function", "a function type", tf)
            self._expect_sub("T-FIX", t.body, tf.result, tf.arg)
            return Fix(body), tf.arg
        if isinstance(t, If):
            cond, tc = self.check(ctx, t.cond)
            self._expect_sub("T-IF", t.cond, tc, BOOL)
            then, t1 = self.check(ctx, t.then)
            else_, t2 = self.check(ctx, t.else_)
            return If(cond, then, else_), self.lub(t1, t2, t)
        if isinstance(t, Nil):
            self._check_type(t.elem, t)
            return t, ListT(t.elem)
        if isinstance(t, Cons):
            head, th = self.check(ctx, t.head)
            tail, tl = self.check(ctx, t.tail)
            if not isinstance(tl, ListT):
                raise TypeCheckError("T-CONS", t.tail, "tail is not a list", "a list type", tl)
            if self.subtype(th, tl.elem):
                elem = tl.elem
            elif self.subtype(tl.elem, th):
                elem = th
            else:
                elem = self.lub(th, tl.elem, t)
            return Cons(head, tail), ListT(elem)
        if isinstance(t, (Null, Head, Tail)):
            rule = {Null: "T-NULL", Head: "T-HEAD", Tail: "T-TAIL"}[type(t)]
            arg, ta = self.check(ctx, t.arg)
            if not isinstance(ta, ListT):
                raise TypeCheckError(rule, t.arg, "argument is not a list", "a list type", ta)
            result = BOOL if isinstance(t, Null) else ta.elem if isinstance(t, Head) else ta
            return type(t)(arg), result
        if isinstance(t, Record):
            fields, types = [], []
            for label, v in t.fields:
                ev, tv = self.check(ctx, v)
                fields.append((label, ev))
                types.append((label, tv))
            return Record(tuple(fields)), RecordT(tuple(types))
        if isinstance(t, Query):
            return self._query(t)
        if isinstance(t, Proj):
            return self._proj(ctx, t)
        raise TypeCheckError("T-TERM", t, "not a term")

    def _query(self, t: Query):
        qid = t.id
        if qid is None:
            qid = self.names.fresh("q")
            while any(shape_name(qid, x) in self.shapes for x in t.query.vars):
                qid = self.names.fresh("q")
        inferred = infer_shapes(t.query, qid)
        for s in inferred:
            existing = self.shapes.get(s.name)
            if existing is None:
                self._define(s)
            elif existing != s:
                raise TypeCheckError("T-QUERY", t, f"query id {qid!r} clashes with shape {s.name!r}")
        fields = tuple((x, ShapeT(shape_name(qid, x))) for x in t.query.head)
        return Query(t.query, qid), ListT(RecordT(fields))

    def _proj(self, ctx, t: Proj):
        target, tt = self.check(ctx, t.target)
        if isinstance(tt, RecordT):
            label = t.label.name if isinstance(t.label, Iri) else None
            found = tt.get(label) if label is not None else None
            if found is None:
                raise TypeCheckError("T-RCDPROJ", t, "no such field", f"a record with field {label or t.label}", tt)
            return Proj(target, t.label, t.shape), found
        if isinstance(tt, ShapeT):
            s = self._fresh_shape("proj", AtLeast(1, inverse(t.label), ShapeRef(tt.name)))
            proj = Proj(target, t.label, s.name)
            if self.elaborate and self.reasoner.exactly_one(tt.name, t.label):
                return Head(proj), s
            return proj, ListT(s)
        raise TypeCheckError("T-NPROJ", t, "projection from a non-record, non-node term",
                             "a record or shape type", tt)


def typecheck(shapes, t: Term, ctx: TypingContext | None = None, *, elaborate=True,
              world=None, names: NameSupply | None = None) -> TypingResult:
    checker = TypeChecker(shapes, elaborate=elaborate, world=world, names=names)
    term, typ = checker.check(ctx or TypingContext(), t)
    return TypingResult(term, typ, list(checker.new_shapes))


def lub(shapes, t1: Type, t2: Type, names: NameSupply | None = None):
    checker = TypeChecker(shapes, names=names)
    return checker.lub(t1, t2), list(checker.new_shapes)


def glb(shapes, t1: Type, t2: Type, names: NameSupply | None = None):
    checker = TypeChecker(shapes, names=names)
    return checker.glb(t1, t2), list(checker.new_shapes)
