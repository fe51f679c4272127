"""Type-directed random terms over the university shapes.

The generator aims at a requested type but does not guarantee it; callers
keep only the terms that type check.
"""

import random

from tycus.pcq import parse_path, parse_query
from tycus.rdf import Iri
from tycus.terms import (
    BOOL, Abs, App, BoolT, Cons, FALSE, Fix, Func, Head, If, Let, ListT, Nil, NodeVal, Null,
    Proj, Query, Record, RecordT, ShapeT, Tail, TRUE, Var,
)

SHAPES = ("StudentShape", "PersonShape", "UniversityShape", "Value")

_QUERIES = {
    "StudentShape": "(x) <- x type Student",
    "PersonShape": "(x) <- x type Person",
    "UniversityShape": "(x) <- y type Student ^ y studiesAt x ^ x locatedIn z",
    "Value": "(x) <- x type Person",
}

_LABELS = ("name", "age", "studiesAt", "type", "locatedIn", "knows", "studiesAt-")


class TermGenerator:
    def __init__(self, rng: random.Random, nodes, max_depth=6):
        self.rng = rng
        self.nodes = sorted(nodes, key=repr)
        self.max_depth = max_depth
        self._counter = 0

    def fresh(self, stem="v"):
        self._counter += 1
        return f"{stem}{self._counter}"

    def random_type(self, depth=2):
        k = self.rng.random()
        if depth <= 0 or k < 0.35:
            return BOOL if self.rng.random() < 0.4 else ShapeT(self.rng.choice(SHAPES))
        if k < 0.6:
            return ListT(self.random_type(depth - 1))
        if k < 0.8:
            labels = self.rng.sample(["x", "a", "b"], self.rng.randint(1, 2))
            return RecordT(tuple((l, self.random_type(depth - 1)) for l in labels))
        return Func(self.random_type(depth - 1), self.random_type(depth - 1))

    def _vars_of(self, ctx, want):
        return [name for name, t in ctx if t == want]

    def term(self, want, ctx=(), depth=None):
        depth = self.max_depth if depth is None else depth
        rng = self.rng
        options = self._vars_of(ctx, want)
        if options and rng.random() < 0.3:
            return Var(rng.choice(options))
        if depth <= 1 or rng.random() < 0.25:
            return self.leaf(want, ctx, depth)
        k = rng.random()
        if k < 0.12:
            return If(self.term(BOOL, ctx, depth - 1), self.term(want, ctx, depth - 1), self.term(want, ctx, depth - 1))
        if k < 0.24:
            u = self.random_type(1)
            x = self.fresh()
            return Let(x, self.term(u, ctx, depth - 1), self.term(want, ctx + ((x, u),), depth - 1))
        if k < 0.36:
            u = self.random_type(1)
            x = self.fresh()
            return App(Abs(x, u, self.term(want, ctx + ((x, u),), depth - 2)), self.term(u, ctx, depth - 1))
        if k < 0.44:
            return Head(self.term(ListT(want), ctx, depth - 1))
        if k < 0.52:
            label = self.rng.choice(["a", "b"])
            other = self.random_type(0)
            fields = ((label, want), ("c", other)) if rng.random() < 0.5 else ((label, want),)
            return Proj(self.term(RecordT(fields), ctx, depth - 1), Iri(label))
        if k < 0.62:
            return self._list_recursion(want, ctx, depth)
        if k < 0.64:
            # a divergent loop; evaluation must run out of fuel, never get stuck
            f, x = self.fresh("f"), self.fresh()
            loop = Fix(Abs(f, Func(BOOL, want), Abs(x, BOOL, App(Var(f), Var(x)))))
            return App(loop, TRUE)
        return self.structural(want, ctx, depth)

    def _list_recursion(self, want, ctx, depth):
        """``(fix (λf. λl. if null l then base else f (tail l))) list``"""
        elem = self.random_type(1)
        lt = ListT(elem)
        f, l = self.fresh("f"), self.fresh("l")
        inner_ctx = ctx + ((f, Func(lt, want)), (l, lt))
        body = If(Null(Var(l)), self.term(want, inner_ctx, depth - 2), App(Var(f), Tail(Var(l))))
        fn = Fix(Abs(f, Func(lt, want), Abs(l, lt, body)))
        return App(fn, self.term(lt, ctx, depth - 1))

    def structural(self, want, ctx, depth):
        rng = self.rng
        if isinstance(want, BoolT):
            k = rng.random()
            if k < 0.5:
                return Null(self.term(ListT(self.random_type(1)), ctx, depth - 1))
            return self.leaf(want, ctx, depth)
        if isinstance(want, ListT):
            k = rng.random()
            if k < 0.4:
                return Cons(self.term(want.elem, ctx, depth - 1), self.term(want, ctx, depth - 1))
            if k < 0.55:
                return Tail(self.term(want, ctx, depth - 1))
            if isinstance(want.elem, ShapeT) and k < 0.85:
                source = ShapeT(rng.choice(SHAPES[:3]))
                return Proj(self.term(source, ctx, depth - 1), parse_path(rng.choice(_LABELS)))
            return self.leaf(want, ctx, depth)
        if isinstance(want, RecordT):
            return Record(tuple((l, self.term(t, ctx, depth - 1)) for l, t in want.fields))
        if isinstance(want, Func):
            x = self.fresh()
            return Abs(x, want.arg, self.term(want.result, ctx + ((x, want.arg),), depth - 1))
        if isinstance(want, ShapeT):
            k = rng.random()
            if k < 0.4:
                return Proj(Head(Query(parse_query(_QUERIES[want.name]))), Iri("x"))
            if k < 0.6 and want.name == "Value":
                return Proj(self.term(ShapeT("PersonShape"), ctx, depth - 1), Iri("name"))
            return self.leaf(want, ctx, depth)
        raise TypeError(want)

    def leaf(self, want, ctx, depth):
        rng = self.rng
        options = self._vars_of(ctx, want)
        if options and rng.random() < 0.6:
            return Var(rng.choice(options))
        if isinstance(want, BoolT):
            return TRUE if rng.random() < 0.5 else FALSE
        if isinstance(want, ListT):
            if isinstance(want.elem, RecordT) and want.elem.fields and want.elem.fields[0][0] == "x" \
                    and len(want.elem.fields) == 1 and isinstance(want.elem.fields[0][1], ShapeT):
                return Query(parse_query(_QUERIES[want.elem.fields[0][1].name]))
            return Nil(want.elem)
        if isinstance(want, ShapeT):
            if want.name == "Value" or rng.random() < 0.3:
                return NodeVal(rng.choice(self.nodes))
            return Proj(Head(Query(parse_query(_QUERIES[want.name]))), Iri("x"))
        if isinstance(want, RecordT):
            return Record(tuple((l, self.leaf(t, ctx, depth)) for l, t in want.fields))
        if isinstance(want, Func):
            x = self.fresh()
            return Abs(x, want.arg, self.leaf(want.result, ctx + ((x, want.arg),), depth))
        raise TypeError(want)
