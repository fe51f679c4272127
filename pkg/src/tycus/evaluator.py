"""Small-step call-by-value evaluation of terms against an RDF graph."""

from __future__ import annotations

import os
from dataclasses import dataclass

from .pcq import Pcq, eval_path, eval_query, ordered_mappings
from .rdf import Iri, RdfGraph, node_sort_key
from .terms import (
    Abs, App, BoolVal, Cons, Fix, Head, If, Let, Nil, NodeVal, Null, Proj, Query,
    Record, RecordT, ShapeT, Tail, Term, FALSE, TRUE, is_value, substitute,
)

__all__ = [
    "DEFAULT_FUEL", "NormalForm", "Outcome", "step", "evaluate", "query_records", "project_node",
    "default_fuel",
]

DEFAULT_FUEL = 10**6


def default_fuel() -> int:
    raw = os.environ.get("TYCUS_FUEL")
    return int(raw) if raw else DEFAULT_FUEL


@dataclass(frozen=True)
class NormalForm:
    """Returned by ``step`` when no rule applies."""

    term: Term
    is_value: bool
    reason: str | None = None  # head-nil, tail-nil or other when stuck


@dataclass(frozen=True)
class Outcome:
    kind: str  # value, stuck or out-of-fuel
    term: Term
    steps: int
    reason: str | None = None

    @property
    def is_value(self):
        return self.kind == "value"


class _Stuck(Exception):
    def __init__(self, reason: str, term: Term):
        super().__init__(reason)
        self.reason = reason
        self.term = term


def _build_list(items, elem_type) -> Term:
    result = Nil(elem_type)
    for item in reversed(items):
        result = Cons(item, result)
    return result


def query_records(q: Pcq, g: RdfGraph, query_id: str | None = None) -> Term:
    """One record per answer mapping, labels in head order."""
    qid = query_id or "q"
    rows = [
        Record(tuple((x, NodeVal(m[x])) for x in q.head))
        for m in ordered_mappings(eval_query(q, g), q.head)
    ]
    elem = RecordT(tuple((x, ShapeT(f"{qid}${x}")) for x in q.head))
    return _build_list(rows, elem)


def project_node(node, label, g: RdfGraph, shape: str | None = None) -> Term:
    # literals never occur as subjects, so their successor list is empty
    succ = sorted({b for a, b in eval_path(label, g) if a == node}, key=node_sort_key)
    return _build_list([NodeVal(v) for v in succ], ShapeT(shape or "proj$0"))


def _reduce(t: Term, g: RdfGraph) -> Term:
    """One step; returns None for values and raises _Stuck otherwise."""
    if is_value(t):
        return None
    if isinstance(t, App):
        if not is_value(t.fn):
            return App(_reduce(t.fn, g), t.arg)
        if not is_value(t.arg):
            return App(t.fn, _reduce(t.arg, g))
        if isinstance(t.fn, Abs):
            return substitute(t.fn.body, t.fn.name, t.arg)
        raise _Stuck("other", t)
    if isinstance(t, Let):
        if not is_value(t.bound):
            return Let(t.name, _reduce(t.bound, g), t.body)
        return substitute(t.body, t.name, t.bound)
    if isinstance(t, Fix):
        if not is_value(t.body):
            return Fix(_reduce(t.body, g))
        if isinstance(t.body, Abs):
            return substitute(t.body.body, t.body.name, t)
        raise _Stuck("other", t)
    if isinstance(t, If):
        if not is_value(t.cond):
            return If(_reduce(t.cond, g), t.then, t.else_)
        if isinstance(t.cond, BoolVal):
            return t.then if t.cond.value else t.else_
        raise _Stuck("other", t)
    if isinstance(t, Cons):
        if not is_value(t.head):
            return Cons(_reduce(t.head, g), t.tail)
        return Cons(t.head, _reduce(t.tail, g))
    if isinstance(t, (Null, Head, Tail)):
        if not is_value(t.arg):
            return type(t)(_reduce(t.arg, g))
        arg = t.arg
        if isinstance(t, Null):
            if isinstance(arg, Nil):
                return TRUE
            if isinstance(arg, Cons):
                return FALSE
            raise _Stuck("other", t)
        if isinstance(arg, Cons):
            return arg.head if isinstance(t, Head) else arg.tail
        if isinstance(arg, Nil):
            raise _Stuck("head-nil" if isinstance(t, Head) else "tail-nil", t)
        raise _Stuck("other", t)
    if isinstance(t, Record):
        fields = list(t.fields)
        for i, (label, v) in enumerate(fields):
            if not is_value(v):
                fields[i] = (label, _reduce(v, g))
                return Record(tuple(fields))
    if isinstance(t, Query):
        return query_records(t.query, g, t.id)
    if isinstance(t, Proj):
        if not is_value(t.target):
            return Proj(_reduce(t.target, g), t.label, t.shape)
        target = t.target
        # resolved by value kind: records look up fields, nodes follow paths
        if isinstance(target, Record):
            if isinstance(t.label, Iri):
                found = target.get(t.label.name)
                if found is not None:
                    return found
            raise _Stuck("other", t)
        if isinstance(target, NodeVal):
            return project_node(target.node, t.label, g, t.shape)
        raise _Stuck("other", t)
    # free variables and anything else
    raise _Stuck("other", t)


def step(t: Term, g: RdfGraph):
    """Perform one reduction, or return a ``NormalForm`` describing why none applies."""
    if is_value(t):
        return NormalForm(t, True)
    try:
        return _reduce(t, g)
    except _Stuck as exc:
        return NormalForm(t, False, exc.reason)


def evaluate(t: Term, g: RdfGraph, fuel: int | None = None, on_step=None) -> Outcome:
    """Iterate ``step`` until a normal form is reached or the fuel runs out.

    ``on_step`` is called with each intermediate term after a reduction.
    """
    if fuel is None:
        fuel = default_fuel()
    if fuel < 0:
        raise ValueError("fuel must be non-negative")
    steps = 0
    while True:
        result = step(t, g)
        if isinstance(result, NormalForm):
            kind = "value" if result.is_value else "stuck"
            return Outcome(kind, t, steps, result.reason)
        if steps >= fuel:
            return Outcome("out-of-fuel", t, steps)
        t = result
        steps += 1
        if on_step is not None:
            on_step(t)
