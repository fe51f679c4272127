"""Path conjunctive queries: syntax, property-path evaluation and query evaluation.

Concrete syntax::

    (x1, x2) <- x1 type Student ^ x1 studiesAt x2

A token is a query variable when it is written ``?name`` or is a single
lowercase letter optionally followed by digits (``x``, ``x1``, ``y2``).
Everything else in node position is a constant; ``<x>`` forces an IRI.
Path operators are postfix ``-`` (inverse) and ``+`` (one or more), infix
``/`` (sequence), with parentheses for grouping.
"""

from __future__ import annotations

import re
from collections.abc import Mapping as _AbcMapping
from dataclasses import dataclass
from typing import Iterable, Union

from .rdf import Blank, Iri, Literal, Node, RdfGraph, format_node, node_sort_key
from .syntax import ParseError, TokenStream, unescape_string

__all__ = [
    "Inverse", "Seq", "Plus", "PathExpr", "SubjVar", "ObjVar", "TwoVars", "Pattern",
    "Pcq", "Mapping", "QueryError", "parse_query", "parse_path", "eval_path",
    "eval_pattern", "eval_query", "join_mappings", "format_path", "inverse",
    "is_variable_name", "ordered_mappings",
]

VAR_NAME = re.compile(r"[a-z]\d*\Z")


def is_variable_name(name: str) -> bool:
    return bool(VAR_NAME.match(name))


@dataclass(frozen=True)
class Inverse:
    path: "PathExpr"


@dataclass(frozen=True)
class Seq:
    first: "PathExpr"
    second: "PathExpr"


@dataclass(frozen=True)
class Plus:
    path: "PathExpr"


PathExpr = Union[Iri, Inverse, Seq, Plus]


def inverse(r: PathExpr) -> PathExpr:
    """``r-`` with double inverses cancelled."""
    if isinstance(r, Inverse):
        return r.path
    return Inverse(r)


def format_path(r: PathExpr) -> str:
    if isinstance(r, Iri):
        return format_node(r)
    if isinstance(r, Inverse):
        inner = format_path(r.path)
        return f"({inner})-" if isinstance(r.path, Seq) else f"{inner}-"
    if isinstance(r, Plus):
        inner = format_path(r.path)
        return f"({inner})+" if isinstance(r.path, Seq) else f"{inner}+"
    right = format_path(r.second)
    if isinstance(r.second, Seq):
        right = f"({right})"
    return f"{format_path(r.first)}/{right}"


@dataclass(frozen=True)
class SubjVar:
    var: str
    path: PathExpr
    node: Node


@dataclass(frozen=True)
class ObjVar:
    node: Node
    path: PathExpr
    var: str


@dataclass(frozen=True)
class TwoVars:
    subject: str
    path: PathExpr
    object: str


Pattern = Union[SubjVar, ObjVar, TwoVars]


def pattern_vars(p: Pattern) -> tuple[str, ...]:
    if isinstance(p, SubjVar):
        return (p.var,)
    if isinstance(p, ObjVar):
        return (p.var,)
    return (p.subject,) if p.subject == p.object else (p.subject, p.object)


def _format_term(term) -> str:
    if isinstance(term, str):
        return term if is_variable_name(term) else f"?{term}"
    return format_node(term, bare_ok=lambda name: not is_variable_name(name))


def format_pattern(p: Pattern) -> str:
    if isinstance(p, SubjVar):
        parts = (_format_term(p.var), format_path(p.path), _format_term(p.node))
    elif isinstance(p, ObjVar):
        parts = (_format_term(p.node), format_path(p.path), _format_term(p.var))
    else:
        parts = (_format_term(p.subject), format_path(p.path), _format_term(p.object))
    return " ".join(parts)


class QueryError(ValueError):
    pass


@dataclass(frozen=True)
class Pcq:
    head: tuple[str, ...]
    body: tuple[Pattern, ...]

    def __post_init__(self):
        object.__setattr__(self, "head", tuple(self.head))
        object.__setattr__(self, "body", tuple(self.body))
        if not self.body:
            raise QueryError("query body must contain at least one pattern")
        if len(set(self.head)) != len(self.head):
            raise QueryError(f"duplicate head variable in {self.head}")
        known = set(self.vars)
        for x in self.head:
            if x not in known:
                raise QueryError(f"head variable {x!r} not in body")

    @property
    def vars(self) -> tuple[str, ...]:
        """Body variables in order of first occurrence."""
        seen: dict[str, None] = {}
        for p in self.body:
            for x in pattern_vars(p):
                seen.setdefault(x, None)
        return tuple(seen)

    def project(self, *head: str) -> "Pcq":
        return Pcq(head, self.body)

    def __str__(self):
        head = ", ".join(_format_term(x) for x in self.head)
        return f"({head}) <- " + " ^ ".join(format_pattern(p) for p in self.body)


class Mapping(_AbcMapping):
    """An immutable, hashable variable binding (the mu of the query semantics)."""

    __slots__ = ("_d", "_hash")

    def __init__(self, bindings=()):
        self._d = dict(bindings)
        self._hash = None

    def __getitem__(self, key):
        return self._d[key]

    def __iter__(self):
        return iter(self._d)

    def __len__(self):
        return len(self._d)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._d.items()))
        return self._hash

    def __eq__(self, other):
        if isinstance(other, Mapping):
            return self._d == other._d
        return NotImplemented

    def __repr__(self):
        inner = ", ".join(f"{k}↦{format_node(v)}" for k, v in sorted(self._d.items()))
        return "{" + inner + "}"

    def compatible(self, other: "Mapping") -> bool:
        small, large = (self, other) if len(self) <= len(other) else (other, self)
        return all(large._d.get(k, v) == v for k, v in small._d.items())

    def union(self, other: "Mapping") -> "Mapping":
        merged = dict(self._d)
        merged.update(other._d)
        return Mapping(merged)

    def restrict(self, variables: Iterable[str]) -> "Mapping":
        return Mapping((x, self._d[x]) for x in variables if x in self._d)

    def sort_key(self, order: Iterable[str] | None = None):
        keys = order if order is not None else sorted(self._d)
        return tuple((x, node_sort_key(self._d[x])) for x in keys if x in self._d)


def ordered_mappings(mappings: Iterable[Mapping], head: Iterable[str] | None = None) -> list[Mapping]:
    """Deterministic order: lexicographic on the bound nodes, head order first."""
    head = tuple(head) if head is not None else None
    return sorted(mappings, key=lambda m: m.sort_key(head))


# -- parsing -----------------------------------------------------------------


class QueryParser(TokenStream):
    def parse_path(self) -> PathExpr:
        left = self._path_unary()
        while self.accept("/"):
            left = Seq(left, self._path_unary())
        return left

    def _path_unary(self) -> PathExpr:
        tok = self.peek()
        if self.accept("("):
            r = self.parse_path()
            self.expect(")")
        elif tok.kind == "ident":
            self.next()
            r = Iri(tok.value)
        elif tok.kind == "iri":
            self.next()
            r = Iri(tok.value[1:-1])
        else:
            self.error(f"expected a property path, found {tok.value or tok.kind!r}")
        while True:
            if self.accept("-"):
                r = Inverse(r)
            elif self.accept("+"):
                r = Plus(r)
            else:
                return r

    def _pattern_term(self):
        tok = self.next()
        if tok.kind == "var":
            return tok.value[1:]
        if tok.kind == "ident":
            return tok.value if is_variable_name(tok.value) else Iri(tok.value)
        if tok.kind == "iri":
            return Iri(tok.value[1:-1])
        if tok.kind == "blank":
            return Blank(tok.value[2:])
        if tok.kind == "string":
            return Literal(unescape_string(tok.value))
        if tok.kind == "number":
            return Literal(tok.value)
        self.error(f"expected a variable or node, found {tok.value or tok.kind!r}", tok)

    def parse_pattern(self) -> Pattern:
        start = self.peek()
        subject = self._pattern_term()
        path = self.parse_path()
        obj = self._pattern_term()
        if isinstance(subject, str) and isinstance(obj, str):
            return TwoVars(subject, path, obj)
        if isinstance(subject, str):
            return SubjVar(subject, path, obj)
        if isinstance(obj, str):
            if isinstance(subject, Literal):
                self.error("a literal cannot occur in subject position", start)
            return ObjVar(subject, path, obj)
        self.error("a pattern needs at least one variable", start)

    def parse_query(self) -> Pcq:
        start = self.peek()
        self.expect("(")
        head = []
        if not self.at(")"):
            while True:
                tok = self.next()
                if tok.kind == "var":
                    head.append(tok.value[1:])
                elif tok.kind == "ident" and is_variable_name(tok.value):
                    head.append(tok.value)
                else:
                    self.error(f"expected a head variable, found {tok.value or tok.kind!r}", tok)
                if not self.accept(","):
                    break
        self.expect(")")
        self.expect("larrow")
        body = [self.parse_pattern()]
        while self.accept("and"):
            body.append(self.parse_pattern())
        try:
            return Pcq(tuple(head), tuple(body))
        except QueryError as exc:
            raise ParseError(str(exc), start.line, start.col) from None


def parse_query(text: str) -> Pcq:
    parser = QueryParser(text)
    q = parser.parse_query()
    parser.expect_eof()
    return q


def parse_path(text: str) -> PathExpr:
    parser = QueryParser(text)
    r = parser.parse_path()
    parser.expect_eof()
    return r


# -- evaluation --------------------------------------------------------------


def _closure(pairs: frozenset) -> frozenset:
    succ: dict = {}
    for a, b in pairs:
        succ.setdefault(a, set()).add(b)
    result = set()
    for start in succ:
        seen = set()
        frontier = list(succ[start])
        while frontier:
            n = frontier.pop()
            if n in seen:
                continue
            seen.add(n)
            frontier.extend(succ.get(n, ()))
        result.update((start, n) for n in seen)
    return frozenset(result)


def _compose(left: frozenset, right: frozenset) -> frozenset:
    succ: dict = {}
    for b, c in right:
        succ.setdefault(b, []).append(c)
    return frozenset((a, c) for a, b in left for c in succ.get(b, ()))


def eval_path(r: PathExpr, g: RdfGraph, _cache: dict | None = None) -> frozenset:
    """The pair relation ``r(G)``."""
    cache = {} if _cache is None else _cache
    if r in cache:
        return cache[r]
    if isinstance(r, Iri):
        result = g.pairs(r)
    elif isinstance(r, Inverse):
        result = frozenset((b, a) for a, b in eval_path(r.path, g, cache))
    elif isinstance(r, Seq):
        result = _compose(eval_path(r.first, g, cache), eval_path(r.second, g, cache))
    elif isinstance(r, Plus):
        result = _closure(eval_path(r.path, g, cache))
    else:
        raise TypeError(f"not a path expression: {r!r}")
    cache[r] = result
    return result


def eval_pattern(p: Pattern, g: RdfGraph, _cache: dict | None = None) -> frozenset:
    pairs = eval_path(p.path, g, _cache)
    if isinstance(p, SubjVar):
        return frozenset(Mapping({p.var: a}) for a, b in pairs if b == p.node)
    if isinstance(p, ObjVar):
        return frozenset(Mapping({p.var: b}) for a, b in pairs if a == p.node)
    if p.subject == p.object:
        return frozenset(Mapping({p.subject: a}) for a, b in pairs if a == b)
    return frozenset(Mapping({p.subject: a, p.object: b}) for a, b in pairs)


def join_mappings(left: Iterable[Mapping], right: Iterable[Mapping]) -> frozenset:
    """All unions of compatible pairs."""
    left, right = list(left), list(right)
    return frozenset(m1.union(m2) for m1 in left for m2 in right if m1.compatible(m2))


def _hash_join(left: frozenset, right: frozenset, shared: tuple) -> frozenset:
    if not shared:
        return join_mappings(left, right)
    buckets: dict = {}
    for m in right:
        buckets.setdefault(tuple(m[x] for x in shared), []).append(m)
    return frozenset(
        m1.union(m2)
        for m1 in left
        for m2 in buckets.get(tuple(m1[x] for x in shared), ())
    )


def eval_query(q: Pcq, g: RdfGraph) -> frozenset:
    """Evaluate ``q`` on ``g``: join the pattern results, then project onto the head."""
    cache: dict = {}
    result = None
    bound: set = set()
    for p in q.body:
        omega = eval_pattern(p, g, cache)
        pvars = pattern_vars(p)
        if result is None:
            result = omega
        else:
            result = _hash_join(result, omega, tuple(x for x in pvars if x in bound))
        bound.update(pvars)
        if not result:
            return frozenset()
    return frozenset(m.restrict(q.head) for m in result)
