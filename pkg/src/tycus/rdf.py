"""In-memory RDF graphs and a minimal line-oriented triple format.

The format is a stripped-down N-Triples: one ``subject predicate object .``
per line, bare names stand for IRIs, ``_:id`` for blank nodes and
``"..."`` or bare numbers for literals. ``#`` starts a comment line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Union

__all__ = [
    "Iri", "Literal", "Blank", "Node", "Triple", "RdfGraph",
    "GraphSyntaxError", "parse_graph", "serialize_graph", "nodes",
    "format_node", "node_sort_key",
]

BARE_NAME = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")
NUMBER = re.compile(r"-?\d+(\.\d+)?\Z")


@dataclass(frozen=True, order=True)
class Iri:
    name: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("IRI name must be non-empty")

    def __str__(self):
        return format_node(self)


@dataclass(frozen=True, order=True)
class Literal:
    lexical: str

    def __str__(self):
        return format_node(self)


@dataclass(frozen=True, order=True)
class Blank:
    id: str

    def __post_init__(self):
        if not self.id:
            raise ValueError("blank node id must be non-empty")

    def __str__(self):
        return format_node(self)


Node = Union[Iri, Literal, Blank]

_KIND_ORDER = {Iri: 0, Blank: 1, Literal: 2}


def node_sort_key(node: Node) -> tuple[int, str]:
    if isinstance(node, Iri):
        return (0, node.name)
    if isinstance(node, Blank):
        return (1, node.id)
    return (2, node.lexical)


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")


def format_node(node: Node, *, bare_ok=None) -> str:
    """Render a node in the concrete syntax.

    ``bare_ok`` decides whether an IRI may be written without angle
    brackets; the query syntax uses it to keep constants apart from
    variables.
    """
    if isinstance(node, Iri):
        if BARE_NAME.match(node.name) and (bare_ok is None or bare_ok(node.name)):
            return node.name
        return f"<{node.name}>"
    if isinstance(node, Blank):
        return f"_:{node.id}"
    if NUMBER.match(node.lexical):
        return node.lexical
    return f'"{_escape(node.lexical)}"'


@dataclass(frozen=True)
class Triple:
    subject: Node
    predicate: Iri
    object: Node

    def __post_init__(self):
        if isinstance(self.subject, Literal):
            raise ValueError(f"literal {self.subject} cannot be a subject")
        if not isinstance(self.predicate, Iri):
            raise ValueError(f"predicate must be an IRI, got {self.predicate!r}")

    def sort_key(self):
        return (node_sort_key(self.subject), self.predicate.name, node_sort_key(self.object))

    def __str__(self):
        return f"{format_node(self.subject)} {format_node(self.predicate)} {format_node(self.object)} ."


@dataclass(frozen=True)
class RdfGraph:
    """An immutable set of triples with lazily built indexes."""

    triples: frozenset = frozenset()

    def __init__(self, triples: Iterable[Triple] = ()):
        object.__setattr__(self, "triples", frozenset(triples))

    def __len__(self):
        return len(self.triples)

    def __iter__(self):
        return iter(sorted(self.triples, key=Triple.sort_key))

    def __contains__(self, triple):
        return triple in self.triples

    def __or__(self, other):
        other_triples = other.triples if isinstance(other, RdfGraph) else frozenset(other)
        return RdfGraph(self.triples | other_triples)

    def __sub__(self, other):
        other_triples = other.triples if isinstance(other, RdfGraph) else frozenset(other)
        return RdfGraph(self.triples - other_triples)

    @cached_property
    def nodes(self) -> frozenset:
        found = set()
        for t in self.triples:
            found.add(t.subject)
            found.add(t.object)
        return frozenset(found)

    @cached_property
    def _by_predicate(self) -> dict:
        index: dict[Iri, set] = {}
        for t in self.triples:
            index.setdefault(t.predicate, set()).add((t.subject, t.object))
        return {p: frozenset(pairs) for p, pairs in index.items()}

    def pairs(self, predicate: Iri) -> frozenset:
        """All ``(subject, object)`` pairs linked by ``predicate``."""
        return self._by_predicate.get(predicate, frozenset())

    @cached_property
    def predicates(self) -> frozenset:
        return frozenset(self._by_predicate)


def nodes(g: RdfGraph) -> frozenset:
    """Subjects and objects of ``g``; predicates only if they also occur there."""
    return g.nodes


class GraphSyntaxError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


_TOKEN = re.compile(r"""
    \s*(?:
      (?P<iri><[^<>\s]+>)
    | (?P<blank>_:[A-Za-z0-9_]+)
    | (?P<string>"(?:[^"\\]|\\.)*")
    | (?P<number>-?\d+(?:\.\d+)?(?![A-Za-z_]))
    | (?P<name>[A-Za-z][A-Za-z0-9_]*)
    | (?P<dot>\.)
    )""", re.VERBOSE)


def _unescape(body: str) -> str:
    return re.sub(r"\\(.)", lambda m: "\n" if m.group(1) == "n" else m.group(1), body)


def _tokenize_line(text: str, lineno: int) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise GraphSyntaxError(f"unexpected input {text[pos:].strip()[:20]!r}", lineno)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind)))
        pos = m.end()
    return tokens


def _token_node(kind: str, value: str) -> Node:
    if kind == "iri":
        return Iri(value[1:-1])
    if kind == "name":
        return Iri(value)
    if kind == "blank":
        return Blank(value[2:])
    if kind == "string":
        return Literal(_unescape(value[1:-1]))
    return Literal(value)


def parse_graph(text: str) -> RdfGraph:
    triples = set()
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = _tokenize_line(line, lineno)
        if len(tokens) != 4 or tokens[3][0] != "dot":
            raise GraphSyntaxError("expected 'subject predicate object .'", lineno)
        (sk, sv), (pk, pv), (ok, ov), _ = tokens
        if sk in ("string", "number", "dot"):
            raise GraphSyntaxError("subject must be an IRI or blank node", lineno)
        if pk not in ("iri", "name"):
            raise GraphSyntaxError(f"predicate {pv!r} is not an IRI", lineno)
        if ok == "dot":
            raise GraphSyntaxError("missing object", lineno)
        triples.add(Triple(_token_node(sk, sv), Iri(pv[1:-1] if pk == "iri" else pv), _token_node(ok, ov)))
    return RdfGraph(triples)


def serialize_graph(g: RdfGraph) -> str:
    lines = sorted(str(t) for t in g.triples)
    return "".join(line + "\n" for line in lines)
